"""Binding end-to-end checks for the package's headline guarantees.

One test per guarantee; conftest prints a PASS/FAIL line for each as it
runs.  Tolerances here are contractual — do not loosen them to make a
failing build green.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner

import oracles
from textshape.cli import main
from textshape.codec import (
    GeometricEncoding,
    RadialProfile,
    ShapeVector,
    angle_grid,
    chebyshev_fit,
    decode,
    encode,
    sweep_degrees,
)
from textshape.config import LINE_LEVEL_RANGES
from textshape.dataset_io import load_encodings
from textshape.evaluation import evaluate
from textshape.geometry import PairedPolyline, Point2, Polygon
from textshape.postprocess import Detection, soft_nms
from textshape.synth import make_ellipse, make_rounded_rectangle, make_sine_ribbon, synthetic_corpus
from textshape.training import (
    content_loss,
    content_loss_grad,
    assign_levels,
    gradient_check,
    redistribute_weights,
    sampling_probabilities,
)

SWEEP_DEGREES = (11, 22, 33, 44, 55, 66)


def test_degree_sweep_trend(corpus200):
    """Corpus-mean radial error is non-increasing in fitting degree and
    mean IoU improves from degree 11 to 44, within a 30 s budget."""
    images, _ = corpus200
    start = time.perf_counter()
    mre_sums = np.zeros(len(SWEEP_DEGREES))
    iou_sums = np.zeros(len(SWEEP_DEGREES))
    count = 0
    for image in images:
        for instance in image.instances:
            fids = sweep_degrees(
                instance.polygon, instance.pairing, 360, SWEEP_DEGREES
            )
            mre_sums += [f.mean_radial_error for f in fids]
            iou_sums += [f.iou for f in fids]
            count += 1
    elapsed = time.perf_counter() - start
    assert count == 200
    mre_means = mre_sums / count
    iou_means = iou_sums / count
    for lo_deg, step in zip(SWEEP_DEGREES, np.diff(mre_means)):
        assert step <= 1e-6, f"mean radial error rose after degree {lo_deg}"
    k44 = SWEEP_DEGREES.index(44)
    k11 = SWEEP_DEGREES.index(11)
    assert iou_means[k44] > iou_means[k11]
    assert elapsed < 30.0, f"sweep took {elapsed:.1f}s"


def test_fit_oracle_equivalence():
    """Fitted coefficients match a hand-rolled normal-equations solver
    to 1e-8 per component and 1e-10 in squared residual."""
    rng = np.random.default_rng(303)
    angles = angle_grid(360)
    for trial in range(50):
        base = rng.uniform(3.0, 8.0)
        radii = base * (1.0 + 0.25 * rng.uniform(-1.0, 1.0, 360))
        profile = RadialProfile(angles, radii)
        degree = (11, 44, 66)[trial % 3]
        shape, scale = chebyshev_fit(profile, degree)
        ref_coeffs, ref_scale = oracles.normal_equations_fit(angles, radii, degree)
        assert scale == pytest.approx(ref_scale, abs=0)
        np.testing.assert_allclose(shape.coeffs, ref_coeffs, rtol=0, atol=1e-8)
        sse = oracles.sum_squared_residual(angles, radii, scale, shape.coeffs)
        ref_sse = oracles.sum_squared_residual(angles, radii, ref_scale, ref_coeffs)
        assert abs(sse - ref_sse) <= 1e-10


def test_gradient_correctness():
    """Analytic content-loss gradients match central differences over
    100 random coefficient pairs in under 5 s."""
    start = time.perf_counter()
    result = gradient_check(seed=0, trials=100)
    elapsed = time.perf_counter() - start
    assert result.trials == 100
    assert result.passed, f"max relative error {result.max_relative_error:.3e}"
    assert elapsed < 5.0, f"gradient check took {elapsed:.1f}s"
    # Independent spot checks against the shared finite-difference helper.
    rng = np.random.default_rng(71)
    for _ in range(5):
        degree = int(rng.integers(8, 45))
        pred = rng.normal(0.0, 1.0, degree + 1)
        target = ShapeVector(tuple(rng.normal(0.0, 1.0, degree + 1)))
        analytic = content_loss_grad(ShapeVector(tuple(pred)), target, 360)
        fd = oracles.fd_gradient(
            lambda c: content_loss(ShapeVector(tuple(c)), target, 360), pred
        )
        err = np.abs(analytic - fd)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
        assert float((err / denom).max()) < 1e-5


def test_conservation_laws():
    """Sampling probabilities sum to one and redistributed weights sum
    to the batch size, across 1000 random batches."""
    rng = np.random.default_rng(177)
    for _ in range(1000):
        m = int(rng.integers(1, 65))
        weights = rng.uniform(0.01, 1.0, m)
        probs = sampling_probabilities(weights)
        assert abs(float(probs.sum()) - 1.0) <= 1e-12
        redistributed = redistribute_weights(weights)
        assert abs(float(redistributed.sum()) - m) <= 1e-9


def test_exact_representation_closure():
    """A profile built from known coefficients is recovered to 1e-9 and
    its decode reproduces the radii to a 1e-9 mean error."""
    rng = np.random.default_rng(88)
    angles = angle_grid(360)
    xs = angles / np.pi
    for true_degree, fit_degree in ((11, 11), (11, 44), (20, 44), (44, 44)):
        coeffs = rng.uniform(-1.0, 1.0, true_degree + 1)
        coeffs *= 0.3 / (1.0 + np.arange(true_degree + 1)) ** 1.5
        coeffs[0] = 2.0  # dominates the bounded harmonics: radii stay positive
        design = oracles.chebyshev_matrix(xs, true_degree)
        values = design @ coeffs
        assert values.min() > 0.0
        normalized = coeffs / values.max()
        scale_true = float(rng.uniform(2.0, 50.0))
        radii = scale_true * (design @ normalized)
        shape, scale = chebyshev_fit(RadialProfile(angles, radii), fit_degree)
        assert scale == pytest.approx(scale_true, rel=1e-12)
        expected = np.zeros(fit_degree + 1)
        expected[: true_degree + 1] = normalized
        np.testing.assert_allclose(shape.coeffs, expected, rtol=0, atol=1e-9)
        # Decode back to vertices and compare radial distances.
        polygon = decode(GeometricEncoding(shape, scale, Point2(0.0, 0.0)), 360)
        decoded_radii = np.hypot(*np.asarray(polygon.coords).T)
        assert float(np.abs(decoded_radii - radii).mean()) <= 1e-9


def test_scale_equivariance():
    """Uniform scaling leaves the shape vector unchanged and multiplies
    the scale component by the same factor."""
    rng = np.random.default_rng(19)
    star_angles = np.sort(rng.uniform(-np.pi, np.pi, 24))
    star_radii = rng.uniform(5.0, 12.0, 24)
    shapes = [
        (make_ellipse((30.0, 20.0), (12.0, 5.0), rotation=0.7), None),
        (
            make_rounded_rectangle((10.0, 10.0), 20.0, 8.0, 2.5, rotation=0.3),
            None,
        ),
        (
            Polygon(
                np.column_stack(
                    [
                        40.0 + star_radii * np.cos(star_angles),
                        40.0 + star_radii * np.sin(star_angles),
                    ]
                )
            ),
            None,
        ),
    ]
    ribbon, pairing = make_sine_ribbon((50.0, 50.0), 60.0, 6.0, 4.0)
    shapes.append((ribbon, pairing))
    for polygon, pair in shapes:
        base = encode(polygon, pair, n_rays=360, degree=44)
        for factor in (0.5, 3.0, 10.0):
            scaled_poly = Polygon(np.asarray(polygon.coords) * factor)
            scaled_pair = None
            if pair is not None:
                scaled_pair = PairedPolyline(
                    tuple(Point2(p.x * factor, p.y * factor) for p in pair.top),
                    tuple(Point2(p.x * factor, p.y * factor) for p in pair.bottom),
                )
            scaled = encode(scaled_poly, scaled_pair, n_rays=360, degree=44)
            np.testing.assert_allclose(
                scaled.shape.coeffs, base.shape.coeffs, rtol=0, atol=1e-9
            )
            assert scaled.scale == pytest.approx(factor * base.scale, rel=1e-9)


def test_evaluation_harness():
    """The perfect / empty / half-match examples score exactly, and
    near-zero-sigma soft suppression reproduces a hard-NMS oracle."""
    sq = Polygon(((0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)))
    sq2 = Polygon(((20.0, 0.0), (30.0, 0.0), (30.0, 10.0), (20.0, 10.0)))
    far = Polygon(((50.0, 50.0), (60.0, 50.0), (60.0, 60.0), (50.0, 60.0)))
    gts = [sq, sq2]

    perfect = evaluate([Detection(sq, 0.9), Detection(sq2, 0.8)], gts)
    assert (perfect.precision, perfect.recall, perfect.f_measure) == (1.0, 1.0, 1.0)

    empty = evaluate([], gts)
    assert (empty.precision, empty.recall, empty.f_measure) == (0.0, 0.0, 0.0)
    assert empty.counts.fn == 2

    half = evaluate([Detection(sq, 0.9), Detection(far, 0.8)], gts)
    assert (half.precision, half.recall, half.f_measure) == (0.5, 0.5, 0.5)
    assert (half.counts.tp, half.counts.fp, half.counts.fn) == (1, 1, 1)

    def rect_polygon(x0, y0, x1, y1):
        return Polygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    rng = np.random.default_rng(402)
    for _ in range(100):
        scored_rects = []
        detections = []
        for cluster in range(4):
            cx = 100.0 * cluster
            for _ in range(int(rng.integers(1, 6))):
                dx = float(rng.uniform(-0.75, 0.75))
                dy = float(rng.uniform(-0.75, 0.75))
                rect = (cx + dx, dy, cx + dx + 10.0, dy + 10.0)
                score = float(rng.uniform(0.2, 1.0))
                scored_rects.append((rect, score))
                detections.append(Detection(rect_polygon(*rect), score))
        survivors = oracles.hard_nms(scored_rects, iou_thresh=0.5)
        kept = soft_nms(detections, sigma=1e-6, score_floor=1e-4)
        assert [d.score for d in kept] == [scored_rects[i][1] for i in survivors]
        for kept_det, index in zip(kept, survivors):
            np.testing.assert_array_equal(
                np.asarray(kept_det.polygon.coords),
                np.asarray(detections[index].polygon.coords),
            )


def test_level_assignment():
    """Relative sizes 0.1, 0.25 and 0.9 land in the documented level
    sets {0}, {0, 1} and {3}."""
    assert assign_levels(0.1, LINE_LEVEL_RANGES) == {0}
    assert assign_levels(0.25, LINE_LEVEL_RANGES) == {0, 1}
    assert assign_levels(0.9, LINE_LEVEL_RANGES) == {3}


def test_nonconvex_diagnostic(tmp_path):
    """A spiral band round-trips below 0.5 IoU and is flagged by the
    encode command, while convex instances stay unflagged."""
    runner = CliRunner()
    corpus = tmp_path / "corpus.json"
    encodings = tmp_path / "encodings.json"
    result = runner.invoke(
        main,
        ["synth", "--out", str(corpus), "--instances", "24", "--seed", "11",
         "--with-spiral"],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    _, kinds = synthetic_corpus(24, seed=11, with_spiral=True)
    result = runner.invoke(
        main,
        ["encode", "--corpus", str(corpus), "--out", str(encodings)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    records = load_encodings(encodings)
    assert len(records) == len(kinds) == 25
    spirals = 0
    for record, kind in zip(records, kinds):
        if kind == "spiral":
            spirals += 1
            assert record.fidelity.iou < 0.5
            assert record.low_fidelity is True
        elif kind in ("ellipse", "rrect"):
            assert record.low_fidelity is False
    assert spirals == 1


def test_determinism(tmp_path):
    """Re-running encode and sweep with identical flags produces
    byte-identical output files."""
    runner = CliRunner()
    corpus = tmp_path / "corpus.json"
    result = runner.invoke(
        main,
        ["synth", "--out", str(corpus), "--instances", "24", "--seed", "5"],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    outputs = []
    for name in ("enc-a.json", "enc-b.json"):
        out = tmp_path / name
        result = runner.invoke(
            main,
            ["encode", "--corpus", str(corpus), "--out", str(out),
             "--workers", "4"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    outputs = []
    for name in ("sweep-a.json", "sweep-b.json"):
        out = tmp_path / name
        result = runner.invoke(
            main,
            ["sweep", "--corpus", str(corpus), "--out", str(out),
             "--degrees", "11,22,44", "--workers", "4"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
