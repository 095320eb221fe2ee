"""Differentiable objectives and target assignment for detector training.

Shape regression is supervised in coefficient space through the sampled
radius function, classification through weighted two-class cross
entropy; per-point weights grow toward the instance center and are
redistributed so each instance keeps unit total influence per point.
"""

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .codec import GeometricEncoding, ShapeVector, angle_grid, chebyshev_basis
from .config import (
    DEFAULT_NEG_THRESH,
    DEFAULT_POS_THRESH,
    DEFAULT_RAYS,
)
from .errors import (
    AllZeroWeights,
    BadThresholds,
    DegreeMismatch,
    EmptyBatch,
)
from .geometry import Point2

PointLabel = Literal["positive", "negative", "ignored"]


def smooth_l1(x):
    """0.5 x^2 for |x| < 1, |x| - 0.5 otherwise; elementwise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(np.abs(x) < 1.0, 0.5 * x * x, np.abs(x) - 0.5)
    return float(out) if out.ndim == 0 else out


def smooth_l1_grad(x):
    """Derivative of smooth_l1: x inside the quadratic zone, sign(x) outside."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(np.abs(x) < 1.0, x, np.sign(x))
    return float(out) if out.ndim == 0 else out


def _check_degrees(pred: ShapeVector, target: ShapeVector) -> None:
    if pred.degree != target.degree:
        raise DegreeMismatch(
            f"prediction degree {pred.degree} != target degree {target.degree}"
        )


def content_loss(
    pred: ShapeVector, target: ShapeVector, n_rays: int = DEFAULT_RAYS
) -> float:
    """Mean smooth-L1 gap between the two radius functions on the ray fan."""
    _check_degrees(pred, target)
    basis = chebyshev_basis(angle_grid(n_rays) / math.pi, pred.degree)
    diff = basis @ (np.asarray(pred.coeffs) - np.asarray(target.coeffs))
    return float(np.mean(smooth_l1(diff)))


def content_loss_grad(
    pred: ShapeVector, target: ShapeVector, n_rays: int = DEFAULT_RAYS
) -> np.ndarray:
    """Exact gradient of content_loss in the prediction coefficients."""
    _check_degrees(pred, target)
    basis = chebyshev_basis(angle_grid(n_rays) / math.pi, pred.degree)
    diff = basis @ (np.asarray(pred.coeffs) - np.asarray(target.coeffs))
    return basis.T @ smooth_l1_grad(diff) / n_rays


def central_weight(point: Point2, encoding: GeometricEncoding) -> float:
    """1 at the instance center, falling linearly to 0 at distance
    `scale`, clamped to [0, 1]."""
    dist = math.hypot(point.x - encoding.center.x, point.y - encoding.center.y)
    return min(1.0, max(0.0, 1.0 - dist / encoding.scale))


def sampling_probabilities(weights: Sequence[float]) -> np.ndarray:
    """Normalize non-negative weights into a sampling distribution."""
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0:
        raise AllZeroWeights("no weights to normalize")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0.0:
        raise AllZeroWeights("weights sum to zero")
    return w / total


def redistribute_weights(weights: Sequence[float]) -> np.ndarray:
    """Rescale weights so they sum to their count, preserving ratios."""
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0:
        raise AllZeroWeights("no weights to redistribute")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0.0:
        raise AllZeroWeights("weights sum to zero")
    return w * (w.size / total)


def classify_point(
    weight: float,
    neg_thresh: float = DEFAULT_NEG_THRESH,
    pos_thresh: float = DEFAULT_POS_THRESH,
) -> PointLabel:
    """Label a point by its central weight: w > pos_thresh is positive,
    w < neg_thresh is negative, anything between (inclusive) is ignored.

    Points lying outside every instance get weight 0 from the caller;
    pass neg_thresh > 0 (line-level style) so they land in "negative".
    """
    if not (0.0 <= neg_thresh <= pos_thresh):
        raise BadThresholds(
            f"need 0 <= neg_thresh <= pos_thresh, got {neg_thresh}, {pos_thresh}"
        )
    if weight > pos_thresh:
        return "positive"
    if weight < neg_thresh:
        return "negative"
    return "ignored"


def relative_size(scale: float, width: float, height: float) -> float:
    """Instance scale over the longer image side."""
    return scale / max(width, height)


def assign_levels(size: float, ranges: Sequence[tuple[float, float]]) -> set[int]:
    """Indices of every band whose closed interval contains `size`.

    Bands deliberately overlap, so a size near a boundary lands in two.
    """
    return {i for i, (lo, hi) in enumerate(ranges) if lo <= size <= hi}


@dataclass(frozen=True)
class RegTriple:
    """Scale-and-offset regression target or prediction."""

    scale: float
    dx: float
    dy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.scale, self.dx, self.dy], dtype=np.float64)


@dataclass(frozen=True)
class PointSample:
    """One spatial location's predictions and targets."""

    location: Point2
    label: PointLabel
    cls_logits: tuple[float, float]
    cls_target: int
    central_weight: float = 1.0
    shape_pred: ShapeVector | None = None
    shape_target: ShapeVector | None = None
    reg_pred: RegTriple | None = None
    reg_target: RegTriple | None = None

    def __post_init__(self) -> None:
        if self.cls_target not in (0, 1):
            raise ValueError(f"cls_target must be 0 or 1, got {self.cls_target}")
        if not (0.0 <= self.central_weight <= 1.0):
            raise ValueError(
                f"central_weight must lie in [0, 1], got {self.central_weight}"
            )
        if self.label == "positive":
            if self.cls_target != 1:
                raise ValueError("positive points must have cls_target 1")
            missing = [
                name
                for name in ("shape_pred", "shape_target", "reg_pred", "reg_target")
                if getattr(self, name) is None
            ]
            if missing:
                raise ValueError(f"positive point lacks {', '.join(missing)}")
        else:
            if self.label == "negative" and self.cls_target != 0:
                raise ValueError("negative points must have cls_target 0")
            if self.shape_target is not None or self.reg_target is not None:
                raise ValueError(f"{self.label} points carry no regression targets")


@dataclass(frozen=True)
class MiniBatch:
    """Point samples with classification/regression normalizers and the
    redistributed per-point weights q."""

    points: tuple[PointSample, ...]
    n_cls: int
    n_reg: int
    q: tuple[float, ...]

    @classmethod
    def from_points(cls, points: Sequence[PointSample]) -> "MiniBatch":
        points = tuple(points)
        pos = [i for i, p in enumerate(points) if p.label == "positive"]
        neg = [i for i, p in enumerate(points) if p.label == "negative"]
        q = [0.0] * len(points)
        for i in neg:
            q[i] = 1.0
        if pos:
            redist = redistribute_weights([points[i].central_weight for i in pos])
            for i, value in zip(pos, redist):
                q[i] = float(value)
        return cls(points=points, n_cls=len(pos) + len(neg), n_reg=len(pos), q=tuple(q))


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    cls: float
    content: float
    reg: float
    no_positives: bool


def softmax_cross_entropy(logits: tuple[float, float], target: int) -> float:
    """Two-class cross entropy, computed via log-sum-exp for stability."""
    z = np.asarray(logits, dtype=np.float64)
    m = z.max()
    return float(m + math.log(np.exp(z - m).sum()) - z[target])


def aggregate_loss(batch: MiniBatch, n_rays: int = DEFAULT_RAYS) -> LossBreakdown:
    """Weighted sum of classification, shape and scale/offset terms.

    Classification is averaged over positives and negatives together,
    regression terms over positives only.  With no positive points the
    regression terms are zero and the result is flagged.
    """
    if batch.n_cls == 0:
        raise EmptyBatch("batch has no positive or negative points")
    cls_sum = 0.0
    content_sum = 0.0
    reg_sum = 0.0
    for point, q in zip(batch.points, batch.q):
        if point.label == "ignored":
            continue
        cls_sum += q * softmax_cross_entropy(point.cls_logits, point.cls_target)
        if point.label == "positive":
            content_sum += q * content_loss(point.shape_pred, point.shape_target, n_rays)
            gap = point.reg_pred.as_array() - point.reg_target.as_array()
            reg_sum += q * float(np.mean(smooth_l1(gap)))
    cls = cls_sum / batch.n_cls
    if batch.n_reg > 0:
        content = content_sum / batch.n_reg
        reg = reg_sum / batch.n_reg
        no_positives = False
    else:
        content = 0.0
        reg = 0.0
        no_positives = True
    return LossBreakdown(
        total=cls + content + reg,
        cls=cls,
        content=content,
        reg=reg,
        no_positives=no_positives,
    )


@dataclass(frozen=True)
class GradCheckResult:
    passed: bool
    max_relative_error: float
    trials: int


def gradient_check(
    seed: int = 0,
    trials: int = 100,
    n_rays: int = DEFAULT_RAYS,
    degrees: Sequence[int] = (11, 44, 66),
    step: float = 1e-6,
    negate: bool = False,
) -> GradCheckResult:
    """Compare the analytic content-loss gradient with central finite
    differences on random coefficient pairs.

    A component passes when its relative error is under 1e-5, or its
    absolute error under 1e-8 for near-zero components.  `negate` flips
    the analytic gradient and exists as a self-test of the check.
    """
    rng = np.random.default_rng(seed)
    degrees = tuple(int(d) for d in degrees)
    max_rel = 0.0
    passed = True
    for _ in range(trials):
        degree = int(rng.choice(degrees))
        # Mix small and large gaps so both smooth-L1 branches are hit.
        spread = float(rng.choice([0.2, 1.5]))
        decay = 1.0 / np.sqrt(1.0 + np.arange(degree + 1))
        pred = ShapeVector(tuple(rng.normal(0.0, spread) * decay))
        target = ShapeVector(tuple(rng.normal(0.0, spread) * decay))
        analytic = content_loss_grad(pred, target, n_rays)
        if negate:
            analytic = -analytic
        base = np.asarray(pred.coeffs)
        fd = np.empty_like(analytic)
        for k in range(base.size):
            bumped = base.copy()
            bumped[k] = base[k] + step
            hi = content_loss(ShapeVector(tuple(bumped)), target, n_rays)
            bumped[k] = base[k] - step
            lo = content_loss(ShapeVector(tuple(bumped)), target, n_rays)
            fd[k] = (hi - lo) / (2.0 * step)
        err = np.abs(analytic - fd)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
        rel = err / denom
        max_rel = max(max_rel, float(rel.max()))
        ok = (err < 1e-8) | (rel < 1e-5)
        if not bool(ok.all()):
            passed = False
    return GradCheckResult(passed=passed, max_relative_error=max_rel, trials=trials)
