"""Command-line interface.

Commands parse and write documents locally but delegate every
computation to the HTTP service: an in-process instance by default, or
a remote one via --server.  Requests for independent images run
concurrently under a bounded worker pool; results are reassembled in
input order so outputs are reproducible byte for byte.
"""

import asyncio
import functools
import math
import sys

import click
import httpx
import numpy as np

from . import dataset_io, synth
from .codec import Fidelity, GeometricEncoding, ShapeVector
from .config import (
    DEFAULT_DEGREE,
    DEFAULT_IOU_THRESH,
    DEFAULT_NEG_THRESH,
    DEFAULT_POS_THRESH,
    DEFAULT_RAYS,
    DEFAULT_RESAMPLE_POINTS,
    DEFAULT_SCORE_FLOOR,
    DEFAULT_SCORE_THRESH,
    DEFAULT_SIGMA,
    LINE_LEVEL_RANGES,
    SWEEP_DEGREES,
    RunConfig,
    available_workers,
)
from .dataset_io import EncodingRecord
from .errors import ParseError, ServiceError, TextShapeError
from .geometry import Point2, Polygon
from .postprocess import Detection

API = "/api/v1"

_workers_option = click.option(
    "--workers",
    default=None,
    type=int,
    show_default="available parallelism",
    help="Max concurrent image requests.",
)


def _post_many(
    server: str | None, path: str, payloads: list[dict], workers: int
) -> list[dict]:
    """POST every payload to `path`, at most `workers` in flight, and
    return the JSON bodies in payload order."""

    async def run() -> list[dict]:
        if server is None:
            from .service import app

            transport = httpx.ASGITransport(app=app)
            base = "http://service.local"
        else:
            transport = None
            base = server.rstrip("/")
        sem = asyncio.Semaphore(max(1, workers))

        async def one(client: httpx.AsyncClient, payload: dict) -> dict:
            async with sem:
                try:
                    resp = await client.post(path, json=payload)
                except httpx.HTTPError as exc:
                    raise ServiceError(f"request to {path} failed: {exc}") from exc
            if resp.status_code != 200:
                try:
                    detail = resp.json()
                except ValueError:
                    detail = resp.text
                raise ServiceError(f"{path} returned {resp.status_code}: {detail}")
            return resp.json()

        async with httpx.AsyncClient(
            transport=transport, base_url=base, timeout=300.0
        ) as client:
            return list(await asyncio.gather(*(one(client, p) for p in payloads)))

    return asyncio.run(run())


def _handle_errors(fn):
    """Translate domain failures into the exit-code contract: parse and
    file problems exit 2, validation and computation problems exit 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except TextShapeError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _parse_degrees(text: str) -> tuple[int, ...]:
    try:
        values = sorted({int(part) for part in text.split(",") if part.strip()})
    except ValueError as exc:
        raise TextShapeError(f"bad degree list {text!r}") from exc
    if not values or any(v < 0 for v in values):
        raise TextShapeError(f"bad degree list {text!r}")
    return tuple(values)


def _instance_payload(instance: dataset_io.Instance) -> dict:
    points = [float(v) for row in instance.polygon.coords for v in row]
    split = len(instance.pairing.top) if instance.pairing is not None else None
    return {"points": points, "pairing_split": split}


_in_file = click.Path(exists=True, dir_okay=False)
_out_file = click.Path(dir_okay=False, writable=True)


@click.group()
def main() -> None:
    """Contour codec toolkit: encode, sweep, evaluate, check gradients."""


@main.command()
@click.option("--corpus", type=_in_file, required=True, help="Annotation corpus.")
@click.option("--out", type=_out_file, required=True, help="Encodings document.")
@click.option("--rays", default=DEFAULT_RAYS, show_default=True)
@click.option("--degree", default=DEFAULT_DEGREE, show_default=True)
@_workers_option
@click.option("--seed", default=0, show_default=True)
@click.option("--lenient", is_flag=True, help="Skip invalid instances with a warning.")
@click.option("--server", default=None, help="Remote service URL (in-process default).")
@_handle_errors
def encode(corpus, out, rays, degree, workers, seed, lenient, server) -> None:
    """Encode every instance of a corpus and report fidelity."""
    cfg = RunConfig(
        command="encode", corpus=corpus, out=out, rays=rays, degree=degree,
        workers=workers or available_workers(), seed=seed, lenient=lenient,
        server=server,
    )
    if cfg.rays < 4:
        raise TextShapeError(f"--rays must be >= 4, got {cfg.rays}")
    if cfg.degree < 0:
        raise TextShapeError(f"--degree must be >= 0, got {cfg.degree}")
    images = dataset_io.load_corpus(cfg.corpus, lenient=cfg.lenient)
    payloads = [
        {
            "instances": [_instance_payload(inst) for inst in img.instances],
            "rays": cfg.rays,
            "degree": cfg.degree,
            "with_fidelity": True,
        }
        for img in images
        if img.instances
    ]
    responses = _post_many(cfg.server, API + "/encode", payloads, cfg.workers)
    records: list[EncodingRecord] = []
    nonempty = [img for img in images if img.instances]
    for img, resp in zip(nonempty, responses):
        for idx, (enc, fid) in enumerate(zip(resp["encodings"], resp["fidelity"])):
            records.append(
                EncodingRecord(
                    image_id=img.id,
                    instance_index=idx,
                    encoding=GeometricEncoding(
                        shape=ShapeVector(tuple(enc["coeffs"])),
                        scale=enc["scale"],
                        center=Point2(*enc["center"]),
                    ),
                    fidelity=Fidelity(
                        iou=fid["iou"], mean_radial_error=fid["mean_radial_error"]
                    ),
                )
            )
    dataset_io.save_encodings(records, cfg.out)
    click.echo(f"images: {len(images)}  instances: {len(records)}")
    if records:
        ious = sorted(r.fidelity.iou for r in records)
        mean_iou = sum(ious) / len(ious)
        median_iou = ious[len(ious) // 2]
        mean_err = sum(r.fidelity.mean_radial_error for r in records) / len(records)
        flagged = sum(1 for r in records if r.low_fidelity)
        click.echo(f"mean IoU: {mean_iou:.6f}  median IoU: {median_iou:.6f}")
        click.echo(f"mean radial error: {mean_err:.6f}")
        click.echo(f"low-fidelity instances: {flagged}")
    click.echo(f"wrote {len(records)} records to {cfg.out}")


@main.command()
@click.option("--corpus", type=_in_file, required=True, help="Annotation corpus.")
@click.option("--out", type=_out_file, required=True, help="Sweep document.")
@click.option("--rays", default=DEFAULT_RAYS, show_default=True)
@click.option(
    "--degrees",
    default=",".join(str(d) for d in SWEEP_DEGREES),
    show_default=True,
    help="Comma-separated fit degrees.",
)
@_workers_option
@click.option("--seed", default=0, show_default=True)
@click.option("--lenient", is_flag=True, help="Skip invalid instances with a warning.")
@click.option("--server", default=None, help="Remote service URL (in-process default).")
@_handle_errors
def sweep(corpus, out, rays, degrees, workers, seed, lenient, server) -> None:
    """Fit every instance at several degrees and tabulate mean fidelity."""
    degree_list = _parse_degrees(degrees)
    cfg = RunConfig(
        command="sweep", corpus=corpus, out=out, rays=rays, degrees=degree_list,
        workers=workers or available_workers(), seed=seed, lenient=lenient,
        server=server,
    )
    if cfg.rays < 4:
        raise TextShapeError(f"--rays must be >= 4, got {cfg.rays}")
    images = dataset_io.load_corpus(cfg.corpus, lenient=cfg.lenient)
    payloads = [
        {
            "instances": [_instance_payload(inst) for inst in img.instances],
            "rays": cfg.rays,
            "degrees": list(degree_list),
        }
        for img in images
        if img.instances
    ]
    responses = _post_many(cfg.server, API + "/sweep", payloads, cfg.workers)
    per_degree: list[list[Fidelity]] = [[] for _ in degree_list]
    for resp in responses:
        for row in resp["results"]:
            for j, fid in enumerate(row):
                per_degree[j].append(
                    Fidelity(iou=fid["iou"], mean_radial_error=fid["mean_radial_error"])
                )
    rows = []
    for degree, fids in zip(degree_list, per_degree):
        n = len(fids)
        rows.append(
            {
                "degree": degree,
                "instances": n,
                "mean_iou": sum(f.iou for f in fids) / n if n else None,
                "mean_radial_error": (
                    sum(f.mean_radial_error for f in fids) / n if n else None
                ),
            }
        )
    dataset_io.write_document(
        {"kind": "degree_sweep", "rays": cfg.rays, "rows": rows}, cfg.out
    )
    click.echo(f"{'degree':>6}  {'mean_iou':>10}  {'mean_radial_error':>18}")
    for row in rows:
        if row["instances"]:
            click.echo(
                f"{row['degree']:>6}  {row['mean_iou']:>10.6f}"
                f"  {row['mean_radial_error']:>18.6f}"
            )
        else:
            click.echo(f"{row['degree']:>6}  {'n/a':>10}  {'n/a':>18}")
    click.echo(f"wrote sweep over {len(degree_list)} degrees to {cfg.out}")


@main.command(name="eval")
@click.option("--detections", type=_in_file, required=True, help="Detections document.")
@click.option("--gt", type=_in_file, required=True, help="Annotation corpus.")
@click.option("--out", type=_out_file, default=None, help="Optional report document.")
@click.option("--iou-thresh", default=DEFAULT_IOU_THRESH, show_default=True)
@click.option(
    "--per-image", is_flag=True, help="Average per image instead of pooling counts."
)
@click.option("--server", default=None, help="Remote service URL (in-process default).")
@_handle_errors
def eval_cmd(detections, gt, out, iou_thresh, per_image, server) -> None:
    """Score a detections document against an annotation corpus."""
    if not (0.0 < iou_thresh < 1.0):
        raise TextShapeError(f"--iou-thresh must lie in (0, 1), got {iou_thresh}")
    det_items = dataset_io.load_detections(detections)
    images = dataset_io.load_corpus(gt)
    known = {img.id for img in images}
    unknown = [image_id for image_id, _ in det_items if image_id not in known]
    if unknown:
        raise TextShapeError(f"detections reference unknown images: {unknown}")
    dets_by_id = {image_id: dets for image_id, dets in det_items}
    payload = {
        "images": [
            {
                "detections": [
                    {
                        "points": [float(v) for row in d.polygon.coords for v in row],
                        "score": d.score,
                        "level": d.level,
                    }
                    for d in dets_by_id.get(img.id, [])
                ],
                "ground_truth": [
                    {
                        "points": [
                            float(v) for row in inst.polygon.coords for v in row
                        ],
                        "ignore": inst.ignore,
                    }
                    for inst in img.instances
                ],
            }
            for img in images
        ],
        "iou_thresh": iou_thresh,
        "pooled": not per_image,
    }
    (resp,) = _post_many(server, API + "/evaluate", [payload], 1)
    click.echo(f"precision: {resp['precision']:.6f}")
    click.echo(f"recall: {resp['recall']:.6f}")
    click.echo(f"f_measure: {resp['f_measure']:.6f}")
    c = resp["counts"]
    click.echo(
        f"tp: {c['tp']}  fp: {c['fp']}  fn: {c['fn']}"
        f"  ignored_hits: {c['ignored_hits']}"
    )
    if out is not None:
        dataset_io.write_document(
            {
                "kind": "evaluation",
                "iou_thresh": iou_thresh,
                "pooled": not per_image,
                "precision": resp["precision"],
                "recall": resp["recall"],
                "f_measure": resp["f_measure"],
                "counts": c,
            },
            out,
        )
        click.echo(f"wrote report to {out}")


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--trials", default=100, show_default=True)
@click.option("--rays", default=DEFAULT_RAYS, show_default=True)
@click.option("--degrees", default="11,44,66", show_default=True)
@click.option("--step", default=1e-6, show_default=True)
@click.option("--negate", is_flag=True, hidden=True)
@click.option("--server", default=None, help="Remote service URL (in-process default).")
@_handle_errors
def gradcheck(seed, trials, rays, degrees, step, negate, server) -> None:
    """Verify the analytic loss gradient against finite differences."""
    degree_list = _parse_degrees(degrees)
    if trials < 1:
        raise TextShapeError(f"--trials must be >= 1, got {trials}")
    if step <= 0:
        raise TextShapeError(f"--step must be positive, got {step}")
    payload = {
        "seed": seed,
        "trials": trials,
        "rays": rays,
        "degrees": list(degree_list),
        "step": step,
        "negate": negate,
    }
    (resp,) = _post_many(server, API + "/gradcheck", [payload], 1)
    click.echo(f"trials: {resp['trials']}")
    click.echo(f"max relative error: {resp['max_relative_error']:.3e}")
    click.echo(f"result: {'PASS' if resp['passed'] else 'FAIL'}")
    if not resp["passed"]:
        sys.exit(1)


@main.command()
@click.option("--detections", type=_in_file, required=True, help="Raw detections.")
@click.option("--out", type=_out_file, required=True, help="Filtered detections.")
@click.option("--score-thresh", default=DEFAULT_SCORE_THRESH, show_default=True)
@click.option("--sigma", default=DEFAULT_SIGMA, show_default=True)
@click.option("--score-floor", default=DEFAULT_SCORE_FLOOR, show_default=True)
@click.option(
    "--resample",
    default=DEFAULT_RESAMPLE_POINTS,
    show_default=True,
    help="Vertex count for output contours; 0 keeps them as-is.",
)
@_workers_option
@click.option("--server", default=None, help="Remote service URL (in-process default).")
@_handle_errors
def postprocess(
    detections, out, score_thresh, sigma, score_floor, resample, workers, server
) -> None:
    """Threshold, soft-suppress and resample a detections document."""
    if not (0.0 <= score_thresh <= 1.0):
        raise TextShapeError(f"--score-thresh must lie in [0, 1], got {score_thresh}")
    if sigma <= 0.0:
        raise TextShapeError(f"--sigma must be positive, got {sigma}")
    if resample != 0 and resample < 3:
        raise TextShapeError(f"--resample must be 0 or >= 3, got {resample}")
    cfg = RunConfig(
        command="postprocess", out=out, score_thresh=score_thresh, sigma=sigma,
        workers=workers or available_workers(), server=server,
    )
    items = dataset_io.load_detections(detections)
    payloads = [
        {
            "detections": [
                {
                    "points": [float(v) for row in d.polygon.coords for v in row],
                    "score": d.score,
                    "level": d.level,
                }
                for d in dets
            ],
            "min_score": cfg.score_thresh,
            "sigma": cfg.sigma,
            "score_floor": score_floor,
            "resample_to": resample or None,
        }
        for _, dets in items
    ]
    responses = _post_many(cfg.server, API + "/postprocess", payloads, cfg.workers)
    out_items = []
    kept = 0
    for (image_id, _), resp in zip(items, responses):
        dets = [
            Detection(
                polygon=Polygon(
                    [
                        (d["points"][i], d["points"][i + 1])
                        for i in range(0, len(d["points"]), 2)
                    ]
                ),
                score=d["score"],
                level=d["level"],
            )
            for d in resp["detections"]
        ]
        kept += len(dets)
        out_items.append((image_id, dets))
    dataset_io.save_detections(out_items, cfg.out)
    total = sum(len(dets) for _, dets in items)
    click.echo(f"kept {kept} of {total} detections")
    click.echo(f"wrote {len(out_items)} images to {cfg.out}")


def _parse_levels(text: str) -> list[tuple[float, float | None]]:
    ranges = []
    try:
        for part in text.split(","):
            lo_text, hi_text = part.split(":")
            lo = float(lo_text)
            hi = None if hi_text.strip() in ("inf", "") else float(hi_text)
            if hi is not None and (math.isnan(lo) or math.isnan(hi) or lo > hi):
                raise ValueError(part)
            ranges.append((lo, hi))
    except ValueError as exc:
        raise TextShapeError(f"bad level ranges {text!r}") from exc
    if not ranges:
        raise TextShapeError(f"bad level ranges {text!r}")
    return ranges


_DEFAULT_LEVELS = ",".join(
    f"{lo}:{'inf' if math.isinf(hi) else hi}" for lo, hi in LINE_LEVEL_RANGES
)


@main.command()
@click.option("--corpus", type=_in_file, required=True, help="Annotation corpus.")
@click.option("--encodings", type=_in_file, required=True, help="Encodings document.")
@click.option("--out", type=_out_file, required=True, help="Labels document.")
@click.option("--neg-thresh", default=DEFAULT_NEG_THRESH, show_default=True)
@click.option("--pos-thresh", default=DEFAULT_POS_THRESH, show_default=True)
@click.option(
    "--levels",
    default=_DEFAULT_LEVELS,
    show_default=True,
    help="Comma-separated lo:hi size bands (hi may be inf).",
)
@click.option("--samples", default=256, show_default=True, help="Points per instance.")
@click.option("--seed", default=0, show_default=True)
@_workers_option
@click.option("--server", default=None, help="Remote service URL (in-process default).")
@_handle_errors
def classify(
    corpus, encodings, out, neg_thresh, pos_thresh, levels, samples, seed,
    workers, server,
) -> None:
    """Label seeded sample points around each encoded instance and
    report its size-band assignment."""
    if not (0.0 <= neg_thresh <= pos_thresh):
        raise TextShapeError(
            f"need 0 <= --neg-thresh <= --pos-thresh, got {neg_thresh}, {pos_thresh}"
        )
    if samples < 1:
        raise TextShapeError(f"--samples must be >= 1, got {samples}")
    ranges = _parse_levels(levels)
    cfg = RunConfig(
        command="classify", corpus=corpus, out=out, neg_thresh=neg_thresh,
        pos_thresh=pos_thresh, seed=seed,
        workers=workers or available_workers(), server=server,
    )
    images = {img.id: img for img in dataset_io.load_corpus(cfg.corpus)}
    records = dataset_io.load_encodings(encodings)
    unknown = sorted({r.image_id for r in records} - set(images))
    if unknown:
        raise TextShapeError(f"encodings reference unknown images: {unknown}")
    rng = np.random.default_rng(cfg.seed)
    payloads = []
    for rec in records:
        img = images[rec.image_id]
        pts = rng.uniform((0.0, 0.0), (img.width, img.height), size=(samples, 2))
        payloads.append(
            {
                "points": pts.tolist(),
                "scale": rec.encoding.scale,
                "center": [rec.encoding.center.x, rec.encoding.center.y],
                "neg_thresh": cfg.neg_thresh,
                "pos_thresh": cfg.pos_thresh,
            }
        )
    responses = _post_many(cfg.server, API + "/classify-points", payloads, cfg.workers)
    level_payloads = []
    by_image: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        by_image.setdefault(rec.image_id, []).append(i)
    levels_per_record: dict[int, list[int]] = {}
    rel_size_per_record: dict[int, float] = {}
    for image_id, idxs in sorted(by_image.items()):
        img = images[image_id]
        payload = {
            "scales": [records[i].encoding.scale for i in idxs],
            "width": img.width,
            "height": img.height,
            "ranges": ranges,
        }
        (resp,) = _post_many(cfg.server, API + "/assign-levels", [payload], 1)
        for i, level_set, rel in zip(idxs, resp["levels"], resp["relative_sizes"]):
            levels_per_record[i] = level_set
            rel_size_per_record[i] = rel
    rows = []
    totals = {"positive": 0, "negative": 0, "ignored": 0}
    for i, (rec, resp) in enumerate(zip(records, responses)):
        for kind in totals:
            totals[kind] += resp["counts"][kind]
        rows.append(
            {
                "image_id": rec.image_id,
                "instance": rec.instance_index,
                "counts": resp["counts"],
                "levels": levels_per_record[i],
                "relative_size": rel_size_per_record[i],
            }
        )
    dataset_io.write_document(
        {
            "kind": "point_labels",
            "neg_thresh": cfg.neg_thresh,
            "pos_thresh": cfg.pos_thresh,
            "samples": samples,
            "seed": cfg.seed,
            "records": rows,
        },
        cfg.out,
    )
    click.echo(
        f"labeled {samples} points around each of {len(records)} instances"
    )
    click.echo(
        f"totals: positive {totals['positive']}  negative {totals['negative']}"
        f"  ignored {totals['ignored']}"
    )
    click.echo(f"wrote labels to {cfg.out}")


@main.command(name="synth")
@click.option("--out", type=_out_file, required=True, help="Corpus document.")
@click.option("--instances", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--with-spiral", is_flag=True, help="Append a non-star-shaped band.")
@_handle_errors
def make_synth(out, instances, seed, with_spiral) -> None:
    """Write a deterministic synthetic corpus."""
    if instances < 1:
        raise TextShapeError(f"--instances must be >= 1, got {instances}")
    images, kinds = synth.synthetic_corpus(
        n_instances=instances, seed=seed, with_spiral=with_spiral
    )
    dataset_io.save_corpus(images, out)
    total = sum(len(img.instances) for img in images)
    click.echo(f"wrote {total} instances across {len(images)} images to {out}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True)
def serve(host, port) -> None:
    """Run the computation service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
