"""Corpus, encoding and detection documents.

All documents are JSON with a top-level "kind" discriminator, written
with sorted keys and two-space indentation so identical inputs always
produce byte-identical files.  Floats round-trip losslessly through the
standard encoder.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import geometry
from .codec import Fidelity, GeometricEncoding, ShapeVector
from .config import LOW_FIDELITY_IOU
from .errors import InvalidPolygon, ParseError, TargetTooSmall
from .geometry import PairedPolyline, Point2, Polygon
from .postprocess import Detection

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Instance:
    """One annotated contour, optionally with paired top/bottom chains."""

    polygon: Polygon
    pairing: PairedPolyline | None = None
    ignore: bool = False


@dataclass(frozen=True)
class AnnotatedImage:
    id: str
    width: float
    height: float
    instances: tuple[Instance, ...]


@dataclass(frozen=True)
class EncodingRecord:
    """A stored contour encoding traced back to its source instance."""

    image_id: str
    instance_index: int
    encoding: GeometricEncoding
    fidelity: Fidelity | None = None

    @property
    def low_fidelity(self) -> bool | None:
        """True when the reconstruction overlaps its source too little to
        trust; None when fidelity was not measured."""
        if self.fidelity is None:
            return None
        return self.fidelity.iou < LOW_FIDELITY_IOU


def _require(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ParseError(f"{where}: {msg}")


def _read_doc(path: str | Path, expected_kind: str) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at offset {exc.pos}: {exc.msg}") from exc
    _require(isinstance(doc, dict), str(path), "top level must be an object")
    kind = doc.get("kind")
    _require(
        kind == expected_kind,
        str(path),
        f'expected kind "{expected_kind}", got {kind!r}',
    )
    return doc


def write_document(doc: dict, path: str | Path) -> None:
    """Serialize a document deterministically."""
    text = json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _flat_points(raw, where: str) -> list[float]:
    _require(isinstance(raw, list), where, "points must be a list")
    _require(len(raw) % 2 == 0, where, f"odd coordinate count {len(raw)}")
    _require(len(raw) >= 6, where, f"need at least 3 points, got {len(raw) // 2}")
    out = []
    for v in raw:
        _require(
            isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v),
            where,
            f"non-finite or non-numeric coordinate {v!r}",
        )
        out.append(float(v))
    return out


def _pairing_from_split(points: list[Point2], split: int, where: str) -> PairedPolyline:
    _require(isinstance(split, int) and not isinstance(split, bool), where,
             "pairing_split must be an integer")
    _require(split >= 2, where, f"pairing_split must be >= 2, got {split}")
    _require(
        len(points) == 2 * split,
        where,
        f"pairing_split {split} needs {2 * split} points, got {len(points)}",
    )
    top = tuple(points[:split])
    bottom = tuple(reversed(points[split:]))
    return PairedPolyline(top=top, bottom=bottom)


def _clamp_points(
    pts: list[float], width: float, height: float, where: str
) -> list[float]:
    clamped = []
    moved = False
    for i in range(0, len(pts), 2):
        x = min(max(pts[i], 0.0), width)
        y = min(max(pts[i + 1], 0.0), height)
        moved = moved or x != pts[i] or y != pts[i + 1]
        clamped.extend([x, y])
    if moved:
        logger.warning("%s: vertices outside the image were clamped", where)
    return clamped


def load_corpus(path: str | Path, lenient: bool = False) -> list[AnnotatedImage]:
    """Read an annotation corpus.

    Structural problems raise ParseError naming the location.  Instances
    whose ring is not simple raise InvalidPolygon naming image and index,
    or are skipped with a warning when `lenient` is set.  Vertices
    outside the image bounds are clamped with a warning.
    """
    doc = _read_doc(path, "corpus")
    raw_images = doc.get("images")
    _require(isinstance(raw_images, list), str(path), '"images" must be a list')
    images = []
    for img_i, raw in enumerate(raw_images):
        where = f"{path}: images[{img_i}]"
        _require(isinstance(raw, dict), where, "image must be an object")
        image_id = raw.get("id")
        _require(isinstance(image_id, str) and image_id, where, "missing image id")
        width = raw.get("width")
        height = raw.get("height")
        for name, v in (("width", width), ("height", height)):
            _require(
                isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0,
                where,
                f"{name} must be a positive number",
            )
        raw_instances = raw.get("instances")
        _require(isinstance(raw_instances, list), where, '"instances" must be a list')
        instances = []
        for inst_i, inst in enumerate(raw_instances):
            inst_where = f"{path}: image {image_id!r} instance {inst_i}"
            _require(isinstance(inst, dict), inst_where, "instance must be an object")
            pts = _flat_points(inst.get("points"), inst_where)
            pts = _clamp_points(pts, float(width), float(height), inst_where)
            points = [Point2(pts[i], pts[i + 1]) for i in range(0, len(pts), 2)]
            split = inst.get("pairing_split")
            pairing = (
                _pairing_from_split(points, split, inst_where)
                if split is not None
                else None
            )
            ignore = inst.get("ignore", False)
            _require(isinstance(ignore, bool), inst_where, "ignore must be a boolean")
            try:
                polygon = Polygon(points)
                geometry.ensure_simple(polygon)
            except InvalidPolygon as exc:
                if lenient:
                    logger.warning("%s skipped: %s", inst_where, exc)
                    continue
                raise InvalidPolygon(f"{inst_where}: {exc}") from exc
            instances.append(Instance(polygon=polygon, pairing=pairing, ignore=ignore))
        images.append(
            AnnotatedImage(
                id=image_id,
                width=float(width),
                height=float(height),
                instances=tuple(instances),
            )
        )
    return images


def _instance_to_json(instance: Instance) -> dict:
    pts = [float(v) for p in instance.polygon.coords for v in p]
    out: dict = {"points": pts, "ignore": instance.ignore, "pairing_split": None}
    if instance.pairing is not None:
        out["pairing_split"] = len(instance.pairing.top)
    return out


def save_corpus(images: Sequence[AnnotatedImage], path: str | Path) -> None:
    doc = {
        "kind": "corpus",
        "images": [
            {
                "id": img.id,
                "width": img.width,
                "height": img.height,
                "instances": [_instance_to_json(inst) for inst in img.instances],
            }
            for img in images
        ],
    }
    write_document(doc, path)


def save_encodings(records: Sequence[EncodingRecord], path: str | Path) -> None:
    rows = []
    for rec in records:
        row: dict = {
            "image_id": rec.image_id,
            "instance": rec.instance_index,
            "coeffs": list(rec.encoding.shape.coeffs),
            "scale": rec.encoding.scale,
            "center": [rec.encoding.center.x, rec.encoding.center.y],
            "fidelity": None,
            "low_fidelity": rec.low_fidelity,
        }
        if rec.fidelity is not None:
            row["fidelity"] = {
                "iou": rec.fidelity.iou,
                "mean_radial_error": rec.fidelity.mean_radial_error,
            }
        rows.append(row)
    write_document({"kind": "encodings", "records": rows}, path)


def load_encodings(path: str | Path) -> list[EncodingRecord]:
    doc = _read_doc(path, "encodings")
    raw_records = doc.get("records")
    _require(isinstance(raw_records, list), str(path), '"records" must be a list')
    records = []
    for i, raw in enumerate(raw_records):
        where = f"{path}: records[{i}]"
        _require(isinstance(raw, dict), where, "record must be an object")
        try:
            coeffs = tuple(float(c) for c in raw["coeffs"])
            cx, cy = (float(v) for v in raw["center"])
            encoding = GeometricEncoding(
                shape=ShapeVector(coeffs),
                scale=float(raw["scale"]),
                center=Point2(cx, cy),
            )
            fidelity = None
            if raw.get("fidelity") is not None:
                fidelity = Fidelity(
                    iou=float(raw["fidelity"]["iou"]),
                    mean_radial_error=float(raw["fidelity"]["mean_radial_error"]),
                )
            records.append(
                EncodingRecord(
                    image_id=str(raw["image_id"]),
                    instance_index=int(raw["instance"]),
                    encoding=encoding,
                    fidelity=fidelity,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{where}: {exc}") from exc
    return records


def save_detections(
    items: Sequence[tuple[str, Sequence[Detection]]], path: str | Path
) -> None:
    doc = {
        "kind": "detections",
        "images": [
            {
                "id": image_id,
                "detections": [
                    {
                        "points": [float(v) for p in d.polygon.coords for v in p],
                        "score": d.score,
                        "level": d.level,
                    }
                    for d in dets
                ],
            }
            for image_id, dets in items
        ],
    }
    write_document(doc, path)


def load_detections(path: str | Path) -> list[tuple[str, list[Detection]]]:
    doc = _read_doc(path, "detections")
    raw_images = doc.get("images")
    _require(isinstance(raw_images, list), str(path), '"images" must be a list')
    out = []
    for img_i, raw in enumerate(raw_images):
        where = f"{path}: images[{img_i}]"
        _require(isinstance(raw, dict), where, "image must be an object")
        image_id = raw.get("id")
        _require(isinstance(image_id, str) and image_id, where, "missing image id")
        raw_dets = raw.get("detections")
        _require(isinstance(raw_dets, list), where, '"detections" must be a list')
        dets = []
        for det_i, det in enumerate(raw_dets):
            det_where = f"{where}: detections[{det_i}]"
            _require(isinstance(det, dict), det_where, "detection must be an object")
            pts = _flat_points(det.get("points"), det_where)
            try:
                polygon = Polygon(
                    [(pts[i], pts[i + 1]) for i in range(0, len(pts), 2)]
                )
                level = det.get("level")
                dets.append(
                    Detection(
                        polygon=polygon,
                        score=float(det["score"]),
                        level=None if level is None else int(level),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{det_where}: {exc}") from exc
        out.append((image_id, dets))
    return out


def interpolate_vertices(polygon: Polygon, target: int) -> Polygon:
    """Grow the ring to exactly `target` vertices by inserting points on
    its edges, longest edges first by largest-remainder share.

    Original vertices are preserved in order; inserted points are spaced
    evenly within their edge, so the outline is unchanged.
    """
    n = len(polygon)
    if target < n:
        raise TargetTooSmall(f"target {target} is below the vertex count {n}")
    if target == n:
        return Polygon(polygon.coords)
    coords = polygon.coords
    closed = [*coords, coords[0]]
    lengths = [math.dist(closed[i], closed[i + 1]) for i in range(n)]
    total = sum(lengths)
    if total <= 0.0:
        raise InvalidPolygon("ring has zero perimeter")
    extra = target - n
    shares = [length / total * extra for length in lengths]
    counts = [int(s) for s in shares]
    deficit = extra - sum(counts)
    by_remainder = sorted(range(n), key=lambda i: (counts[i] - shares[i], i))
    for i in by_remainder[:deficit]:
        counts[i] += 1
    out = []
    for i in range(n):
        a, b = closed[i], closed[i + 1]
        out.append(a)
        k = counts[i]
        for j in range(1, k + 1):
            f = j / (k + 1)
            out.append((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])))
    return Polygon(out)
