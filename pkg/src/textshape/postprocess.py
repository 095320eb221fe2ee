"""Detection post-processing: perimeter resampling, soft suppression,
score thresholding."""

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_SCORE_FLOOR, DEFAULT_SIGMA
from .errors import InvalidPolygon
from .geometry import Polygon, polygon_iou


@dataclass(frozen=True)
class Detection:
    """A scored contour, optionally tagged with its pyramid level."""

    polygon: Polygon
    score: float
    level: int | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


def resample_perimeter(polygon: Polygon, n_points: int) -> Polygon:
    """Replace the ring with `n_points` vertices spaced uniformly by arc
    length, starting at vertex 0."""
    if n_points < 3:
        raise ValueError(f"n_points must be >= 3, got {n_points}")
    coords = polygon.coords
    closed = np.vstack([coords, coords[:1]])
    seg = np.hypot(*(np.diff(closed, axis=0).T))
    total = seg.sum()
    if total <= 0.0:
        raise InvalidPolygon("ring has zero perimeter")
    acc = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.arange(n_points) * (total / n_points)
    idx = np.clip(np.searchsorted(acc, targets, side="right") - 1, 0, len(seg) - 1)
    frac = (targets - acc[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    pts = closed[idx] + frac[:, None] * (closed[idx + 1] - closed[idx])
    return Polygon(pts)


def soft_nms(
    detections: list[Detection],
    sigma: float = DEFAULT_SIGMA,
    score_floor: float = DEFAULT_SCORE_FLOOR,
) -> list[Detection]:
    """Gaussian soft suppression.

    Repeatedly promotes the highest-scoring remaining detection and
    decays the others by exp(-iou^2 / sigma) against it; detections
    falling below `score_floor` are dropped.  Ties keep input order.
    Output is sorted by final score, descending.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    live = [(d, float(d.score)) for d in detections]
    kept: list[Detection] = []
    while live:
        best = max(range(len(live)), key=lambda i: (live[i][1], -i))
        det, score = live.pop(best)
        kept.append(Detection(polygon=det.polygon, score=score, level=det.level))
        rescored = []
        for other, s in live:
            iou = polygon_iou(det.polygon, other.polygon)
            s = s * math.exp(-(iou * iou) / sigma)
            if s >= score_floor:
                rescored.append((other, s))
        live = rescored
    return kept


def threshold_detections(
    detections: list[Detection], min_score: float
) -> list[Detection]:
    """Keep detections scoring strictly above `min_score`; order preserved."""
    return [d for d in detections if d.score > min_score]
