"""Planar primitives: points, polygons, ray casting and overlap measures.

Coordinates are pixels in image space.  Angles are radians measured from
the positive x axis.
"""

from dataclasses import dataclass
from typing import Iterable, Iterator, Literal

import numpy as np
import shapely.geometry
import shapely.ops

from .errors import InvalidPolygon

# Distance (px) within which a point counts as lying on a boundary.
BOUNDARY_TOL = 1e-9

# Rays parallel to an edge beyond this cross-product magnitude are
# treated as non-intersecting; collinear overlap is resolved by the
# neighbouring edges.
_PARALLEL_EPS = 1e-15

PointLocation = Literal["inside", "outside", "boundary"]


@dataclass(frozen=True)
class Point2:
    """A point in the image plane."""

    x: float
    y: float

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y


class Polygon:
    """A closed ring of vertices; the edge from the last vertex back to
    the first is implicit.

    Construction checks only structure (at least three finite vertices).
    Simplicity is checked separately by :func:`is_simple` /
    :func:`ensure_simple` so that degenerate rings produced by clamped
    reconstruction can still be carried around and repaired.
    """

    __slots__ = ("_coords", "_simple")

    def __init__(self, vertices: Iterable) -> None:
        coords = np.asarray(
            [(v.x, v.y) if isinstance(v, Point2) else tuple(v) for v in vertices],
            dtype=np.float64,
        )
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise InvalidPolygon("vertices must be (x, y) pairs")
        if coords.shape[0] < 3:
            raise InvalidPolygon(f"need at least 3 vertices, got {coords.shape[0]}")
        if not np.all(np.isfinite(coords)):
            raise InvalidPolygon("vertices must be finite")
        coords.flags.writeable = False
        self._coords = coords
        self._simple: bool | None = None

    @property
    def coords(self) -> np.ndarray:
        """Read-only (n, 2) float64 vertex array."""
        return self._coords

    @property
    def vertices(self) -> tuple[Point2, ...]:
        return tuple(Point2(float(x), float(y)) for x, y in self._coords)

    def __len__(self) -> int:
        return self._coords.shape[0]

    def __iter__(self) -> Iterator[Point2]:
        return iter(self.vertices)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polygon):
            return NotImplemented
        return self._coords.shape == other._coords.shape and bool(
            np.all(self._coords == other._coords)
        )

    def __hash__(self) -> int:
        return hash(self._coords.tobytes())

    def __repr__(self) -> str:
        return f"Polygon({len(self)} vertices)"


@dataclass(frozen=True)
class PairedPolyline:
    """Top and bottom boundary chains with index-wise correspondence."""

    top: tuple[Point2, ...]
    bottom: tuple[Point2, ...]

    def __post_init__(self) -> None:
        if len(self.top) != len(self.bottom):
            raise ValueError(
                f"chain lengths differ: {len(self.top)} vs {len(self.bottom)}"
            )
        if len(self.top) < 2:
            raise ValueError("paired chains need at least 2 points each")


def _closed_edges(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Edge start points and edge vectors, including the closing edge."""
    starts = coords
    ends = np.roll(coords, -1, axis=0)
    return starts, ends - starts


def is_simple(polygon: Polygon) -> bool:
    """True if the ring has no repeated consecutive vertices, no
    self-intersection and positive area."""
    if polygon._simple is not None:
        return polygon._simple
    coords = polygon.coords
    nxt = np.roll(coords, -1, axis=0)
    ok = not np.any(np.all(coords == nxt, axis=1))
    if ok:
        ring = shapely.geometry.Polygon(coords)
        ok = ring.is_valid and ring.area > 0.0
    polygon._simple = ok
    return ok


def ensure_simple(polygon: Polygon) -> None:
    """Raise InvalidPolygon unless the ring is simple."""
    if not is_simple(polygon):
        raise InvalidPolygon("polygon is degenerate or self-intersecting")


def polygon_area(polygon: Polygon) -> float:
    """Unsigned shoelace area."""
    x = polygon.coords[:, 0]
    y = polygon.coords[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def polygon_perimeter(polygon: Polygon) -> float:
    """Total boundary length including the closing edge."""
    _, vec = _closed_edges(polygon.coords)
    return float(np.hypot(vec[:, 0], vec[:, 1]).sum())


def polygon_centroid(polygon: Polygon) -> Point2:
    """Area centroid of the ring."""
    coords = polygon.coords
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area2 = cross.sum()
    if abs(area2) < 1e-300:
        # Zero-area ring: fall back to the vertex mean.
        return Point2(float(x.mean()), float(y.mean()))
    cx = ((x + xn) * cross).sum() / (3.0 * area2)
    cy = ((y + yn) * cross).sum() / (3.0 * area2)
    return Point2(float(cx), float(cy))


def _hit_params(coords: np.ndarray, origin: np.ndarray, angles: np.ndarray):
    """Ray/edge intersection parameters for every (angle, edge) pair.

    Returns (t, valid): t is the hit distance along each ray, valid marks
    pairs where the ray actually crosses the edge.  Each edge is half-open
    at its far vertex so a ray through a vertex is counted once.
    """
    starts, vecs = _closed_edges(coords)
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (m, 2)
    ao = starts[None, :, :] - origin[None, None, :]  # (1, n, 2) broadcast
    dxe = d[:, None, 0] * vecs[None, :, 1] - d[:, None, 1] * vecs[None, :, 0]
    ok = np.abs(dxe) > _PARALLEL_EPS
    denom = np.where(ok, dxe, 1.0)
    t = (ao[..., 0] * vecs[None, :, 1] - ao[..., 1] * vecs[None, :, 0]) / denom
    u = (ao[..., 0] * d[:, None, 1] - ao[..., 1] * d[:, None, 0]) / denom
    valid = ok & (u >= 0.0) & (u < 1.0) & (t >= 0.0)
    return t, valid


def ray_polygon_intersections(
    polygon: Polygon, origin: Point2, angle: float
) -> list[float]:
    """Distances from `origin` to every boundary crossing along the ray
    at `angle`, sorted ascending.  Empty if the ray misses."""
    ensure_simple(polygon)
    o = np.array([origin.x, origin.y], dtype=np.float64)
    t, valid = _hit_params(polygon.coords, o, np.array([float(angle)]))
    hits = np.sort(t[0][valid[0]])
    return [float(h) for h in hits]


def farthest_intersections(
    polygon: Polygon, origin: Point2, angles: np.ndarray
) -> np.ndarray:
    """Farthest boundary hit per ray; NaN where a ray misses entirely."""
    o = np.array([origin.x, origin.y], dtype=np.float64)
    t, valid = _hit_params(polygon.coords, o, np.asarray(angles, dtype=np.float64))
    t = np.where(valid, t, -np.inf)
    far = t.max(axis=1)
    return np.where(np.isfinite(far), far, np.nan)


def point_in_polygon(polygon: Polygon, point: Point2) -> PointLocation:
    """Even-odd containment test; points within BOUNDARY_TOL of an edge
    report "boundary"."""
    coords = polygon.coords
    px, py = point.x, point.y

    starts, vecs = _closed_edges(coords)
    rel = np.array([px, py]) - starts
    seg_len2 = (vecs * vecs).sum(axis=1)
    tt = np.clip((rel * vecs).sum(axis=1) / np.where(seg_len2 > 0, seg_len2, 1.0), 0, 1)
    nearest = starts + tt[:, None] * vecs
    dist = np.hypot(nearest[:, 0] - px, nearest[:, 1] - py)
    if dist.min() <= BOUNDARY_TOL:
        return "boundary"

    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    crosses = (y > py) != (yn > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = x + (py - y) / (yn - y) * (xn - x)
    inside = bool(np.logical_and(crosses, px < xi).sum() % 2)
    return "inside" if inside else "outside"


def _as_shapely(polygon: Polygon) -> shapely.geometry.base.BaseGeometry:
    """Shapely geometry for overlap math, repairing pinched or
    self-touching rings with an even-odd rebuild."""
    coords = polygon.coords
    keep = ~np.all(coords == np.roll(coords, -1, axis=0), axis=1)
    coords = coords[keep]
    if coords.shape[0] < 3:
        return shapely.geometry.Polygon()
    ring = shapely.geometry.Polygon(coords)
    if not ring.is_valid:
        ring = ring.buffer(0)
    return ring


def polygon_iou(a: Polygon, b: Polygon) -> float:
    """Intersection-over-union of two rings.

    Tolerates rings that are degenerate in ways reconstruction can
    produce (pinch points from clamped radii); a ring that repairs to
    nothing contributes zero area.
    """
    sa, sb = _as_shapely(a), _as_shapely(b)
    union = sa.union(sb).area
    if union <= 0.0:
        return 0.0
    return float(sa.intersection(sb).area / union)


def _chain_arc_midpoint(points: np.ndarray) -> Point2:
    """Point halfway along a polyline by arc length."""
    seg = np.hypot(*(np.diff(points, axis=0).T))
    total = seg.sum()
    if total <= 0.0:
        return Point2(float(points[0, 0]), float(points[0, 1]))
    half = total / 2.0
    acc = np.concatenate([[0.0], np.cumsum(seg)])
    i = int(np.searchsorted(acc, half, side="right") - 1)
    i = min(i, len(seg) - 1)
    frac = (half - acc[i]) / seg[i]
    p = points[i] + frac * (points[i + 1] - points[i])
    return Point2(float(p[0]), float(p[1]))


def pole_of_inaccessibility(polygon: Polygon, tolerance: float = 0.5) -> Point2:
    """Interior point with maximal distance to the boundary."""
    ensure_simple(polygon)
    p = shapely.ops.polylabel(shapely.geometry.Polygon(polygon.coords), tolerance)
    return Point2(float(p.x), float(p.y))


def text_center(polygon: Polygon, pairing: PairedPolyline | None = None) -> Point2:
    """Reference center for radial sampling.

    With a paired boundary the center is the arc-length midpoint of the
    centerline traced by the midpoints of corresponding top/bottom
    vertices.  Otherwise the area centroid is used, replaced by the pole
    of inaccessibility whenever it falls outside the ring.
    """
    ensure_simple(polygon)
    if pairing is not None:
        top = np.asarray([(p.x, p.y) for p in pairing.top])
        bot = np.asarray([(p.x, p.y) for p in pairing.bottom])
        return _chain_arc_midpoint((top + bot) / 2.0)
    c = polygon_centroid(polygon)
    if point_in_polygon(polygon, c) == "inside":
        return c
    return pole_of_inaccessibility(polygon)
