"""Polar contour codec.

A closed contour is sampled as radii along a fixed fan of rays from an
interior center, normalized by the largest radius, and compressed into
Chebyshev coefficients of the radius-vs-angle function.  The compact
form is coefficients + scale + center; decoding re-evaluates the series
on the ray fan.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .config import DEFAULT_DEGREE, DEFAULT_RAYS
from .errors import AllRaysMiss, DegenerateScale, InvalidPolygon, Underdetermined
from .geometry import PairedPolyline, Point2, Polygon

_GRID_TOL = 1e-12


def angle_grid(n_rays: int) -> np.ndarray:
    """Ray angles -pi + i * (2*pi/n) for i in 0..n-1, half-open at +pi."""
    if n_rays < 1:
        raise ValueError(f"n_rays must be positive, got {n_rays}")
    return -math.pi + (2.0 * math.pi / n_rays) * np.arange(n_rays)


def chebyshev_basis(x: np.ndarray, degree: int) -> np.ndarray:
    """Matrix of first-kind Chebyshev values T_k(x), shape (len(x), degree+1).

    Built by the recurrence T_0 = 1, T_1 = x, T_k = 2 x T_{k-1} - T_{k-2}.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    x = np.asarray(x, dtype=np.float64)
    cols = np.empty((x.shape[0], degree + 1), dtype=np.float64)
    cols[:, 0] = 1.0
    if degree >= 1:
        cols[:, 1] = x
    for k in range(2, degree + 1):
        cols[:, k] = 2.0 * x * cols[:, k - 1] - cols[:, k - 2]
    return cols


@dataclass(frozen=True)
class ShapeVector:
    """Chebyshev coefficients of the normalized radius function."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) < 1:
            raise ValueError("coefficient vector must be non-empty")
        coeffs = tuple(float(c) for c in self.coeffs)
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


class RadialProfile:
    """Radii sampled on the fixed ray fan.

    Rays that never meet the boundary carry NaN and are listed in
    `misses`; all other radii are finite and non-negative.
    """

    __slots__ = ("_angles", "_radii", "_misses")

    def __init__(self, angles, radii, misses: tuple[int, ...] = ()) -> None:
        angles = np.asarray(angles, dtype=np.float64).copy()
        radii = np.asarray(radii, dtype=np.float64).copy()
        if angles.shape != radii.shape or angles.ndim != 1 or angles.size == 0:
            raise ValueError("angles and radii must be equal-length 1-d arrays")
        expected = angle_grid(angles.size)
        if np.max(np.abs(angles - expected)) > _GRID_TOL:
            raise ValueError("angles do not lie on the uniform [-pi, pi) grid")
        misses = tuple(sorted(int(i) for i in misses))
        if any(i < 0 or i >= radii.size for i in misses):
            raise ValueError("miss index out of range")
        miss_mask = np.zeros(radii.size, dtype=bool)
        if misses:
            miss_mask[list(misses)] = True
        nan_mask = np.isnan(radii)
        if np.any(nan_mask & ~miss_mask):
            raise ValueError("NaN radius on a ray not listed as a miss")
        radii[miss_mask] = np.nan
        hit = radii[~miss_mask]
        if hit.size and (not np.all(np.isfinite(hit)) or np.any(hit < 0.0)):
            raise ValueError("hit radii must be finite and non-negative")
        angles.flags.writeable = False
        radii.flags.writeable = False
        self._angles = angles
        self._radii = radii
        self._misses = misses

    @property
    def angles(self) -> np.ndarray:
        return self._angles

    @property
    def radii(self) -> np.ndarray:
        return self._radii

    @property
    def misses(self) -> tuple[int, ...]:
        return self._misses

    @property
    def n_rays(self) -> int:
        return self._angles.size

    @property
    def valid_mask(self) -> np.ndarray:
        return ~np.isnan(self._radii)


@dataclass(frozen=True)
class GeometricEncoding:
    """Compact contour form: shape coefficients, pixel scale, center."""

    shape: ShapeVector
    scale: float
    center: Point2

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class Fidelity:
    """Agreement between a contour and its reconstruction."""

    iou: float
    mean_radial_error: float


def sample_radial_profile(
    polygon: Polygon, center: Point2, n_rays: int = DEFAULT_RAYS
) -> RadialProfile:
    """Cast the ray fan from `center` and keep the farthest boundary hit
    per ray."""
    if n_rays < 4:
        raise ValueError(f"n_rays must be >= 4, got {n_rays}")
    geometry.ensure_simple(polygon)
    angles = angle_grid(n_rays)
    radii = geometry.farthest_intersections(polygon, center, angles)
    misses = tuple(int(i) for i in np.flatnonzero(np.isnan(radii)))
    if len(misses) == n_rays:
        raise AllRaysMiss("no ray reached the boundary from the given center")
    return RadialProfile(angles, radii, misses)


def chebyshev_eval(shape: ShapeVector, angle):
    """Evaluate the series at angle(s) in radians; x = angle / pi."""
    scalar = np.isscalar(angle)
    x = np.atleast_1d(np.asarray(angle, dtype=np.float64)) / math.pi
    values = chebyshev_basis(x, shape.degree) @ np.asarray(shape.coeffs)
    return float(values[0]) if scalar else values


def chebyshev_fit(profile: RadialProfile, degree: int) -> tuple[ShapeVector, float]:
    """Least-squares fit of normalized radii, returning (shape, scale).

    Scale is the largest sampled radius; missed rays are excluded from
    the fit rather than imputed.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    valid = profile.valid_mask
    n_valid = int(valid.sum())
    if n_valid < degree + 1:
        raise Underdetermined(
            f"{n_valid} valid rays cannot determine {degree + 1} coefficients"
        )
    radii = profile.radii[valid]
    scale = float(radii.max())
    if scale <= 0.0:
        raise DegenerateScale("all sampled radii are zero")
    basis = chebyshev_basis(profile.angles[valid] / math.pi, degree)
    coeffs, *_ = np.linalg.lstsq(basis, radii / scale, rcond=None)
    return ShapeVector(tuple(coeffs)), scale


def encode(
    polygon: Polygon,
    pairing: PairedPolyline | None = None,
    n_rays: int = DEFAULT_RAYS,
    degree: int = DEFAULT_DEGREE,
) -> GeometricEncoding:
    """Compress a contour to coefficients + scale + center."""
    center = geometry.text_center(polygon, pairing)
    profile = sample_radial_profile(polygon, center, n_rays)
    shape, scale = chebyshev_fit(profile, degree)
    return GeometricEncoding(shape, scale, center)


def decode(encoding: GeometricEncoding, n_rays: int = DEFAULT_RAYS) -> Polygon:
    """Reconstruct the contour on the ray fan.

    Predicted radii are clamped at zero, so a badly underfit contour can
    pinch through the center; the result is structurally a polygon but
    not guaranteed simple.
    """
    if n_rays < 3:
        raise ValueError(f"n_rays must be >= 3, got {n_rays}")
    angles = angle_grid(n_rays)
    radii = np.maximum(encoding.scale * chebyshev_eval(encoding.shape, angles), 0.0)
    x = encoding.center.x + radii * np.cos(angles)
    y = encoding.center.y + radii * np.sin(angles)
    return Polygon(np.column_stack([x, y]))


def _profile_fidelity(
    polygon: Polygon,
    profile: RadialProfile,
    encoding: GeometricEncoding,
    n_rays: int,
) -> Fidelity:
    valid = profile.valid_mask
    predicted = chebyshev_eval(encoding.shape, profile.angles[valid])
    observed = profile.radii[valid] / encoding.scale
    mre = float(np.mean(np.abs(predicted - observed)))
    iou = geometry.polygon_iou(polygon, decode(encoding, n_rays))
    return Fidelity(iou=iou, mean_radial_error=mre)


def reconstruction_fidelity(
    polygon: Polygon, encoding: GeometricEncoding, n_rays: int = DEFAULT_RAYS
) -> Fidelity:
    """IoU and mean absolute normalized radial error of the round trip."""
    profile = sample_radial_profile(polygon, encoding.center, n_rays)
    return _profile_fidelity(polygon, profile, encoding, n_rays)


def sweep_degrees(
    polygon: Polygon,
    pairing: PairedPolyline | None,
    n_rays: int,
    degrees,
) -> list[Fidelity]:
    """Fidelity of the round trip at each degree, sampling only once."""
    center = geometry.text_center(polygon, pairing)
    profile = sample_radial_profile(polygon, center, n_rays)
    out = []
    for degree in degrees:
        shape, scale = chebyshev_fit(profile, degree)
        enc = GeometricEncoding(shape, scale, center)
        out.append(_profile_fidelity(polygon, profile, enc, n_rays))
    return out
