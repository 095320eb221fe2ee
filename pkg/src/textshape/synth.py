"""Synthetic contour generators for demos and self-checks.

Shapes imitate the variety of curved text instances: ellipses, rounded
boxes, wavy ribbons with paired boundaries, and a spiral whose contour
is not star-shaped from any interior point.
"""

import math

import numpy as np

from .dataset_io import AnnotatedImage, Instance
from .geometry import PairedPolyline, Point2, Polygon


def _rotate(pts: np.ndarray, center: tuple[float, float], angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rel = pts - np.asarray(center)
    return np.asarray(center) + rel @ np.array([[c, s], [-s, c]])


def make_ellipse(
    center: tuple[float, float],
    semi_axes: tuple[float, float],
    rotation: float = 0.0,
    vertices: int = 96,
) -> Polygon:
    t = np.linspace(0.0, 2.0 * math.pi, vertices, endpoint=False)
    pts = np.column_stack(
        [center[0] + semi_axes[0] * np.cos(t), center[1] + semi_axes[1] * np.sin(t)]
    )
    return Polygon(_rotate(pts, center, rotation))


def make_rounded_rectangle(
    center: tuple[float, float],
    width: float,
    height: float,
    corner_radius: float,
    rotation: float = 0.0,
    arc_vertices: int = 12,
) -> Polygon:
    r = min(corner_radius, width / 2.0, height / 2.0)
    hw, hh = width / 2.0, height / 2.0
    corners = [
        (center[0] + hw - r, center[1] + hh - r, 0.0),
        (center[0] - hw + r, center[1] + hh - r, math.pi / 2.0),
        (center[0] - hw + r, center[1] - hh + r, math.pi),
        (center[0] + hw - r, center[1] - hh + r, 3.0 * math.pi / 2.0),
    ]
    pts = []
    for cx, cy, start in corners:
        for a in np.linspace(start, start + math.pi / 2.0, arc_vertices, endpoint=False):
            pts.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    return Polygon(_rotate(np.asarray(pts), center, rotation))


def make_sine_ribbon(
    center: tuple[float, float],
    length: float,
    half_width: float,
    amplitude: float,
    periods: float = 1.0,
    rotation: float = 0.0,
    samples: int = 48,
) -> tuple[Polygon, PairedPolyline]:
    """A wavy band; returns the ring plus the top/bottom pairing."""
    x = np.linspace(-length / 2.0, length / 2.0, samples)
    mid = amplitude * np.sin(2.0 * math.pi * periods * x / length)
    top = np.column_stack([center[0] + x, center[1] + mid + half_width])
    bot = np.column_stack([center[0] + x, center[1] + mid - half_width])
    top = _rotate(top, center, rotation)
    bot = _rotate(bot, center, rotation)
    ring = Polygon(np.vstack([top, bot[::-1]]))
    pairing = PairedPolyline(
        top=tuple(Point2(float(px), float(py)) for px, py in top),
        bottom=tuple(Point2(float(px), float(py)) for px, py in bot),
    )
    return ring, pairing


def make_spiral(
    center: tuple[float, float],
    inner_radius: float = 4.0,
    growth: float = 3.0,
    half_width: float = 2.5,
    turns: float = 2.0,
    samples: int = 160,
) -> Polygon:
    """An Archimedean spiral band; no interior point sees its whole
    boundary, so radial sampling cannot represent it faithfully."""
    t = np.linspace(0.0, 2.0 * math.pi * turns, samples)
    r = inner_radius + growth * t
    outer = np.column_stack(
        [
            center[0] + (r + half_width) * np.cos(t),
            center[1] + (r + half_width) * np.sin(t),
        ]
    )
    inner = np.column_stack(
        [
            center[0] + (r - half_width) * np.cos(t),
            center[1] + (r - half_width) * np.sin(t),
        ]
    )
    return Polygon(np.vstack([outer, inner[::-1]]))


def synthetic_corpus(
    n_instances: int = 200,
    seed: int = 0,
    image_size: tuple[float, float] = (1000.0, 1000.0),
    per_image: int = 4,
    with_spiral: bool = False,
) -> tuple[list[AnnotatedImage], list[str]]:
    """Deterministic corpus of varied instances.

    Returns the images plus a per-instance kind list ("ellipse",
    "ribbon", "rrect", and optionally a final "spiral") aligned with
    enumeration order across images.
    """
    rng = np.random.default_rng(seed)
    width, height = image_size
    slots = [
        (width * 0.25, height * 0.25),
        (width * 0.75, height * 0.25),
        (width * 0.25, height * 0.75),
        (width * 0.75, height * 0.75),
    ]
    images: list[AnnotatedImage] = []
    kinds: list[str] = []
    instances: list[Instance] = []
    for i in range(n_instances):
        slot = slots[i % per_image]
        cx = slot[0] + rng.uniform(-20.0, 20.0)
        cy = slot[1] + rng.uniform(-20.0, 20.0)
        aspect = rng.uniform(1.0, 15.0)
        rotation = rng.uniform(0.0, math.pi)
        kind = ("ellipse", "ribbon", "rrect")[int(rng.integers(3))]
        if kind == "ellipse":
            b = rng.uniform(8.0, 16.0)
            polygon = make_ellipse((cx, cy), (b * aspect, b), rotation)
            pairing = None
        elif kind == "ribbon":
            h = rng.uniform(6.0, 14.0)
            polygon, pairing = make_sine_ribbon(
                (cx, cy),
                length=2.0 * h * aspect,
                half_width=h,
                amplitude=h * rng.uniform(0.2, 1.2),
                periods=rng.uniform(0.5, 1.5),
                rotation=rotation,
            )
        else:
            b = rng.uniform(8.0, 16.0)
            polygon = make_rounded_rectangle(
                (cx, cy),
                width=b * aspect,
                height=b * 2.0,
                corner_radius=rng.uniform(0.2, 0.9) * b,
                rotation=rotation,
            )
            pairing = None
        kinds.append(kind)
        instances.append(Instance(polygon=polygon, pairing=pairing))
        if len(instances) == per_image or i == n_instances - 1:
            images.append(
                AnnotatedImage(
                    id=f"synth-{len(images):04d}",
                    width=width,
                    height=height,
                    instances=tuple(instances),
                )
            )
            instances = []
    if with_spiral:
        spiral = make_spiral((width / 2.0, height / 2.0))
        images.append(
            AnnotatedImage(
                id="spiral-0000",
                width=width,
                height=height,
                instances=(Instance(polygon=spiral),),
            )
        )
        kinds.append("spiral")
    return images, kinds
