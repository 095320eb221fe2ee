"""Shared defaults and run configuration."""

import math
import os
from dataclasses import dataclass, field

DEFAULT_RAYS = 360
DEFAULT_DEGREE = 44
WORD_LEVEL_DEGREE = 33

DEFAULT_NEG_THRESH = 0.1
DEFAULT_POS_THRESH = 0.4
WORD_LEVEL_NEG_THRESH = 0.0
WORD_LEVEL_POS_THRESH = 0.1

DEFAULT_SCORE_THRESH = 0.95
DEFAULT_IOU_THRESH = 0.5
DEFAULT_SIGMA = 0.5
DEFAULT_SCORE_FLOOR = 0.001
DEFAULT_RESAMPLE_POINTS = 36

# Contours reconstructed below this IoU are flagged as unreliable.
LOW_FIDELITY_IOU = 0.5

SWEEP_DEGREES = (11, 22, 33, 44, 55, 66)

# Overlapping relative-size bands for multi-level target assignment,
# closed at both ends.  Line-level band set and word-level band set.
LINE_LEVEL_RANGES = ((0.0, 0.3), (0.2, 0.55), (0.45, 0.8), (0.7, math.inf))
WORD_LEVEL_RANGES = (
    (0.0, 0.25),
    (0.15, 0.45),
    (0.35, 0.65),
    (0.55, 0.85),
    (0.75, math.inf),
)


def available_workers() -> int:
    return os.cpu_count() or 1


@dataclass
class RunConfig:
    """Resolved options for one command invocation."""

    command: str = ""
    corpus: str | None = None
    out: str | None = None
    rays: int = DEFAULT_RAYS
    degree: int = DEFAULT_DEGREE
    degrees: tuple[int, ...] = SWEEP_DEGREES
    levels: tuple[tuple[float, float], ...] = LINE_LEVEL_RANGES
    neg_thresh: float = DEFAULT_NEG_THRESH
    pos_thresh: float = DEFAULT_POS_THRESH
    score_thresh: float = DEFAULT_SCORE_THRESH
    iou_thresh: float = DEFAULT_IOU_THRESH
    sigma: float = DEFAULT_SIGMA
    seed: int = 0
    workers: int = field(default_factory=available_workers)
    lenient: bool = False
    server: str | None = None
