"""Request and response models for the computation service.

Geometry travels as flat [x0, y0, x1, y1, ...] coordinate lists; shape
vectors as plain coefficient lists.  JSON keeps float64 values exact,
so results match in-process calls bit for bit.
"""

from pydantic import BaseModel, Field, field_validator

from ..config import (
    DEFAULT_DEGREE,
    DEFAULT_IOU_THRESH,
    DEFAULT_NEG_THRESH,
    DEFAULT_POS_THRESH,
    DEFAULT_RAYS,
    DEFAULT_RESAMPLE_POINTS,
    DEFAULT_SCORE_FLOOR,
    DEFAULT_SCORE_THRESH,
    DEFAULT_SIGMA,
    SWEEP_DEGREES,
)


def _check_flat_points(points: list[float]) -> list[float]:
    if len(points) % 2 != 0:
        raise ValueError("points must hold x,y pairs (even length)")
    if len(points) < 6:
        raise ValueError("need at least 3 points")
    return points


class InstanceIn(BaseModel):
    points: list[float]
    pairing_split: int | None = None

    _points_ok = field_validator("points")(_check_flat_points)


class EncodingIn(BaseModel):
    coeffs: list[float] = Field(min_length=1)
    scale: float = Field(gt=0)
    center: tuple[float, float]


class EncodingOut(BaseModel):
    coeffs: list[float]
    scale: float
    center: tuple[float, float]


class FidelityOut(BaseModel):
    iou: float
    mean_radial_error: float
    low_fidelity: bool


class EncodeRequest(BaseModel):
    instances: list[InstanceIn]
    rays: int = Field(default=DEFAULT_RAYS, ge=4)
    degree: int = Field(default=DEFAULT_DEGREE, ge=0)
    with_fidelity: bool = True


class EncodeResponse(BaseModel):
    encodings: list[EncodingOut]
    fidelity: list[FidelityOut] | None = None


class DecodeRequest(BaseModel):
    encodings: list[EncodingIn]
    rays: int = Field(default=DEFAULT_RAYS, ge=3)


class DecodeResponse(BaseModel):
    polygons: list[list[float]]


class SweepRequest(BaseModel):
    instances: list[InstanceIn]
    rays: int = Field(default=DEFAULT_RAYS, ge=4)
    degrees: list[int] = Field(default=list(SWEEP_DEGREES), min_length=1)


class SweepResponse(BaseModel):
    # results[i][j]: instance i fitted at degrees[j]
    results: list[list[FidelityOut]]


class ContentLossRequest(BaseModel):
    preds: list[list[float]]
    targets: list[list[float]]
    rays: int = Field(default=DEFAULT_RAYS, ge=1)
    with_gradients: bool = True


class ContentLossResponse(BaseModel):
    losses: list[float]
    gradients: list[list[float]] | None = None


class CentralWeightRequest(BaseModel):
    points: list[tuple[float, float]]
    scales: list[float]
    centers: list[tuple[float, float]]


class CentralWeightResponse(BaseModel):
    weights: list[float]


class WeightsRequest(BaseModel):
    weights: list[float]


class RedistributeResponse(BaseModel):
    q: list[float]


class SamplingResponse(BaseModel):
    probabilities: list[float]


class DetectionIn(BaseModel):
    points: list[float]
    score: float = Field(ge=0, le=1)
    level: int | None = None

    _points_ok = field_validator("points")(_check_flat_points)


class PostprocessRequest(BaseModel):
    detections: list[DetectionIn]
    min_score: float = DEFAULT_SCORE_THRESH
    sigma: float = Field(default=DEFAULT_SIGMA, gt=0)
    score_floor: float = DEFAULT_SCORE_FLOOR
    resample_to: int | None = Field(default=DEFAULT_RESAMPLE_POINTS, ge=3)


class PostprocessResponse(BaseModel):
    detections: list[DetectionIn]


class GroundTruthIn(BaseModel):
    points: list[float]
    ignore: bool = False

    _points_ok = field_validator("points")(_check_flat_points)


class EvalImageIn(BaseModel):
    detections: list[DetectionIn]
    ground_truth: list[GroundTruthIn]


class EvaluateRequest(BaseModel):
    images: list[EvalImageIn]
    iou_thresh: float = Field(default=DEFAULT_IOU_THRESH, gt=0, lt=1)
    pooled: bool = True


class CountsOut(BaseModel):
    tp: int
    fp: int
    fn: int
    ignored_hits: int


class EvaluateResponse(BaseModel):
    precision: float
    recall: float
    f_measure: float
    counts: CountsOut


class ClassifyPointsRequest(BaseModel):
    points: list[tuple[float, float]]
    scale: float = Field(gt=0)
    center: tuple[float, float]
    neg_thresh: float = DEFAULT_NEG_THRESH
    pos_thresh: float = DEFAULT_POS_THRESH


class ClassifyPointsResponse(BaseModel):
    weights: list[float]
    labels: list[str]
    counts: dict[str, int]


class AssignLevelsRequest(BaseModel):
    scales: list[float]
    width: float = Field(gt=0)
    height: float = Field(gt=0)
    # hi = null means unbounded above
    ranges: list[tuple[float, float | None]] = Field(min_length=1)


class AssignLevelsResponse(BaseModel):
    relative_sizes: list[float]
    levels: list[list[int]]


class GradCheckRequest(BaseModel):
    seed: int = 0
    trials: int = Field(default=100, ge=1)
    rays: int = Field(default=DEFAULT_RAYS, ge=1)
    degrees: list[int] = Field(default=[11, 44, 66], min_length=1)
    step: float = Field(default=1e-6, gt=0)
    negate: bool = False


class GradCheckResponse(BaseModel):
    passed: bool
    max_relative_error: float
    trials: int
