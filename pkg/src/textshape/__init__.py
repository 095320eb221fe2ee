"""textshape: polar Chebyshev codec for arbitrary-shaped text contours."""

from .codec import (
    Fidelity,
    GeometricEncoding,
    RadialProfile,
    ShapeVector,
    angle_grid,
    chebyshev_eval,
    chebyshev_fit,
    decode,
    encode,
    reconstruction_fidelity,
    sample_radial_profile,
)
from .errors import TextShapeError
from .evaluation import EvalReport, evaluate, evaluate_corpus
from .geometry import (
    PairedPolyline,
    Point2,
    Polygon,
    point_in_polygon,
    polygon_iou,
    ray_polygon_intersections,
    text_center,
)
from .postprocess import Detection, resample_perimeter, soft_nms, threshold_detections
from .training import (
    MiniBatch,
    PointSample,
    RegTriple,
    aggregate_loss,
    assign_levels,
    central_weight,
    classify_point,
    content_loss,
    content_loss_grad,
    redistribute_weights,
    sampling_probabilities,
    smooth_l1,
)

__version__ = "0.1.0"

__all__ = [
    "Detection",
    "EvalReport",
    "Fidelity",
    "GeometricEncoding",
    "MiniBatch",
    "PairedPolyline",
    "Point2",
    "PointSample",
    "Polygon",
    "RadialProfile",
    "RegTriple",
    "ShapeVector",
    "TextShapeError",
    "aggregate_loss",
    "angle_grid",
    "assign_levels",
    "central_weight",
    "chebyshev_eval",
    "chebyshev_fit",
    "classify_point",
    "content_loss",
    "content_loss_grad",
    "decode",
    "encode",
    "evaluate",
    "evaluate_corpus",
    "point_in_polygon",
    "polygon_iou",
    "ray_polygon_intersections",
    "reconstruction_fidelity",
    "redistribute_weights",
    "resample_perimeter",
    "sample_radial_profile",
    "sampling_probabilities",
    "smooth_l1",
    "soft_nms",
    "text_center",
    "threshold_detections",
]
