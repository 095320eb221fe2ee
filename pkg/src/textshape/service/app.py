"""FastAPI application exposing the core computations."""

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import codec, evaluation, postprocess, training
from ..config import LOW_FIDELITY_IOU
from ..errors import TextShapeError
from ..geometry import PairedPolyline, Point2, Polygon
from ..postprocess import Detection
from . import schemas

API_PREFIX = "/api/v1"


def _polygon(points: list[float]) -> Polygon:
    return Polygon([(points[i], points[i + 1]) for i in range(0, len(points), 2)])


def _flat(polygon: Polygon) -> list[float]:
    return [float(v) for row in polygon.coords for v in row]


def _pairing(inst: schemas.InstanceIn):
    if inst.pairing_split is None:
        return None
    pts = [
        Point2(inst.points[i], inst.points[i + 1])
        for i in range(0, len(inst.points), 2)
    ]
    k = inst.pairing_split
    if k < 2 or len(pts) != 2 * k:
        raise TextShapeError(f"pairing_split {k} does not bisect {len(pts)} points")
    return PairedPolyline(top=tuple(pts[:k]), bottom=tuple(reversed(pts[k:])))


def _encoding_in(e: schemas.EncodingIn) -> codec.GeometricEncoding:
    return codec.GeometricEncoding(
        shape=codec.ShapeVector(tuple(e.coeffs)),
        scale=e.scale,
        center=Point2(*e.center),
    )


def _encoding_out(e: codec.GeometricEncoding) -> schemas.EncodingOut:
    return schemas.EncodingOut(
        coeffs=list(e.shape.coeffs), scale=e.scale, center=(e.center.x, e.center.y)
    )


def _fidelity_out(f: codec.Fidelity) -> schemas.FidelityOut:
    return schemas.FidelityOut(
        iou=f.iou,
        mean_radial_error=f.mean_radial_error,
        low_fidelity=f.iou < LOW_FIDELITY_IOU,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="textshape service", version="1")

    @app.exception_handler(TextShapeError)
    async def _domain_error(request: Request, exc: TextShapeError) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get(API_PREFIX + "/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.post(API_PREFIX + "/encode", response_model=schemas.EncodeResponse)
    async def encode(req: schemas.EncodeRequest) -> schemas.EncodeResponse:
        encodings = []
        fidelity = [] if req.with_fidelity else None
        for inst in req.instances:
            polygon = _polygon(inst.points)
            enc = codec.encode(polygon, _pairing(inst), req.rays, req.degree)
            encodings.append(_encoding_out(enc))
            if req.with_fidelity:
                fid = codec.reconstruction_fidelity(polygon, enc, req.rays)
                fidelity.append(_fidelity_out(fid))
        return schemas.EncodeResponse(encodings=encodings, fidelity=fidelity)

    @app.post(API_PREFIX + "/decode", response_model=schemas.DecodeResponse)
    async def decode(req: schemas.DecodeRequest) -> schemas.DecodeResponse:
        return schemas.DecodeResponse(
            polygons=[_flat(codec.decode(_encoding_in(e), req.rays)) for e in req.encodings]
        )

    @app.post(API_PREFIX + "/sweep", response_model=schemas.SweepResponse)
    async def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        results = []
        for inst in req.instances:
            fids = codec.sweep_degrees(
                _polygon(inst.points), _pairing(inst), req.rays, req.degrees
            )
            results.append([_fidelity_out(f) for f in fids])
        return schemas.SweepResponse(results=results)

    @app.post(API_PREFIX + "/content-loss", response_model=schemas.ContentLossResponse)
    async def content_loss(
        req: schemas.ContentLossRequest,
    ) -> schemas.ContentLossResponse:
        if len(req.preds) != len(req.targets):
            raise TextShapeError(
                f"{len(req.preds)} predictions but {len(req.targets)} targets"
            )
        losses = []
        grads = [] if req.with_gradients else None
        for p, t in zip(req.preds, req.targets):
            pred = codec.ShapeVector(tuple(p))
            target = codec.ShapeVector(tuple(t))
            losses.append(training.content_loss(pred, target, req.rays))
            if req.with_gradients:
                grads.append(
                    [float(g) for g in training.content_loss_grad(pred, target, req.rays)]
                )
        return schemas.ContentLossResponse(losses=losses, gradients=grads)

    @app.post(
        API_PREFIX + "/central-weight", response_model=schemas.CentralWeightResponse
    )
    async def central_weight(
        req: schemas.CentralWeightRequest,
    ) -> schemas.CentralWeightResponse:
        n = len(req.points)
        scales = req.scales if len(req.scales) != 1 else req.scales * n
        centers = req.centers if len(req.centers) != 1 else req.centers * n
        if len(scales) != n or len(centers) != n:
            raise TextShapeError(
                "scales and centers must have length 1 or match points"
            )
        weights = []
        for (px, py), s, (cx, cy) in zip(req.points, scales, centers):
            enc = codec.GeometricEncoding(
                shape=codec.ShapeVector((1.0,)), scale=s, center=Point2(cx, cy)
            )
            weights.append(training.central_weight(Point2(px, py), enc))
        return schemas.CentralWeightResponse(weights=weights)

    @app.post(
        API_PREFIX + "/redistribute-weights",
        response_model=schemas.RedistributeResponse,
    )
    async def redistribute(req: schemas.WeightsRequest) -> schemas.RedistributeResponse:
        q = training.redistribute_weights(req.weights)
        return schemas.RedistributeResponse(q=[float(v) for v in q])

    @app.post(
        API_PREFIX + "/sampling-probabilities",
        response_model=schemas.SamplingResponse,
    )
    async def sampling(req: schemas.WeightsRequest) -> schemas.SamplingResponse:
        p = training.sampling_probabilities(req.weights)
        return schemas.SamplingResponse(probabilities=[float(v) for v in p])

    @app.post(API_PREFIX + "/postprocess", response_model=schemas.PostprocessResponse)
    async def postprocess_detections(
        req: schemas.PostprocessRequest,
    ) -> schemas.PostprocessResponse:
        dets = [
            Detection(polygon=_polygon(d.points), score=d.score, level=d.level)
            for d in req.detections
        ]
        dets = postprocess.threshold_detections(dets, req.min_score)
        dets = postprocess.soft_nms(dets, req.sigma, req.score_floor)
        if req.resample_to is not None:
            dets = [
                Detection(
                    polygon=postprocess.resample_perimeter(d.polygon, req.resample_to),
                    score=d.score,
                    level=d.level,
                )
                for d in dets
            ]
        return schemas.PostprocessResponse(
            detections=[
                schemas.DetectionIn(points=_flat(d.polygon), score=d.score, level=d.level)
                for d in dets
            ]
        )

    @app.post(API_PREFIX + "/evaluate", response_model=schemas.EvaluateResponse)
    async def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        items = []
        for image in req.images:
            dets = [
                Detection(polygon=_polygon(d.points), score=d.score, level=d.level)
                for d in image.detections
            ]
            gts = [_polygon(g.points) for g in image.ground_truth]
            flags = [g.ignore for g in image.ground_truth]
            items.append((dets, gts, flags))
        report = evaluation.evaluate_corpus(items, req.iou_thresh, req.pooled)
        return schemas.EvaluateResponse(
            precision=report.precision,
            recall=report.recall,
            f_measure=report.f_measure,
            counts=schemas.CountsOut(
                tp=report.counts.tp,
                fp=report.counts.fp,
                fn=report.counts.fn,
                ignored_hits=report.counts.ignored_hits,
            ),
        )

    @app.post(
        API_PREFIX + "/classify-points", response_model=schemas.ClassifyPointsResponse
    )
    async def classify_points(
        req: schemas.ClassifyPointsRequest,
    ) -> schemas.ClassifyPointsResponse:
        enc = codec.GeometricEncoding(
            shape=codec.ShapeVector((1.0,)),
            scale=req.scale,
            center=Point2(*req.center),
        )
        weights = [
            training.central_weight(Point2(px, py), enc) for px, py in req.points
        ]
        labels = [
            training.classify_point(w, req.neg_thresh, req.pos_thresh) for w in weights
        ]
        counts = {
            kind: sum(1 for label in labels if label == kind)
            for kind in ("positive", "negative", "ignored")
        }
        return schemas.ClassifyPointsResponse(
            weights=weights, labels=labels, counts=counts
        )

    @app.post(
        API_PREFIX + "/assign-levels", response_model=schemas.AssignLevelsResponse
    )
    async def assign_levels(
        req: schemas.AssignLevelsRequest,
    ) -> schemas.AssignLevelsResponse:
        ranges = [
            (lo, math.inf if hi is None else hi) for lo, hi in req.ranges
        ]
        sizes = [
            training.relative_size(s, req.width, req.height) for s in req.scales
        ]
        levels = [sorted(training.assign_levels(size, ranges)) for size in sizes]
        return schemas.AssignLevelsResponse(relative_sizes=sizes, levels=levels)

    @app.post(API_PREFIX + "/gradcheck", response_model=schemas.GradCheckResponse)
    async def gradcheck(req: schemas.GradCheckRequest) -> schemas.GradCheckResponse:
        result = training.gradient_check(
            seed=req.seed,
            trials=req.trials,
            n_rays=req.rays,
            degrees=req.degrees,
            step=req.step,
            negate=req.negate,
        )
        return schemas.GradCheckResponse(
            passed=result.passed,
            max_relative_error=result.max_relative_error,
            trials=result.trials,
        )

    return app


app = create_app()
