"""Detection-versus-annotation scoring with greedy one-to-one matching."""

from dataclasses import dataclass
from typing import Sequence

from .config import DEFAULT_IOU_THRESH
from .errors import MisalignedInputs
from .geometry import Polygon, polygon_iou
from .postprocess import Detection


@dataclass(frozen=True)
class MatchCounts:
    tp: int
    fp: int
    fn: int
    ignored_hits: int


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f_measure: float
    matches: tuple[tuple[int, int, float], ...]
    counts: MatchCounts


def _f_measure(precision: float, recall: float) -> float:
    if precision + recall <= 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate(
    detections: Sequence[Detection],
    ground_truth: Sequence[Polygon],
    ignore_flags: Sequence[bool] | None = None,
    iou_thresh: float = DEFAULT_IOU_THRESH,
) -> EvalReport:
    """Match detections to annotations greedily in descending score order.

    Each annotation is claimed at most once; a detection whose best
    remaining overlap is an ignored annotation is excluded from the
    counts rather than penalized.  Precision is 0 when nothing countable
    was detected, recall is 0 when nothing countable was annotated.
    """
    if not (0.0 < iou_thresh < 1.0):
        raise ValueError(f"iou_thresh must lie in (0, 1), got {iou_thresh}")
    if ignore_flags is None:
        ignore_flags = [False] * len(ground_truth)
    if len(ignore_flags) != len(ground_truth):
        raise MisalignedInputs(
            f"{len(ground_truth)} annotations but {len(ignore_flags)} ignore flags"
        )

    order = sorted(range(len(detections)), key=lambda i: (-detections[i].score, i))
    claimed = [False] * len(ground_truth)
    matches: list[tuple[int, int, float]] = []
    tp = fp = ignored_hits = 0
    for di in order:
        best_gt = -1
        best_iou = 0.0
        for gi, gt in enumerate(ground_truth):
            if claimed[gi]:
                continue
            iou = polygon_iou(detections[di].polygon, gt)
            if iou >= iou_thresh and iou > best_iou:
                best_gt = gi
                best_iou = iou
        if best_gt < 0:
            fp += 1
        elif ignore_flags[best_gt]:
            claimed[best_gt] = True
            ignored_hits += 1
        else:
            claimed[best_gt] = True
            tp += 1
            matches.append((di, best_gt, best_iou))

    countable_gt = sum(1 for flag in ignore_flags if not flag)
    fn = countable_gt - tp
    counted_det = tp + fp
    precision = tp / counted_det if counted_det > 0 else 0.0
    recall = tp / countable_gt if countable_gt > 0 else 0.0
    return EvalReport(
        precision=precision,
        recall=recall,
        f_measure=_f_measure(precision, recall),
        matches=tuple(matches),
        counts=MatchCounts(tp=tp, fp=fp, fn=fn, ignored_hits=ignored_hits),
    )


def evaluate_corpus(
    items: Sequence[tuple[Sequence[Detection], Sequence[Polygon], Sequence[bool] | None]],
    iou_thresh: float = DEFAULT_IOU_THRESH,
    pooled: bool = True,
) -> EvalReport:
    """Score many images at once.

    Pooled mode sums match counts across images before computing the
    rates; otherwise precision/recall/f-measure are averaged per image.
    Matches are not carried through; counts always are.
    """
    reports = [
        evaluate(dets, gts, flags, iou_thresh) for dets, gts, flags in items
    ]
    tp = sum(r.counts.tp for r in reports)
    fp = sum(r.counts.fp for r in reports)
    fn = sum(r.counts.fn for r in reports)
    ignored_hits = sum(r.counts.ignored_hits for r in reports)
    counts = MatchCounts(tp=tp, fp=fp, fn=fn, ignored_hits=ignored_hits)
    if pooled:
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f_measure = _f_measure(precision, recall)
    else:
        n = len(reports)
        precision = sum(r.precision for r in reports) / n if n else 0.0
        recall = sum(r.recall for r in reports) / n if n else 0.0
        f_measure = sum(r.f_measure for r in reports) / n if n else 0.0
    return EvalReport(
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        matches=(),
        counts=counts,
    )
