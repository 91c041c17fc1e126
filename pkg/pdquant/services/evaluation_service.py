import logging
import math
from typing import Dict, Iterable, List, Optional

from ..core.exceptions import DimensionMismatchError
from ..models.mask import BinaryMask
from ..schemas.evaluation import (
    METRIC_NAMES,
    ConfusionMatrix,
    EvaluationAggregate,
    FrameEvaluation,
    MetricSet,
)
from ..schemas.metrics import BoilingMetrics
from .boiling_service import compute_metrics, field_stats

logger = logging.getLogger(__name__)


def confusion(pred: BinaryMask, truth: BinaryMask, pair: Optional[str] = None) -> ConfusionMatrix:
    """Pixelwise counts with DRY as the positive class."""
    if pred.shape != truth.shape:
        raise DimensionMismatchError(pred.shape, truth.shape, pair=pair)
    p, t = pred.pixels, truth.pixels
    tp = int((p & t).sum())
    tn = int((~p & ~t).sum())
    fp = int((p & ~t).sum())
    fn = int((~p & t).sum())
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def metrics(cm: ConfusionMatrix) -> MetricSet:
    """Metric suite of one confusion matrix; zero denominators give ``None``."""
    tp, tn, fp, fn = cm.tp, cm.tn, cm.fp, cm.fn
    mcc_denominator = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(mcc_denominator) if mcc_denominator else None
    return MetricSet(
        accuracy=_ratio(tp + tn, cm.total),
        precision=_ratio(tp, tp + fp),
        recall=_ratio(tp, tp + fn),
        specificity=_ratio(tn, tn + fp),
        f1=_ratio(2 * tp, 2 * tp + fp + fn),
        iou=_ratio(tp, tp + fp + fn),
        mcc=mcc,
    )


def relative_deviation(predicted: Optional[float], truth: Optional[float]) -> Optional[float]:
    """|predicted - truth| / truth in percent; undefined for a zero or missing truth."""
    if predicted is None or truth is None or truth == 0:
        return None
    return abs(predicted - truth) / abs(truth) * 100


def metric_deviation(predicted: BoilingMetrics, truth: BoilingMetrics) -> Dict[str, Optional[float]]:
    """Relative deviation of the boiling metrics of a prediction from its ground truth."""
    return {
        "theta_dry": relative_deviation(predicted.theta_dry, truth.theta_dry),
        "rho_cl": relative_deviation(predicted.rho_cl_pixel, truth.rho_cl_pixel),
    }


def evaluate_pair(frame_id: str, pred: BinaryMask, truth: BinaryMask, pred_path: str = "", truth_path: str = "") -> FrameEvaluation:
    """Confusion counts, metric suite and boiling-metric deviations of one pair."""
    cm = confusion(pred, truth, pair=f"{pred_path or frame_id} vs {truth_path or frame_id}")
    deviation = metric_deviation(compute_metrics(pred), compute_metrics(truth))
    return FrameEvaluation(
        frame_id=frame_id,
        prediction=pred_path,
        truth=truth_path,
        confusion=cm,
        metrics=metrics(cm),
        theta_dry_deviation=deviation["theta_dry"],
        rho_cl_deviation=deviation["rho_cl"],
    )


def aggregate(evaluations: Iterable[FrameEvaluation]) -> EvaluationAggregate:
    """Micro metrics of the pooled confusion matrix and macro statistics per metric."""
    frames: List[FrameEvaluation] = list(evaluations)
    micro = None
    if frames:
        pooled = frames[0].confusion
        for frame in frames[1:]:
            pooled = pooled + frame.confusion
        micro = metrics(pooled)
    macro = {name: field_stats([getattr(f.metrics, name) for f in frames]) for name in METRIC_NAMES}
    for name, stats in macro.items():
        if stats.undefined:
            logger.info(f"Metric '{name}' undefined in {stats.undefined} of {len(frames)} frames")
    return EvaluationAggregate(frames=len(frames), micro=micro, macro=macro)
