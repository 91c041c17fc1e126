from typing import Dict, List, Optional

from pydantic import Field, model_validator

from .common import BaseSchema, FieldStats

METRIC_NAMES = ("accuracy", "precision", "recall", "specificity", "f1", "iou", "mcc")


class ConfusionMatrix(BaseSchema):
    """Pixelwise TP/TN/FP/FN counts with DRY as the positive class."""

    tp: int = Field(..., ge=0, description="Both DRY")
    tn: int = Field(..., ge=0, description="Both WET")
    fp: int = Field(..., ge=0, description="Predicted DRY, truth WET")
    fn: int = Field(..., ge=0, description="Predicted WET, truth DRY")

    @model_validator(mode="after")
    def validate_total(self):
        if self.total <= 0:
            raise ValueError("confusion matrix must cover at least one pixel")
        return self

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            tn=self.tn + other.tn,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
        )


class MetricSet(BaseSchema):
    """Segmentation metrics; ``None`` marks a metric whose denominator is zero."""

    accuracy: Optional[float] = Field(None, description="(TP+TN)/total")
    precision: Optional[float] = Field(None, description="TP/(TP+FP)")
    recall: Optional[float] = Field(None, description="TP/(TP+FN)")
    specificity: Optional[float] = Field(None, description="TN/(TN+FP)")
    f1: Optional[float] = Field(None, description="2TP/(2TP+FP+FN)")
    iou: Optional[float] = Field(None, description="TP/(TP+FP+FN)")
    mcc: Optional[float] = Field(None, description="Matthews correlation coefficient")

    @property
    def dice(self) -> Optional[float]:
        return self.f1

    @property
    def undefined(self) -> List[str]:
        return [name for name in METRIC_NAMES if getattr(self, name) is None]

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


class FrameEvaluation(BaseSchema):
    """Comparison of one predicted mask against its ground truth."""

    frame_id: str = Field(..., description="Pair identifier")
    prediction: str = Field(..., description="Predicted mask path")
    truth: str = Field(..., description="Ground-truth mask path")
    confusion: ConfusionMatrix
    metrics: MetricSet
    theta_dry_deviation: Optional[float] = Field(None, description="Relative deviation of theta_dry in %")
    rho_cl_deviation: Optional[float] = Field(None, description="Relative deviation of rho_cl in %")


class EvaluationAggregate(BaseSchema):
    """Micro (pooled pixels) and macro (per-frame) aggregates."""

    frames: int = Field(..., ge=0, description="Frames aggregated")
    micro: Optional[MetricSet] = Field(None, description="Metrics of the pooled confusion matrix")
    macro: Dict[str, FieldStats] = Field(..., description="Per-metric statistics across frames")
