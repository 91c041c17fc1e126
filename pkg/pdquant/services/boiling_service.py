import logging
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..core.exceptions import ArgumentError
from ..models.mask import BinaryMask
from ..schemas.common import FieldStats
from ..schemas.metrics import BoilingMetrics, MetricsSummary
from .morphology import distance_transform, invert

logger = logging.getLogger(__name__)

SUMMARY_FIELDS = ("theta_dry", "rho_cl_pixel", "rho_cl_physical")


def dry_area_fraction(mask: BinaryMask) -> float:
    """Dry pixels over total pixels."""
    return mask.dry_count / mask.total


def contact_line_pixels(mask: BinaryMask) -> int:
    """DRY pixels at distance exactly 1 from a WET pixel."""
    distances = distance_transform(invert(mask))
    return int(np.count_nonzero(distances == 1.0))


def contact_line_density(mask: BinaryMask) -> float:
    """Contact-line pixels over total pixels."""
    return contact_line_pixels(mask) / mask.total


def physicalize(metrics: BoilingMetrics, resolution: float) -> BoilingMetrics:
    """Attach the per-micrometre contact line density for ``resolution`` um/px."""
    if resolution is None or not np.isfinite(resolution) or resolution <= 0:
        raise ArgumentError(
            f"Resolution must be strictly positive, got {resolution}",
            details={"resolution": resolution},
        )
    return metrics.model_copy(
        update={
            "rho_cl_physical": metrics.rho_cl_pixel / resolution,
            "resolution": float(resolution),
        }
    )


def compute_metrics(mask: BinaryMask, frame_id: Optional[str] = None) -> BoilingMetrics:
    """Both boiling metrics of one frame, physicalized when the mask has a resolution."""
    metrics = BoilingMetrics(
        frame_id=frame_id,
        theta_dry=dry_area_fraction(mask),
        rho_cl_pixel=contact_line_density(mask),
    )
    if mask.resolution is not None:
        metrics = physicalize(metrics, mask.resolution)
    return metrics


def field_stats(values: Sequence[Optional[float]]) -> FieldStats:
    """Mean/std/min/max over defined values; ``None`` entries are counted, not used."""
    defined = np.array([v for v in values if v is not None], dtype=float)
    undefined = len(values) - defined.size
    if defined.size == 0:
        return FieldStats(count=0, undefined=undefined)
    return FieldStats(
        count=int(defined.size),
        undefined=undefined,
        mean=float(defined.mean()),
        std=float(defined.std()),
        min=float(defined.min()),
        max=float(defined.max()),
    )


def summarize_metrics(metrics: Iterable[BoilingMetrics]) -> MetricsSummary:
    """Frame-series statistics of each boiling metric."""
    items: List[BoilingMetrics] = list(metrics)
    fields: Dict[str, FieldStats] = {
        name: field_stats([getattr(m, name) for m in items]) for name in SUMMARY_FIELDS
    }
    return MetricsSummary(frames=len(items), fields=fields)
