import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import ArgumentError
from ..models.mask import BinaryMask
from ..schemas.bubble import (
    BinScale,
    BubbleRecord,
    GroupedDistribution,
    RadiusHistogram,
    SizeClassCounts,
    SizeField,
)
from .morphology import DEFAULT_CONNECTIVITY, boundary_pixels, label_components

logger = logging.getLogger(__name__)

_UNITS = {
    SizeField.RADIUS: ("um", "px"),
    SizeField.AREA: ("um^2", "px^2"),
    SizeField.PERIMETER: ("um", "px"),
}


def measure_bubbles(
    mask: BinaryMask,
    connectivity: int = DEFAULT_CONNECTIVITY,
    frame_id: Optional[str] = None,
) -> List[BubbleRecord]:
    """One record per connected DRY component.

    Perimeter is the number of member pixels with an orthogonal neighbour
    outside the component; the frame border counts as outside.
    """
    labels, count = label_components(mask, connectivity)
    if count == 0:
        return []

    areas = np.bincount(labels.ravel(), minlength=count + 1)
    edge = boundary_pixels(mask.pixels)
    perimeters = np.bincount(labels[edge], minlength=count + 1)

    res = mask.resolution
    records: List[BubbleRecord] = []
    for label in range(1, count + 1):
        area_px = int(areas[label])
        perimeter_px = int(perimeters[label])
        physical = {}
        if res is not None:
            area_phys = area_px * res * res
            physical = {
                "area_phys": area_phys,
                "perimeter_phys": perimeter_px * res,
                "equiv_radius_phys": math.sqrt(area_phys / math.pi),
            }
        records.append(
            BubbleRecord(
                frame_id=frame_id,
                label=label,
                area_px=area_px,
                perimeter_px=perimeter_px,
                **physical,
            )
        )
    logger.debug(f"Measured {count} bubbles in {frame_id or 'mask'}")
    return records


def _values(records: Sequence[BubbleRecord], field: SizeField) -> np.ndarray:
    return np.array([r.value(field) for r in records], dtype=float)


def _unit(records: Sequence[BubbleRecord], field: SizeField) -> str:
    physical, pixel = _UNITS[field]
    kinds = {r.is_physical for r in records}
    if len(kinds) > 1:
        raise ArgumentError("Cannot bin bubbles mixing physical and pixel units")
    return physical if kinds == {True} else pixel


def histogram_edges(lo: float, hi: float, bins: int, scale: BinScale) -> np.ndarray:
    """Equal-width edges in linear or log10 space spanning [lo, hi]."""
    if bins < 1:
        raise ArgumentError(f"Bin count must be >= 1, got {bins}", details={"bins": bins})
    scale = BinScale(scale)
    if scale is BinScale.LOG:
        if lo <= 0:
            raise ArgumentError(f"Log-scaled bins require positive values, got minimum {lo}")
        if lo == hi:
            lo, hi = lo / math.sqrt(10.0), hi * math.sqrt(10.0)
        edges = np.logspace(math.log10(lo), math.log10(hi), bins + 1)
    else:
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
    edges[0], edges[-1] = lo, hi
    return edges


def _bin_counts(values: np.ndarray, edges: np.ndarray) -> List[int]:
    # np.histogram closes the last bin on the right
    counts, _ = np.histogram(values, bins=edges)
    return [int(c) for c in counts]


def build_histogram(
    records: Sequence[BubbleRecord],
    field: Union[SizeField, str] = SizeField.RADIUS,
    bins: int = 10,
    scale: Union[BinScale, str] = BinScale.LINEAR,
) -> RadiusHistogram:
    """Bin one bubble measurement into ``bins`` equal-width bins over [min, max]."""
    if not records:
        raise ArgumentError("Cannot build a histogram from an empty bubble table")
    field, scale = SizeField(field), BinScale(scale)
    values = _values(records, field)
    if scale is BinScale.LOG and (values <= 0).any():
        raise ArgumentError("Log-scaled histogram requires all values > 0")
    edges = histogram_edges(float(values.min()), float(values.max()), bins, scale)
    return RadiusHistogram(
        field=field,
        unit=_unit(records, field),
        scale=scale,
        bin_edges=[float(e) for e in edges],
        counts=_bin_counts(values, edges),
    )


def grouped_distribution(
    tables: Sequence[Tuple[str, Sequence[BubbleRecord]]],
    bins: Union[int, Sequence[float]] = 10,
    scale: Union[BinScale, str] = BinScale.LINEAR,
    field: Union[SizeField, str] = SizeField.RADIUS,
) -> GroupedDistribution:
    """Count matrix of bubble sizes per group over one shared bin specification.

    ``bins`` is either a bin count (edges span the pooled range of all groups)
    or explicit ascending edges, which must cover every value.
    """
    if not tables:
        raise ArgumentError("Grouped distribution needs at least one group")
    field, scale = SizeField(field), BinScale(scale)
    group_values = [(str(label), _values(records, field)) for label, records in tables]
    pooled = np.concatenate([values for _, values in group_values])

    if isinstance(bins, int):
        if pooled.size == 0:
            raise ArgumentError("Cannot derive bin edges: every group is empty")
        if scale is BinScale.LOG and (pooled <= 0).any():
            raise ArgumentError("Log-scaled histogram requires all values > 0")
        edges = histogram_edges(float(pooled.min()), float(pooled.max()), bins, scale)
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.size < 2 or (np.diff(edges) <= 0).any():
            raise ArgumentError("Explicit bin edges must be strictly ascending with at least two entries")
        if pooled.size and (pooled.min() < edges[0] or pooled.max() > edges[-1]):
            raise ArgumentError(
                f"Values span [{pooled.min()}, {pooled.max()}] beyond the bin edges [{edges[0]}, {edges[-1]}]"
            )

    return GroupedDistribution(
        field=field,
        scale=scale,
        groups=[label for label, _ in group_values],
        bin_edges=[float(e) for e in edges],
        counts=[_bin_counts(values, edges) for _, values in group_values],
    )


def classify_sizes(
    records: Sequence[BubbleRecord],
    thresholds: Sequence[float],
    labels: Optional[Sequence[str]] = None,
) -> SizeClassCounts:
    """Count bubbles per radius class; class k holds radii in [t_(k-1), t_k)."""
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise ArgumentError("At least one size-class threshold is required")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ArgumentError("Size-class thresholds must be strictly ascending")
    if labels is None:
        labels = [f"class_{k + 1}" for k in range(len(thresholds) + 1)]
    if len(labels) != len(thresholds) + 1:
        raise ArgumentError(f"Expected {len(thresholds) + 1} class labels, got {len(labels)}")

    radii = _values(records, SizeField.RADIUS)
    classes = np.searchsorted(np.asarray(thresholds), radii, side="right")
    counts = np.bincount(classes, minlength=len(thresholds) + 1)
    return SizeClassCounts(labels=list(labels), thresholds=thresholds, counts=[int(c) for c in counts])
