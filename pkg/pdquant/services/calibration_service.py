import logging
from typing import Dict, List, Mapping, Sequence

import numpy as np

from ..core.exceptions import ArgumentError, CalibrationError
from ..schemas.bubble import RadiusHistogram, SizeField
from ..schemas.calibration import (
    ERROR_COLUMNS,
    BoundaryComparison,
    ModalityRow,
    UncertaintyRow,
    UncertaintySummary,
    UncertaintyTable,
)
from ..schemas.simulation import BoundaryMode, ErrorMatrix

logger = logging.getLogger(__name__)


def weighted_average(values: Sequence[float], weights: Sequence[float]) -> float:
    """W = sum(v_i * w_i) / sum(w_i)."""
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.ndim != 1 or v.shape != w.shape:
        raise ArgumentError(
            f"Values and weights must be 1-D and of equal length, got {v.shape} and {w.shape}",
        )
    if v.size == 0:
        raise ArgumentError("Weighted average needs at least one value")
    if (w < 0).any():
        raise ArgumentError("Weights must be non-negative")
    total = w.sum()
    if total <= 0:
        raise ArgumentError("Weights must not sum to zero")
    return float(np.dot(v, w) / total)


def summarize_rows(rows: Sequence[UncertaintyRow]) -> UncertaintySummary:
    """Frequency-weighted average of every error column."""
    weights = [row.frequency for row in rows]
    return UncertaintySummary(
        **{column: weighted_average([getattr(row, column) for row in rows], weights) for column in ERROR_COLUMNS}
    )


def _matched_cell_size(matrix: ErrorMatrix, cell_size: float) -> float:
    try:
        return matrix.find_cell_size(cell_size)
    except KeyError:
        raise CalibrationError(
            f"Error matrix has no column at N={cell_size} um; re-run the sweep at this resolution",
            details={"cell_size": cell_size, "available": matrix.cell_sizes},
        )


def build_uncertainty_table(histogram: RadiusHistogram, matrix: ErrorMatrix, cell_size: float) -> UncertaintyTable:
    """Read off the matrix errors for every radius bin and weight them by frequency.

    Each bin maps to the matrix radius nearest its midpoint; ties go to the
    smaller radius.
    """
    if histogram.field is not SizeField.RADIUS:
        raise CalibrationError(f"Calibration needs a radius histogram, got '{histogram.field.value}'")
    if histogram.unit != "um":
        raise CalibrationError(
            f"Calibration needs radii in um, got '{histogram.unit}'; supply the mask resolution",
            details={"unit": histogram.unit},
        )
    if not matrix.cells:
        raise CalibrationError("Error matrix is empty")
    if histogram.total <= 0:
        raise CalibrationError("Histogram holds no bubbles")

    n = _matched_cell_size(matrix, cell_size)
    column = matrix.column(n)
    radii = np.array([cell.radius for cell in column])

    midpoints = histogram.midpoints
    if midpoints[-1] > radii[-1] or midpoints[0] < radii[0]:
        logger.warning(
            f"Histogram midpoints span [{midpoints[0]:.3f}, {midpoints[-1]:.3f}] um, "
            f"beyond the matrix radii [{radii[0]}, {radii[-1]}] um; edge radii are reused"
        )

    rows: List[UncertaintyRow] = []
    for k, (mid, frequency) in enumerate(zip(midpoints, histogram.counts)):
        cell = column[int(np.argmin(np.abs(radii - mid)))]
        rows.append(
            UncertaintyRow(
                sn=k + 1,
                radius_lo=histogram.bin_edges[k],
                radius_hi=histogram.bin_edges[k + 1],
                matched_radius=cell.radius,
                frequency=frequency,
                pre_area=cell.pre_area,
                me_area=cell.me_area,
                pre_perim=cell.pre_perim,
                me_perim=cell.me_perim,
            )
        )

    return UncertaintyTable(
        cell_size=n,
        boundary_mode=matrix.boundary_mode,
        rows=rows,
        summary=summarize_rows(rows),
    )


def compare_boundary_modes(
    histogram: RadiusHistogram,
    matrix_eroded: ErrorMatrix,
    matrix_dilated: ErrorMatrix,
    cell_size: float,
) -> BoundaryComparison:
    """Weighted summaries under erosion and dilation for the same population."""
    if not matrix_eroded.same_axes(matrix_dilated):
        raise CalibrationError(
            "Eroded and dilated matrices must share their N and R axes",
            details={
                "eroded": {"cell_sizes": matrix_eroded.cell_sizes, "radii": matrix_eroded.radii},
                "dilated": {"cell_sizes": matrix_dilated.cell_sizes, "radii": matrix_dilated.radii},
            },
        )
    for matrix, expected in ((matrix_eroded, BoundaryMode.ERODE), (matrix_dilated, BoundaryMode.DILATE)):
        if matrix.boundary_mode is not expected:
            logger.warning(f"Matrix passed as '{expected.value}' was simulated with mode '{matrix.boundary_mode.value}'")

    eroded = build_uncertainty_table(histogram, matrix_eroded, cell_size)
    dilated = build_uncertainty_table(histogram, matrix_dilated, cell_size)
    return BoundaryComparison(cell_size=eroded.cell_size, erode=eroded.summary, dilate=dilated.summary)


def summarize_modalities(tables: Mapping[str, UncertaintyTable]) -> List[ModalityRow]:
    """Headline weighted errors per modality, in insertion order."""
    if not tables:
        raise ArgumentError("At least one modality is required")
    rows: Dict[str, ModalityRow] = {}
    for modality, table in tables.items():
        rows[modality] = ModalityRow(
            modality=modality,
            cell_size=table.cell_size,
            alpha=table.summary.pre_area,
            beta=table.summary.pre_perim,
            gamma=table.summary.me_perim,
            bubbles=table.total_frequency,
        )
    return list(rows.values())
