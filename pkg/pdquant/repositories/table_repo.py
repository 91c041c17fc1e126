import json
import logging
from pathlib import Path
from typing import Any, Dict, Generic, List, Mapping, Optional, Sequence, Type, TypeVar, Union

import pandas as pd
from pydantic import BaseModel, ValidationError

from ..core.exceptions import NotFoundError, TableFormatError
from ..schemas.bubble import BinScale, BubbleRecord, GroupedDistribution, RadiusHistogram, SizeClassCounts, SizeField
from ..schemas.calibration import BoundaryComparison, ModalityRow, UncertaintyRow, UncertaintySummary, UncertaintyTable
from ..schemas.evaluation import METRIC_NAMES, EvaluationAggregate, FrameEvaluation
from ..schemas.metrics import BoilingMetrics
from ..schemas.simulation import BoundaryMode, CellResult, ErrorMatrix, TracePoint

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=BaseModel)
PathLike = Union[str, Path]

SUMMARY_ROW = "weighted_avg"


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write a table with round-trip float formatting and empty cells for ``None``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, na_rep="", lineterminator="\n")
    return path


def object_frame(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    # object dtype keeps ints as ints next to missing values
    return pd.DataFrame(list(rows), columns=list(columns), dtype=object)


def read_frame(path: PathLike, required: Sequence[str] = ()) -> pd.DataFrame:
    """Read a CSV table, checking that ``required`` columns exist."""
    path = Path(path)
    if not path.is_file():
        raise NotFoundError("Table file", str(path))
    try:
        # text cells; schema validation does the numeric parsing
        frame = pd.read_csv(path, comment="#", skip_blank_lines=True, dtype=str)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise TableFormatError(f"Unreadable table: {exc}", source=str(path))
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise TableFormatError(f"Missing columns {missing}", source=str(path), details={"missing": missing})
    return frame


def _records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    frame = frame.astype(object).where(frame.notna(), None)
    return frame.to_dict(orient="records")


def write_json(payload: Union[BaseModel, Any], path: PathLike) -> Path:
    """Write a schema (or plain data) as indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2, default=str)
    path.write_text(text + "\n", encoding="utf-8")
    return path


class CsvRepository(Generic[T]):
    """Flat CSV storage of one schema type, one row per instance."""

    def __init__(self, model: Type[T], columns: Optional[Sequence[str]] = None):
        self.model = model
        self.columns = list(columns or model.model_fields.keys())

    def to_frame(self, items: Sequence[T]) -> pd.DataFrame:
        return object_frame([item.model_dump(mode="json") for item in items], self.columns)

    def save_all(self, items: Sequence[T], path: PathLike) -> Path:
        path = write_frame(self.to_frame(items), path)
        logger.debug(f"Wrote {len(items)} {self.model.__name__} rows to {path}")
        return path

    def get_all(self, path: PathLike) -> List[T]:
        frame = read_frame(path, required=[c for c, f in self.model.model_fields.items() if f.is_required()])
        items: List[T] = []
        for number, record in enumerate(_records(frame), start=1):
            try:
                items.append(self.model.model_validate(record))
            except ValidationError as exc:
                raise TableFormatError(
                    f"Invalid {self.model.__name__} row {number}: {exc.errors()[0]['msg']}",
                    source=str(path),
                    details={"row": number},
                )
        return items


metrics_repo = CsvRepository(BoilingMetrics, ["frame_id", "theta_dry", "rho_cl_pixel", "rho_cl_physical", "resolution"])
bubble_repo = CsvRepository(BubbleRecord)
trace_repo = CsvRepository(TracePoint)
modality_repo = CsvRepository(ModalityRow)


# Error matrix

MATRIX_COLUMNS = {
    "N": "cell_size",
    "R": "radius",
    "mode": "boundary_mode",
    "mean_area": "mean_area_disc",
    "mean_perim": "mean_perim_disc",
    "pre_area": "pre_area",
    "pre_perim": "pre_perim",
    "me_area": "me_area",
    "me_perim": "me_perim",
    "std_area": "std_area_disc",
    "std_perim": "std_perim_disc",
    "iterations": "iterations",
}


def save_matrix(matrix: ErrorMatrix, path: PathLike) -> Path:
    """One row per (N, R), ordered by N then R."""
    rows = []
    for cell in matrix.cells:
        dumped = cell.model_dump(mode="json")
        rows.append({column: dumped[attr] for column, attr in MATRIX_COLUMNS.items()})
    return write_frame(object_frame(rows, list(MATRIX_COLUMNS)), path)


def load_matrix(path: PathLike) -> ErrorMatrix:
    """Rebuild a dense error matrix; the axes are the distinct N and R values."""
    frame = read_frame(path, required=[c for c in MATRIX_COLUMNS if not c.startswith("std_")])
    if frame.empty:
        raise TableFormatError("Error matrix holds no rows", source=str(path))
    modes = {str(m).strip().lower() for m in frame["mode"]}
    if len(modes) != 1:
        raise TableFormatError(f"Error matrix mixes boundary modes {sorted(modes)}", source=str(path))
    try:
        cells = [
            CellResult.model_validate({MATRIX_COLUMNS[k]: v for k, v in record.items() if k in MATRIX_COLUMNS and v is not None})
            for record in _records(frame)
        ]
        cells.sort(key=lambda c: (c.cell_size, c.radius))
        return ErrorMatrix(
            cell_sizes=sorted({c.cell_size for c in cells}),
            radii=sorted({c.radius for c in cells}),
            boundary_mode=BoundaryMode(modes.pop()),
            cells=cells,
        )
    except (ValidationError, ValueError) as exc:
        raise TableFormatError(f"Invalid error matrix: {exc}", source=str(path))


# Histograms

HISTOGRAM_COLUMNS = ["field", "unit", "scale", "bin_lo", "bin_hi", "count"]


def save_histogram(histogram: RadiusHistogram, path: PathLike) -> Path:
    edges = histogram.bin_edges
    rows = [
        {
            "field": histogram.field.value,
            "unit": histogram.unit,
            "scale": histogram.scale.value,
            "bin_lo": edges[k],
            "bin_hi": edges[k + 1],
            "count": count,
        }
        for k, count in enumerate(histogram.counts)
    ]
    return write_frame(object_frame(rows, HISTOGRAM_COLUMNS), path)


def load_histogram(path: PathLike) -> RadiusHistogram:
    """Read contiguous bins; ``field``/``unit``/``scale`` default to radius, um, linear."""
    frame = read_frame(path, required=["bin_lo", "bin_hi", "count"])
    if frame.empty:
        raise TableFormatError("Histogram holds no bins", source=str(path))
    try:
        lo = [float(v) for v in frame["bin_lo"]]
        hi = [float(v) for v in frame["bin_hi"]]
        counts = [int(c) for c in frame["count"]]
    except (TypeError, ValueError) as exc:
        raise TableFormatError(f"Non-numeric histogram cell: {exc}", source=str(path))
    if lo[1:] != hi[:-1]:
        raise TableFormatError("Histogram bins must be contiguous (bin_hi of each row = bin_lo of the next)", source=str(path))

    def single(column: str, default: str) -> str:
        if column not in frame.columns:
            return default
        values = {str(v) for v in frame[column].dropna()}
        if len(values) > 1:
            raise TableFormatError(f"Column '{column}' must hold a single value", source=str(path))
        return values.pop() if values else default

    try:
        return RadiusHistogram(
            field=SizeField(single("field", SizeField.RADIUS.value)),
            unit=single("unit", "um"),
            scale=BinScale(single("scale", BinScale.LINEAR.value)),
            bin_edges=lo + hi[-1:],
            counts=counts,
        )
    except (ValidationError, ValueError) as exc:
        raise TableFormatError(f"Invalid histogram: {exc}", source=str(path))


def save_grouped(distribution: GroupedDistribution, path: PathLike) -> Path:
    """Bins as rows, one count column per group."""
    edges = distribution.bin_edges
    rows = []
    for k in range(len(edges) - 1):
        row: Dict[str, Any] = {"bin_lo": edges[k], "bin_hi": edges[k + 1]}
        for group, counts in zip(distribution.groups, distribution.counts):
            row[group] = counts[k]
        rows.append(row)
    return write_frame(object_frame(rows, ["bin_lo", "bin_hi", *distribution.groups]), path)


def save_size_classes(classes: SizeClassCounts, path: PathLike) -> Path:
    bounds = [None, *classes.thresholds, None]
    rows = [
        {"class": label, "radius_from": bounds[k], "radius_to": bounds[k + 1], "count": count}
        for k, (label, count) in enumerate(zip(classes.labels, classes.counts))
    ]
    return write_frame(object_frame(rows, ["class", "radius_from", "radius_to", "count"]), path)


# Calibration

UNCERTAINTY_COLUMNS = {
    "S/N": "sn",
    "Frequency": "frequency",
    "Radius Low (um)": "radius_lo",
    "Radius High (um)": "radius_hi",
    "Matched R (um)": "matched_radius",
    "Area PRE (%)": "pre_area",
    "Area ME (um^2)": "me_area",
    "Perimeter PRE (%)": "pre_perim",
    "Perimeter ME (um)": "me_perim",
}


def save_uncertainty_table(table: UncertaintyTable, path: PathLike) -> Path:
    """Bin rows followed by the frequency-weighted summary row."""
    rows = [{column: getattr(row, attr) for column, attr in UNCERTAINTY_COLUMNS.items()} for row in table.rows]
    summary = {column: None for column in UNCERTAINTY_COLUMNS}
    summary["S/N"] = SUMMARY_ROW
    summary["Frequency"] = table.total_frequency
    for column, attr in UNCERTAINTY_COLUMNS.items():
        if hasattr(table.summary, attr):
            summary[column] = getattr(table.summary, attr)
    rows.append(summary)
    return write_frame(object_frame(rows, list(UNCERTAINTY_COLUMNS)), path)


def load_uncertainty_table(path: PathLike, cell_size: float, boundary_mode: BoundaryMode = BoundaryMode.NONE) -> UncertaintyTable:
    frame = read_frame(path, required=list(UNCERTAINTY_COLUMNS))
    records = _records(frame)
    body = [r for r in records if str(r["S/N"]) != SUMMARY_ROW]
    footer = [r for r in records if str(r["S/N"]) == SUMMARY_ROW]
    if not footer:
        raise TableFormatError(f"Missing '{SUMMARY_ROW}' row", source=str(path))
    try:
        rows = [UncertaintyRow(**{attr: r[column] for column, attr in UNCERTAINTY_COLUMNS.items()}) for r in body]
        summary = UncertaintySummary(
            **{attr: footer[0][column] for column, attr in UNCERTAINTY_COLUMNS.items() if attr in UncertaintySummary.model_fields}
        )
        return UncertaintyTable(cell_size=cell_size, boundary_mode=boundary_mode, rows=rows, summary=summary)
    except ValidationError as exc:
        raise TableFormatError(f"Invalid uncertainty table: {exc}", source=str(path))


def save_comparison(comparison: BoundaryComparison, path: PathLike) -> Path:
    """Side-by-side weighted summaries, one row per error column."""
    erode = comparison.erode.model_dump()
    dilate = comparison.dilate.model_dump()
    rows = [
        {"metric": name, "N": comparison.cell_size, "erode": erode[name], "dilate": dilate[name]}
        for name in UncertaintySummary.model_fields
    ]
    return write_frame(object_frame(rows, ["metric", "N", "erode", "dilate"]), path)


# Evaluation

EVALUATION_COLUMNS = [
    "frame_id", "prediction", "truth", "tp", "tn", "fp", "fn",
    *METRIC_NAMES, "dice", "theta_dry_deviation", "rho_cl_deviation",
]


def save_evaluation(frames: Sequence[FrameEvaluation], result: EvaluationAggregate, path: PathLike) -> Path:
    """Per-frame rows, then ``micro`` and the ``macro_*`` rows.

    ``macro_undefined`` counts the frames whose metric was undefined and skipped.
    """
    rows: List[Dict[str, Any]] = []
    for frame in frames:
        rows.append({
            "frame_id": frame.frame_id,
            "prediction": frame.prediction,
            "truth": frame.truth,
            **frame.confusion.model_dump(),
            **frame.metrics.as_dict(),
            "dice": frame.metrics.dice,
            "theta_dry_deviation": frame.theta_dry_deviation,
            "rho_cl_deviation": frame.rho_cl_deviation,
        })
    if result.micro is not None:
        rows.append({"frame_id": "micro", **result.micro.as_dict(), "dice": result.micro.dice})
    for statistic in ("mean", "std", "min", "max", "undefined"):
        row: Dict[str, Any] = {"frame_id": f"macro_{statistic}"}
        for name, stats in result.macro.items():
            row[name] = getattr(stats, statistic)
        row["dice"] = row.get("f1")
        rows.append(row)
    return write_frame(object_frame(rows, EVALUATION_COLUMNS), path)
