import argparse
import logging
import re
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

from pydantic import ValidationError

from .. import __version__
from ..core.config import load_config_file, settings
from ..core.exceptions import AppException, ArgumentError, CalibrationError, ConfigError, config_error_from
from ..core.responses import RunRecorder, load_manifest
from ..models.mask import BinaryMask
from ..repositories import table_repo
from ..repositories.mask_repo import MaskRepository
from ..schemas.bubble import BinScale, BubbleRecord, RadiusHistogram, SizeField
from ..schemas.manifest import RunManifest
from ..schemas.simulation import DEFAULT_CELL_SIZES, DEFAULT_RADII, BoundaryMode, ErrorMatrix, SimConfig, parse_axis
from ..services import plotting
from ..services.boiling_service import compute_metrics, summarize_metrics
from ..services.bubble_service import build_histogram, classify_sizes, grouped_distribution, measure_bubbles
from ..services.calibration_service import build_uncertainty_table, compare_boundary_modes, summarize_modalities
from ..services.evaluation_service import aggregate, evaluate_pair
from ..services.simulation_service import SimulationService, cell_seed, convergence_trace

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_MILESTONES = "5000,10000,15000,20000"
_GROUP_LABEL = re.compile(r"^[A-Za-z0-9_.+-]+$")


# Argument types

def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a finite positive number: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return parse_axis(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _parse_groups(entries: Sequence[str]) -> "OrderedDict[str, List[str]]":
    """``label=path`` entries grouped by label in first-seen order."""
    groups: "OrderedDict[str, List[str]]" = OrderedDict()
    for entry in entries:
        label, sep, path = entry.partition("=")
        label = label.strip()
        if not sep or not path or not _GROUP_LABEL.match(label):
            raise ArgumentError(f"Expected --group label=path with a plain label, got {entry!r}")
        groups.setdefault(label, []).append(path)
    return groups


# Shared helpers

def _map_ordered(func: Callable[[T], R], items: Sequence[T], workers: int) -> List[Tuple[Optional[R], Optional[BaseException]]]:
    """Apply ``func`` to every item, keeping input order and capturing data failures."""
    def guarded(item: T):
        try:
            return func(item), None
        except (AppException, OSError) as exc:
            return None, exc

    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(guarded, items))
    return [guarded(item) for item in items]


def _load_masks(
    paths: Sequence[str],
    resolution: Optional[float],
    recorder: RunRecorder,
) -> List[Tuple[Path, BinaryMask]]:
    """Load every mask, recording failures per file and continuing with the rest."""
    repo = MaskRepository()
    files = repo.discover(paths)

    def load(path: Path) -> BinaryMask:
        mask = repo.get(path)
        return mask.with_resolution(resolution) if resolution is not None else mask

    loaded = []
    for path, (mask, exc) in zip(files, _map_ordered(load, files, recorder.workers)):
        recorder.add_input(path)
        if exc is not None:
            recorder.record_error(exc, str(path))
        else:
            loaded.append((path, mask))
    logger.info(f"Loaded {len(loaded)} of {len(files)} masks")
    return loaded


def _measure(masks: Sequence[Tuple[Path, BinaryMask]], connectivity: int) -> List[BubbleRecord]:
    records: List[BubbleRecord] = []
    for path, mask in masks:
        records.extend(measure_bubbles(mask, connectivity, frame_id=path.name))
    return records


def _suffix(label: str) -> str:
    return f"_{label}" if label else ""


def _sim_config(args: argparse.Namespace, **overrides: Any) -> SimConfig:
    """Defaults, then the config file, then flags, then ``overrides``."""
    values: Dict[str, Any] = {
        "domain_length": settings.domain_length,
        "cell_sizes": DEFAULT_CELL_SIZES,
        "radii": DEFAULT_RADII,
        "iterations": settings.iterations,
        "seed": settings.seed,
        "boundary_mode": BoundaryMode.NONE.value,
    }
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    flags = {
        "domain_length": getattr(args, "length", None),
        "cell_sizes": getattr(args, "cells", None),
        "radii": getattr(args, "radii", None),
        "iterations": getattr(args, "iters", None),
        "seed": getattr(args, "seed", None),
        "boundary_mode": getattr(args, "boundary", None),
    }
    values.update({key: value for key, value in flags.items() if value is not None})
    values.update(overrides)
    try:
        return SimConfig.model_validate(values)
    except ValidationError as exc:
        raise config_error_from(exc)


def _args_config(args: argparse.Namespace) -> Dict[str, Any]:
    config = {}
    for key, value in vars(args).items():
        if key == "handler":
            continue
        config[key] = str(value) if isinstance(value, Path) else value
    return config


# Commands

def cmd_metrics(args: argparse.Namespace, recorder: RunRecorder) -> int:
    """theta_dry and rho_cl per frame."""
    masks = _load_masks(args.masks, args.resolution, recorder)
    rows = [compute_metrics(mask, frame_id=path.name) for path, mask in masks]
    recorder.add_output(table_repo.metrics_repo.save_all(rows, recorder.output_path("metrics.csv")))
    if args.json:
        payload = {
            "frames": [row.model_dump(mode="json") for row in rows],
            "summary": summarize_metrics(rows).model_dump(mode="json"),
        }
        recorder.add_output(table_repo.write_json(payload, recorder.output_path("metrics.json")))
    return recorder.exit_code


def cmd_bubbles(args: argparse.Namespace, recorder: RunRecorder) -> int:
    """Bubble table, size histogram, optional size classes and grouped distribution."""
    groups = _parse_groups(args.group or [])
    if not args.masks and not groups:
        raise ArgumentError("Provide mask paths or at least one --group label=path")

    records = _measure(_load_masks(args.masks, args.resolution, recorder), args.connectivity) if args.masks else []
    grouped = OrderedDict(
        (label, _measure(_load_masks(paths, args.resolution, recorder), args.connectivity))
        for label, paths in groups.items()
    )
    if not args.masks:
        records = [record for group in grouped.values() for record in group]

    recorder.add_output(table_repo.bubble_repo.save_all(records, recorder.output_path("bubbles.csv")))
    payload: Dict[str, Any] = {"bubbles": [record.model_dump(mode="json") for record in records]}
    if records:
        histogram = build_histogram(records, args.field, args.bins, args.scale)
        recorder.add_output(table_repo.save_histogram(histogram, recorder.output_path("histogram.csv")))
        payload["histogram"] = histogram.model_dump(mode="json")
        if args.svg:
            recorder.add_output(plotting.plot_histogram(histogram, recorder.output_path("histogram.svg")))
    else:
        logger.warning("No bubbles found; histogram skipped")

    if args.classes:
        classes = classify_sizes(records, args.classes, args.class_labels)
        recorder.add_output(table_repo.save_size_classes(classes, recorder.output_path("size_classes.csv")))
        payload["size_classes"] = classes.model_dump(mode="json")

    if grouped:
        distribution = grouped_distribution(list(grouped.items()), args.bins, args.scale, args.field)
        recorder.add_output(table_repo.save_grouped(distribution, recorder.output_path("grouped.csv")))
        payload["grouped"] = distribution.model_dump(mode="json")
        if args.svg:
            recorder.add_output(plotting.plot_grouped(distribution, recorder.output_path("grouped.svg")))
    if args.json:
        recorder.add_output(table_repo.write_json(payload, recorder.output_path("bubbles.json")))
    return recorder.exit_code


def cmd_simulate(args: argparse.Namespace, recorder: RunRecorder) -> int:
    """Error matrix over the (N, R) grid."""
    config = _sim_config(args)
    recorder.config = {**config.model_dump(mode="json"), "output_dir": str(recorder.output_dir)}
    recorder.seed = config.seed
    matrix = SimulationService(recorder.workers).run_sweep(config)

    recorder.add_output(table_repo.save_matrix(matrix, recorder.output_path("error_matrix.csv")))
    if args.json:
        recorder.add_output(table_repo.write_json(matrix, recorder.output_path("error_matrix.json")))
    if args.svg:
        recorder.add_output(plotting.plot_error_curves(matrix, recorder.output_path("error_matrix.svg")))
    return recorder.exit_code


def cmd_convergence(args: argparse.Namespace, recorder: RunRecorder) -> int:
    """Running-mean errors of one (N, R) pair at increasing iteration counts."""
    config = _sim_config(args)
    if len(config.cell_sizes) != 1 or len(config.radii) != 1:
        raise ConfigError("Convergence runs a single (N, R) pair: pass one --cells and one --radii value")
    milestones = sorted(set(args.milestones))
    cell_size, radius = config.cell_sizes[0], config.radii[0]
    recorder.config = {
        **config.model_dump(mode="json", exclude={"iterations"}),
        "milestones": milestones,
        "output_dir": str(recorder.output_dir),
    }
    recorder.seed = config.seed

    trace = convergence_trace(
        cell_size,
        radius,
        milestones,
        cell_seed(config.seed, cell_size, radius),
        config.boundary_mode,
        config.domain_length,
    )
    recorder.add_output(table_repo.trace_repo.save_all(trace, recorder.output_path("convergence.csv")))
    if args.json:
        payload = {
            "cell_size": cell_size,
            "radius": radius,
            "boundary_mode": config.boundary_mode.value,
            "trace": [point.model_dump(mode="json") for point in trace],
        }
        recorder.add_output(table_repo.write_json(payload, recorder.output_path("convergence.json")))
    if args.svg:
        title = f"Convergence at N={cell_size:g} um, R={radius:g} um"
        recorder.add_output(plotting.plot_convergence(trace, recorder.output_path("convergence.svg"), title))
    return recorder.exit_code


def _calibration_histograms(args: argparse.Namespace, recorder: RunRecorder) -> Tuple["OrderedDict[str, RadiusHistogram]", set]:
    """Radius histograms per modality label ("" when there is a single population)."""
    histograms: "OrderedDict[str, RadiusHistogram]" = OrderedDict()
    resolutions = set()
    if args.histogram:
        recorder.add_input(args.histogram)
        histograms[""] = table_repo.load_histogram(args.histogram)
        return histograms, resolutions

    sources = _parse_groups(args.group) if args.group else OrderedDict([("", list(args.masks))])
    for label, paths in sources.items():
        masks = _load_masks(paths, args.resolution, recorder)
        unresolved = [str(path) for path, mask in masks if mask.resolution is None]
        if unresolved:
            raise ArgumentError(
                f"Mask {unresolved[0]} has no embedded resolution; pass --resolution",
                details={"masks": unresolved},
            )
        resolutions.update(mask.resolution for _, mask in masks)
        records = _measure(masks, args.connectivity)
        if not records:
            raise CalibrationError(f"No bubbles found{' for ' + label if label else ''}; nothing to calibrate")
        histogram = build_histogram(records, SizeField.RADIUS, args.bins, args.scale)
        recorder.add_output(table_repo.save_histogram(histogram, recorder.output_path(f"histogram{_suffix(label)}.csv")))
        histograms[label] = histogram
    return histograms, resolutions


def cmd_calibrate(args: argparse.Namespace, recorder: RunRecorder) -> int:
    """Uncertainty table of an experimental radius distribution."""
    given = [bool(args.histogram), bool(args.masks), bool(args.group)]
    if sum(given) != 1:
        raise ArgumentError("Give exactly one of --histogram, mask paths or --group label=path")
    if args.histogram and args.cell_size is None and args.resolution is None:
        raise ArgumentError("--cell-size (or --resolution) is required with --histogram")

    histograms, resolutions = _calibration_histograms(args, recorder)
    cell_size = args.cell_size or args.resolution
    if cell_size is None:
        if len(resolutions) != 1:
            raise ArgumentError(
                f"Masks carry {len(resolutions)} different resolutions; pass --cell-size",
                details={"resolutions": sorted(resolutions)},
            )
        cell_size = resolutions.pop()

    matrices: Dict[BoundaryMode, ErrorMatrix] = {}
    given_paths = {
        BoundaryMode.ERODE: args.matrix_erode,
        BoundaryMode.DILATE: args.matrix_dilate,
    }

    def matrix_for(mode: BoundaryMode, path: Optional[Path]) -> ErrorMatrix:
        if mode not in matrices:
            if path is not None:
                recorder.add_input(path)
                matrices[mode] = table_repo.load_matrix(path)
            else:
                config = _sim_config(args, cell_sizes=[cell_size], boundary_mode=mode.value)
                recorder.seed = config.seed
                recorder.config["simulation"] = config.model_dump(mode="json", exclude={"cell_sizes", "boundary_mode"})
                matrix = SimulationService(recorder.workers).run_sweep(config)
                recorder.add_output(
                    table_repo.save_matrix(matrix, recorder.output_path(f"error_matrix_{mode.value}.csv"))
                )
                matrices[mode] = matrix
        return matrices[mode]

    primary_mode = BoundaryMode(args.boundary or BoundaryMode.NONE.value)
    primary = matrix_for(primary_mode, args.matrix)

    tables = OrderedDict()
    for label, histogram in histograms.items():
        table = build_uncertainty_table(histogram, primary, cell_size)
        tables[label or "all"] = table
        path = recorder.output_path(f"uncertainty_table{_suffix(label)}.csv")
        recorder.add_output(table_repo.save_uncertainty_table(table, path))
        if args.svg:
            svg = recorder.output_path(f"histogram{_suffix(label)}.svg")
            recorder.add_output(plotting.plot_histogram(histogram, svg))
        logger.info(
            f"{label or 'Population'}: W(PRE area)={table.summary.pre_area:.3f}%, "
            f"W(PRE perimeter)={table.summary.pre_perim:.3f}% over {table.total_frequency} bubbles"
        )

        if args.compare_boundary:
            comparison = compare_boundary_modes(
                histogram,
                matrix_for(BoundaryMode.ERODE, given_paths[BoundaryMode.ERODE]),
                matrix_for(BoundaryMode.DILATE, given_paths[BoundaryMode.DILATE]),
                cell_size,
            )
            path = recorder.output_path(f"boundary_comparison{_suffix(label)}.csv")
            recorder.add_output(table_repo.save_comparison(comparison, path))

    if args.group:
        rows = summarize_modalities(tables)
        recorder.add_output(table_repo.modality_repo.save_all(rows, recorder.output_path("modalities.csv")))
    if args.json:
        payload = {label: table.model_dump(mode="json") for label, table in tables.items()}
        recorder.add_output(table_repo.write_json(payload, recorder.output_path("uncertainty.json")))
    return recorder.exit_code


def cmd_evaluate(args: argparse.Namespace, recorder: RunRecorder) -> int:
    """Pixelwise agreement of predicted masks with their ground truth."""
    repo = MaskRepository()
    predictions = repo.discover(args.pred)
    truths = repo.discover(args.truth)
    if len(predictions) != len(truths):
        raise ArgumentError(
            f"Cannot pair {len(predictions)} predicted masks with {len(truths)} ground-truth masks",
            details={"predictions": len(predictions), "truths": len(truths)},
        )

    pairs = list(zip(predictions, truths))

    def evaluate(pair: Tuple[Path, Path]):
        pred_path, truth_path = pair
        return evaluate_pair(pred_path.name, repo.get(pred_path), repo.get(truth_path), str(pred_path), str(truth_path))

    evaluations = []
    for (pred_path, truth_path), (result, exc) in zip(pairs, _map_ordered(evaluate, pairs, recorder.workers)):
        recorder.add_input(pred_path)
        recorder.add_input(truth_path)
        if exc is not None:
            recorder.record_error(exc, f"{pred_path} vs {truth_path}")
        else:
            evaluations.append(result)

    result = aggregate(evaluations)
    recorder.add_output(table_repo.save_evaluation(evaluations, result, recorder.output_path("evaluation.csv")))
    if args.json:
        payload = {"frames": [e.model_dump(mode="json") for e in evaluations], "aggregate": result.model_dump(mode="json")}
        recorder.add_output(table_repo.write_json(payload, recorder.output_path("evaluation.json")))
    return recorder.exit_code


# Replay

COMMANDS: Dict[str, Callable[[argparse.Namespace, RunRecorder], int]] = {
    "metrics": cmd_metrics,
    "bubbles": cmd_bubbles,
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
}

# SimConfig field -> command-line flag
_SIM_FLAGS = {
    "domain_length": "length",
    "cell_sizes": "cells",
    "radii": "radii",
    "iterations": "iters",
    "seed": "seed",
    "boundary_mode": "boundary",
}


def replay_arguments(
    manifest: RunManifest,
    output_dir: Optional[Path] = None,
    threads: Optional[int] = None,
) -> argparse.Namespace:
    """Arguments that repeat a recorded run.

    Simulation values come from the resolved configuration, so config files
    and environment defaults at replay time do not change the outputs.
    """
    handler = COMMANDS.get(manifest.command)
    if handler is None or not manifest.arguments:
        raise ConfigError(f"Manifest of command {manifest.command!r} carries no replayable arguments")
    if manifest.tool_version != __version__:
        logger.warning(f"Manifest written by pdquant {manifest.tool_version}, replaying with {__version__}")

    values = dict(manifest.arguments)
    resolved = manifest.config.get("simulation", manifest.config)
    materialized = False
    for key, flag in _SIM_FLAGS.items():
        if flag in values and key in resolved:
            values[flag] = resolved[key]
            materialized = True
    if materialized:
        values["config"] = None
    if output_dir is not None:
        values["output_dir"] = output_dir
    if threads is not None:
        values["threads"] = threads
    values.update(command=manifest.command, handler=handler)
    logger.info(f"🔁 Replaying {manifest.command} from its manifest")
    return argparse.Namespace(**values)


# Parser

def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("-o", "--output-dir", type=Path, default=None, help="Output directory (default: PDQUANT_OUTPUT_DIR or ./results)")
    parser.add_argument("--threads", type=_positive_int, default=None, help="Worker threads (default: PDQUANT_THREADS or 1)")
    parser.add_argument("--json", action="store_true", help="Also write JSON")


def _add_mask_options(parser: argparse.ArgumentParser):
    parser.add_argument("--resolution", type=_positive_float, default=None, help="Pixel edge length in um, overriding embedded values")
    parser.add_argument("--connectivity", type=int, choices=(4, 8), default=8, help="Component connectivity")


def _add_histogram_options(parser: argparse.ArgumentParser):
    parser.add_argument("--bins", type=_positive_int, default=10, help="Number of histogram bins")
    parser.add_argument("--scale", choices=[s.value for s in BinScale], default=BinScale.LINEAR.value, help="Bin spacing")


def _add_sim_options(parser: argparse.ArgumentParser, cells: bool = True, iterations: bool = True):
    parser.add_argument("--config", type=Path, default=None, help="key = value simulation config file")
    if cells:
        parser.add_argument("--cells", default=None, help="Cell sizes N in um (start:stop:step or list)")
    parser.add_argument("--radii", default=None, help="Radii R in um (start:stop:step or list)")
    if iterations:
        parser.add_argument("--iters", type=int, default=None, help="Placements per (N, R)")
    parser.add_argument("--seed", type=int, default=None, help="Root seed")
    parser.add_argument("--length", type=float, default=None, help="Domain side L in um")
    parser.add_argument("--boundary", choices=[m.value for m in BoundaryMode], default=None, help="Boundary modification")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdquant",
        description="Pixel-discretization uncertainty of phase-detection boiling masks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Logging level (default: PDQUANT_LOG_LEVEL or INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")

    metrics = subparsers.add_parser("metrics", help="Dry area fraction and contact line density per frame")
    metrics.add_argument("masks", nargs="+", help="Mask files or directories")
    metrics.add_argument("--resolution", type=_positive_float, default=None, help="Pixel edge length in um")
    _add_common(metrics)
    metrics.set_defaults(handler=cmd_metrics)

    bubbles = subparsers.add_parser("bubbles", help="Bubble table, size histogram and distributions")
    bubbles.add_argument("masks", nargs="*", help="Mask files or directories")
    _add_mask_options(bubbles)
    _add_histogram_options(bubbles)
    bubbles.add_argument("--field", choices=[f.value for f in SizeField], default=SizeField.RADIUS.value, help="Binned measurement")
    bubbles.add_argument("--classes", type=_float_list, default=None, help="Ascending radius thresholds of size classes")
    bubbles.add_argument("--class-labels", type=lambda s: [p.strip() for p in s.split(",")], default=None, help="Size class labels")
    bubbles.add_argument("--group", action="append", default=None, metavar="LABEL=PATH", help="Grouped distribution input")
    bubbles.add_argument("--svg", action="store_true", help="Also write SVG charts")
    _add_common(bubbles)
    bubbles.set_defaults(handler=cmd_bubbles)

    simulate = subparsers.add_parser("simulate", help="Monte Carlo error matrix")
    _add_sim_options(simulate)
    simulate.add_argument("--svg", action="store_true", help="Also write PRE-vs-R charts")
    _add_common(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    convergence = subparsers.add_parser("convergence", help="Errors of one (N, R) pair against iteration count")
    _add_sim_options(convergence, iterations=False)
    convergence.add_argument("--milestones", type=_int_list, default=_int_list(DEFAULT_MILESTONES), help="Comma-separated iteration counts")
    convergence.add_argument("--svg", action="store_true", help="Also write a convergence chart")
    _add_common(convergence)
    convergence.set_defaults(handler=cmd_convergence)

    calibrate = subparsers.add_parser("calibrate", help="Uncertainty table from a radius distribution")
    calibrate.add_argument("masks", nargs="*", help="Mask files or directories")
    calibrate.add_argument("--histogram", type=Path, default=None, help="Radius histogram CSV (um)")
    calibrate.add_argument("--group", action="append", default=None, metavar="LABEL=PATH", help="Per-modality mask input")
    calibrate.add_argument("--cell-size", type=_positive_float, default=None, help="Matrix N to match (default: mask resolution)")
    calibrate.add_argument("--matrix", type=Path, default=None, help="Error matrix CSV (default: run a sweep)")
    calibrate.add_argument("--matrix-erode", type=Path, default=None, help="Eroded error matrix CSV")
    calibrate.add_argument("--matrix-dilate", type=Path, default=None, help="Dilated error matrix CSV")
    calibrate.add_argument("--compare-boundary", action="store_true", help="Weighted errors under erosion and dilation")
    calibrate.add_argument("--svg", action="store_true", help="Also write histogram charts")
    _add_mask_options(calibrate)
    _add_histogram_options(calibrate)
    _add_sim_options(calibrate, cells=False)
    _add_common(calibrate)
    calibrate.set_defaults(handler=cmd_calibrate)

    evaluate = subparsers.add_parser("evaluate", help="Segmentation metrics against ground truth")
    evaluate.add_argument("--pred", nargs="+", required=True, help="Predicted mask files or directories")
    evaluate.add_argument("--truth", nargs="+", required=True, help="Ground-truth mask files or directories")
    _add_common(evaluate)
    evaluate.set_defaults(handler=cmd_evaluate)

    rerun = subparsers.add_parser("rerun", help="Repeat a run from its manifest")
    rerun.add_argument("manifest", type=Path, help="<command>_manifest.json of the run to repeat")
    rerun.add_argument("-o", "--output-dir", type=Path, default=None, help="Output directory (default: the recorded one)")
    rerun.add_argument("--threads", type=_positive_int, default=None, help="Worker threads (default: the recorded count)")

    return parser


def run_command(args: argparse.Namespace) -> int:
    """Dispatch one parsed command and write its manifest, whatever the outcome."""
    if args.command == "rerun":
        try:
            args = replay_arguments(load_manifest(args.manifest), args.output_dir, args.threads)
        except AppException as exc:
            logger.error(f"❌ {exc.message}")
            return exc.exit_code

    recorder = RunRecorder(
        command=args.command,
        output_dir=args.output_dir or settings.output_dir,
        workers=args.threads or settings.threads,
    )
    recorder.config = _args_config(args)
    recorder.arguments = _args_config(args)
    try:
        exit_code = args.handler(args, recorder)
    except AppException as exc:
        recorder.record_error(exc)
        exit_code = exc.exit_code
    recorder.write_manifest(exit_code)
    return exit_code
