"""SVG charts of histograms, convergence traces and error curves.

Charts are presentational only: every plotted number also goes to a CSV.
"""
import logging
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from ..schemas.bubble import BinScale, GroupedDistribution, RadiusHistogram  # noqa: E402
from ..schemas.simulation import ErrorMatrix, TracePoint  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# stable element ids and no timestamp, so reruns give identical files
matplotlib.rcParams["svg.hashsalt"] = "pdquant"
_SVG_METADATA = {"Date": None}


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    logger.debug(f"Wrote chart {path}")
    return path


def plot_histogram(histogram: RadiusHistogram, path: PathLike, title: str = "") -> Path:
    edges = histogram.bin_edges
    widths = [hi - lo for lo, hi in zip(edges, edges[1:])]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(edges[:-1], histogram.counts, width=widths, align="edge", edgecolor="black", linewidth=0.5)
    if histogram.scale is BinScale.LOG:
        ax.set_xscale("log")
    ax.set_xlabel(f"{histogram.field.value} ({histogram.unit})")
    ax.set_ylabel("count")
    ax.set_title(title or f"{histogram.field.value} distribution")
    return _save(fig, path)


def plot_grouped(distribution: GroupedDistribution, path: PathLike, title: str = "") -> Path:
    """One probability curve per group over the shared bin midpoints."""
    edges = distribution.bin_edges
    if distribution.scale is BinScale.LOG:
        mids = [(lo * hi) ** 0.5 for lo, hi in zip(edges, edges[1:])]
    else:
        mids = [(lo + hi) / 2 for lo, hi in zip(edges, edges[1:])]
    fig, ax = plt.subplots(figsize=(6, 4))
    for group, counts in zip(distribution.groups, distribution.counts):
        total = sum(counts)
        ax.plot(mids, [c / total if total else 0.0 for c in counts], marker="o", label=group)
    if distribution.scale is BinScale.LOG:
        ax.set_xscale("log")
    ax.set_xlabel(distribution.field.value)
    ax.set_ylabel("probability")
    ax.set_title(title or "Grouped distribution")
    ax.legend()
    return _save(fig, path)


def plot_convergence(trace: Sequence[TracePoint], path: PathLike, title: str = "") -> Path:
    iterations = [p.iterations for p in trace]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(iterations, [p.pre_area for p in trace], marker="o", label="area PRE")
    ax.plot(iterations, [p.pre_perim for p in trace], marker="s", label="perimeter PRE")
    ax.axhline(0.0, linestyle="--", linewidth=0.8, color="grey")
    ax.set_xlabel("iterations")
    ax.set_ylabel("PRE (%)")
    ax.set_title(title or "Convergence")
    ax.legend()
    return _save(fig, path)


def plot_error_curves(matrix: ErrorMatrix, path: PathLike, title: str = "") -> Path:
    """Area and perimeter PRE against R, one line per cell size."""
    fig, (area_ax, perim_ax) = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    for n in matrix.cell_sizes:
        column = matrix.column(n)
        radii = [c.radius for c in column]
        area_ax.plot(radii, [c.pre_area for c in column], label=f"N={n:g}")
        perim_ax.plot(radii, [c.pre_perim for c in column], label=f"N={n:g}")
    for ax, name in ((area_ax, "area"), (perim_ax, "perimeter")):
        ax.axhline(0.0, linestyle="--", linewidth=0.8, color="grey")
        ax.set_xlabel("R (um)")
        ax.set_ylabel(f"{name} PRE (%)")
    perim_ax.legend(fontsize="small")
    fig.suptitle(title or f"Discretization error ({matrix.boundary_mode.value})")
    return _save(fig, path)
