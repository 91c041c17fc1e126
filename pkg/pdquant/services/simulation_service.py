import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from ..core.config import settings
from ..core.exceptions import SimulationError
from ..models.mask import SQUARE_3X3, BinaryMask
from ..schemas.simulation import (
    MIN_GRID_CELLS,
    BoundaryMode,
    CellResult,
    ErrorMatrix,
    GridSpec,
    SimConfig,
    TracePoint,
    grid_cells,
)
from .morphology import boundary_pixels

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence]

# Extra pixels around each circle's bounding box; dilation grows by one and
# boundary extraction needs one WET pixel beyond that.
_WINDOW_MARGIN = 3
_BATCH_SQUARE = SQUARE_3X3.footprint[np.newaxis]


def axis_key(value: float) -> int:
    """Integer key of an axis value (picometres) for seeding."""
    return int(round(value * 1_000_000))


def cell_seed(seed: int, cell_size: float, radius: float) -> np.random.SeedSequence:
    """RNG substream of one (N, R) cell, keyed by the axis values."""
    return np.random.SeedSequence([int(seed), axis_key(cell_size), axis_key(radius)])


def _check_cell(domain_length: float, cell_size: float, radius: float):
    if cell_size <= 0 or radius <= 0:
        raise SimulationError(
            f"Cell size and radius must be positive, got N={cell_size}, R={radius}",
            details={"cell_size": cell_size, "radius": radius},
        )
    if not 2 * radius < domain_length:
        raise SimulationError(
            f"Radius {radius} does not fit the domain: 2R must be < L={domain_length}",
            details={"radius": radius, "domain_length": domain_length},
        )
    if grid_cells(domain_length, cell_size) < MIN_GRID_CELLS:
        raise SimulationError(
            f"Cell size {cell_size} leaves fewer than {MIN_GRID_CELLS} cells across L={domain_length}",
            details={"cell_size": cell_size, "domain_length": domain_length},
        )


def _pixel_offsets(index: np.ndarray, cell_size: float, coordinate) -> np.ndarray:
    """Squared distance along one axis from pixel centres to a coordinate."""
    return ((index + 0.5) * cell_size - coordinate) ** 2


def rasterize_circle(grid: GridSpec, center: Tuple[float, float], radius: float) -> BinaryMask:
    """DRY where the pixel centre lies strictly inside the circle."""
    x, y = float(center[0]), float(center[1])
    length = grid.domain_length
    if radius <= 0 or radius > min(x, y, length - x, length - y):
        raise SimulationError(
            f"Circle at ({x}, {y}) with R={radius} is not fully inside the domain [0, {length}]^2",
            details={"center": [x, y], "radius": radius},
        )
    index = np.arange(grid.cells)
    dx2 = _pixel_offsets(index, grid.cell_size, x)
    dy2 = _pixel_offsets(index, grid.cell_size, y)
    inside = dy2[:, np.newaxis] + dx2[np.newaxis, :] < radius * radius
    return BinaryMask(inside, resolution=grid.cell_size)


def measure_discrete(mask: BinaryMask, cell_size: float) -> Tuple[float, float]:
    """(area, perimeter) in physical units from DRY and boundary pixel counts."""
    dry = mask.dry_count
    edge = int(np.count_nonzero(boundary_pixels(mask.pixels)))
    return dry * cell_size * cell_size, edge * cell_size


def draw_centers(rng: np.random.Generator, domain_length: float, radius: float, count: int) -> np.ndarray:
    """``count`` circle centres uniform on [R, L - R]^2, as rows of (x, y)."""
    return rng.uniform(radius, domain_length - radius, size=(count, 2))


def _apply_boundary(stack: np.ndarray, valid: np.ndarray, mode: BoundaryMode) -> np.ndarray:
    if mode is BoundaryMode.ERODE:
        return ndimage.binary_erosion(stack, structure=_BATCH_SQUARE, border_value=0)
    if mode is BoundaryMode.DILATE:
        # pixels beyond the raster do not exist and cannot become DRY
        return ndimage.binary_dilation(stack, structure=_BATCH_SQUARE, border_value=0) & valid
    return stack


def draw_pixel_counts(
    grid: GridSpec,
    radius: float,
    centers: np.ndarray,
    mode: BoundaryMode = BoundaryMode.NONE,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-draw DRY and boundary pixel counts of rasterized circles.

    Each circle is rasterized in a window around its bounding box instead of
    the whole grid; windows are processed in batches capped by
    ``settings.chunk_pixels``.
    """
    mode = BoundaryMode(mode)
    n = grid.cell_size
    cells = grid.cells
    size = int(math.ceil(2 * radius / n)) + 2 * _WINDOW_MARGIN
    batch = max(1, settings.chunk_pixels // (size * size))
    offsets = np.arange(size)

    dry = np.empty(len(centers), dtype=np.int64)
    edge = np.empty(len(centers), dtype=np.int64)
    for start in range(0, len(centers), batch):
        chunk = centers[start:start + batch]
        x = chunk[:, 0:1]
        y = chunk[:, 1:2]
        col = np.floor((x - radius) / n).astype(np.int64) - _WINDOW_MARGIN + offsets
        row = np.floor((y - radius) / n).astype(np.int64) - _WINDOW_MARGIN + offsets
        dx2 = _pixel_offsets(col, n, x)
        dy2 = _pixel_offsets(row, n, y)
        valid = ((row >= 0) & (row < cells))[:, :, np.newaxis] & ((col >= 0) & (col < cells))[:, np.newaxis, :]
        stack = (dy2[:, :, np.newaxis] + dx2[:, np.newaxis, :] < radius * radius) & valid
        stack = _apply_boundary(stack, valid, mode)
        dry[start:start + len(chunk)] = stack.sum(axis=(1, 2))
        edge[start:start + len(chunk)] = boundary_pixels(stack).sum(axis=(1, 2))
    return dry, edge


def _cell_errors(cell_size: float, radius: float, dry_total: int, edge_total: int, count: int) -> dict:
    """PRE/ME from summed pixel counts over ``count`` draws."""
    mean_area = dry_total * cell_size * cell_size / count
    mean_perim = edge_total * cell_size / count
    area_theo = math.pi * radius ** 2
    perim_theo = 2 * math.pi * radius
    me_area = area_theo - mean_area
    me_perim = perim_theo - mean_perim
    return {
        "mean_area_disc": mean_area,
        "mean_perim_disc": mean_perim,
        "me_area": me_area,
        "me_perim": me_perim,
        "pre_area": me_area / area_theo * 100,
        "pre_perim": me_perim / perim_theo * 100,
    }


def simulate_cell(
    cell_size: float,
    radius: float,
    iterations: int,
    seed: SeedLike,
    boundary_mode: BoundaryMode = BoundaryMode.NONE,
    domain_length: float = 1000.0,
) -> CellResult:
    """Monte Carlo PRE/ME of one (N, R) pair over ``iterations`` random placements."""
    _check_cell(domain_length, cell_size, radius)
    if iterations < 1:
        raise SimulationError(f"Iterations must be >= 1, got {iterations}")
    mode = BoundaryMode(boundary_mode)
    grid = GridSpec(domain_length=domain_length, cell_size=cell_size)

    rng = np.random.default_rng(seed)
    centers = draw_centers(rng, domain_length, radius, iterations)
    dry, edge = draw_pixel_counts(grid, radius, centers, mode)

    ddof = 1 if iterations > 1 else 0
    return CellResult(
        cell_size=cell_size,
        radius=radius,
        boundary_mode=mode,
        iterations=iterations,
        std_area_disc=float(np.std(dry, ddof=ddof)) * cell_size * cell_size,
        std_perim_disc=float(np.std(edge, ddof=ddof)) * cell_size,
        **_cell_errors(cell_size, radius, int(dry.sum()), int(edge.sum()), iterations),
    )


def convergence_trace(
    cell_size: float,
    radius: float,
    milestones: Sequence[int],
    seed: SeedLike,
    boundary_mode: BoundaryMode = BoundaryMode.NONE,
    domain_length: float = 1000.0,
) -> List[TracePoint]:
    """Running-mean errors at each milestone of a single draw stream.

    The point at milestone ``m`` equals ``simulate_cell`` with ``iterations=m``
    and the same seed.
    """
    milestones = [int(m) for m in milestones]
    if not milestones:
        raise SimulationError("At least one milestone is required")
    if milestones[0] < 1 or any(b <= a for a, b in zip(milestones, milestones[1:])):
        raise SimulationError("Milestones must be positive and strictly ascending", details={"milestones": milestones})
    _check_cell(domain_length, cell_size, radius)
    grid = GridSpec(domain_length=domain_length, cell_size=cell_size)

    rng = np.random.default_rng(seed)
    centers = draw_centers(rng, domain_length, radius, milestones[-1])
    dry, edge = draw_pixel_counts(grid, radius, centers, BoundaryMode(boundary_mode))
    dry_running = np.cumsum(dry)
    edge_running = np.cumsum(edge)

    trace = []
    for m in milestones:
        errors = _cell_errors(cell_size, radius, int(dry_running[m - 1]), int(edge_running[m - 1]), m)
        trace.append(
            TracePoint(
                iterations=m,
                pre_area=errors["pre_area"],
                pre_perim=errors["pre_perim"],
                me_area=errors["me_area"],
                me_perim=errors["me_perim"],
            )
        )
    return trace


class SimulationService:
    """Runs discretization sweeps, optionally across worker threads."""

    def __init__(self, workers: Optional[int] = None):
        self.workers = workers or settings.threads

    def _run_cell(self, config: SimConfig, cell_size: float, radius: float) -> CellResult:
        result = simulate_cell(
            cell_size,
            radius,
            config.iterations,
            cell_seed(config.seed, cell_size, radius),
            config.boundary_mode,
            config.domain_length,
        )
        logger.debug(
            f"Cell N={cell_size} R={radius}: PRE area {result.pre_area:.4f}%, perimeter {result.pre_perim:.4f}%"
        )
        return result

    def run_sweep(self, config: SimConfig) -> ErrorMatrix:
        """One CellResult per (N, R); identical for any worker count."""
        pairs = [(n, r) for n in config.cell_sizes for r in config.radii]
        logger.info(
            f"Sweep: {len(config.cell_sizes)} cell sizes x {len(config.radii)} radii, "
            f"{config.iterations} iterations, mode={config.boundary_mode.value}, workers={self.workers}"
        )
        started = time.perf_counter()
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                futures = [executor.submit(self._run_cell, config, n, r) for n, r in pairs]
                cells = [future.result() for future in futures]
        else:
            cells = [self._run_cell(config, n, r) for n, r in pairs]
        logger.info(f"Sweep finished in {time.perf_counter() - started:.2f} s")

        return ErrorMatrix(
            cell_sizes=config.cell_sizes,
            radii=config.radii,
            boundary_mode=config.boundary_mode,
            cells=cells,
        )


def run_sweep(config: SimConfig, workers: Optional[int] = None) -> ErrorMatrix:
    """Module-level shortcut for ``SimulationService(workers).run_sweep(config)``."""
    return SimulationService(workers).run_sweep(config)
