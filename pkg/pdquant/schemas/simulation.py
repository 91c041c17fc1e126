import math
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Dict, List, Tuple

from pydantic import Field, field_validator, model_validator

from .common import BaseSchema

DEFAULT_CELL_SIZES = "5:50:5"
DEFAULT_RADII = "5:200:5"
MIN_GRID_CELLS = 4


class BoundaryMode(str, Enum):
    """Morphological step applied to each raster before measurement."""

    NONE = "none"
    ERODE = "erode"
    DILATE = "dilate"


def parse_axis(text: str) -> List[float]:
    """Parse ``start:stop:step`` ranges and comma lists into ascending floats.

    Ranges include ``stop`` when a step lands on it exactly; stepping is done
    in decimal arithmetic so ``5:200:5`` yields exactly 40 values.
    """
    values = set()
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        parts = token.split(":")
        try:
            numbers = [Decimal(part.strip()) for part in parts]
        except InvalidOperation:
            raise ValueError(f"Malformed axis value: {token!r}")
        if len(numbers) == 1:
            values.add(float(numbers[0]))
        elif len(numbers) == 3:
            start, stop, step = numbers
            if step <= 0:
                raise ValueError(f"Range step must be positive: {token!r}")
            if stop < start:
                raise ValueError(f"Range stop precedes start: {token!r}")
            k = 0
            while start + k * step <= stop:
                values.add(float(start + k * step))
                k += 1
        else:
            raise ValueError(f"Expected 'value' or 'start:stop:step', got {token!r}")
    if not values:
        raise ValueError(f"Axis is empty: {text!r}")
    return sorted(values)


def grid_cells(domain_length: float, cell_size: float) -> int:
    """Cells per axis: round-half-up of L / N."""
    return int(math.floor(domain_length / cell_size + 0.5))


class GridSpec(BaseSchema):
    """Square simulation raster of side ``domain_length`` split into cells of ``cell_size``."""

    domain_length: float = Field(default=1000.0, gt=0, description="Domain side L in um")
    cell_size: float = Field(..., gt=0, description="Pixel edge N in um")

    @property
    def cells(self) -> int:
        return grid_cells(self.domain_length, self.cell_size)


class SimConfig(BaseSchema):
    """Parameters of a Monte Carlo discretization sweep."""

    domain_length: float = Field(default=1000.0, gt=0, description="Domain side L in um")
    cell_sizes: List[float] = Field(default_factory=lambda: parse_axis(DEFAULT_CELL_SIZES), description="Cell sizes N in um")
    radii: List[float] = Field(default_factory=lambda: parse_axis(DEFAULT_RADII), description="Bubble radii R in um")
    iterations: int = Field(default=20000, ge=1, description="Random placements per (N, R)")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Root seed")
    boundary_mode: BoundaryMode = Field(default=BoundaryMode.NONE, description="Boundary modification")

    @field_validator("cell_sizes", "radii", mode="before")
    @classmethod
    def parse_axes(cls, v):
        if isinstance(v, str):
            return parse_axis(v)
        if isinstance(v, (int, float)):
            return [float(v)]
        return v

    @field_validator("cell_sizes", "radii")
    @classmethod
    def sort_axes(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("axis must not be empty")
        if any(not math.isfinite(x) or x <= 0 for x in v):
            raise ValueError("axis values must be finite and positive")
        return sorted(set(v))

    @field_validator("boundary_mode", mode="before")
    @classmethod
    def parse_mode(cls, v):
        return v.strip().lower() if isinstance(v, str) else v

    @model_validator(mode="after")
    def validate_fit(self):
        for n in self.cell_sizes:
            if grid_cells(self.domain_length, n) < MIN_GRID_CELLS:
                raise ValueError(
                    f"cell size {n} leaves fewer than {MIN_GRID_CELLS} cells across L={self.domain_length}"
                )
        for r in self.radii:
            if not 2 * r < self.domain_length:
                raise ValueError(f"radius {r} does not fit: 2R must be < L={self.domain_length}")
        return self

    @property
    def cell_count(self) -> int:
        return len(self.cell_sizes) * len(self.radii)


class CellResult(BaseSchema):
    """Monte Carlo errors of one (N, R) pair."""

    cell_size: float = Field(..., gt=0, description="N in um")
    radius: float = Field(..., gt=0, description="R in um")
    boundary_mode: BoundaryMode = Field(default=BoundaryMode.NONE, description="Boundary modification")
    iterations: int = Field(..., ge=1, description="Placements averaged")
    mean_area_disc: float = Field(..., description="Mean discretized area in um^2")
    mean_perim_disc: float = Field(..., description="Mean discretized perimeter in um")
    std_area_disc: float = Field(default=0.0, ge=0, description="Per-draw sample std of area in um^2")
    std_perim_disc: float = Field(default=0.0, ge=0, description="Per-draw sample std of perimeter in um")
    pre_area: float = Field(..., description="Area percentage relative error")
    pre_perim: float = Field(..., description="Perimeter percentage relative error")
    me_area: float = Field(..., description="Area mean error in um^2")
    me_perim: float = Field(..., description="Perimeter mean error in um")

    @property
    def area_theo(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def perim_theo(self) -> float:
        return 2 * math.pi * self.radius


class ErrorMatrix(BaseSchema):
    """Dense PRE/ME results over ascending N and R axes for one boundary mode."""

    cell_sizes: List[float] = Field(..., min_length=1, description="Ascending N axis")
    radii: List[float] = Field(..., min_length=1, description="Ascending R axis")
    boundary_mode: BoundaryMode = Field(default=BoundaryMode.NONE, description="Boundary modification")
    cells: List[CellResult] = Field(..., description="Cells ordered by (N, R)")

    @model_validator(mode="after")
    def validate_dense(self):
        for axis in (self.cell_sizes, self.radii):
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ValueError("matrix axes must be strictly ascending")
        expected = [(n, r) for n in self.cell_sizes for r in self.radii]
        actual = [(c.cell_size, c.radius) for c in self.cells]
        if actual != expected:
            raise ValueError("matrix must hold exactly one cell per (N, R) pair, ordered by N then R")
        return self

    def _index(self) -> Dict[Tuple[float, float], CellResult]:
        return {(c.cell_size, c.radius): c for c in self.cells}

    def cell(self, cell_size: float, radius: float) -> CellResult:
        return self._index()[(cell_size, radius)]

    def column(self, cell_size: float) -> List[CellResult]:
        """All cells at one N, ordered by R."""
        return [c for c in self.cells if c.cell_size == cell_size]

    def find_cell_size(self, cell_size: float, rel_tol: float = 1e-9) -> float:
        """Axis value equal to ``cell_size`` within tolerance, or KeyError."""
        for n in self.cell_sizes:
            if math.isclose(n, cell_size, rel_tol=rel_tol):
                return n
        raise KeyError(cell_size)

    def same_axes(self, other: "ErrorMatrix") -> bool:
        return self.cell_sizes == other.cell_sizes and self.radii == other.radii


class TracePoint(BaseSchema):
    """Running-mean errors at one iteration milestone."""

    iterations: int = Field(..., ge=1, description="Milestone")
    pre_area: float = Field(..., description="Area PRE at this milestone")
    pre_perim: float = Field(..., description="Perimeter PRE at this milestone")
    me_area: float = Field(..., description="Area ME at this milestone")
    me_perim: float = Field(..., description="Perimeter ME at this milestone")
