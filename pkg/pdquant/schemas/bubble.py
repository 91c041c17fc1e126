import math
from enum import Enum
from typing import List, Optional

from pydantic import Field, model_validator

from .common import BaseSchema


class SizeField(str, Enum):
    """Bubble measurement used for binning."""

    RADIUS = "radius"
    AREA = "area"
    PERIMETER = "perimeter"


class BinScale(str, Enum):
    """Spacing of histogram bin edges."""

    LINEAR = "linear"
    LOG = "log"


class BubbleRecord(BaseSchema):
    """Measurements of one connected dry component."""

    frame_id: Optional[str] = Field(None, description="Frame the bubble was measured in")
    label: int = Field(..., ge=1, description="Component label")
    area_px: int = Field(..., ge=1, description="Member pixel count")
    perimeter_px: int = Field(..., ge=1, description="Boundary pixel count")
    area_phys: Optional[float] = Field(None, gt=0, description="Area in um^2")
    perimeter_phys: Optional[float] = Field(None, gt=0, description="Perimeter in um")
    equiv_radius_phys: Optional[float] = Field(None, gt=0, description="sqrt(area/pi) in um")

    @property
    def equiv_radius_px(self) -> float:
        return math.sqrt(self.area_px / math.pi)

    @property
    def is_physical(self) -> bool:
        return self.area_phys is not None

    def value(self, field: SizeField) -> float:
        """Measurement in physical units when available, else in pixel units."""
        field = SizeField(field)
        if field is SizeField.RADIUS:
            return self.equiv_radius_phys if self.is_physical else self.equiv_radius_px
        if field is SizeField.AREA:
            return self.area_phys if self.is_physical else float(self.area_px)
        return self.perimeter_phys if self.is_physical else float(self.perimeter_px)


class RadiusHistogram(BaseSchema):
    """Binned frequencies of a bubble measurement (w_i per bin)."""

    field: SizeField = Field(default=SizeField.RADIUS, description="Binned measurement")
    unit: str = Field(default="um", description="Unit of the bin edges ('um', 'um^2' or 'px')")
    scale: BinScale = Field(default=BinScale.LINEAR, description="Edge spacing")
    bin_edges: List[float] = Field(..., min_length=2, description="Ascending bin edges")
    counts: List[int] = Field(..., min_length=1, description="Frequency per bin")

    @model_validator(mode="after")
    def validate_bins(self):
        if len(self.counts) != len(self.bin_edges) - 1:
            raise ValueError("counts must have exactly one entry per bin")
        if any(hi <= lo for lo, hi in zip(self.bin_edges, self.bin_edges[1:])):
            raise ValueError("bin edges must be strictly ascending")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")
        if self.scale is BinScale.LOG and self.bin_edges[0] <= 0:
            raise ValueError("log-scaled bins require positive edges")
        return self

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def midpoints(self) -> List[float]:
        """Arithmetic centres for linear bins, geometric centres for log bins."""
        pairs = zip(self.bin_edges, self.bin_edges[1:])
        if self.scale is BinScale.LOG:
            return [math.sqrt(lo * hi) for lo, hi in pairs]
        return [(lo + hi) / 2 for lo, hi in pairs]


class GroupedDistribution(BaseSchema):
    """Bivariate count matrix: one row per group over shared size bins."""

    field: SizeField = Field(..., description="Binned measurement")
    scale: BinScale = Field(..., description="Edge spacing")
    groups: List[str] = Field(..., min_length=1, description="Group labels (e.g. heat flux)")
    bin_edges: List[float] = Field(..., min_length=2, description="Shared ascending bin edges")
    counts: List[List[int]] = Field(..., description="counts[g][b]")

    @model_validator(mode="after")
    def validate_shape(self):
        if len(self.counts) != len(self.groups):
            raise ValueError("one count row per group is required")
        if any(len(row) != len(self.bin_edges) - 1 for row in self.counts):
            raise ValueError("every count row must have one entry per bin")
        return self

    def modal_bins(self) -> List[int]:
        """Index of the most populated bin per group (first on ties)."""
        return [max(range(len(row)), key=lambda i: (row[i], -i)) for row in self.counts]


class SizeClassCounts(BaseSchema):
    """Bubble counts per user-defined radius class."""

    labels: List[str] = Field(..., description="Class labels, smallest first")
    thresholds: List[float] = Field(..., description="Ascending class boundaries")
    counts: List[int] = Field(..., description="Bubbles per class")
