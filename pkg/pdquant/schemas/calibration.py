from typing import List, Optional

from pydantic import Field

from .common import BaseSchema
from .simulation import BoundaryMode

ERROR_COLUMNS = ("pre_area", "me_area", "pre_perim", "me_perim")


class UncertaintyRow(BaseSchema):
    """One radius bin read off the error matrix."""

    sn: int = Field(..., ge=1, description="Serial number")
    radius_lo: float = Field(..., description="Bin lower edge in um")
    radius_hi: float = Field(..., description="Bin upper edge in um")
    matched_radius: float = Field(..., gt=0, description="Matrix R nearest the bin midpoint")
    frequency: int = Field(..., ge=0, description="Bubbles in the bin (w_i)")
    pre_area: float = Field(..., description="Area PRE in %")
    me_area: float = Field(..., description="Area ME in um^2")
    pre_perim: float = Field(..., description="Perimeter PRE in %")
    me_perim: float = Field(..., description="Perimeter ME in um")


class UncertaintySummary(BaseSchema):
    """Frequency-weighted averages W of each error column."""

    pre_area: float = Field(..., description="Weighted area PRE in %")
    me_area: float = Field(..., description="Weighted area ME in um^2")
    pre_perim: float = Field(..., description="Weighted perimeter PRE in %")
    me_perim: float = Field(..., description="Weighted perimeter ME in um")


class UncertaintyTable(BaseSchema):
    """Experimental radius distribution mapped onto simulated errors."""

    cell_size: float = Field(..., gt=0, description="Matrix N used (um)")
    boundary_mode: BoundaryMode = Field(default=BoundaryMode.NONE, description="Matrix boundary mode")
    rows: List[UncertaintyRow] = Field(..., min_length=1, description="One row per radius bin")
    summary: UncertaintySummary = Field(..., description="Weighted averages")

    @property
    def total_frequency(self) -> int:
        return sum(row.frequency for row in self.rows)


class BoundaryComparison(BaseSchema):
    """Weighted summaries under erosion and dilation, side by side."""

    cell_size: float = Field(..., gt=0, description="Matrix N used (um)")
    erode: UncertaintySummary = Field(..., description="Summary under erosion")
    dilate: UncertaintySummary = Field(..., description="Summary under dilation")


class ModalityRow(BaseSchema):
    """Per-modality headline uncertainties."""

    modality: str = Field(..., description="Dataset / fluid label")
    cell_size: float = Field(..., gt=0, description="Matrix N used (um)")
    alpha: float = Field(..., description="Weighted PRE area (%)")
    beta: float = Field(..., description="Weighted PRE perimeter (%)")
    gamma: float = Field(..., description="Weighted ME perimeter (um)")
    bubbles: Optional[int] = Field(None, ge=0, description="Bubbles contributing")
