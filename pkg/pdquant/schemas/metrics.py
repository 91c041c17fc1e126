from typing import Dict, Optional

from pydantic import Field, model_validator

from .common import BaseSchema, FieldStats


class BoilingMetrics(BaseSchema):
    """Dry area fraction and contact line density of one frame."""

    frame_id: Optional[str] = Field(None, description="Frame identifier (file name)")
    theta_dry: float = Field(..., ge=0.0, le=1.0, description="Dry area fraction")
    rho_cl_pixel: float = Field(..., ge=0.0, le=1.0, description="Contact pixels per total pixels")
    rho_cl_physical: Optional[float] = Field(None, ge=0.0, description="Contact line density in 1/um")
    resolution: Optional[float] = Field(None, gt=0.0, description="Pixel edge length in um")

    @model_validator(mode="after")
    def validate_physical(self):
        if (self.rho_cl_physical is None) != (self.resolution is None):
            raise ValueError("rho_cl_physical and resolution must be given together")
        return self


class MetricsSummary(BaseSchema):
    """Frame-series statistics of boiling metrics."""

    frames: int = Field(..., ge=0, description="Number of frames summarized")
    fields: Dict[str, FieldStats] = Field(..., description="Statistics per metric field")
