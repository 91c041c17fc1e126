from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class BaseSchema(BaseModel):
    """Base schema with common configuration."""

    model_config = ConfigDict(
        from_attributes=True,
        frozen=True,
        use_enum_values=False,
    )


class FieldStats(BaseSchema):
    """Distribution summary of one numeric column over a series of frames."""

    count: int = Field(..., ge=0, description="Number of defined values")
    undefined: int = Field(default=0, ge=0, description="Number of undefined values skipped")
    mean: Optional[float] = Field(None, description="Arithmetic mean")
    std: Optional[float] = Field(None, description="Population standard deviation")
    min: Optional[float] = Field(None, description="Minimum")
    max: Optional[float] = Field(None, description="Maximum")
