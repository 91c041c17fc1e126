from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import Field

from .common import BaseSchema


class RunManifest(BaseSchema):
    """Record of one CLI invocation, written next to its outputs."""

    command: str = Field(..., description="Sub-command name")
    tool_version: str = Field(..., description="pdquant version")
    config: Dict[str, Any] = Field(..., description="Resolved configuration, defaults materialized")
    arguments: Dict[str, Any] = Field(default_factory=dict, description="Parsed command-line arguments")
    inputs: List[str] = Field(default_factory=list, description="Input files in processing order")
    seed: Optional[int] = Field(None, description="Root seed, when the command is stochastic")
    outputs: List[str] = Field(default_factory=list, description="Files written")
    errors: List[Dict[str, Any]] = Field(default_factory=list, description="Per-input failures")
    exit_code: int = Field(default=0, description="Process exit code")
    started_at: datetime = Field(..., description="Start timestamp (UTC)")
    elapsed_seconds: float = Field(..., ge=0, description="Wall-clock duration")
    workers: int = Field(default=1, ge=1, description="Worker threads used")
