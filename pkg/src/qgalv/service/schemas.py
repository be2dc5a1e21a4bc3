"""Request/response bodies for the compute service.

Scenario configuration travels as the canonical text format (one string
field), not as expanded JSON — the text form is the single source of
truth for units and validation, and keeping one parser means the CLI,
the service, and embedded file headers can never drift apart.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ScenarioRequest(BaseModel):
    """A command that needs only configuration."""

    config: str = Field(description="scenario file content")
    fmt: Literal["csv", "json"] = "csv"
    threads: int = Field(default=1, ge=1, le=64)
    seed: Optional[int] = Field(default=None, ge=0,
                                description="override for the master seed")


class InvertRequest(BaseModel):
    """Deconvolution needs previously produced artifacts as content."""

    scan_file: str = Field(description="content of a scan table file")
    kernel_file: str = Field(description="content of a kernel table file")
    config: Optional[str] = Field(
        default=None,
        description="scenario text; defaults to the scan file's embedded block",
    )
    fmt: Literal["csv", "json"] = "csv"
    seed: Optional[int] = Field(default=None, ge=0)


class CommandResponse(BaseModel):
    files: dict[str, str]
    summary: str
    warnings: list[str] = []
    flags: dict = {}


class ErrorResponse(BaseModel):
    error_type: Literal["validation", "numerical", "statistical"]
    detail: str


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str
