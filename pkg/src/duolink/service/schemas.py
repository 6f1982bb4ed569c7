"""Request/response models of the HTTP API.

Paths in requests are interpreted on the host running the service. Every
request embeds an optional :class:`~duolink.config.RunConfig`; omitted
fields take the documented defaults, and request-level knobs (seed, t_d,
tolerance, ...) override the config.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..config import RunConfig


class ChannelGenStats(BaseModel):
    channel_id: str
    seed: int
    n: int
    delivered: int
    lost: int
    mean_attempts: float | None


class GenRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: RunConfig = RunConfig()
    n: int = Field(ge=0)
    out_a: str
    out_b: str
    seed: int | None = None


class GenResponse(BaseModel):
    out_a: str
    out_b: str
    rng_algorithm: str
    channels: list[ChannelGenStats]
    config_hash: str


class ModeRow(BaseModel):
    mode: str
    t_d_us: int | None
    mean_us: float | None
    std_us: float | None
    min_us: int | None
    max_us: int | None
    p50_us: int | None
    p90_us: int | None
    p99_us: int | None
    p999_us: int | None
    mean_attempts: float
    lost: int
    n: int


class EvalRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: RunConfig = RunConfig()
    trace_a: str
    trace_b: str
    modes: list[str] | None = None
    t_d_us: int | None = Field(default=None, gt=0)
    tolerance_us: int | None = Field(default=None, ge=0)
    max_pairs: int | None = Field(default=None, ge=0)
    out: str | None = None  # path prefix; when set, report + CDF files are written


class EvalResponse(BaseModel):
    rows: list[ModeRow]
    t_d_us: int
    n_pairs: int
    dropped_a: int
    dropped_b: int
    pearson_r: float | None
    config_hash: str
    files: list[str]


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: RunConfig = RunConfig()
    trace_a: str
    trace_b: str
    grid: list[int] | None = None
    modes: list[str] | None = None
    tolerance_us: int | None = Field(default=None, ge=0)
    max_pairs: int | None = Field(default=None, ge=0)
    out: str


class SweepResponse(BaseModel):
    rows: list[ModeRow]
    n_pairs: int
    out: str
    config_hash: str


class CdfRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: RunConfig = RunConfig()
    trace_a: str
    trace_b: str
    mode: str = "A+B"
    t_d_us: int | None = Field(default=None, gt=0)
    tolerance_us: int | None = Field(default=None, ge=0)
    max_pairs: int | None = Field(default=None, ge=0)
    out: str


class CdfResponse(BaseModel):
    mode: str
    t_d_us: int | None
    n_points: int
    n_pairs: int
    delivery_ratio: float
    out: str
    config_hash: str


class HealthResponse(BaseModel):
    status: str
    version: str
