"""Run configuration: one JSON file describing a whole reproducible run.

Unknown keys are rejected so a typo cannot silently fall back to a default.
Command-line flags override individual fields; the effective (post-override)
configuration is what gets hashed into reports.
"""

from __future__ import annotations

import hashlib
import json

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError, field_validator

from .airtime import DeferralSpec, PhyProfile, min_latency
from .chanmodel import DcfParams, GilbertElliott
from .errors import ParseError, ValidationError
from .policy import HeuristicConfig


class DcfConfig(BaseModel):
    """Per-run DCF/traffic parameters (PHY profile lives in ``phy``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    cw_min: int = 16
    cw_max: int = 1024
    retry_limit: int = 7
    payload_bytes: int = 100
    rate_mbps: float = 54.0
    mcs_index: int = 7


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    phy: PhyProfile = PhyProfile()
    dcf: DcfConfig = DcfConfig()
    channel_a: GilbertElliott = GilbertElliott()
    channel_b: GilbertElliott = GilbertElliott()
    deferral: DeferralSpec = DeferralSpec(mode="fixed", fixed_us=350)
    heuristic: HeuristicConfig = HeuristicConfig()
    percentiles: tuple[float, ...] = (0.5, 0.9, 0.99, 0.999)
    seed: int = 1
    tolerance_us: int = Field(default=250_000, ge=0)
    period_us: int = Field(default=500_000, gt=0)
    start_ts_us: int = 1_700_000_000_000_000

    @field_validator("percentiles")
    @classmethod
    def _check_percentiles(cls, qs):
        if not qs:
            raise ValueError("percentiles must be nonempty")
        if any(not 0.0 < q <= 1.0 for q in qs):
            raise ValueError("percentiles must lie in (0, 1]")
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError("percentiles must be strictly increasing")
        return qs

    def dcf_params(self) -> DcfParams:
        return DcfParams(
            cw_min=self.dcf.cw_min,
            cw_max=self.dcf.cw_max,
            retry_limit=self.dcf.retry_limit,
            payload_bytes=self.dcf.payload_bytes,
            rate_mbps=self.dcf.rate_mbps,
            mcs_index=self.dcf.mcs_index,
            phy=self.phy,
        )

    def min_latency_us(self) -> int:
        return min_latency(self.dcf.payload_bytes, self.dcf.rate_mbps, self.phy)

    def seed_for_channel(self, channel_id: str) -> int:
        """Channel A uses the base seed, B the base seed + 1."""
        return self.seed if channel_id == "A" else self.seed + 1

    def heuristic_resolved(self) -> HeuristicConfig:
        """Heuristic config with the estimate seeded at the model's d_min."""
        if self.heuristic.ema_init_us is not None:
            return self.heuristic
        return self.heuristic.model_copy(
            update={"ema_init_us": float(self.min_latency_us())}
        )

    def config_hash(self) -> str:
        payload = json.dumps(
            self.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def load_config(path) -> RunConfig:
    """Load and validate a JSON run configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path}: {exc}") from exc
    try:
        return RunConfig.model_validate(data)
    except PydanticValidationError as exc:
        raise ValidationError(f"config {path}: {exc}") from exc


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Return a copy with non-None overrides applied (flags win over file)."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    if not updates:
        return config
    merged = config.model_dump()
    merged.update(updates)
    return RunConfig.model_validate(merged)
