"""Frame airtime, minimum exchange latency, and secondary-channel deferral timing.

All durations are integer microseconds. The airtime model is deliberately
simple (no OFDM symbol quantization, no service/tail bits): its job is to
produce plausible timing floors for synthesis and for scaling the deferral
time, not to reproduce any particular 802.11 PHY bit-exactly. Real hardware
floors additionally include host-stack overhead that no airtime formula
captures.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PhyProfile(BaseModel):
    """Timing constants of the (simplified) PHY/MAC, in microseconds.

    Defaults are 2.4 GHz OFDM-like values. Fields only need to be
    non-negative so degenerate profiles (single constants zeroed) remain
    constructible for isolating parts of the timing arithmetic; a realistic
    profile has every duration positive and at least 14 bytes of MAC
    overhead (header + FCS).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    preamble_us: int = Field(default=20, ge=0)
    sifs_us: int = Field(default=10, ge=0)
    ack_airtime_us: int = Field(default=28, ge=0)
    mac_overhead_bytes: int = Field(default=28, ge=0)
    slot_us: int = Field(default=9, ge=0)
    difs_us: int = Field(default=28, ge=0)
    ack_timeout_us: int = Field(default=50, ge=0)


class DeferralSpec(BaseModel):
    """How the secondary-channel deferral time is chosen.

    ``fixed`` mode uses ``fixed_us`` directly; ``beta`` mode scales the
    primary channel's minimum exchange latency by ``beta`` (> 1, since a
    deferral shorter than the fastest possible exchange can never prevent
    the secondary transmission).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["fixed", "beta"] = "fixed"
    fixed_us: int | None = 350
    beta: float | None = None

    @model_validator(mode="after")
    def _check_mode_params(self) -> "DeferralSpec":
        if self.mode == "fixed":
            if self.fixed_us is None or self.fixed_us <= 0:
                raise ValueError("fixed mode requires fixed_us > 0")
        else:
            if self.beta is None or self.beta <= 1.0:
                raise ValueError("beta mode requires beta > 1")
        return self


def frame_airtime(payload_bytes: int, rate_mbps: float, phy: PhyProfile) -> int:
    """Airtime of one DATA frame in microseconds.

    preamble + ceil(8 * (payload + MAC overhead) / rate); rate is in Mbit/s,
    which equals bits per microsecond.
    """
    if payload_bytes < 0:
        raise ValueError(f"payload_bytes must be >= 0, got {payload_bytes}")
    if rate_mbps <= 0:
        raise ValueError(f"rate_mbps must be > 0, got {rate_mbps}")
    bits = 8 * (payload_bytes + phy.mac_overhead_bytes)
    return phy.preamble_us + math.ceil(bits / rate_mbps)


def min_latency(payload_bytes: int, rate_mbps: float, phy: PhyProfile) -> int:
    """Minimum exchange latency: DATA airtime + SIFS + ACK airtime.

    This is the fastest a confirmed exchange can complete (single attempt,
    zero backoff, no interference).
    """
    return frame_airtime(payload_bytes, rate_mbps, phy) + phy.sifs_us + phy.ack_airtime_us


def deferral_time(spec: DeferralSpec, d_min_primary_us: int) -> int:
    """Resolve a DeferralSpec to a concrete deferral time in microseconds.

    beta mode rounds half-up (round() would round half-to-even).
    """
    if d_min_primary_us <= 0:
        raise ValueError(f"d_min_primary_us must be > 0, got {d_min_primary_us}")
    if spec.mode == "fixed":
        assert spec.fixed_us is not None
        return spec.fixed_us
    assert spec.beta is not None
    return int(math.floor(spec.beta * d_min_primary_us + 0.5))
