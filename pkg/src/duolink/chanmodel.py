"""Synthetic single-channel traces: two-state interference over a DCF retry model.

The interference state advances once per transmission *attempt* (not per
packet). That is what produces multi-retry bursts and hence the heavy
latency tail real 2.4 GHz channels show; stepping per packet cannot.

All model parameters are artifact calibration choices, not measured values.
The defaults put a million-packet channel near a realistic single-channel
shape: mean attempts just above 1, loss ratio around 1e-4, and a p99.9
latency several times the median. Note that with a retry cap of 8 attempts
a far heavier tail (p99.9 ~ 100x median) would force the loss ratio up with
it; the two cannot be pushed apart under this timing composition.

Determinism contract: a trace is a pure function of its arguments including
the seed. The generator is Python's ``random.Random`` (MT19937); per
attempt it draws, in this order: backoff, interference transition, success.
"""

from __future__ import annotations

import random
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .airtime import PhyProfile, frame_airtime
from .trace import ChannelTrace, PacketRecord

RNG_ALGORITHM = "python-random-mt19937"

GeState = Literal["good", "bad"]


class GilbertElliott(BaseModel):
    """Two-state Markov interference model with per-attempt success probabilities.

    Defaults are the calibration values described in the module docstring.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    p_good_to_bad: float = Field(default=0.002, ge=0.0, le=1.0)
    p_bad_to_good: float = Field(default=0.2, ge=0.0, le=1.0)
    p_succ_good: float = Field(default=0.995, ge=0.0, le=1.0)
    p_succ_bad: float = Field(default=0.3, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_ordering(self) -> "GilbertElliott":
        if self.p_succ_good < self.p_succ_bad:
            raise ValueError("p_succ_good must be >= p_succ_bad")
        return self


class DcfParams(BaseModel):
    """DCF-style retry/backoff timing parameters for one channel."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    cw_min: int = Field(default=16, ge=1)
    cw_max: int = Field(default=1024, ge=1)
    retry_limit: int = Field(default=7, ge=0)
    payload_bytes: int = Field(default=100, ge=0)
    rate_mbps: float = Field(default=54.0, gt=0)
    mcs_index: int = Field(default=7, ge=0)  # constant; rate adaptation is out of scope
    phy: PhyProfile = PhyProfile()

    @model_validator(mode="after")
    def _check_windows(self) -> "DcfParams":
        if self.cw_min > self.cw_max:
            raise ValueError("cw_min must be <= cw_max")
        for name, v in (("cw_min", self.cw_min), ("cw_max", self.cw_max)):
            if v & (v - 1):
                raise ValueError(f"{name} must be a power of two, got {v}")
        return self


def ge_step(
    state: GeState, model: GilbertElliott, rng: random.Random
) -> tuple[GeState, float]:
    """Advance the interference chain one step.

    Returns the new state and the per-attempt success probability of that
    new state. Always consumes exactly one draw.
    """
    u = rng.random()
    if state == "good":
        state = "bad" if u < model.p_good_to_bad else "good"
    else:
        state = "good" if u < model.p_bad_to_good else "bad"
    return state, (model.p_succ_good if state == "good" else model.p_succ_bad)


def simulate_packet(
    dcf: DcfParams,
    p_succ: float | Callable[[], float],
    rng: random.Random,
    *,
    seq_no: int = 1,
    ts_us: int = 0,
) -> PacketRecord:
    """Simulate one confirmed transmission (initial attempt plus retries).

    ``p_succ`` is either a constant per-attempt success probability or a
    callable re-sampled before every attempt (the interference hook).

    Per attempt k (0-based, contention window min(cw_min * 2^k, cw_max)):
    DIFS + backoff * slot + frame airtime, then either SIFS + ACK airtime
    on success or the ACK timeout on failure.
    """
    phy = dcf.phy
    airtime = frame_airtime(dcf.payload_bytes, dcf.rate_mbps, phy)
    draw = p_succ if callable(p_succ) else None
    cw = dcf.cw_min
    latency = 0
    delivered = False
    attempts = 0
    for _ in range(dcf.retry_limit + 1):
        attempts += 1
        backoff = rng.randrange(cw)
        p = draw() if draw is not None else p_succ
        latency += phy.difs_us + backoff * phy.slot_us + airtime
        if rng.random() < p:
            latency += phy.sifs_us + phy.ack_airtime_us
            delivered = True
            break
        latency += phy.ack_timeout_us
        cw = min(cw * 2, dcf.cw_max)
    return PacketRecord(
        seq_no=seq_no,
        ts_us=ts_us,
        delivered=delivered,
        latency_us=latency if delivered else None,
        attempts=attempts,
        mcs_list=(dcf.mcs_index,) * attempts,
    )


def gen_trace(
    n: int,
    period_us: int,
    start_ts: int,
    dcf: DcfParams,
    ge: GilbertElliott,
    seed: int,
    *,
    channel_id: str = "A",
) -> ChannelTrace:
    """Generate ``n`` records at ``start_ts + i * period_us``, deterministically.

    The interference chain starts in the good state and advances once per
    attempt across the whole trace.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    rng = random.Random(seed)
    state: GeState = "good"
    phy = dcf.phy
    airtime = frame_airtime(dcf.payload_bytes, dcf.rate_mbps, phy)
    pre_us = phy.difs_us
    slot = phy.slot_us
    ok_tail = phy.sifs_us + phy.ack_airtime_us
    to_us = phy.ack_timeout_us
    p_gb, p_bg = ge.p_good_to_bad, ge.p_bad_to_good
    p_good, p_bad = ge.p_succ_good, ge.p_succ_bad
    cw_min, cw_max, retries = dcf.cw_min, dcf.cw_max, dcf.retry_limit
    rnd = rng.random
    randrange = rng.randrange

    delivered = np.zeros(n, dtype=bool)
    latency = np.zeros(n, dtype=np.int64)
    attempts = np.zeros(n, dtype=np.int64)
    good = state == "good"
    for i in range(n):
        cw = cw_min
        lat = 0
        k = 0
        ok = False
        while k <= retries:
            k += 1
            backoff = randrange(cw)
            u = rnd()
            if good:
                good = u >= p_gb
            else:
                good = u < p_bg
            p = p_good if good else p_bad
            lat += pre_us + backoff * slot + airtime
            if rnd() < p:
                lat += ok_tail
                ok = True
                break
            lat += to_us
            cw = min(cw * 2, cw_max)
        delivered[i] = ok
        latency[i] = lat if ok else 0
        attempts[i] = k

    total_attempts = int(attempts.sum())
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(attempts, out=offsets[1:])
    mcs_flat = np.full(total_attempts, dcf.mcs_index, dtype=np.int16)
    ts = start_ts + period_us * np.arange(n, dtype=np.int64)
    return ChannelTrace(
        channel_id,
        seq=np.arange(1, n + 1, dtype=np.int64),
        ts_us=ts,
        delivered=delivered,
        latency_us=latency,
        attempts=attempts,
        mcs_flat=mcs_flat,
        mcs_offsets=offsets,
        period_us=period_us,
        meta={
            "rng": RNG_ALGORITHM,
            "seed": seed,
            "draw_order": "backoff,interference,success",
            "initial_state": "good",
        },
    )
