"""Redundancy-policy replay over a paired trace.

Seven modes: each channel alone, both in parallel, fixed-primary deferred
(either direction), alternating-primary deferred, and heuristic-primary
deferred. The scalar evaluators (:func:`eval_parallel`, :func:`eval_deferred`)
are the reference semantics; :func:`run_policy` uses vectorized equivalents
for the non-adaptive modes and a per-packet loop for the heuristic, and is
cross-checked against the scalar path in the test suite.

Deferred semantics: the secondary starts exactly ``t_d`` after the request
unless the primary completed successfully strictly before ``t_d``; a failed
primary never accelerates the secondary. A "bad guess" is a packet where
the secondary, despite its handicap, beats the primary (losses count as
infinitely slow).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .airtime import DeferralSpec, deferral_time
from .errors import ValidationError
from .trace import PacketRecord, PairedTrace

Channel = Literal["A", "B"]


class PolicyMode(str, Enum):
    """The seven replayable redundancy modes."""

    SINGLE_A = "A"
    SINGLE_B = "B"
    PARALLEL = "A+B"
    DEFERRED_AB = "A->B"
    DEFERRED_BA = "B->A"
    ALTERNATING = "A~B"
    HEURISTIC = "A^B"

    @property
    def code(self) -> str:
        """Filename-safe identifier."""
        return _MODE_CODES[self]

    @property
    def is_deferred(self) -> bool:
        return self in (
            PolicyMode.DEFERRED_AB,
            PolicyMode.DEFERRED_BA,
            PolicyMode.ALTERNATING,
            PolicyMode.HEURISTIC,
        )

    @property
    def fixed_primary(self) -> Channel | None:
        if self is PolicyMode.DEFERRED_AB:
            return "A"
        if self is PolicyMode.DEFERRED_BA:
            return "B"
        return None

    @classmethod
    def parse(cls, text: str) -> "PolicyMode":
        t = text.strip()
        for mode in cls:
            if t == mode.value or t.lower() == mode.code:
                return mode
        raise ValidationError(
            f"unknown mode {text!r}; expected one of "
            + ", ".join(f"{m.value} ({m.code})" for m in cls)
        )


_MODE_CODES = {
    PolicyMode.SINGLE_A: "single_a",
    PolicyMode.SINGLE_B: "single_b",
    PolicyMode.PARALLEL: "parallel",
    PolicyMode.DEFERRED_AB: "deferred_ab",
    PolicyMode.DEFERRED_BA: "deferred_ba",
    PolicyMode.ALTERNATING: "alternating",
    PolicyMode.HEURISTIC: "heuristic",
}


class HeuristicConfig(BaseModel):
    """Knobs of the adaptive primary selector.

    ``alpha`` smooths the per-channel latency estimate; ``explore_prob`` is
    the chance of deliberately probing the worse channel; a run of
    ``bad_guess_switch_threshold`` consecutive bad guesses forces a primary
    switch; a lost copy feeds ``loss_penalty_us`` into the estimate (a loss
    is strong negative evidence, skipping it would let a dying primary look
    healthy forever). ``ema_init_us`` defaults to the configured minimum
    exchange latency so both channels start optimistic and symmetric.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(default=0.125, gt=0.0, le=1.0)
    explore_prob: float = Field(default=0.05, ge=0.0, lt=1.0)
    bad_guess_switch_threshold: int = Field(default=2, ge=1)
    loss_penalty_us: int = Field(default=500_000, gt=0)
    ema_init_us: float | None = Field(default=None, gt=0)
    seed: int = 1


@dataclass(frozen=True, slots=True)
class PacketOutcome:
    """Per-packet result of applying one policy to one pair."""

    delivered: bool
    latency_us: int | None
    attempts: int
    tx_on_secondary: bool
    primary_used: Channel
    bad_guess: bool


class PolicyOutcomes:
    """Column-oriented sequence of :class:`PacketOutcome`."""

    __slots__ = (
        "mode",
        "t_d_us",
        "delivered",
        "latency_us",
        "attempts",
        "tx_on_secondary",
        "primary_used",
        "bad_guess",
    )

    def __init__(
        self,
        mode: PolicyMode,
        t_d_us: int | None,
        delivered: np.ndarray,
        latency_us: np.ndarray,
        attempts: np.ndarray,
        tx_on_secondary: np.ndarray,
        primary_used: np.ndarray,
        bad_guess: np.ndarray,
    ):
        self.mode = mode
        self.t_d_us = t_d_us
        self.delivered = np.ascontiguousarray(delivered, dtype=bool)
        self.latency_us = np.ascontiguousarray(latency_us, dtype=np.int64)
        self.attempts = np.ascontiguousarray(attempts, dtype=np.int64)
        self.tx_on_secondary = np.ascontiguousarray(tx_on_secondary, dtype=bool)
        self.primary_used = np.ascontiguousarray(primary_used, dtype=np.uint8)
        self.bad_guess = np.ascontiguousarray(bad_guess, dtype=bool)

    def __len__(self) -> int:
        return len(self.delivered)

    def outcome(self, i: int) -> PacketOutcome:
        delivered = bool(self.delivered[i])
        return PacketOutcome(
            delivered=delivered,
            latency_us=int(self.latency_us[i]) if delivered else None,
            attempts=int(self.attempts[i]),
            tx_on_secondary=bool(self.tx_on_secondary[i]),
            primary_used="A" if self.primary_used[i] == 0 else "B",
            bad_guess=bool(self.bad_guess[i]),
        )

    def __getitem__(self, i: int) -> PacketOutcome:
        if i < 0:
            i += len(self)
        return self.outcome(i)

    def __iter__(self) -> Iterator[PacketOutcome]:
        for i in range(len(self)):
            yield self.outcome(i)

    def delivered_latencies(self) -> np.ndarray:
        return self.latency_us[self.delivered]


def eval_parallel(pair: tuple[PacketRecord, PacketRecord]) -> PacketOutcome:
    """Both channels transmit at once; the fastest delivered copy wins."""
    ra, rb = pair
    delivered = ra.delivered or rb.delivered
    if ra.delivered and rb.delivered:
        latency = min(ra.latency_us, rb.latency_us)
    elif ra.delivered:
        latency = ra.latency_us
    elif rb.delivered:
        latency = rb.latency_us
    else:
        latency = None
    return PacketOutcome(
        delivered=delivered,
        latency_us=latency,
        attempts=ra.attempts + rb.attempts,
        tx_on_secondary=True,
        primary_used="A",
        bad_guess=False,
    )


def eval_deferred(
    pair: tuple[PacketRecord, PacketRecord], primary: Channel, t_d_us: int
) -> PacketOutcome:
    """Primary transmits immediately; secondary starts at ``t_d_us`` unless
    the primary completed successfully strictly before then."""
    if t_d_us <= 0:
        raise ValidationError(f"t_d_us must be > 0, got {t_d_us}")
    ra, rb = pair
    p, s = (ra, rb) if primary == "A" else (rb, ra)
    skip = p.delivered and p.latency_us < t_d_us
    if skip:
        return PacketOutcome(
            delivered=True,
            latency_us=p.latency_us,
            attempts=p.attempts,
            tx_on_secondary=False,
            primary_used=primary,
            bad_guess=False,
        )
    if p.delivered and s.delivered:
        latency = min(p.latency_us, t_d_us + s.latency_us)
    elif p.delivered:
        latency = p.latency_us
    elif s.delivered:
        latency = t_d_us + s.latency_us
    else:
        latency = None
    bad_guess = s.delivered and (not p.delivered or s.latency_us + t_d_us < p.latency_us)
    return PacketOutcome(
        delivered=p.delivered or s.delivered,
        latency_us=latency,
        attempts=p.attempts + s.attempts,
        tx_on_secondary=True,
        primary_used=primary,
        bad_guess=bad_guess,
    )


def select_alternating(packet_index: int) -> Channel:
    """A on even indices, B on odd (0-based)."""
    return "A" if packet_index % 2 == 0 else "B"


def ema_update(prev_estimate_us: float, observed_us: float, alpha: float) -> float:
    """Exponentially weighted latency estimate: alpha*obs + (1-alpha)*prev."""
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must be in (0, 1], got {alpha}")
    return alpha * observed_us + (1.0 - alpha) * prev_estimate_us


@dataclass
class HeuristicState:
    """Mutable selector state threaded through a heuristic run."""

    ema_a: float
    ema_b: float
    primary: Channel
    bad_guess_streak: int
    rng: random.Random


def select_heuristic(state: HeuristicState, cfg: HeuristicConfig) -> Channel:
    """Pick the next primary.

    Exactly one RNG draw per call. With probability ``explore_prob`` probe
    the channel currently estimated *worse* (ties explore B); otherwise
    switch away from the current primary if its bad-guess streak reached
    the threshold; otherwise exploit the better estimate (ties pick A).
    """
    u = state.rng.random()
    if u < cfg.explore_prob:
        return "B" if state.ema_b >= state.ema_a else "A"
    if state.bad_guess_streak >= cfg.bad_guess_switch_threshold:
        return "B" if state.primary == "A" else "A"
    return "A" if state.ema_a <= state.ema_b else "B"


def resolve_deferral_us(
    deferral: DeferralSpec, d_min_primary_us: int | None = None
) -> int:
    """Concrete deferral in microseconds; beta mode needs the primary's d_min."""
    if deferral.mode == "beta":
        if d_min_primary_us is None:
            raise ValidationError("beta-scaled deferral requires d_min_primary_us")
        return deferral_time(deferral, d_min_primary_us)
    return deferral_time(deferral, 1)


def run_policy(
    trace: PairedTrace,
    mode: PolicyMode,
    deferral: DeferralSpec | None = None,
    hcfg: HeuristicConfig | None = None,
    *,
    d_min_primary_us: int | None = None,
) -> PolicyOutcomes:
    """Apply one mode to every pair of the trace.

    ``deferral`` is required for deferred modes; ``hcfg`` must be given for
    the heuristic mode and must be absent otherwise. Heuristic runs are a
    pure function of the trace and ``hcfg.seed``.
    """
    if (hcfg is not None) != (mode is PolicyMode.HEURISTIC):
        raise ValidationError("hcfg must be supplied exactly for the heuristic mode")
    t_d = None
    if mode.is_deferred:
        if deferral is None:
            raise ValidationError(f"mode {mode.value} requires a deferral spec")
        t_d = resolve_deferral_us(deferral, d_min_primary_us)

    a, b = trace.a, trace.b
    n = len(trace)
    if mode is PolicyMode.SINGLE_A or mode is PolicyMode.SINGLE_B:
        side = a if mode is PolicyMode.SINGLE_A else b
        return PolicyOutcomes(
            mode,
            None,
            delivered=side.delivered,
            latency_us=np.where(side.delivered, side.latency_us, 0),
            attempts=side.attempts,
            tx_on_secondary=np.zeros(n, dtype=bool),
            primary_used=np.full(n, 0 if mode is PolicyMode.SINGLE_A else 1, np.uint8),
            bad_guess=np.zeros(n, dtype=bool),
        )

    if mode is PolicyMode.PARALLEL:
        delivered = a.delivered | b.delivered
        both = a.delivered & b.delivered
        latency = np.where(
            both,
            np.minimum(a.latency_us, b.latency_us),
            np.where(a.delivered, a.latency_us, np.where(b.delivered, b.latency_us, 0)),
        )
        return PolicyOutcomes(
            mode,
            None,
            delivered=delivered,
            latency_us=latency,
            attempts=a.attempts + b.attempts,
            tx_on_secondary=np.ones(n, dtype=bool),
            primary_used=np.zeros(n, dtype=np.uint8),
            bad_guess=np.zeros(n, dtype=bool),
        )

    if mode is PolicyMode.DEFERRED_AB or mode is PolicyMode.DEFERRED_BA:
        primary = mode.fixed_primary
        cols = _deferred_arrays(trace, primary, t_d)
        return PolicyOutcomes(mode, t_d, *cols)

    if mode is PolicyMode.ALTERNATING:
        ab = _deferred_arrays(trace, "A", t_d)
        ba = _deferred_arrays(trace, "B", t_d)
        use_a = np.arange(n) % 2 == 0
        cols = tuple(np.where(use_a, x, y) for x, y in zip(ab, ba))
        return PolicyOutcomes(mode, t_d, *cols)

    assert mode is PolicyMode.HEURISTIC and hcfg is not None
    return _run_heuristic(trace, t_d, hcfg, d_min_primary_us)


def _deferred_arrays(trace: PairedTrace, primary: Channel, t_d: int):
    """Vectorized eval_deferred over all pairs; returns the outcome columns."""
    p, s = (trace.a, trace.b) if primary == "A" else (trace.b, trace.a)
    skip = p.delivered & (p.latency_us < t_d)
    tx_s = ~skip
    s_counts = tx_s & s.delivered
    delivered = p.delivered | s_counts
    s_latency = t_d + s.latency_us
    latency = np.where(
        p.delivered & s_counts,
        np.minimum(p.latency_us, s_latency),
        np.where(p.delivered, p.latency_us, np.where(s_counts, s_latency, 0)),
    )
    attempts = p.attempts + np.where(tx_s, s.attempts, 0)
    bad_guess = s_counts & (~p.delivered | (s_latency < p.latency_us))
    n = len(p.delivered)
    primary_used = np.full(n, 0 if primary == "A" else 1, dtype=np.uint8)
    return delivered, latency, attempts, tx_s, primary_used, bad_guess


def _run_heuristic(
    trace: PairedTrace, t_d: int, cfg: HeuristicConfig, d_min_us: int | None
) -> PolicyOutcomes:
    """Per-packet loop: select primary, evaluate, update estimator state.

    After each packet the estimate of every channel that transmitted is
    updated (latency, or the loss penalty for a lost copy); a channel that
    stayed silent gets no update. The bad-guess streak resets whenever the
    primary changes.

    Both estimates start at ``ema_init_us`` when set, else at the minimum
    exchange latency when known, else at ``t_d`` (an optimistic, symmetric
    start either way).
    """
    a, b = trace.a, trace.b
    n = len(trace)
    if cfg.ema_init_us is not None:
        ema_init = cfg.ema_init_us
    elif d_min_us is not None:
        ema_init = float(d_min_us)
    else:
        ema_init = float(t_d)
    state = HeuristicState(
        ema_a=float(ema_init),
        ema_b=float(ema_init),
        primary="A",
        bad_guess_streak=0,
        rng=random.Random(cfg.seed),
    )
    alpha = cfg.alpha
    penalty = float(cfg.loss_penalty_us)

    # scalar lists are ~3x faster to index than numpy arrays in this loop
    d_a = a.delivered.tolist()
    l_a = a.latency_us.tolist()
    t_a = a.attempts.tolist()
    d_b = b.delivered.tolist()
    l_b = b.latency_us.tolist()
    t_b = b.attempts.tolist()

    out_delivered = np.zeros(n, dtype=bool)
    out_latency = np.zeros(n, dtype=np.int64)
    out_attempts = np.zeros(n, dtype=np.int64)
    out_tx = np.zeros(n, dtype=bool)
    out_primary = np.zeros(n, dtype=np.uint8)
    out_bad = np.zeros(n, dtype=bool)

    for i in range(n):
        primary = select_heuristic(state, cfg)
        if primary == "A":
            dp, lp, ap, ds, ls, as_ = d_a[i], l_a[i], t_a[i], d_b[i], l_b[i], t_b[i]
        else:
            dp, lp, ap, ds, ls, as_ = d_b[i], l_b[i], t_b[i], d_a[i], l_a[i], t_a[i]

        skip = dp and lp < t_d
        if skip:
            delivered, latency, attempts, tx_s, bad = True, lp, ap, False, False
        else:
            tx_s = True
            delivered = dp or ds
            if dp and ds:
                latency = lp if lp <= t_d + ls else t_d + ls
            elif dp:
                latency = lp
            elif ds:
                latency = t_d + ls
            else:
                latency = 0
            attempts = ap + as_
            bad = ds and (not dp or ls + t_d < lp)

        out_delivered[i] = delivered
        out_latency[i] = latency
        out_attempts[i] = attempts
        out_tx[i] = tx_s
        out_primary[i] = 0 if primary == "A" else 1
        out_bad[i] = bad

        obs_p = lp if dp else penalty
        if primary == "A":
            state.ema_a = alpha * obs_p + (1.0 - alpha) * state.ema_a
            if tx_s:
                obs_s = ls if ds else penalty
                state.ema_b = alpha * obs_s + (1.0 - alpha) * state.ema_b
        else:
            state.ema_b = alpha * obs_p + (1.0 - alpha) * state.ema_b
            if tx_s:
                obs_s = ls if ds else penalty
                state.ema_a = alpha * obs_s + (1.0 - alpha) * state.ema_a

        if primary != state.primary:
            state.primary = primary
            state.bad_guess_streak = 0
        state.bad_guess_streak = state.bad_guess_streak + 1 if bad else 0

    return PolicyOutcomes(
        PolicyMode.HEURISTIC,
        t_d,
        delivered=out_delivered,
        latency_us=out_latency,
        attempts=out_attempts,
        tx_on_secondary=out_tx,
        primary_used=out_primary,
        bad_guess=out_bad,
    )
