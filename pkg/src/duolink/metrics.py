"""Latency/attempts/loss statistics, empirical CDFs, and the saturation point.

Percentiles are nearest-rank: sort ascending and take the element at
1-based rank ceil(q*n), no interpolation. That convention is deterministic,
oracle-checkable, and matches how large-sample latency percentiles are
normally reported (interpolation error is negligible at realistic sizes).

Latency statistics cover delivered packets only; the attempt statistics
cover every packet (lost ones consumed airtime too). Standard deviation is
the population form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError
from .policy import PacketOutcome, PolicyOutcomes

PERCENTILE_FIELDS = {0.5: "p50_us", 0.9: "p90_us", 0.99: "p99_us", 0.999: "p999_us"}


@dataclass(frozen=True, slots=True)
class SummaryStats:
    """One report row. Latency fields are None when nothing was delivered."""

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
    n_delivered: int

    @property
    def n_total(self) -> int:
        return self.lost + self.n_delivered

    def percentile_field(self, q: float) -> int | None:
        try:
            return getattr(self, PERCENTILE_FIELDS[q])
        except KeyError:
            raise ValidationError(
                f"no percentile field for q={q}; available: "
                f"{sorted(PERCENTILE_FIELDS)}"
            ) from None


def percentile(latencies, q: float) -> int:
    """Nearest-rank percentile of a nonempty multiset of durations."""
    if not 0.0 < q <= 1.0:
        raise ValidationError(f"q must be in (0, 1], got {q}")
    values = np.sort(np.asarray(latencies, dtype=np.int64).ravel())
    n = len(values)
    if n == 0:
        raise ValidationError("percentile of an empty multiset is undefined")
    rank = math.ceil(q * n)
    return int(values[rank - 1])


def _outcome_arrays(outcomes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(outcomes, PolicyOutcomes):
        return outcomes.delivered, outcomes.latency_us, outcomes.attempts
    items: list[PacketOutcome] = list(outcomes)
    delivered = np.array([o.delivered for o in items], dtype=bool)
    latency = np.array(
        [o.latency_us if o.delivered else 0 for o in items], dtype=np.int64
    )
    attempts = np.array([o.attempts for o in items], dtype=np.int64)
    return delivered, latency, attempts


def summarize(outcomes: PolicyOutcomes | Iterable[PacketOutcome]) -> SummaryStats:
    """Compute the full statistic row for a nonempty outcome sequence."""
    delivered, latency, attempts = _outcome_arrays(outcomes)
    n = len(delivered)
    if n == 0:
        raise ValidationError("cannot summarize an empty outcome sequence")
    ok = np.sort(latency[delivered])
    n_del = len(ok)
    lost = n - n_del
    mean_attempts = float(attempts.mean())
    if n_del == 0:
        return SummaryStats(
            mean_us=None,
            std_us=None,
            min_us=None,
            max_us=None,
            p50_us=None,
            p90_us=None,
            p99_us=None,
            p999_us=None,
            mean_attempts=mean_attempts,
            lost=lost,
            n_delivered=0,
        )
    ranks = {q: int(ok[math.ceil(q * n_del) - 1]) for q in PERCENTILE_FIELDS}
    return SummaryStats(
        mean_us=float(ok.mean()),
        std_us=float(ok.std()),
        min_us=int(ok[0]),
        max_us=int(ok[-1]),
        p50_us=ranks[0.5],
        p90_us=ranks[0.9],
        p99_us=ranks[0.99],
        p999_us=ranks[0.999],
        mean_attempts=mean_attempts,
        lost=lost,
        n_delivered=n_del,
    )


@dataclass(frozen=True)
class CdfCurve:
    """Empirical latency distribution over delivered packets.

    One point per distinct latency; ``fractions`` are cumulative counts
    divided by the *total* packet count, so the final point equals the
    delivery ratio.
    """

    latencies: np.ndarray
    fractions: np.ndarray
    n_total: int
    n_delivered: int

    def points(self) -> list[tuple[int, float]]:
        return [(int(l), float(f)) for l, f in zip(self.latencies, self.fractions)]

    def quantile(self, q: float) -> int:
        """Smallest latency whose delivered-count rank reaches ceil(q * n_delivered).

        Inverts the curve consistently with :func:`percentile` over the
        delivered packets.
        """
        if not 0.0 < q <= 1.0:
            raise ValidationError(f"q must be in (0, 1], got {q}")
        if self.n_delivered == 0:
            raise ValidationError("CDF has no delivered packets")
        rank = math.ceil(q * self.n_delivered)
        counts = np.round(self.fractions * self.n_total).astype(np.int64)
        i = int(np.searchsorted(counts, rank))
        return int(self.latencies[i])


def cdf(outcomes: PolicyOutcomes | Iterable[PacketOutcome]) -> CdfCurve:
    """Empirical CDF of delivered latencies (see :class:`CdfCurve`)."""
    delivered, latency, _ = _outcome_arrays(outcomes)
    n = len(delivered)
    if n == 0:
        raise ValidationError("cannot compute a CDF of an empty outcome sequence")
    ok = latency[delivered]
    values, counts = np.unique(ok, return_counts=True)
    fractions = np.cumsum(counts) / n
    return CdfCurve(
        latencies=values.astype(np.int64),
        fractions=fractions,
        n_total=n,
        n_delivered=len(ok),
    )


def saturation_deferral(
    primary_stats: SummaryStats, secondary_min_us: int, q: float = 0.9
) -> int:
    """Deferral beyond which the q-percentile of the deferred mode equals the
    primary-only percentile: percentile_q(primary) - d_min(secondary), floored
    at zero.

    Above this point no packet slower than the primary's q-percentile can be
    rescued below it by the secondary, and faster packets are unaffected.
    """
    pq = primary_stats.percentile_field(q)
    if pq is None:
        raise ValidationError("primary stats have no delivered packets")
    return max(0, pq - secondary_min_us)
