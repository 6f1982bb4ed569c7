"""Packet-log data model: per-channel traces, log I/O, pairing, correlation.

A channel trace is stored column-wise (numpy arrays) so that multi-million
packet logs stay cheap to hold and to scan; individual records materialize
on demand as :class:`PacketRecord`.

Log file format (bit-exact, UTF-8, LF line endings)::

    seq,ts_us,delivered,latency_us,attempts,mcs_list
    1,1700000000000000,1,130,1,7
    2,1700000000500000,0,,8,7|7|6|6|5|5|4|4

``latency_us`` is empty exactly when ``delivered`` is 0 (a lost packet has
no latency, not a sentinel value). ``mcs_list`` is '|'-separated, one entry
per transmission attempt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import ParseError, ValidationError

LOG_HEADER = "seq,ts_us,delivered,latency_us,attempts,mcs_list"
DEFAULT_PERIOD_US = 500_000
DEFAULT_TOLERANCE_US = 250_000


@dataclass(frozen=True, slots=True)
class PacketRecord:
    """One confirmed-transmission attempt sequence on one channel.

    ``latency_us`` is present iff the packet was delivered. ``mcs_list``
    holds the MCS index of each attempt; when non-empty its length equals
    ``attempts``.
    """

    seq_no: int
    ts_us: int
    delivered: bool
    latency_us: int | None
    attempts: int
    mcs_list: tuple[int, ...] = ()

    def __post_init__(self):
        if self.delivered:
            if self.latency_us is None or self.latency_us < 1:
                raise ValidationError(
                    f"delivered record seq {self.seq_no} needs latency_us >= 1"
                )
        elif self.latency_us is not None:
            raise ValidationError(
                f"lost record seq {self.seq_no} must not carry a latency"
            )
        if self.attempts < 1:
            raise ValidationError(f"record seq {self.seq_no}: attempts must be >= 1")
        if self.mcs_list and len(self.mcs_list) != self.attempts:
            raise ValidationError(
                f"record seq {self.seq_no}: {len(self.mcs_list)} MCS entries "
                f"for {self.attempts} attempts"
            )


class ChannelTrace:
    """Ordered packet records of one channel, column-oriented.

    ``latency_us`` internally stores 0 for lost packets; the public record
    view exposes ``None`` instead. ``period_us`` is the nominal inter-packet
    period; when not supplied it is inferred as the smallest timestamp gap
    (the most conservative value for the pairing-ambiguity guard).
    """

    __slots__ = (
        "channel_id",
        "period_us",
        "seq",
        "ts_us",
        "delivered",
        "latency_us",
        "attempts",
        "mcs_flat",
        "mcs_offsets",
        "meta",
    )

    def __init__(
        self,
        channel_id: str,
        *,
        seq: np.ndarray,
        ts_us: np.ndarray,
        delivered: np.ndarray,
        latency_us: np.ndarray,
        attempts: np.ndarray,
        mcs_flat: np.ndarray | None = None,
        mcs_offsets: np.ndarray | None = None,
        period_us: int | None = None,
        meta: dict | None = None,
        validate: bool = True,
    ):
        n = len(seq)
        self.channel_id = channel_id
        self.seq = np.ascontiguousarray(seq, dtype=np.int64)
        self.ts_us = np.ascontiguousarray(ts_us, dtype=np.int64)
        self.delivered = np.ascontiguousarray(delivered, dtype=bool)
        self.latency_us = np.ascontiguousarray(latency_us, dtype=np.int64)
        self.attempts = np.ascontiguousarray(attempts, dtype=np.int64)
        if mcs_flat is None:
            mcs_flat = np.zeros(0, dtype=np.int16)
            mcs_offsets = np.zeros(n + 1, dtype=np.int64)
        self.mcs_flat = np.ascontiguousarray(mcs_flat, dtype=np.int16)
        self.mcs_offsets = np.ascontiguousarray(mcs_offsets, dtype=np.int64)
        self.period_us = int(period_us) if period_us is not None else self._infer_period()
        self.meta = dict(meta) if meta else {}
        if validate:
            self._validate()

    @classmethod
    def from_records(
        cls,
        channel_id: str,
        records: Iterable[PacketRecord],
        *,
        period_us: int | None = None,
        meta: dict | None = None,
    ) -> "ChannelTrace":
        records = list(records)
        n = len(records)
        seq = np.fromiter((r.seq_no for r in records), dtype=np.int64, count=n)
        ts = np.fromiter((r.ts_us for r in records), dtype=np.int64, count=n)
        delivered = np.fromiter((r.delivered for r in records), dtype=bool, count=n)
        latency = np.fromiter(
            (r.latency_us if r.delivered else 0 for r in records), dtype=np.int64, count=n
        )
        attempts = np.fromiter((r.attempts for r in records), dtype=np.int64, count=n)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum([len(r.mcs_list) for r in records], out=offsets[1:])
        flat = np.fromiter(
            (m for r in records for m in r.mcs_list), dtype=np.int16, count=int(offsets[-1])
        )
        return cls(
            channel_id,
            seq=seq,
            ts_us=ts,
            delivered=delivered,
            latency_us=latency,
            attempts=attempts,
            mcs_flat=flat,
            mcs_offsets=offsets,
            period_us=period_us,
            meta=meta,
        )

    def _infer_period(self) -> int:
        if len(self.ts_us) >= 2:
            gaps = np.diff(self.ts_us)
            if len(gaps) and gaps.min() > 0:
                return int(gaps.min())
        return DEFAULT_PERIOD_US

    def _validate(self):
        n = len(self.seq)
        if self.period_us <= 0:
            raise ValidationError(f"period_us must be > 0, got {self.period_us}")
        for name in ("ts_us", "delivered", "latency_us", "attempts"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"column {name} has mismatched length")
        if len(self.mcs_offsets) != n + 1:
            raise ValidationError("mcs_offsets must have n + 1 entries")
        if n and not np.all(np.diff(self.ts_us) > 0):
            raise ValidationError(
                f"channel {self.channel_id}: timestamps must be strictly increasing"
            )
        if np.any(self.attempts < 1):
            raise ValidationError(f"channel {self.channel_id}: attempts must be >= 1")
        if np.any(self.delivered & (self.latency_us < 1)):
            raise ValidationError(
                f"channel {self.channel_id}: delivered packets need latency_us >= 1"
            )
        if np.any(~self.delivered & (self.latency_us != 0)):
            raise ValidationError(
                f"channel {self.channel_id}: lost packets must not carry a latency"
            )
        counts = np.diff(self.mcs_offsets)
        if np.any(counts < 0) or (n and int(self.mcs_offsets[0]) != 0):
            raise ValidationError("mcs_offsets must be nondecreasing from 0")
        if int(self.mcs_offsets[-1]) != len(self.mcs_flat):
            raise ValidationError("mcs_offsets do not cover mcs_flat")
        bad = (counts > 0) & (counts != self.attempts)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValidationError(
                f"channel {self.channel_id}: record seq {int(self.seq[i])} has "
                f"{int(counts[i])} MCS entries for {int(self.attempts[i])} attempts"
            )

    def __len__(self) -> int:
        return len(self.seq)

    def record(self, i: int) -> PacketRecord:
        lo, hi = int(self.mcs_offsets[i]), int(self.mcs_offsets[i + 1])
        delivered = bool(self.delivered[i])
        return PacketRecord(
            seq_no=int(self.seq[i]),
            ts_us=int(self.ts_us[i]),
            delivered=delivered,
            latency_us=int(self.latency_us[i]) if delivered else None,
            attempts=int(self.attempts[i]),
            mcs_list=tuple(int(m) for m in self.mcs_flat[lo:hi]),
        )

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.slice(*i.indices(len(self)))
        if i < 0:
            i += len(self)
        return self.record(i)

    def __iter__(self) -> Iterator[PacketRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def slice(self, start: int, stop: int, step: int = 1) -> "ChannelTrace":
        if step != 1:
            raise ValueError("only contiguous slices are supported")
        idx = slice(start, stop)
        lo, hi = int(self.mcs_offsets[start]), int(self.mcs_offsets[stop])
        return ChannelTrace(
            self.channel_id,
            seq=self.seq[idx],
            ts_us=self.ts_us[idx],
            delivered=self.delivered[idx],
            latency_us=self.latency_us[idx],
            attempts=self.attempts[idx],
            mcs_flat=self.mcs_flat[lo:hi],
            mcs_offsets=self.mcs_offsets[start : stop + 1] - self.mcs_offsets[start],
            period_us=self.period_us,
            meta=self.meta,
            validate=False,
        )

    def take(self, idx: np.ndarray) -> "ChannelTrace":
        """Sub-trace at the given (sorted) positional indices."""
        counts = np.diff(self.mcs_offsets)[idx]
        offsets = np.zeros(len(idx) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        starts = self.mcs_offsets[:-1][idx]
        flat_idx = np.repeat(starts, counts) + (
            np.arange(int(counts.sum()), dtype=np.int64) - np.repeat(offsets[:-1], counts)
        )
        return ChannelTrace(
            self.channel_id,
            seq=self.seq[idx],
            ts_us=self.ts_us[idx],
            delivered=self.delivered[idx],
            latency_us=self.latency_us[idx],
            attempts=self.attempts[idx],
            mcs_flat=self.mcs_flat[flat_idx] if len(flat_idx) else self.mcs_flat[:0],
            mcs_offsets=offsets,
            period_us=self.period_us,
            meta=self.meta,
            validate=False,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChannelTrace):
            return NotImplemented
        return (
            self.channel_id == other.channel_id
            and self.period_us == other.period_us
            and np.array_equal(self.seq, other.seq)
            and np.array_equal(self.ts_us, other.ts_us)
            and np.array_equal(self.delivered, other.delivered)
            and np.array_equal(self.latency_us, other.latency_us)
            and np.array_equal(self.attempts, other.attempts)
            and np.array_equal(self.mcs_flat, other.mcs_flat)
            and np.array_equal(self.mcs_offsets, other.mcs_offsets)
        )

    def __repr__(self) -> str:
        return (
            f"ChannelTrace({self.channel_id!r}, n={len(self)}, "
            f"period_us={self.period_us})"
        )


@dataclass(frozen=True)
class PairedTrace:
    """Time-aligned (A-record, B-record) pairs; the input every policy consumes.

    Both sides have equal length and satisfy |ts_a - ts_b| <= the alignment
    tolerance recorded in ``meta``.
    """

    a: ChannelTrace
    b: ChannelTrace
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValidationError("paired trace sides have different lengths")

    def __len__(self) -> int:
        return len(self.a)

    def pair(self, i: int) -> tuple[PacketRecord, PacketRecord]:
        return self.a.record(i), self.b.record(i)

    def __iter__(self) -> Iterator[tuple[PacketRecord, PacketRecord]]:
        for i in range(len(self)):
            yield self.pair(i)


def parse_log(
    stream: IO[str] | Iterable[str],
    *,
    channel_id: str = "A",
    period_us: int | None = None,
) -> ChannelTrace:
    """Parse a packet log. Empty input yields a valid empty trace.

    Raises :class:`ParseError` with a line number on malformed input and
    :class:`ValidationError` when the parsed data violates an invariant
    (e.g. non-monotonic timestamps).
    """
    seq: list[int] = []
    ts: list[int] = []
    delivered: list[bool] = []
    latency: list[int] = []
    attempts: list[int] = []
    mcs_flat: list[int] = []
    mcs_counts: list[int] = []

    lines = iter(stream)
    header = None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if header is None:
            if line != LOG_HEADER:
                raise ParseError(
                    f"expected header {LOG_HEADER!r}, got {line!r}", line_no
                )
            header = line
            continue
        if not line:
            continue  # tolerate blank lines
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(f"expected 6 fields, got {len(parts)}", line_no)
        try:
            seq_v = int(parts[0])
            ts_v = int(parts[1])
            del_v = parts[2]
            if del_v not in ("0", "1"):
                raise ParseError(f"delivered must be 0 or 1, got {del_v!r}", line_no)
            is_del = del_v == "1"
            if parts[3] == "":
                lat_v = 0
                if is_del:
                    raise ParseError("delivered packet with empty latency", line_no)
            else:
                lat_v = int(parts[3])
                if not is_del:
                    raise ParseError("lost packet must have empty latency", line_no)
            att_v = int(parts[4])
            mcs_v = [int(x) for x in parts[5].split("|")] if parts[5] else []
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from exc
        seq.append(seq_v)
        ts.append(ts_v)
        delivered.append(is_del)
        latency.append(lat_v)
        attempts.append(att_v)
        mcs_flat.extend(mcs_v)
        mcs_counts.append(len(mcs_v))

    n = len(seq)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(mcs_counts, out=offsets[1:])
    return ChannelTrace(
        channel_id,
        seq=np.array(seq, dtype=np.int64),
        ts_us=np.array(ts, dtype=np.int64),
        delivered=np.array(delivered, dtype=bool),
        latency_us=np.array(latency, dtype=np.int64),
        attempts=np.array(attempts, dtype=np.int64),
        mcs_flat=np.array(mcs_flat, dtype=np.int16),
        mcs_offsets=offsets,
        period_us=period_us,
    )


def write_log(trace: ChannelTrace, stream: IO[str]) -> None:
    """Write a trace in the documented log format (LF line endings)."""
    stream.write(LOG_HEADER + "\n")
    offsets = trace.mcs_offsets
    flat = trace.mcs_flat
    for i in range(len(trace)):
        delivered = bool(trace.delivered[i])
        lat = str(int(trace.latency_us[i])) if delivered else ""
        mcs = "|".join(str(int(m)) for m in flat[offsets[i] : offsets[i + 1]])
        stream.write(
            f"{int(trace.seq[i])},{int(trace.ts_us[i])},{1 if delivered else 0},"
            f"{lat},{int(trace.attempts[i])},{mcs}\n"
        )


def read_log_file(path, *, channel_id: str = "A", period_us: int | None = None) -> ChannelTrace:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_log(fh, channel_id=channel_id, period_us=period_us)


def write_log_file(trace: ChannelTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_log(trace, fh)


def align_pairs(
    a: ChannelTrace,
    b: ChannelTrace,
    tolerance_us: int = DEFAULT_TOLERANCE_US,
    *,
    max_pairs: int | None = None,
) -> PairedTrace:
    """Pair records of two traces by timestamp proximity.

    Records are matched greedily to the nearest counterpart within
    ``tolerance_us``; unmatched records on either side are dropped and
    counted in ``meta``. A tolerance above half the inter-packet period
    would allow cross-period mispairing and is rejected; at exactly half
    the period a runtime ambiguity check still guards the result.

    ``max_pairs`` truncates to the first N pairs (mirrors selecting a fixed
    number of consecutive pairs from a longer capture).
    """
    if tolerance_us < 0:
        raise ValidationError(f"tolerance_us must be >= 0, got {tolerance_us}")
    min_period = min(a.period_us, b.period_us)
    if tolerance_us > min_period // 2:
        raise ValidationError(
            f"tolerance {tolerance_us} exceeds half the inter-packet period "
            f"({min_period} us); cross-period mispairing would be possible"
        )

    n_a, n_b = len(a), len(b)
    if n_a == 0 or n_b == 0:
        idx_a = np.zeros(0, dtype=np.int64)
        idx_b = np.zeros(0, dtype=np.int64)
    else:
        pos = np.searchsorted(b.ts_us, a.ts_us)
        left = np.clip(pos - 1, 0, n_b - 1)
        right = np.clip(pos, 0, n_b - 1)
        dist_left = np.abs(a.ts_us - b.ts_us[left])
        dist_right = np.abs(a.ts_us - b.ts_us[right])
        nearest = np.where(dist_right < dist_left, right, left)
        dist = np.minimum(dist_left, dist_right)
        matched = dist <= tolerance_us
        idx_a = np.nonzero(matched)[0]
        idx_b = nearest[matched]
        if len(idx_b) > 1 and not np.all(np.diff(idx_b) > 0):
            raise ValidationError(
                "ambiguous alignment: one record matched twice within tolerance"
            )

    if max_pairs is not None:
        if max_pairs < 0:
            raise ValidationError(f"max_pairs must be >= 0, got {max_pairs}")
        idx_a = idx_a[:max_pairs]
        idx_b = idx_b[:max_pairs]

    meta = {
        "source_a": a.channel_id,
        "source_b": b.channel_id,
        "tolerance_us": int(tolerance_us),
        "dropped_a": int(n_a - len(idx_a)),
        "dropped_b": int(n_b - len(idx_b)),
    }
    return PairedTrace(a=a.take(idx_a), b=b.take(idx_b), meta=meta)


def pearson(a, b) -> float:
    """Pearson correlation coefficient of two equal-length sequences.

    Two-pass (mean, then centered products). The result is clamped to
    [-1, 1] to absorb last-ulp rounding.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("pearson needs two 1-D sequences of equal length")
    if len(x) < 2:
        raise ValidationError("pearson needs at least 2 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValidationError("pearson is undefined for zero-variance input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def latency_correlation(paired: PairedTrace) -> float:
    """Pearson r of the two channels' latencies over pairs delivered on both."""
    mask = paired.a.delivered & paired.b.delivered
    return pearson(paired.a.latency_us[mask], paired.b.latency_us[mask])
