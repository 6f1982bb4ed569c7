"""Replication trailers and receive-side duplicate elimination.

Every outgoing copy carries a 16-bit wrapping sequence number plus the link
it was sent on; the receiver delivers the first copy of each sequence number
it sees and discards the rest. Elimination is window-based (bounded memory):
only the ``window_size`` most recently delivered sequence numbers are
remembered, which is all an in-order-ish dual-link stream ever needs.
Eviction follows arrival order, not numeric order, so the 65535 -> 0 wrap
needs no special handling.

Trailer wire layout: 2-byte big-endian sequence number, then 1 byte for the
link (0 = A, 1 = B).
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from dataclasses import dataclass
from typing import Literal

SEQ_MODULUS = 65536
DEFAULT_WINDOW_SIZE = 1024

LanId = Literal["A", "B"]

_TRAILER = struct.Struct(">HB")
_LAN_TO_BYTE = {"A": 0, "B": 1}
_BYTE_TO_LAN = {0: "A", 1: "B"}


@dataclass(frozen=True, slots=True)
class RedundancyTrailer:
    seq: int
    lan_id: LanId

    def __post_init__(self):
        if not 0 <= self.seq < SEQ_MODULUS:
            raise ValueError(f"seq must be in [0, {SEQ_MODULUS}), got {self.seq}")

    def to_bytes(self) -> bytes:
        return _TRAILER.pack(self.seq, _LAN_TO_BYTE[self.lan_id])

    @classmethod
    def from_bytes(cls, data: bytes) -> "RedundancyTrailer":
        seq, lan = _TRAILER.unpack(data)
        if lan not in _BYTE_TO_LAN:
            raise ValueError(f"unknown lan byte {lan}")
        return cls(seq=seq, lan_id=_BYTE_TO_LAN[lan])


class SeqCounter:
    """Mutable 16-bit wrapping sequence counter for the sender side."""

    __slots__ = ("value",)

    def __init__(self, start: int = 0):
        self.value = start % SEQ_MODULUS

    def advance(self) -> int:
        v = self.value
        self.value = (v + 1) % SEQ_MODULUS
        return v


def tag(counter: SeqCounter, lan_id: LanId) -> RedundancyTrailer:
    """Tag a single copy with the current sequence number and advance."""
    return RedundancyTrailer(seq=counter.advance(), lan_id=lan_id)


def replicate(
    counter: SeqCounter, lan_ids: tuple[LanId, ...] = ("A", "B")
) -> tuple[RedundancyTrailer, ...]:
    """Tag one packet's copies: identical seq, one trailer per link."""
    seq = counter.advance()
    return tuple(RedundancyTrailer(seq=seq, lan_id=lan) for lan in lan_ids)


class EliminationWindow:
    """Receiver-side duplicate filter over recently delivered seqs."""

    __slots__ = ("window_size", "_seen")

    def __init__(self, window_size: int = DEFAULT_WINDOW_SIZE):
        if window_size < 1:
            raise ValueError(f"window_size must be >= 1, got {window_size}")
        self.window_size = window_size
        self._seen: OrderedDict[int, None] = OrderedDict()

    def __len__(self) -> int:
        return len(self._seen)

    def __contains__(self, seq: int) -> bool:
        return seq in self._seen

    def process_rx(self, trailer: RedundancyTrailer) -> bool:
        """True = deliver (first copy), False = discard (duplicate)."""
        seq = trailer.seq
        if seq in self._seen:
            return False
        self._seen[seq] = None
        if len(self._seen) > self.window_size:
            self._seen.popitem(last=False)
        return True
