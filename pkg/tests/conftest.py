"""Shared helpers for building small traces by hand."""

from __future__ import annotations

import pytest

from duolink.chanmodel import DcfParams, GilbertElliott, gen_trace
from duolink.trace import ChannelTrace, PacketRecord, PairedTrace, align_pairs

PERIOD_US = 500_000


def make_channel(channel_id, specs, *, start_ts=0, period_us=PERIOD_US, attempts_lost=8):
    """Build a trace from latency specs.

    Each spec is an int latency (delivered, 1 attempt), None (lost,
    ``attempts_lost`` attempts), or an explicit (latency_or_None, attempts)
    tuple.
    """
    records = []
    for i, spec in enumerate(specs):
        if isinstance(spec, tuple):
            lat, att = spec
        elif spec is None:
            lat, att = None, attempts_lost
        else:
            lat, att = spec, 1
        records.append(
            PacketRecord(
                seq_no=i + 1,
                ts_us=start_ts + i * period_us,
                delivered=lat is not None,
                latency_us=lat,
                attempts=att,
            )
        )
    return ChannelTrace.from_records(channel_id, records, period_us=period_us)


def make_paired(a_specs, b_specs, **kwargs):
    a = make_channel("A", a_specs, **kwargs)
    b = make_channel("B", b_specs, **kwargs)
    return PairedTrace(a=a, b=b, meta={"tolerance_us": 0, "dropped_a": 0, "dropped_b": 0})


def synth_paired(n, seed, *, ge_a=None, ge_b=None, dcf=None, period_us=PERIOD_US):
    """Two independently seeded synthetic channels, aligned."""
    dcf = dcf or DcfParams()
    a = gen_trace(n, period_us, 0, dcf, ge_a or GilbertElliott(), seed, channel_id="A")
    b = gen_trace(n, period_us, 0, dcf, ge_b or GilbertElliott(), seed + 1, channel_id="B")
    return align_pairs(a, b, period_us // 2)


@pytest.fixture
def small_paired():
    """Ten handpicked pairs covering skip, rescue, bad-guess, and double-loss."""
    a = [130, 500, None, 350, 90, (2000, 3), None, 140, 600, 410]
    b = [194, 120, 200, 180, None, 95, None, (700, 2), 100, 405]
    return make_paired(a, b)
