"""Report emission: wide CSV, full-precision JSON, and CDF data files.

The CSV and JSON artifacts carry full-precision values and are byte-stable
for a fixed configuration and seed (no timestamps, sorted keys, shortest
round-trip float formatting).
"""

from __future__ import annotations

import json
from typing import IO

from .metrics import CdfCurve, SummaryStats
from .policy import PolicyMode
from .sweep import stats_csv_fields

REPORT_HEADER = (
    "mode,mean_us,std_us,min_us,max_us,"
    "p50_us,p90_us,p99_us,p999_us,mean_attempts,lost,n"
)

CDF_HEADER = "latency_us,fraction"


def write_report_csv(rows: list[tuple[PolicyMode, SummaryStats]], stream: IO[str]) -> None:
    stream.write(REPORT_HEADER + "\n")
    for mode, stats in rows:
        stream.write(",".join([mode.value] + stats_csv_fields(stats)) + "\n")


def stats_dict(stats: SummaryStats) -> dict:
    return {
        "mean_us": stats.mean_us,
        "std_us": stats.std_us,
        "min_us": stats.min_us,
        "max_us": stats.max_us,
        "p50_us": stats.p50_us,
        "p90_us": stats.p90_us,
        "p99_us": stats.p99_us,
        "p999_us": stats.p999_us,
        "mean_attempts": stats.mean_attempts,
        "lost": stats.lost,
        "n_delivered": stats.n_delivered,
        "n": stats.n_total,
    }


def report_json_payload(
    rows: list[tuple[PolicyMode, SummaryStats]], meta: dict
) -> dict:
    return {
        "meta": meta,
        "modes": {mode.value: stats_dict(stats) for mode, stats in rows},
    }


def write_report_json(payload: dict, stream: IO[str]) -> None:
    json.dump(payload, stream, sort_keys=True, indent=2)
    stream.write("\n")


def write_cdf_csv(curve: CdfCurve, stream: IO[str]) -> None:
    stream.write(CDF_HEADER + "\n")
    for latency, fraction in zip(curve.latencies, curve.fractions):
        stream.write(f"{int(latency)},{float(fraction)!r}\n")
