"""Policy evaluation across a deferral-time grid, long-format output.

Non-deferred modes do not depend on the deferral time; they are evaluated
once and replicated across the grid as constant rows so every (mode, t_d)
cell exists in the output table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO

from pydantic import BaseModel, ConfigDict, field_validator

from .airtime import DeferralSpec
from .errors import ValidationError
from .metrics import SummaryStats, summarize
from .policy import HeuristicConfig, PolicyMode, run_policy
from .trace import PairedTrace

DEFAULT_T_D_GRID_US = (150, 250, 350, 450, 550, 650, 750, 850, 950, 1150, 1350, 1550)

SWEEP_HEADER = (
    "mode,t_d_us,mean_us,std_us,min_us,max_us,"
    "p50_us,p90_us,p99_us,p999_us,mean_attempts,lost,n"
)


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    t_d_grid_us: tuple[int, ...] = DEFAULT_T_D_GRID_US
    modes: tuple[PolicyMode, ...] = tuple(PolicyMode)
    trace_ref: str | None = None
    output_ref: str | None = None

    @field_validator("t_d_grid_us")
    @classmethod
    def _check_grid(cls, grid):
        if not grid:
            raise ValueError("t_d_grid_us must be nonempty")
        if any(t <= 0 for t in grid):
            raise ValueError("deferral grid values must be > 0")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_d_grid_us must be strictly increasing")
        return grid

    @field_validator("modes")
    @classmethod
    def _check_modes(cls, modes):
        if not modes:
            raise ValueError("modes must be nonempty")
        return modes


@dataclass(frozen=True, slots=True)
class SweepRow:
    mode: PolicyMode
    t_d_us: int
    stats: SummaryStats


def run_sweep(
    spec: SweepSpec,
    trace: PairedTrace,
    hcfg: HeuristicConfig | None = None,
    *,
    d_min_primary_us: int | None = None,
) -> list[SweepRow]:
    """One summary per (mode, t_d) cell, ordered mode-major, grid ascending.

    Every cell is evaluated independently, so cells may be computed
    concurrently without changing results; the heuristic mode reuses its
    configured seed in every cell, which both keeps any cell bit-identical
    to an isolated single run and holds the exploration draws constant
    across the grid.
    """
    if PolicyMode.HEURISTIC in spec.modes and hcfg is None:
        raise ValidationError("sweep includes the heuristic mode but no hcfg given")
    rows: list[SweepRow] = []
    for mode in spec.modes:
        if not mode.is_deferred:
            stats = summarize(run_policy(trace, mode))
            rows.extend(SweepRow(mode, t_d, stats) for t_d in spec.t_d_grid_us)
            continue
        for t_d in spec.t_d_grid_us:
            out = run_policy(
                trace,
                mode,
                DeferralSpec(mode="fixed", fixed_us=t_d),
                hcfg if mode is PolicyMode.HEURISTIC else None,
                d_min_primary_us=d_min_primary_us,
            )
            rows.append(SweepRow(mode, t_d, summarize(out)))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def stats_csv_fields(stats: SummaryStats) -> list[str]:
    """The statistic columns of one row, full precision, in header order."""
    return [
        _fmt(stats.mean_us),
        _fmt(stats.std_us),
        _fmt(stats.min_us),
        _fmt(stats.max_us),
        _fmt(stats.p50_us),
        _fmt(stats.p90_us),
        _fmt(stats.p99_us),
        _fmt(stats.p999_us),
        _fmt(stats.mean_attempts),
        _fmt(stats.lost),
        _fmt(stats.n_total),
    ]


def write_sweep_csv(rows: list[SweepRow], stream: IO[str]) -> None:
    stream.write(SWEEP_HEADER + "\n")
    for row in rows:
        fields = [row.mode.value, str(row.t_d_us)] + stats_csv_fields(row.stats)
        stream.write(",".join(fields) + "\n")
