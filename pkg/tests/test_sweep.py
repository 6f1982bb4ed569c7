from __future__ import annotations

import io

import pytest

from conftest import synth_paired
from duolink.airtime import DeferralSpec
from duolink.chanmodel import GilbertElliott
from duolink.errors import ValidationError
from duolink.metrics import summarize
from duolink.policy import HeuristicConfig, PolicyMode, run_policy
from duolink.sweep import (
    DEFAULT_T_D_GRID_US,
    SWEEP_HEADER,
    SweepSpec,
    run_sweep,
    write_sweep_csv,
)


def test_default_grid_spans_a_decade():
    assert DEFAULT_T_D_GRID_US == (150, 250, 350, 450, 550, 650, 750, 850, 950, 1150, 1350, 1550)
    assert DEFAULT_T_D_GRID_US[-1] / DEFAULT_T_D_GRID_US[0] > 10


class TestSweepSpec:
    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            SweepSpec(t_d_grid_us=(350, 150))
        with pytest.raises(ValueError):
            SweepSpec(t_d_grid_us=(150, 150))

    def test_grid_nonempty_positive(self):
        with pytest.raises(ValueError):
            SweepSpec(t_d_grid_us=())
        with pytest.raises(ValueError):
            SweepSpec(t_d_grid_us=(0, 100))


class TestRunSweep:
    def test_one_by_one_equals_direct_run(self):
        trace = synth_paired(1500, seed=6)
        spec = SweepSpec(t_d_grid_us=(350,), modes=(PolicyMode.DEFERRED_AB,))
        rows = run_sweep(spec, trace)
        assert len(rows) == 1
        direct = summarize(
            run_policy(trace, PolicyMode.DEFERRED_AB, DeferralSpec(mode="fixed", fixed_us=350))
        )
        assert rows[0].stats == direct
        assert rows[0].mode is PolicyMode.DEFERRED_AB and rows[0].t_d_us == 350

    def test_constant_modes_replicated_across_grid(self):
        trace = synth_paired(800, seed=8)
        spec = SweepSpec(modes=(PolicyMode.PARALLEL,))
        rows = run_sweep(spec, trace)
        assert len(rows) == len(DEFAULT_T_D_GRID_US)
        assert len({row.stats for row in rows}) == 1
        assert [row.t_d_us for row in rows] == list(DEFAULT_T_D_GRID_US)

    def test_deferred_monotonicity_columns(self):
        trace = synth_paired(20_000, seed=10, ge_a=GilbertElliott(p_good_to_bad=0.01))
        spec = SweepSpec(modes=(PolicyMode.DEFERRED_AB,))
        rows = run_sweep(spec, trace)
        p90 = [row.stats.p90_us for row in rows]
        attempts = [row.stats.mean_attempts for row in rows]
        assert all(b >= a for a, b in zip(p90, p90[1:]))
        assert all(b <= a for a, b in zip(attempts, attempts[1:]))

    def test_heuristic_cells_match_isolated_runs(self):
        trace = synth_paired(1200, seed=12)
        hcfg = HeuristicConfig(ema_init_us=200.0, seed=5)
        spec = SweepSpec(t_d_grid_us=(150, 350), modes=(PolicyMode.HEURISTIC,))
        rows = run_sweep(spec, trace, hcfg=hcfg)
        for row in rows:
            direct = summarize(
                run_policy(
                    trace,
                    PolicyMode.HEURISTIC,
                    DeferralSpec(mode="fixed", fixed_us=row.t_d_us),
                    hcfg,
                )
            )
            assert row.stats == direct

    def test_heuristic_requires_hcfg(self):
        trace = synth_paired(100, seed=1)
        with pytest.raises(ValidationError):
            run_sweep(SweepSpec(modes=(PolicyMode.HEURISTIC,)), trace)

    def test_rows_ordered_mode_major_grid_ascending(self):
        trace = synth_paired(300, seed=2)
        spec = SweepSpec(
            t_d_grid_us=(150, 350), modes=(PolicyMode.SINGLE_A, PolicyMode.DEFERRED_BA)
        )
        rows = run_sweep(spec, trace)
        assert [(r.mode, r.t_d_us) for r in rows] == [
            (PolicyMode.SINGLE_A, 150),
            (PolicyMode.SINGLE_A, 350),
            (PolicyMode.DEFERRED_BA, 150),
            (PolicyMode.DEFERRED_BA, 350),
        ]


class TestSweepCsv:
    def test_header_and_shape(self):
        trace = synth_paired(200, seed=3)
        spec = SweepSpec(t_d_grid_us=(150, 350), modes=(PolicyMode.PARALLEL,))
        rows = run_sweep(spec, trace)
        buf = io.StringIO()
        write_sweep_csv(rows, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == SWEEP_HEADER
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "A+B" and first[1] == "150"
        assert first[-1] == "200"  # n column

    def test_full_precision_round_trips(self):
        trace = synth_paired(500, seed=4)
        rows = run_sweep(SweepSpec(t_d_grid_us=(350,), modes=(PolicyMode.SINGLE_A,)), trace)
        buf = io.StringIO()
        write_sweep_csv(rows, buf)
        mean_field = buf.getvalue().splitlines()[1].split(",")[2]
        assert float(mean_field) == rows[0].stats.mean_us
