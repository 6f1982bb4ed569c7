from __future__ import annotations

import math
import random

import pytest

from duolink.airtime import min_latency
from duolink.chanmodel import DcfParams, GilbertElliott, ge_step, gen_trace, simulate_packet


def quiet_channel() -> GilbertElliott:
    return GilbertElliott(p_good_to_bad=0.0, p_bad_to_good=1.0, p_succ_good=1.0, p_succ_bad=0.0)


class TestGeStep:
    def test_absorbing_good(self):
        model = GilbertElliott(p_good_to_bad=0.0)
        rng = random.Random(1)
        state = "good"
        for _ in range(100):
            state, p = ge_step(state, model, rng)
            assert state == "good"
            assert p == model.p_succ_good

    def test_forced_recovery(self):
        model = GilbertElliott(p_bad_to_good=1.0)
        state, p = ge_step("bad", model, random.Random(1))
        assert state == "good"
        assert p == model.p_succ_good

    def test_returns_new_state_probability(self):
        model = GilbertElliott(p_good_to_bad=1.0)
        state, p = ge_step("good", model, random.Random(1))
        assert state == "bad"
        assert p == model.p_succ_bad

    def test_stationary_occupancy(self):
        # Stationary bad-state share of a 2-state chain is p_gb/(p_gb+p_bg).
        # The sample mean over n dependent steps has asymptotic variance
        # pi(1-pi)/n * (1+rho)/(1-rho) with lag-1 autocorrelation
        # rho = 1 - p_gb - p_bg.
        p_gb, p_bg = 0.05, 0.2
        model = GilbertElliott(p_good_to_bad=p_gb, p_bad_to_good=p_bg)
        rng = random.Random(123)
        n = 1_000_000
        state = "good"
        bad = 0
        for _ in range(n):
            state, _ = ge_step(state, model, rng)
            if state == "bad":
                bad += 1
        pi = p_gb / (p_gb + p_bg)
        rho = 1.0 - p_gb - p_bg
        sigma = math.sqrt(pi * (1 - pi) / n * (1 + rho) / (1 - rho))
        assert abs(bad / n - pi) < 3 * sigma

    def test_probability_bounds_validated(self):
        with pytest.raises(ValueError):
            GilbertElliott(p_good_to_bad=1.5)
        with pytest.raises(ValueError):
            GilbertElliott(p_succ_good=0.1, p_succ_bad=0.9)


class TestDcfParams:
    def test_windows_must_be_powers_of_two(self):
        with pytest.raises(ValueError):
            DcfParams(cw_min=3)
        with pytest.raises(ValueError):
            DcfParams(cw_max=1000)

    def test_cw_ordering(self):
        with pytest.raises(ValueError):
            DcfParams(cw_min=64, cw_max=16)


class TestSimulatePacket:
    def test_deterministic_success_path(self):
        dcf = DcfParams(cw_min=1, cw_max=1)  # backoff always zero
        phy = dcf.phy
        rec = simulate_packet(dcf, 1.0, random.Random(1))
        assert rec.delivered and rec.attempts == 1
        airtime = 39  # 100 B at 54 Mbit/s with the default profile
        assert rec.latency_us == phy.difs_us + airtime + phy.sifs_us + phy.ack_airtime_us
        assert rec.mcs_list == (dcf.mcs_index,)

    def test_forced_exhaustion(self):
        dcf = DcfParams(retry_limit=7)
        rec = simulate_packet(dcf, 0.0, random.Random(1))
        assert not rec.delivered
        assert rec.latency_us is None
        assert rec.attempts == dcf.retry_limit + 1
        assert len(rec.mcs_list) == rec.attempts

    def test_loss_probability_matches_geometric(self):
        # P(lost) = (1 - p)^(retry_limit + 1) = 0.5^8
        dcf = DcfParams(retry_limit=7)
        rng = random.Random(99)
        n = 1_000_000
        lost = sum(
            1 for _ in range(n) if not simulate_packet(dcf, 0.5, rng).delivered
        )
        p_loss = 0.5**8
        sigma = math.sqrt(n * p_loss * (1 - p_loss))
        assert abs(lost - n * p_loss) < 3 * sigma

    def test_callable_probability_sampled_per_attempt(self):
        dcf = DcfParams(retry_limit=3)
        draws = iter([0.0, 0.0, 1.0])  # fail, fail, succeed

        rec = simulate_packet(dcf, lambda: next(draws), random.Random(5))
        assert rec.delivered
        assert rec.attempts == 3


class TestGenTrace:
    def test_empty(self):
        t = gen_trace(0, 500_000, 0, DcfParams(), GilbertElliott(), seed=1)
        assert len(t) == 0

    def test_same_seed_bit_identical(self):
        args = (5000, 500_000, 1_000, DcfParams(), GilbertElliott())
        assert gen_trace(*args, seed=7) == gen_trace(*args, seed=7)
        assert gen_trace(*args, seed=7) != gen_trace(*args, seed=8)

    def test_disturbance_free_channel(self):
        t = gen_trace(2000, 500_000, 0, DcfParams(), quiet_channel(), seed=3)
        assert bool(t.delivered.all())
        assert t.attempts.tolist() == [1] * 2000

    def test_timestamps_follow_period(self):
        t = gen_trace(10, 250_000, 1_000_000, DcfParams(), GilbertElliott(), seed=1)
        assert t.ts_us.tolist() == [1_000_000 + 250_000 * i for i in range(10)]
        assert t.seq.tolist() == list(range(1, 11))

    def test_latency_never_beats_physics(self):
        dcf = DcfParams()
        t = gen_trace(20_000, 500_000, 0, dcf, GilbertElliott(), seed=11)
        floor = min_latency(dcf.payload_bytes, dcf.rate_mbps, dcf.phy)
        delivered = t.latency_us[t.delivered]
        assert int(delivered.min()) >= floor
        assert int(t.attempts.max()) <= dcf.retry_limit + 1

    def test_backoff_spread_bound_without_interference(self):
        dcf = DcfParams(cw_min=16)
        t = gen_trace(20_000, 500_000, 0, dcf, quiet_channel(), seed=13)
        lat = t.latency_us
        assert int(lat.max() - lat.min()) <= (dcf.cw_min - 1) * dcf.phy.slot_us

    def test_matches_per_packet_composition(self):
        # the bulk generator must replay exactly as simulate_packet over a
        # shared interference chain and RNG
        dcf = DcfParams()
        ge = GilbertElliott(p_good_to_bad=0.05, p_bad_to_good=0.3, p_succ_bad=0.2)
        seed, n, period, start = 17, 500, 500_000, 999
        rng = random.Random(seed)
        state = "good"

        def draw() -> float:
            nonlocal state
            state, p = ge_step(state, ge, rng)
            return p

        from duolink.trace import ChannelTrace

        records = [
            simulate_packet(dcf, draw, rng, seq_no=i + 1, ts_us=start + i * period)
            for i in range(n)
        ]
        expected = ChannelTrace.from_records("A", records, period_us=period)
        assert gen_trace(n, period, start, dcf, ge, seed) == expected

    def test_meta_records_rng_and_seed(self):
        t = gen_trace(1, 500_000, 0, DcfParams(), GilbertElliott(), seed=21)
        assert t.meta["rng"] == "python-random-mt19937"
        assert t.meta["seed"] == 21

    def test_mcs_constant_per_attempt(self):
        dcf = DcfParams(mcs_index=5)
        t = gen_trace(300, 500_000, 0, dcf, GilbertElliott(p_good_to_bad=0.3), seed=2)
        for rec in t:
            assert rec.mcs_list == (5,) * rec.attempts

    def test_default_calibration_mean_attempts(self):
        # a million-packet channel with default parameters stays near the
        # just-above-one attempts regime
        t = gen_trace(1_000_000, 500_000, 0, DcfParams(), GilbertElliott(), seed=31)
        mu_a = float(t.attempts.mean())
        assert 1.0 <= mu_a <= 1.1
