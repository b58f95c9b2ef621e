"""Samplers: law agreement, reproducibility, feasibility guards."""

import math

import numpy as np
import pytest

from bdheight import (
    FULL_CTMC,
    JUMP_CHAIN,
    LADDER,
    CapacityError,
    ParameterError,
    SimulationAbort,
    SimulationConfig,
    dkw_epsilon,
    estimate_mean_excursion_steps,
    height_distribution,
    height_fraction_limit,
    make_params,
    run_batch,
    sample_excursion_ctmc,
    sample_height,
)


def _rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class TestConfig:
    def test_bad_values_rejected(self):
        p = make_params(3, rho=1.0)
        with pytest.raises(ParameterError):
            SimulationConfig(params=p, n_samples=0, seed=1)
        with pytest.raises(ParameterError):
            SimulationConfig(params=p, n_samples=10, seed=-1)
        with pytest.raises(ParameterError):
            SimulationConfig(params=p, n_samples=10, seed=1, mode="bogus")
        with pytest.raises(ParameterError):
            SimulationConfig(params=p, n_samples=10, seed=1, worker_count=0)

    def test_dkw_epsilon_formula(self):
        assert dkw_epsilon(10**5, 0.01) == pytest.approx(
            math.sqrt(math.log(200.0) / (2 * 10**5)), rel=1e-15)


class TestExcursionLengthEstimate:
    def test_single_node(self):
        # Return time to 0 is exactly 2 jumps, so one excursion is 1 step.
        assert estimate_mean_excursion_steps(make_params(1, nu=1.0, mu=1.0)) == pytest.approx(1.0)

    def test_supercritical_blowup(self):
        est = estimate_mean_excursion_steps(make_params(50, rho=0.8))
        assert est > 1e12  # direct walks are hopeless here

    def test_overflow_reports_inf(self):
        assert estimate_mean_excursion_steps(make_params(2000, rho=0.5)) == math.inf


class TestScalarSamplers:
    def test_single_node_height(self):
        p = make_params(1, rho=0.7)
        rng = _rng(1)
        assert all(sample_height(p, rng) == 1 for _ in range(50))

    def test_same_seed_same_stream(self):
        p = make_params(8, rho=0.4)
        rng1, rng2 = _rng(42), _rng(42)
        a = [sample_height(p, rng1) for _ in range(5)]
        b = [sample_height(p, rng2) for _ in range(5)]
        assert a == b
        ha, da = sample_excursion_ctmc(p, _rng(7))
        hb, db = sample_excursion_ctmc(p, _rng(7))
        assert (ha, da) == (hb, db)

    def test_circuit_breaker(self):
        # rho = 5 gives a strong upward drift; 3 steps cannot finish.
        p = make_params(30, rho=5.0)
        with pytest.raises(SimulationAbort):
            sample_height(p, _rng(3), max_steps=3)

    def test_heights_in_range(self):
        p = make_params(6, rho=0.5)
        rng = _rng(11)
        hs = [sample_height(p, rng) for _ in range(200)]
        assert all(1 <= h <= 6 for h in hs)
        assert len(set(hs)) > 1


class TestLadderBatch:
    def test_dkw_band_at_reference_point(self):
        cfg = SimulationConfig(params=make_params(50, rho=0.8),
                               n_samples=10**5, seed=7)
        s = run_batch(cfg)
        assert s.dkw_pass
        assert s.sup_distance <= s.dkw_epsilon

    def test_two_level_frequencies(self):
        # N=2, rho=1: heights 1 and 2 each with probability 1/2.
        n = 10**5
        cfg = SimulationConfig(params=make_params(2, rho=1.0), n_samples=n, seed=3)
        s = run_batch(cfg)
        sigma = math.sqrt(0.25 / n)
        assert abs(s.counts[1] / n - 0.5) <= 3 * sigma

    def test_exact_moment_bookkeeping(self):
        cfg = SimulationConfig(params=make_params(15, rho=0.6), n_samples=4096, seed=5)
        s = run_batch(cfg)
        ks = np.arange(1, 16)
        counts = np.asarray(s.counts)
        assert counts.sum() == 4096
        mean = float(np.dot(ks, counts)) / 4096
        assert s.empirical_mean == pytest.approx(mean, rel=1e-15)
        var = float(np.dot((ks - mean) ** 2, counts)) / 4096
        assert s.empirical_variance == pytest.approx(var, rel=1e-12)

    def test_mean_tracks_exact_value(self):
        # 1e6 samples at N=3, rho=1: empirical mean within 3 sigma of 31/15.
        p = make_params(3, rho=1.0)
        d = height_distribution(p)
        n = 10**6
        s = run_batch(SimulationConfig(params=p, n_samples=n, seed=12))
        assert abs(s.empirical_mean - d.mean) <= 3 * math.sqrt(d.variance / n)

    def test_wlln_frequency(self):
        N, rho, n = 2000, 0.5, 10**4
        f = height_fraction_limit(rho)
        s = run_batch(SimulationConfig(params=make_params(N, rho=rho),
                                       n_samples=n, seed=21))
        ks = np.arange(1, N + 1)
        outside = np.abs(ks / N - f) > 0.05
        freq = np.asarray(s.counts)[outside].sum() / n
        assert freq <= 0.01


class TestWalkBatches:
    def test_direct_walk_matches_exact_law(self):
        cfg = SimulationConfig(params=make_params(10, rho=0.3),
                               n_samples=2 * 10**4, seed=9, mode=JUMP_CHAIN)
        s = run_batch(cfg)
        assert s.dkw_pass

    def test_walk_and_ladder_are_indistinguishable(self):
        p = make_params(10, rho=0.3)
        n = 2 * 10**4
        s1 = run_batch(SimulationConfig(params=p, n_samples=n, seed=31, mode=JUMP_CHAIN))
        s2 = run_batch(SimulationConfig(params=p, n_samples=n, seed=32, mode=LADDER))
        e1 = np.cumsum(s1.counts) / n
        e2 = np.cumsum(s2.counts) / n
        two_sample = np.abs(e1 - e2).max()
        assert two_sample <= dkw_epsilon(n, 0.01) + dkw_epsilon(n, 0.01)

    def test_ctmc_heights_match_and_duration_recorded(self):
        cfg = SimulationConfig(params=make_params(10, rho=0.3),
                               n_samples=10**4, seed=13, mode=FULL_CTMC)
        s = run_batch(cfg)
        assert s.dkw_pass
        assert s.mean_busy_duration is not None and s.mean_busy_duration > 0

    def test_single_node_duration_is_unit_exponential(self):
        # From state 1 with nu = mu = 1 the only hold has rate 1.
        n = 2 * 10**4
        cfg = SimulationConfig(params=make_params(1, nu=1.0, mu=1.0),
                               n_samples=n, seed=17, mode=FULL_CTMC)
        s = run_batch(cfg)
        assert set(np.nonzero(s.counts)[0]) == {0}
        assert abs(s.mean_busy_duration - 1.0) <= 3.0 / math.sqrt(n)

    def test_duration_is_reported_in_service_time_units(self):
        # With N = 1 the busy period is one Exp(mu) hold, i.e. exactly one
        # mean service time regardless of mu.
        n = 2 * 10**4
        cfg = SimulationConfig(params=make_params(1, nu=1.0, mu=4.0),
                               n_samples=n, seed=19, mode=FULL_CTMC)
        s = run_batch(cfg)
        assert abs(s.mean_busy_duration - 1.0) <= 3.0 / math.sqrt(n)

    def test_infeasible_batch_is_refused(self):
        cfg = SimulationConfig(params=make_params(50, rho=0.8),
                               n_samples=100, seed=1, mode=JUMP_CHAIN)
        with pytest.raises(CapacityError):
            run_batch(cfg)


class TestReproducibility:
    def test_identical_config_identical_bytes(self):
        cfg = SimulationConfig(params=make_params(50, rho=0.8),
                               n_samples=20000, seed=99)
        a = run_batch(cfg).to_json_bytes()
        b = run_batch(cfg).to_json_bytes()
        assert a == b

    @pytest.mark.parametrize("mode", [LADDER, JUMP_CHAIN, FULL_CTMC])
    def test_worker_count_never_changes_results(self, mode):
        p = make_params(10, rho=0.3) if mode != LADDER else make_params(200, rho=0.8)
        n = 9000  # spans several chunks
        one = run_batch(SimulationConfig(params=p, n_samples=n, seed=5, mode=mode,
                                         worker_count=1))
        eight = run_batch(SimulationConfig(params=p, n_samples=n, seed=5, mode=mode,
                                           worker_count=8))
        assert one.to_json_bytes() == eight.to_json_bytes()

    def test_different_seed_different_counts(self):
        p = make_params(40, rho=0.9)
        a = run_batch(SimulationConfig(params=p, n_samples=5000, seed=1))
        b = run_batch(SimulationConfig(params=p, n_samples=5000, seed=2))
        assert a.counts != b.counts
