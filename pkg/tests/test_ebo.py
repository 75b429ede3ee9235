import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prevopt.clustering import PfcmConfig, random_restart_pfcm, run_pfcm
from prevopt.ebo import (
    EboConfig,
    decode,
    ebo_search,
    eta_schedule,
    global_migration,
    initial_population,
    local_migration,
    migration_rates,
    random_topology,
    repair,
    run_ebo,
)
from prevopt.generator import cloud_points


class TestRates:
    def test_all_equal(self):
        E, I = migration_rates([3.0, 3.0, 3.0])
        assert np.allclose(E, 1) and np.allclose(I, 1)

    def test_best_emigrates_fully(self):
        E, _ = migration_rates([0.2, 0.5, 0.9])
        assert E[0] == 1.0

    def test_hand_value(self):
        E, I = migration_rates([0.0, 1.0], epsilon_rate=0.01)
        assert E == pytest.approx([1.0, 0.01 / 1.01])
        assert I == pytest.approx([0.01 / 1.01, 1.0])

    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=30))
    def test_rates_in_unit_interval(self, J):
        E, I = migration_rates(J)
        assert np.all((E > 0) & (E <= 1 + 1e-12)) and np.all((I > 0) & (I <= 1 + 1e-12))

    def test_empty(self):
        with pytest.raises(ValueError):
            migration_rates([])


class TestMigration:
    def test_local_fixed_point(self):
        assert local_migration(0.3, 0.3, 0.7) == 0.3

    def test_local_convex(self):
        assert 0 < local_migration(0.0, 1.0, 0.4) < 1

    def test_local_hand_value(self):
        assert local_migration(0.2, 0.6, 0.5) == pytest.approx(0.4)

    def test_global_fixed_point(self):
        assert global_migration(0.4, 0.4, 0.4, 0.3, True) == 0.4
        assert global_migration(0.4, 0.4, 0.4, 0.3, False) == 0.4

    def test_global_first_branch(self):
        # J(x'') <= J(x'), r = 1, x = 0
        assert global_migration(0.0, 0.3, 0.5, 1.0, True) == pytest.approx(0.8)
        assert repair(np.array([0.8, 0.0]))[0] == pytest.approx(0.8)

    def test_global_second_branch(self):
        assert global_migration(0.0, 0.3, 0.5, 1.0, False) == pytest.approx(0.8)
        assert global_migration(0.1, 0.3, 0.5, 0.5, False) == pytest.approx(0.5 + 0.5 * 0.2)


class TestSchedule:
    def test_endpoints(self):
        cfg = EboConfig(g_max=10)
        assert eta_schedule(0, cfg) == cfg.eta_min
        assert eta_schedule(10, cfg) == pytest.approx(cfg.eta_max)
        assert eta_schedule(5, cfg) == pytest.approx(0.4)


class TestRepair:
    def test_clamps_and_rescales(self):
        g = repair(np.array([1.5, -0.2, 0.9, 0.9]))
        assert g[:2].tolist() == [1.0, 0.0]
        assert g[2] ** 2 + g[3] ** 2 == pytest.approx(1.0)
        assert g[2] == pytest.approx(g[3])

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=20).filter(lambda v: len(v) % 2 == 0))
    def test_always_valid(self, vals):
        pairs = repair(np.array(vals)).reshape(-1, 2)
        assert np.all(pairs >= 0) and np.all(np.sum(pairs**2, 1) <= 1 + 1e-12)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"pop_size": 2}, {"eta_min": 0.8, "eta_max": 0.5}, {"k_neighbors": 20},
                                    {"stagnation": 0}, {"g_max": -1}, {"epsilon_rate": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            EboConfig(**kw)

    def test_for_budget(self):
        cfg = EboConfig.for_budget(100, pop_size=10)
        assert cfg.g_max == 9 and cfg.pop_size == 10
        with pytest.raises(ValueError):
            EboConfig.for_budget(5)


def test_topology():
    nb = random_topology(np.random.default_rng(0), 8, 3)
    for s in range(8):
        assert s not in nb[s] and len(set(nb[s].tolist())) == 3


def test_initial_population_shapes():
    P, _ = cloud_points(2, 20, 3, seed=0)
    pop = initial_population(np.random.default_rng(0), P, 2, 5)
    assert pop.shape == (5, 12)
    sampled = decode(pop[0], 2, 3)
    assert any(np.array_equal(sampled[0], p) for p in P)


class TestSearch:
    def setup_method(self):
        self.P, _ = cloud_points(4, 120, 6, spread=0.08, seed=11)
        self.cfg = PfcmConfig(c=4)

    def test_identical_population(self):
        rng = np.random.default_rng(0)
        genome = self.P[rng.choice(120, 4, replace=False)].ravel()
        res = ebo_search(self.P, self.cfg, EboConfig(pop_size=5, g_max=3), seed=0, population=np.tile(genome, (5, 1)))
        single = run_pfcm(self.P, self.cfg, decode(genome, 4, 6))
        assert res.model.J == pytest.approx(single.J, abs=1e-12)

    def test_no_generations(self):
        res = ebo_search(self.P, self.cfg, EboConfig(pop_size=6, g_max=0), seed=3)
        assert res.evaluations == 6 and len(res.trace) == 1

    def test_budget_respected_and_trace_monotone(self):
        res = ebo_search(self.P, self.cfg, EboConfig(pop_size=6, g_max=50), seed=1, max_evaluations=25)
        assert res.evaluations <= 25
        best = [t[2] for t in res.trace]
        assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))

    def test_deterministic(self):
        a = run_ebo(self.P, self.cfg, EboConfig(pop_size=6, g_max=3), seed=5)
        b = run_ebo(self.P, self.cfg, EboConfig(pop_size=6, g_max=3), seed=5)
        assert a.J == b.J and np.array_equal(a.U, b.U)

    def test_two_cloud_not_worse_than_random(self):
        P, _ = cloud_points(2, 100, 5, spread=0.1, seed=2)
        cfg = PfcmConfig(c=2)
        best = run_ebo(P, cfg, EboConfig.for_budget(30, pop_size=10), seed=0, max_evaluations=30).J
        rand = [random_restart_pfcm(P, cfg, 1, s).J for s in range(10)]
        assert best <= np.median(rand) + 1e-9
