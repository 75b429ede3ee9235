import numpy as np
import pytest
from conftest import one_program_instance
from hypothesis import given, settings
from hypothesis import strategies as st

from prevopt.errors import EncodingError, NoMoveError
from prevopt.generator import GeneratorSpec, generate_instance
from prevopt.oracle import enumerate_optimum
from prevopt.program_model import (
    Bundle,
    Community,
    Drug,
    DrugLine,
    Instance,
    Inventory,
    PreventionProgram,
    all_unchanged,
    check_solution,
    program_options,
)
from prevopt.wwo import (
    EPS_FIT,
    WwoConfig,
    break_wave,
    breaking_candidates,
    compile_instance,
    fitness,
    fitness_from,
    neighbor,
    propagate,
    refract,
    run_wwo,
    violations,
    wavelength,
)


def two_program_instance():
    progs = tuple(
        PreventionProgram(pid, 1.0, 5, {"C1": 5}, {"A": DrugLine(2, 1.0), "B": DrugLine(1, 0.5)}, ("A", "B"))
        for pid in ("P1", "P2")
    )
    return Instance(
        drugs=(Drug("A"), Drug("B"), Drug("C")),
        alternatives={"A": (Bundle("C", 1), Bundle("C", 2)), "B": (Bundle("C", 1),)},
        communities=(Community("C1", 1.0),),
        programs=progs,
        inventory=Inventory({"A": 100, "B": 100, "C": 100}),
    )


class TestFitness:
    def test_feasible_unchanged_is_maximal(self, small_instance):
        inst = one_program_instance(avail_a=1000)
        assert fitness(inst, all_unchanged(inst)) == pytest.approx(1 / EPS_FIT)

    def test_hand_value(self):
        assert fitness_from((1, 1, 0, 0)) == pytest.approx(0.5)

    def test_violations(self):
        inst = one_program_instance(avail_a=100)
        assert violations(inst, all_unchanged(inst)) == (20.0, 0.0, 0.0)
        assert violations(inst, [(1, 1)]) == (0.0, 0.0, 0.0)

    @given(st.floats(0, 100), st.floats(0, 100), st.floats(1e-3, 100))
    def test_monotone_in_violation(self, f, v, dv):
        assert fitness_from((f, v + dv, 0, 0)) < fitness_from((f, v, 0, 0))

    def test_invalid_solution(self, small_instance):
        with pytest.raises(EncodingError):
            fitness(small_instance, [(1, 5)])


class TestWavelength:
    def test_values(self):
        assert wavelength(1, 10, 15) == 1
        assert wavelength(10, 10, 15) == 15
        assert wavelength(5, 10, 15) == 7

    def test_invalid(self):
        with pytest.raises(ValueError):
            wavelength(0, 10, 5)
        with pytest.raises(ValueError):
            wavelength(3, 1, 5)


class TestNeighbor:
    def test_type1_reachable_set(self, small_instance):
        rng = np.random.default_rng(0)
        seen = {neighbor(small_instance, [(1, 1)], rng) for _ in range(200)}
        assert seen <= {((0, 0),), ((1, 1),), ((1, 2),)}
        assert ((1, 2),) in seen

    def test_moves_stay_valid(self):
        inst = generate_instance(GeneratorSpec(seed=4, programs=6))
        rng = np.random.default_rng(1)
        sol = all_unchanged(inst)
        for _ in range(500):
            sol = neighbor(inst, sol, rng)
            check_solution(inst, sol)

    def test_from_unchanged_draws_position(self):
        inst = two_program_instance()
        rng = np.random.default_rng(2)
        seen = set()
        for _ in range(300):
            sol = neighbor(inst, all_unchanged(inst), rng)
            changed = [p for p in sol if p != (0, 0)]
            assert len(changed) <= 1
            seen.update(changed)
        assert seen == {(1, 1), (1, 2), (2, 1)}

    def test_no_moves(self):
        inst = one_program_instance()
        inst = inst.with_programs([PreventionProgram("P1", 1, 1, {"C1": 1}, {"A": DrugLine(1, 1)})])
        with pytest.raises(NoMoveError):
            neighbor(inst, all_unchanged(inst), np.random.default_rng(0))


class TestPropagate:
    def test_improvement_kept(self):
        inst = one_program_instance(avail_a=100)
        base = fitness(inst, all_unchanged(inst))
        results = [propagate(inst, all_unchanged(inst), 3, np.random.default_rng(s)) for s in range(10)]
        assert any(replaced for _, replaced in results)
        for out, replaced in results:
            assert (fitness(inst, out) > base) == replaced

    def test_worse_rejected(self):
        inst = one_program_instance(avail_a=1000)
        sol = all_unchanged(inst)
        for seed in range(20):
            out, replaced = propagate(inst, sol, 2, np.random.default_rng(seed))
            assert not replaced and out == sol

    def test_lambda_one_is_one_move(self):
        inst = generate_instance(GeneratorSpec(seed=2, tightness=0.7))
        sol = all_unchanged(inst)
        a, replaced = propagate(inst, sol, 1, np.random.default_rng(7))
        b = neighbor(inst, sol, np.random.default_rng(7))
        assert a == (b if replaced else sol)


class TestRefractBreak:
    def test_refract_self(self):
        s = ((1, 2), (0, 0))
        assert refract(s, s, np.random.default_rng(0)) == s

    def test_refract_hamming_halves(self):
        rng = np.random.default_rng(0)
        best = tuple((1, 1) for _ in range(20))
        other = tuple((2, 2) for _ in range(20))
        dist = [sum(a != b for a, b in zip(refract(other, best, rng), best)) for _ in range(1000)]
        assert np.mean(dist) == pytest.approx(10, rel=0.1)

    def test_no_candidates(self):
        assert breaking_candidates(((1, 1), (0, 0)), np.random.default_rng(0)).shape[0] == 0

    def test_candidate_count_and_direction(self):
        best = ((1, 3), (2, 2), (0, 0), (1, 1))
        cands = breaking_candidates(best, np.random.default_rng(0))
        assert len(cands) == 2 <= len(best)
        assert 1 <= cands[0][0][1] < 3 and cands[1][1][1] == 1

    def test_break_improves(self):
        inst = one_program_instance(avail_a=0)
        sol, dec, used = break_wave(inst, [(1, 2)], np.random.default_rng(0))
        assert sol == ((1, 1),) and used == 1
        assert dec[0] == pytest.approx(0.5)


class TestRun:
    def test_slack_instance(self):
        inst = one_program_instance(avail_a=1000)
        r = run_wwo(inst, WwoConfig(budget=200))
        assert r.solution == ((0, 0),) and r.f == 0 and r.feasible

    def test_matches_oracle_small(self):
        inst = generate_instance(GeneratorSpec(seed=3, tightness=0.8))
        opt = enumerate_optimum(inst)
        r = run_wwo(inst, WwoConfig(budget=20000, seed=1))
        assert r.feasible and r.f == opt.f

    def test_budget_and_trace(self):
        inst = generate_instance(GeneratorSpec(seed=1, tightness=0.8))
        r = run_wwo(inst, WwoConfig(budget=537, seed=0))
        assert r.evaluations == 537
        fits = [t[-1] for t in r.trace]
        assert all(b >= a for a, b in zip(fits, fits[1:]))
        assert r.trace[-1][1] == r.evaluations

    def test_deterministic(self):
        inst = generate_instance(GeneratorSpec(seed=6, tightness=0.6, programs=6))
        a = run_wwo(inst, WwoConfig(budget=3000, seed=4))
        b = run_wwo(inst, WwoConfig(budget=3000, seed=4))
        assert a.to_dict() == b.to_dict() and a.trace == b.trace

    def test_paper_scale_shape(self):
        inst = generate_instance(GeneratorSpec(seed=8, programs=15, communities=16, drugs=20, tightness=0.8))
        assert inst.metadata["feasible_guaranteed"]
        r = run_wwo(inst, WwoConfig(budget=30000, seed=0))
        assert r.feasible

    def test_config_validation(self):
        with pytest.raises(ValueError):
            WwoConfig(pop_size=1)
        with pytest.raises(ValueError):
            WwoConfig(budget=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_compiled_options_match_model(seed):
    from prevopt.program_model import check_constraints, objective

    inst = generate_instance(GeneratorSpec(seed=seed, tightness=0.9))
    ci = compile_instance(inst)
    rng = np.random.default_rng(seed)
    sol = tuple(program_options(inst, j)[rng.integers(len(program_options(inst, j)))] for j in range(inst.N))
    f, vd, vg, vf = ci.decompose(sol)
    rep = check_constraints(inst, sol)
    assert f == pytest.approx(objective(inst, sol), abs=1e-12)
    assert (vd, vg, vf) == pytest.approx((rep.violation("drug"), rep.violation("shared"), rep.violation("nonshared")))
