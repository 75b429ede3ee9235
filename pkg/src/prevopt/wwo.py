"""Water wave optimization over substitution solutions.

The instance is compiled once into flat option tables: every program
option (unchanged, or one ``(position, bundle)`` substitution) gets a row
of per-constraint demand contributions and a cost.  Evaluating a solution
is then a row gather plus a sum, done by the kernels in ``kernels``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import EncodingError, NoMoveError
from .program_model import (
    BATCH_CEIL_POOLED,
    NO_CHANGE,
    SUM_RULE,
    Instance,
    aggregate,
    apply_update,
    check_solution,
    program_cost,
    program_options,
    replaceable_positions,
)

EPS_FIT = 1e-9
ROW_KINDS = {"drug": 0, "shared": 1, "nonshared": 2}


@dataclass(frozen=True)
class WwoConfig:
    pop_size: int = 10
    stagnation: int = 5
    budget: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.stagnation < 1:
            raise ValueError("stagnation must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


class CompiledInstance:
    """Option tables for fast evaluation of solutions of one instance."""

    def __init__(self, inst: Instance):
        self.instance = inst
        self.N = inst.N
        rows = [("drug", d.id, None) for d in inst.drugs]
        rows += [("shared", rid, None) for rid in inst.shared_ids()]
        nonshared = inst.nonshared_ids()
        rows += [("nonshared", rid, c.id) for c in inst.communities for rid in nonshared]
        self.rows = rows
        R = len(rows)
        self.row_kind = np.array([ROW_KINDS[k] for k, _, _ in rows], dtype=np.int64)
        avail, pooled = [], []
        for kind, rid, cid in rows:
            if kind == "drug":
                avail.append(inst.inventory.drugs.get(rid, 0))
                pooled.append(0)
            elif kind == "shared":
                avail.append(inst.inventory.shared.get(rid, 0))
                rule = inst.shared_rule(rid)
                pooled.append(rule.batch_size if rule.kind == BATCH_CEIL_POOLED else 0)
            else:
                avail.append(inst.community(cid).nonshared.get(rid, 0))
                rule = inst.nonshared_rule(rid)
                pooled.append(rule.batch_size if rule.kind == BATCH_CEIL_POOLED else 0)
        self.avail = np.array(avail, dtype=np.float64)
        self.pooled = np.array(pooled, dtype=np.float64)

        self.options = [program_options(inst, j) for j in range(self.N)]
        n_opt = sum(len(o) for o in self.options)
        self.contrib = np.zeros((n_opt, R), dtype=np.float64)
        self.cost = np.zeros(n_opt, dtype=np.float64)
        self.opt_start = np.zeros(self.N, dtype=np.int64)
        maxlen = max((len(p.prescription) for p in inst.programs), default=0)
        self.pos_slot = np.full((self.N, maxlen + 1), -1, dtype=np.int64)
        slot_start, slot_pos, slot_nb, slot_off = [0], [], [], []
        o = 0
        for j, p in enumerate(inst.programs):
            self.opt_start[j] = o
            off = 1
            for x in replaceable_positions(p):
                nb = len(inst.alternatives[p.positions()[x - 1]])
                self.pos_slot[j, x] = len(slot_pos)
                slot_pos.append(x)
                slot_nb.append(nb)
                slot_off.append(off)
                off += nb
            slot_start.append(len(slot_pos))
            for pair in self.options[j]:
                self.contrib[o] = self._contributions(p, pair)
                self.cost[o] = program_cost(inst, j, pair)
                o += 1
        self.slot_start = np.array(slot_start, dtype=np.int64)
        self.slot_pos = np.array(slot_pos, dtype=np.int64)
        self.slot_nb = np.array(slot_nb, dtype=np.int64)
        self.slot_off = np.array(slot_off, dtype=np.int64)
        self.rep_progs = np.array(
            [j for j in range(self.N) if slot_start[j + 1] > slot_start[j]], dtype=np.int64
        )

    def _contributions(self, program, pair) -> list[float]:
        inst = self.instance
        upd = apply_update(program, pair, inst.alternatives)
        out = []
        for kind, rid, cid in self.rows:
            if kind == "drug":
                line = upd.prescription.get(rid)
                out.append(aggregate([(upd.users, line.quantity)]) if line is not None else 0)
                continue
            if kind == "shared":
                rule, n, usage = inst.shared_rule(rid), upd.users, upd.shared
            else:
                rule, n, usage = inst.nonshared_rule(rid), upd.coverage.get(cid, 0), upd.nonshared
            if rid not in usage or n <= 0:
                out.append(0)
                continue
            if rule.kind == BATCH_CEIL_POOLED:
                rule = SUM_RULE
            out.append(aggregate([(n, usage[rid])], rule))
        return out

    @property
    def tables(self):
        return (self.slot_off, self.pos_slot, self.opt_start, self.contrib, self.cost,
                self.pooled, self.avail, self.row_kind)

    def as_array(self, solution) -> np.ndarray:
        arr = np.asarray(solution, dtype=np.int64).reshape(-1, 2)
        if arr.shape[0] != self.N:
            raise EncodingError(f"solution has {arr.shape[0]} pairs for {self.N} programs")
        return arr

    def decompose(self, solution) -> tuple[float, float, float, float]:
        """``(f, v_drug, v_shared, v_nonshared)`` of a validated solution."""
        check_solution(self.instance, [tuple(p) for p in np.asarray(solution).tolist()])
        dec = kernels.evaluate_batch(self.as_array(solution)[None], *self.tables)
        return tuple(float(v) for v in dec[0])

    def evaluate_many(self, pairs: np.ndarray) -> np.ndarray:
        return kernels.evaluate_batch(np.ascontiguousarray(pairs, dtype=np.int64), *self.tables)

    def propagate_many(self, pairs, lams, unif):
        return kernels.propagate_batch(
            np.ascontiguousarray(pairs, dtype=np.int64),
            np.asarray(lams, dtype=np.int64),
            np.ascontiguousarray(unif, dtype=np.float64),
            self.rep_progs, self.slot_start, self.slot_pos, self.slot_nb, self.slot_off,
            self.pos_slot, self.opt_start, self.contrib, self.cost, self.pooled, self.avail,
            self.row_kind,
        )


def compile_instance(inst) -> CompiledInstance:
    return inst if isinstance(inst, CompiledInstance) else CompiledInstance(inst)


def fitness_from(dec) -> float:
    return 1.0 / (float(dec[0]) + float(dec[1]) + float(dec[2]) + float(dec[3]) + EPS_FIT)


def violations(inst, solution) -> tuple[float, float, float]:
    _, vd, vg, vf = compile_instance(inst).decompose(solution)
    return vd, vg, vf


def fitness(inst, solution) -> float:
    """Penalized fitness ``1 / (f + v_D + v_G + v_F + 1e-9)``; higher is better."""
    return fitness_from(compile_instance(inst).decompose(solution))


def wavelength(rank: int, pop_size: int, n: int) -> int:
    """Integer wavelength in ``[1, n]`` for the solution at 1-based ``rank``."""
    if not (1 <= rank <= pop_size) or pop_size < 2 or n < 1:
        raise ValueError(f"invalid wavelength arguments rank={rank}, pop_size={pop_size}, n={n}")
    num = (pop_size - rank) * (n - 1)
    return n - (-(-num // (pop_size - 1)))


def neighbor(inst, solution, rng: np.random.Generator) -> tuple[tuple[int, int], ...]:
    """One random neighborhood move (change the bundle, or the drug and bundle)."""
    ci = compile_instance(inst)
    if ci.rep_progs.size == 0:
        raise NoMoveError("no program has a replaceable drug")
    moved, _ = ci.propagate_many(ci.as_array(solution)[None], [1], rng.random((1, 1, 4)))
    return _to_tuple(moved[0])


def propagate(inst, solution, lam: int, rng: np.random.Generator):
    """Move ``lam`` steps; return ``(kept_solution, replaced)``.

    The moved solution is kept only when strictly fitter than the input.
    """
    if lam < 1:
        raise ValueError("wavelength must be >= 1")
    ci = compile_instance(inst)
    if ci.rep_progs.size == 0:
        raise NoMoveError("no program has a replaceable drug")
    arr = ci.as_array(solution)
    moved, dec = ci.propagate_many(arr[None], [lam], rng.random((1, lam, 4)))
    if fitness_from(dec[0]) > fitness_from(ci.evaluate_many(arr[None])[0]):
        return _to_tuple(moved[0]), True
    return _to_tuple(arr), False


def refract(solution, best, rng: np.random.Generator) -> tuple[tuple[int, int], ...]:
    """Copy each pair from ``best`` with probability 0.5."""
    sol = np.asarray(solution, dtype=np.int64).reshape(-1, 2)
    b = np.asarray(best, dtype=np.int64).reshape(-1, 2)
    copy = rng.random(sol.shape[0]) < 0.5
    return _to_tuple(np.where(copy[:, None], b, sol))


def breaking_candidates(best, rng: np.random.Generator) -> np.ndarray:
    """One-step neighbors of ``best`` using a strictly higher-priority bundle."""
    b = np.asarray(best, dtype=np.int64).reshape(-1, 2)
    cands = []
    for j in range(b.shape[0]):
        if b[j, 0] != 0 and b[j, 1] > 1:
            c = b.copy()
            c[j, 1] = rng.integers(1, b[j, 1])
            cands.append(c)
    return np.array(cands, dtype=np.int64).reshape(-1, b.shape[0], 2)


def _break(ci: CompiledInstance, arr: np.ndarray, rng: np.random.Generator, max_candidates):
    cands = breaking_candidates(arr, rng)
    if max_candidates is not None:
        cands = cands[:max_candidates]
    if len(cands) == 0:
        return cands, np.zeros((0, 4))
    return cands, ci.evaluate_many(cands)


def break_wave(inst, best, rng: np.random.Generator, max_candidates: int | None = None):
    """Try higher-priority bundles around ``best``.

    Returns ``(solution, decomposition, n_evaluated)``; the solution is the
    best candidate if it beats ``best``, else ``best`` itself.
    """
    ci = compile_instance(inst)
    arr = ci.as_array(best)
    base = ci.evaluate_many(arr[None])[0]
    cands, dec = _break(ci, arr, rng, max_candidates)
    if len(cands) == 0:
        return _to_tuple(arr), tuple(base), 0
    fits = [fitness_from(d) for d in dec]
    k = int(np.argmax(fits))
    if fits[k] > fitness_from(base):
        return _to_tuple(cands[k]), tuple(dec[k]), len(cands)
    return _to_tuple(arr), tuple(base), len(cands)


def _to_tuple(arr) -> tuple[tuple[int, int], ...]:
    return tuple((int(a), int(b)) for a, b in np.asarray(arr).reshape(-1, 2))


def random_solution(ci: CompiledInstance, rng: np.random.Generator) -> np.ndarray:
    """Each pair unchanged with probability 0.5, else a uniform random substitution."""
    sol = np.zeros((ci.N, 2), dtype=np.int64)
    for j in range(ci.N):
        lo, hi = ci.slot_start[j], ci.slot_start[j + 1]
        if hi == lo or rng.random() < 0.5:
            continue
        s = lo + rng.integers(0, hi - lo)
        sol[j] = (ci.slot_pos[s], rng.integers(1, ci.slot_nb[s] + 1))
    return sol


@dataclass
class WwoResult:
    solution: tuple
    f: float
    v_drug: float
    v_shared: float
    v_nonshared: float
    evaluations: int
    generations: int
    trace: list = field(default_factory=list)

    @property
    def fitness(self) -> float:
        return fitness_from((self.f, self.v_drug, self.v_shared, self.v_nonshared))

    @property
    def feasible(self) -> bool:
        return self.v_drug == 0 and self.v_shared == 0 and self.v_nonshared == 0

    def to_dict(self) -> dict:
        return {
            "solution": [list(p) for p in self.solution],
            "f": self.f,
            "v_drug": self.v_drug,
            "v_shared": self.v_shared,
            "v_nonshared": self.v_nonshared,
            "fitness": self.fitness,
            "feasible": self.feasible,
            "evaluations": self.evaluations,
            "generations": self.generations,
        }


TRACE_FIELDS = (
    "generation", "evaluations", "best_f", "v_drug", "v_shared", "v_nonshared", "best_fitness", "search_fitness",
)


def _trace_row(gen, evals, dec, search_dec=None):
    """Row for the reported solution ``dec``; the last column tracks the search best."""
    search = fitness_from(dec if search_dec is None else search_dec)
    return (gen, evals, float(dec[0]), float(dec[1]), float(dec[2]), float(dec[3]), fitness_from(dec), search)


class _FeasibleBest:
    """Lowest-deviation zero-violation solution among everything evaluated."""

    def __init__(self):
        self.sol, self.dec = None, None

    def offer(self, sols, decs):
        decs = np.asarray(decs).reshape(-1, 4)
        ok = np.flatnonzero((decs[:, 1] == 0) & (decs[:, 2] == 0) & (decs[:, 3] == 0))
        if ok.size == 0:
            return
        k = ok[np.argmin(decs[ok, 0])]
        if self.dec is None or decs[k, 0] < self.dec[0]:
            self.sol, self.dec = np.array(sols).reshape(-1, *np.shape(sols)[-2:])[k].copy(), decs[k].copy()

    def reported(self, sol, dec):
        return (sol, dec) if self.dec is None else (self.sol, self.dec)


def run_wwo(inst, config: WwoConfig) -> WwoResult:
    """Search for a minimum-deviation feasible solution within ``config.budget`` evaluations.

    Each generation sorts the population by decreasing fitness, propagates
    every solution by its rank wavelength, breaks each new best, and
    refracts solutions that stagnated for ``config.stagnation`` generations.

    The search is steered by penalised fitness, but the returned solution is
    the lowest-deviation feasible one evaluated when any exists, falling back
    to the fittest solution otherwise.
    """
    ci = compile_instance(inst)
    rng = np.random.default_rng(config.seed)
    NP, N = config.pop_size, ci.N
    if ci.rep_progs.size == 0:
        sol = np.zeros((N, 2), dtype=np.int64)
        dec = tuple(float(v) for v in ci.evaluate_many(sol[None])[0])
        return WwoResult(_to_tuple(sol), *dec, evaluations=1, generations=0, trace=[_trace_row(0, 1, dec)])

    pop = np.stack([random_solution(ci, rng) for _ in range(NP)])
    dec = ci.evaluate_many(pop)
    fit = np.array([fitness_from(d) for d in dec])
    evals = NP
    b = int(np.argmax(fit))
    best, best_dec, best_fit = pop[b].copy(), dec[b].copy(), fit[b]
    feas = _FeasibleBest()
    feas.offer(pop, dec)
    stale = np.zeros(NP, dtype=np.int64)
    trace = [_trace_row(0, evals, feas.reported(best, best_dec)[1], best_dec)]
    lam_by_rank = [wavelength(o, NP, N) for o in range(1, NP + 1)]
    gen = 0
    while evals < config.budget:
        gen += 1
        order = np.argsort(-fit, kind="stable")
        pop, dec, fit, stale = pop[order], dec[order], fit[order], stale[order]
        k = min(NP, config.budget - evals)
        lams = lam_by_rank[:k]
        cand, cdec = ci.propagate_many(pop[:k], lams, rng.random((k, max(lams), 4)))
        evals += k
        feas.offer(cand, cdec)
        for s in range(k):
            cf = fitness_from(cdec[s])
            if cf > fit[s]:
                pop[s], dec[s], fit[s], stale[s] = cand[s], cdec[s], cf, 0
                if cf > best_fit:
                    best, best_dec, best_fit = cand[s].copy(), cdec[s].copy(), cf
                    if evals < config.budget:
                        bc, bd = _break(ci, best, rng, config.budget - evals)
                        evals += len(bc)
                        if len(bc):
                            feas.offer(bc, bd)
                            bfits = [fitness_from(d) for d in bd]
                            j = int(np.argmax(bfits))
                            if bfits[j] > best_fit:
                                best, best_dec, best_fit = bc[j].copy(), bd[j].copy(), bfits[j]
                                pop[s], dec[s], fit[s] = best, best_dec, best_fit
                continue
            stale[s] += 1
            if stale[s] >= config.stagnation:
                stale[s] = 0
                new = np.array(refract(pop[s], best, rng), dtype=np.int64)
                if np.array_equal(new, pop[s]) or evals >= config.budget:
                    continue
                ndec = ci.evaluate_many(new[None])[0]
                evals += 1
                feas.offer(new[None], ndec[None])
                pop[s], dec[s], fit[s] = new, ndec, fitness_from(ndec)
                if fit[s] > best_fit:
                    best, best_dec, best_fit = new.copy(), ndec.copy(), fit[s]
        trace.append(_trace_row(gen, evals, feas.reported(best, best_dec)[1], best_dec))
    out, out_dec = feas.reported(best, best_dec)
    return WwoResult(
        _to_tuple(out),
        *(float(v) for v in out_dec),
        evaluations=evals,
        generations=gen,
        trace=trace,
    )
