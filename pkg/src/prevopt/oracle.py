"""Brute-force reference evaluation and enumeration.

Nothing here calls the substitution, aggregation, or cost code of
``program_model`` or ``wwo``; it reads instance fields directly so that it
can serve as an independent check on the solver.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, EncodingError
from .program_model import Instance

DEFAULT_BUDGET = 10**6
_CHUNK = 1 << 16


def _substitute(inst: Instance, j: int, pair):
    """Drug quantities, shared and non-shared usage of program ``j`` after ``pair``."""
    p = inst.programs[j]
    drugs = {k: line.quantity for k, line in p.prescription.items()}
    shared = dict(p.shared)
    nonshared = dict(p.nonshared)
    x, xb = pair
    if x == 0 and xb == 0:
        return drugs, shared, nonshared, 0.0
    order = sorted(p.prescription)
    if not (1 <= x <= len(order)) or order[x - 1] not in p.replaceable:
        raise EncodingError(f"oracle: bad position {x} for program {p.id}")
    old = order[x - 1]
    bundles = inst.alternatives.get(old, ())
    if not (1 <= xb <= len(bundles)):
        raise EncodingError(f"oracle: bad bundle {xb} for program {p.id}")
    bundle = bundles[xb - 1]
    weight = p.prescription[old].weight
    del drugs[old]
    drugs[bundle.drug] = drugs.get(bundle.drug, 0) + bundle.quantity
    removed = {old}
    for aux in bundle.auxiliary:
        if aux.remove in drugs and aux.remove not in removed:
            del drugs[aux.remove]
            removed.add(aux.remove)
            drugs[aux.add] = drugs.get(aux.add, 0) + aux.quantity
    for k, d in bundle.shared_delta.items():
        shared[k] = max(0, shared.get(k, 0) + d)
    for k, d in bundle.nonshared_delta.items():
        nonshared[k] = max(0, nonshared.get(k, 0) + d)
    return drugs, shared, nonshared, weight * xb


def _cost(inst: Instance, j: int, dev: float) -> float:
    if dev == 0:
        return 0.0
    p = inst.programs[j]
    w = {c.id: c.weight for c in inst.communities}
    total = 0.0
    for cid, n in p.coverage.items():
        if n > 0:
            total += p.weight * w[cid] * dev
    return total


def _rows(inst: Instance):
    """Constraint rows as ``(kind, resource, community, availability, rule)``."""
    rows = []
    for d in inst.drugs:
        rows.append(("drug", d.id, None, inst.inventory.drugs.get(d.id, 0), ("sum", None)))
    shared, nonshared = set(inst.inventory.shared) | set(inst.shared_rules), set(inst.nonshared_rules)
    for c in inst.communities:
        nonshared |= set(c.nonshared)
    for p in inst.programs:
        shared |= set(p.shared)
        nonshared |= set(p.nonshared)
    for bundles in inst.alternatives.values():
        for b in bundles:
            shared |= set(b.shared_delta)
            nonshared |= set(b.nonshared_delta)
    for rid in sorted(shared):
        r = inst.shared_rules.get(rid)
        rule = (r.kind, r.batch_size) if r else ("sum", None)
        rows.append(("shared", rid, None, inst.inventory.shared.get(rid, 0), rule))
    for c in inst.communities:
        for rid in sorted(nonshared):
            r = inst.nonshared_rules.get(rid)
            rule = (r.kind, r.batch_size) if r else ("sum", None)
            rows.append(("nonshared", rid, c.id, c.nonshared.get(rid, 0), rule))
    return rows


def _line(kind, rid, cid, j, inst, usage):
    """``(count, quantity)`` of program ``j`` on one row, or None if unused."""
    drugs, shared, nonshared = usage
    p = inst.programs[j]
    if kind == "drug":
        return (p.users, drugs[rid]) if rid in drugs else None
    if kind == "shared":
        return (p.users, shared[rid]) if rid in shared else None
    n = p.coverage.get(cid, 0)
    return (n, nonshared[rid]) if rid in nonshared and n > 0 else None


def recompute_fitness(inst: Instance, solution) -> tuple[float, float, float, float]:
    """``(f, v_drug, v_shared, v_nonshared)`` by direct evaluation."""
    if len(solution) != len(inst.programs):
        raise EncodingError("oracle: solution length differs from program count")
    usages, f = [], 0.0
    for j, pair in enumerate(solution):
        drugs, shared, nonshared, dev = _substitute(inst, j, tuple(pair))
        usages.append((drugs, shared, nonshared))
        f += _cost(inst, j, dev)
    v = {"drug": 0.0, "shared": 0.0, "nonshared": 0.0}
    for kind, rid, cid, avail, (rule, b) in _rows(inst):
        lines = [ln for j in range(len(usages)) if (ln := _line(kind, rid, cid, j, inst, usages[j])) is not None]
        if rule == "batch_ceil":
            demand = 0
            for n, q in lines:
                demand += math.ceil(n * q / b)
        else:
            demand = 0
            for n, q in lines:
                demand += n * q
            if rule == "batch_ceil_pooled":
                demand = math.ceil(demand / b)
        if demand > avail:
            v[kind] += demand - avail
    return f, v["drug"], v["shared"], v["nonshared"]


def options(inst: Instance, j: int) -> list[tuple[int, int]]:
    p = inst.programs[j]
    out = [(0, 0)]
    for x, drug in enumerate(sorted(p.prescription), 1):
        if drug in p.replaceable:
            out.extend((x, b) for b in range(1, len(inst.alternatives.get(drug, ())) + 1))
    return out


@dataclass(frozen=True)
class OracleResult:
    solution: tuple
    f: float
    feasible: bool
    violation: float
    space: int


def enumerate_optimum(inst: Instance, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Exhaustive search over every solution.

    Returns the feasible solution with minimum objective, or if none is
    feasible, the one with minimum total violation (ties by objective).
    Remaining ties go to the lexicographically smallest solution.
    """
    opts = [options(inst, j) for j in range(len(inst.programs))]
    space = math.prod(len(o) for o in opts)
    if space > budget:
        raise BudgetError(f"solution space {space} exceeds budget {budget}")
    rows = _rows(inst)
    R = len(rows)
    avail = np.array([r[3] for r in rows], dtype=float)
    pooled = np.array([r[4][1] if r[4][0] == "batch_ceil_pooled" else 0 for r in rows], dtype=float)
    per_line_ceil = [r[4][0] == "batch_ceil" for r in rows]

    tables, costs = [], []
    for j, oj in enumerate(opts):
        tab = np.zeros((len(oj), R))
        cst = np.zeros(len(oj))
        for o, pair in enumerate(oj):
            drugs, shared, nonshared, dev = _substitute(inst, j, pair)
            cst[o] = _cost(inst, j, dev)
            for r, (kind, rid, cid, _, (rule, b)) in enumerate(rows):
                ln = _line(kind, rid, cid, j, inst, (drugs, shared, nonshared))
                if ln is None:
                    continue
                tab[o, r] = math.ceil(ln[0] * ln[1] / b) if per_line_ceil[r] else ln[0] * ln[1]
        tables.append(tab)
        costs.append(cst)

    n = len(opts)
    split = n
    while split > 0 and math.prod(len(o) for o in opts[split - 1:]) <= _CHUNK:
        split -= 1
    suffix = range(split, n)
    best_key, best_idx = None, None
    for prefix in itertools.product(*(range(len(o)) for o in opts[:split])):
        tot = np.zeros((1, R))
        cost = np.zeros(1)
        for j, o in zip(range(split), prefix):
            tot = tot + tables[j][o]
            cost = cost + costs[j][o]
        for j in suffix:
            tot = (tot[:, None, :] + tables[j][None, :, :]).reshape(-1, R)
            cost = (cost[:, None] + costs[j][None, :]).reshape(-1)
        demand = np.where(pooled > 0, np.ceil(tot / np.where(pooled > 0, pooled, 1)), tot)
        viol = np.maximum(demand - avail, 0.0).sum(axis=1)
        feas = viol == 0
        if feas.any():
            k = int(np.flatnonzero(feas)[np.argmin(cost[feas])])
            key = (0, 0.0, float(cost[k]))
        else:
            k = int(np.lexsort((cost, viol))[0])
            key = (1, float(viol[k]), float(cost[k]))
        if best_key is None or key < best_key:
            sub = np.unravel_index(k, [len(opts[j]) for j in suffix]) if suffix else ()
            best_key, best_idx = key, tuple(prefix) + tuple(int(s) for s in sub)
    solution = tuple(opts[j][o] for j, o in enumerate(best_idx))
    return OracleResult(
        solution=solution,
        f=best_key[2],
        feasible=best_key[0] == 0,
        violation=best_key[1],
        space=space,
    )
