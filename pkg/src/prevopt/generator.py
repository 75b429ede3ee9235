"""Seeded synthetic data: optimization instances and resident feature tables."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .pfs import FeatureSchema
from .program_model import (
    BATCH_CEIL,
    NO_CHANGE,
    SUM_RULE,
    AggregationRule,
    AuxReplacement,
    Bundle,
    Community,
    Drug,
    DrugLine,
    Instance,
    Inventory,
    PreventionProgram,
    check_constraints,
    program_options,
    validate_instance,
)


@dataclass(frozen=True)
class GeneratorSpec:
    communities: int = 3
    programs: int = 4
    drugs: int = 8
    shared: int = 2
    nonshared: int = 1
    alternatives: int = 3
    tightness: float = 1.0
    seed: int = 0
    drugs_per_program: int = 4
    replaceable_per_program: int = 2

    def __post_init__(self):
        for name in ("communities", "programs", "drugs", "shared", "nonshared", "alternatives",
                     "drugs_per_program", "replaceable_per_program"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.drugs < 2:
            raise ValueError("need at least 2 drugs so alternatives exist")
        if not (self.tightness > 0 and math.isfinite(self.tightness)):
            raise ValueError("tightness must be a positive finite number")


def _eighths(rng, lo=1, hi=8) -> float:
    return int(rng.integers(lo, hi + 1)) / 8


def _ids(prefix: str, n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [f"{prefix}{i:0{width}d}" for i in range(1, n + 1)]


def generate_instance(spec: GeneratorSpec) -> Instance:
    """Random instance honoring every structural invariant.

    Availabilities are ``floor(tightness * base demand)``.  With tightness
    below 1 a random substitution solution is planted and availabilities are
    raised to cover it, so a feasible solution is guaranteed while the
    unchanged programs stay infeasible.
    """
    rng = np.random.default_rng(spec.seed)
    drug_ids = _ids("D", spec.drugs)
    n_main = max(1, spec.drugs // 4)
    main = set(rng.choice(drug_ids, size=n_main, replace=False).tolist())
    drugs = tuple(Drug(d, f"drug {d}", d in main) for d in drug_ids)
    shared_ids = _ids("G", spec.shared)
    nonshared_ids = _ids("F", spec.nonshared)
    comm_ids = _ids("C", spec.communities)

    with_alts = [d for d in drug_ids if rng.random() < 0.6] or [drug_ids[0]]
    alternatives = {}
    for d in with_alts:
        others = [o for o in drug_ids if o != d]
        bundles = []
        for _ in range(spec.alternatives):
            aux = ()
            if d in main and rng.random() < 0.5 and len(others) >= 2:
                rem, add = rng.choice(others, size=2, replace=False).tolist()
                aux = (AuxReplacement(rem, add, int(rng.integers(2, 9))),)
            sd = {g: int(rng.choice([-1, 1])) for g in shared_ids if rng.random() < 0.3}
            nd = {f: int(rng.choice([-1, 1])) for f in nonshared_ids if rng.random() < 0.3}
            bundles.append(Bundle(str(rng.choice(others)), int(rng.integers(3, 16)), aux, sd, nd))
        alternatives[d] = tuple(bundles)

    communities = tuple(Community(c, _eighths(rng), {}) for c in comm_ids)
    programs = []
    for j, pid in enumerate(_ids("P", spec.programs)):
        k = min(spec.drugs_per_program, spec.drugs)
        chosen = rng.choice(drug_ids, size=k, replace=False).tolist()
        if j == 0 and not any(c in alternatives for c in chosen):
            chosen[0] = with_alts[0]
        presc = {d: DrugLine(int(rng.integers(3, 16)), _eighths(rng)) for d in sorted(chosen)}
        cand = [d for d in sorted(chosen) if d in alternatives]
        n_rep = min(len(cand), spec.replaceable_per_program)
        rep = sorted(rng.choice(cand, size=n_rep, replace=False).tolist()) if n_rep else []
        n_cov = int(rng.integers(1, min(spec.communities, 3) + 1))
        cov_ids = sorted(rng.choice(comm_ids, size=n_cov, replace=False).tolist())
        coverage = {c: int(rng.integers(5, 41)) for c in cov_ids}
        programs.append(
            PreventionProgram(
                id=pid,
                weight=_eighths(rng),
                users=sum(coverage.values()),
                coverage=coverage,
                prescription=presc,
                replaceable=tuple(rep),
                shared={g: int(rng.integers(1, 4)) for g in shared_ids if rng.random() < 0.7},
                nonshared={f: int(rng.integers(1, 4)) for f in nonshared_ids if rng.random() < 0.7},
            )
        )
    shared_rules = {g: (AggregationRule(BATCH_CEIL, 50) if i == 0 else SUM_RULE) for i, g in enumerate(shared_ids)}
    nonshared_rules = {f: SUM_RULE for f in nonshared_ids}
    inst = Instance(
        drugs=drugs,
        alternatives=alternatives,
        communities=communities,
        programs=tuple(programs),
        inventory=Inventory({d: 0 for d in drug_ids}, {g: 0 for g in shared_ids}),
        shared_rules=shared_rules,
        nonshared_rules=nonshared_rules,
    )

    base = check_constraints(inst, tuple(NO_CHANGE for _ in programs))
    planted = None
    if spec.tightness < 1:
        changeable = [j for j in range(len(programs)) if len(program_options(inst, j)) > 1]
        for _ in range(100):
            sol = [NO_CHANGE] * len(programs)
            for j in changeable:
                if rng.random() < 0.5:
                    opts = program_options(inst, j)[1:]
                    sol[j] = opts[int(rng.integers(len(opts)))]
            if all(p == NO_CHANGE for p in sol):
                j = changeable[int(rng.integers(len(changeable)))]
                opts = program_options(inst, j)[1:]
                sol[j] = opts[int(rng.integers(len(opts)))]
            rep = check_constraints(inst, tuple(sol))
            if any(p.demand < b.demand and b.demand > 0 for p, b in zip(rep.rows, base.rows)):
                planted = (tuple(sol), rep)
                break

    def avail(i):
        cap = math.floor(spec.tightness * base.rows[i].demand)
        if planted is not None:
            cap = max(cap, planted[1].rows[i].demand)
        return cap

    drug_av, shared_av, comm_av = {}, {}, {c: {} for c in comm_ids}
    for i, row in enumerate(base.rows):
        if row.kind == "drug":
            drug_av[row.resource] = avail(i)
        elif row.kind == "shared":
            shared_av[row.resource] = avail(i)
        else:
            comm_av[row.community][row.resource] = avail(i)
    meta = {
        "generator": asdict(spec),
        "planted_solution": [list(p) for p in planted[0]] if planted else None,
        "feasible_guaranteed": spec.tightness >= 1 or planted is not None,
    }
    inst = Instance(
        drugs=drugs,
        alternatives=alternatives,
        communities=tuple(Community(c.id, c.weight, comm_av[c.id]) for c in communities),
        programs=tuple(programs),
        inventory=Inventory(drug_av, shared_av),
        shared_rules=shared_rules,
        nonshared_rules=nonshared_rules,
        metadata=meta,
    )
    meta["base_feasible"] = check_constraints(inst, tuple(NO_CHANGE for _ in programs)).feasible
    validate_instance(inst)
    return inst


def cloud_points(n_clouds: int, n: int, D: int, spread: float = 0.05, seed: int = 0,
                 missing_rate: float = 0.0):
    """PFN points scattered around ``n_clouds`` random real-valued prototypes.

    Each value ``v`` is encoded ``P(v, 1 - v)``; missing cells become
    ``P(0, 0)``.  Returns ``(points, labels)``.
    """
    rng = np.random.default_rng(seed)
    centers = rng.random((n_clouds, D))
    labels = np.arange(n) % n_clouds
    v = np.clip(centers[labels] + rng.normal(0.0, spread, (n, D)), 0.0, 1.0)
    pts = np.stack([v, 1.0 - v], axis=-1)
    if missing_rate > 0:
        pts[rng.random((n, D)) < missing_rate] = 0.0
    return pts, labels


def generate_residents(schema: FeatureSchema, n: int, n_clouds: int = 4, missing_rate: float = 0.3,
                       spread: float = 0.08, seed: int = 0):
    """Raw resident rows (``None`` = missing) drawn around ``n_clouds`` prototypes.

    Returns ``(rows, labels)``; real values are rounded to 4 decimals.
    """
    rng = np.random.default_rng(seed)
    D = len(schema)
    centers = rng.uniform(0.1, 0.9, (n_clouds, D))
    probs = np.where(rng.random((n_clouds, D)) < 0.5, 0.1, 0.9)
    labels = rng.integers(0, n_clouds, n)
    rows = []
    for i in range(n):
        row = []
        for d, desc in enumerate(schema.descriptors):
            if rng.random() < missing_rate:
                row.append(None)
            elif desc.kind == "binary":
                row.append(1 if rng.random() < probs[labels[i], d] else 0)
            else:
                row.append(round(float(np.clip(centers[labels[i], d] + rng.normal(0, spread), 0, 1)), 4))
        rows.append(row)
    return rows, labels
