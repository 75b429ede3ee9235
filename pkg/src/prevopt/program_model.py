"""Prevention programs, substitution bundles, and resource constraints.

Drug positions inside a prescription are 1-based and follow the sorted
order of drug ids, so the integer encoding of a solution survives
serialization.  A solution is one ``(position, bundle)`` pair per program;
``(0, 0)`` is the reserved "unchanged" pair.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import EncodingError, FormatVersionError, InstanceValidationError

FORMAT_VERSION = 1
NO_CHANGE = (0, 0)

SUM = "sum"
BATCH_CEIL = "batch_ceil"
BATCH_CEIL_POOLED = "batch_ceil_pooled"
RULE_KINDS = (SUM, BATCH_CEIL, BATCH_CEIL_POOLED)


@dataclass(frozen=True)
class Drug:
    id: str
    name: str = ""
    main: bool = False


@dataclass(frozen=True)
class AuxReplacement:
    remove: str
    add: str
    quantity: float


@dataclass(frozen=True)
class Bundle:
    """One ranked alternative for a replaceable drug."""

    drug: str
    quantity: float
    auxiliary: tuple[AuxReplacement, ...] = ()
    shared_delta: dict = field(default_factory=dict)
    nonshared_delta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Community:
    id: str
    weight: float
    nonshared: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DrugLine:
    quantity: float
    weight: float


@dataclass(frozen=True)
class PreventionProgram:
    id: str
    weight: float
    users: int
    coverage: dict  # community id -> residents using the program there
    prescription: dict  # drug id -> DrugLine
    replaceable: tuple[str, ...] = ()
    shared: dict = field(default_factory=dict)
    nonshared: dict = field(default_factory=dict)

    def positions(self) -> list[str]:
        """Drug ids in position order (position ``p`` is ``positions()[p - 1]``)."""
        return sorted(self.prescription)

    def covered(self) -> list[str]:
        return [cid for cid, n in self.coverage.items() if n > 0]


@dataclass(frozen=True)
class AggregationRule:
    kind: str = SUM
    batch_size: int | None = None

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown aggregation rule {self.kind!r}")
        if self.kind != SUM and (not isinstance(self.batch_size, int) or self.batch_size <= 0):
            raise ValueError(f"{self.kind} needs a positive integer batch_size")

    def to_dict(self) -> dict:
        if self.kind == SUM:
            return {"kind": SUM}
        return {"kind": self.kind, "batch_size": self.batch_size}


SUM_RULE = AggregationRule()


@dataclass(frozen=True)
class Inventory:
    drugs: dict = field(default_factory=dict)
    shared: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Instance:
    drugs: tuple[Drug, ...]
    alternatives: dict  # drug id -> tuple[Bundle, ...] in decreasing priority
    communities: tuple[Community, ...]
    programs: tuple[PreventionProgram, ...]
    inventory: Inventory
    shared_rules: dict = field(default_factory=dict)
    nonshared_rules: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.programs)

    def community(self, cid: str) -> Community:
        for c in self.communities:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def shared_rule(self, rid: str) -> AggregationRule:
        return self.shared_rules.get(rid, SUM_RULE)

    def nonshared_rule(self, rid: str) -> AggregationRule:
        return self.nonshared_rules.get(rid, SUM_RULE)

    def shared_ids(self) -> list[str]:
        ids = set(self.inventory.shared) | set(self.shared_rules)
        for p in self.programs:
            ids |= set(p.shared)
        for bundles in self.alternatives.values():
            for b in bundles:
                ids |= set(b.shared_delta)
        return sorted(ids)

    def nonshared_ids(self) -> list[str]:
        ids = set(self.nonshared_rules)
        for c in self.communities:
            ids |= set(c.nonshared)
        for p in self.programs:
            ids |= set(p.nonshared)
        for bundles in self.alternatives.values():
            for b in bundles:
                ids |= set(b.nonshared_delta)
        return sorted(ids)

    def with_programs(self, programs: Sequence[PreventionProgram]) -> "Instance":
        return replace(self, programs=tuple(programs))


# ---------------------------------------------------------------- serialization


def _bundle_to_dict(b: Bundle) -> dict:
    return {
        "drug": b.drug,
        "quantity": b.quantity,
        "auxiliary": [{"remove": a.remove, "add": a.add, "quantity": a.quantity} for a in b.auxiliary],
        "shared_delta": dict(b.shared_delta),
        "nonshared_delta": dict(b.nonshared_delta),
    }


def _bundle_from_dict(d: dict) -> Bundle:
    return Bundle(
        drug=d["drug"],
        quantity=d["quantity"],
        auxiliary=tuple(AuxReplacement(a["remove"], a["add"], a["quantity"]) for a in d.get("auxiliary", [])),
        shared_delta=dict(d.get("shared_delta", {})),
        nonshared_delta=dict(d.get("nonshared_delta", {})),
    )


def program_to_dict(p: PreventionProgram) -> dict:
    return {
        "id": p.id,
        "weight": p.weight,
        "users": p.users,
        "coverage": dict(p.coverage),
        "prescription": {k: {"quantity": v.quantity, "weight": v.weight} for k, v in p.prescription.items()},
        "replaceable": list(p.replaceable),
        "shared": dict(p.shared),
        "nonshared": dict(p.nonshared),
    }


def program_from_dict(d: dict) -> PreventionProgram:
    try:
        return PreventionProgram(
            id=d["id"],
            weight=d["weight"],
            users=d["users"],
            coverage=dict(d["coverage"]),
            prescription={k: DrugLine(v["quantity"], v["weight"]) for k, v in d["prescription"].items()},
            replaceable=tuple(d.get("replaceable", [])),
            shared=dict(d.get("shared", {})),
            nonshared=dict(d.get("nonshared", {})),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise InstanceValidationError([f"program {d.get('id', '?') if isinstance(d, dict) else '?'}: malformed ({exc!r})"]) from None


def instance_to_dict(inst: Instance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "drugs": [{"id": d.id, "name": d.name, "main": d.main} for d in inst.drugs],
        "alternatives": {k: [_bundle_to_dict(b) for b in v] for k, v in inst.alternatives.items()},
        "communities": [
            {"id": c.id, "weight": c.weight, "nonshared": dict(c.nonshared)} for c in inst.communities
        ],
        "programs": [program_to_dict(p) for p in inst.programs],
        "inventory": {"drugs": dict(inst.inventory.drugs), "shared": dict(inst.inventory.shared)},
        "aggregation_rules": {
            "shared": {k: r.to_dict() for k, r in inst.shared_rules.items()},
            "nonshared": {k: r.to_dict() for k, r in inst.nonshared_rules.items()},
        },
        "metadata": dict(inst.metadata),
    }


def _rule(d: dict) -> AggregationRule:
    return AggregationRule(d.get("kind", SUM), d.get("batch_size"))


def instance_from_dict(doc: dict, validate: bool = True) -> Instance:
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported instance format_version {doc.get('format_version')!r}")
    try:
        rules = doc.get("aggregation_rules", {})
        inst = Instance(
            drugs=tuple(Drug(d["id"], d.get("name", ""), bool(d.get("main", False))) for d in doc["drugs"]),
            alternatives={k: tuple(_bundle_from_dict(b) for b in v) for k, v in doc["alternatives"].items()},
            communities=tuple(
                Community(c["id"], c["weight"], dict(c.get("nonshared", {}))) for c in doc["communities"]
            ),
            programs=tuple(program_from_dict(p) for p in doc["programs"]),
            inventory=Inventory(dict(doc["inventory"].get("drugs", {})), dict(doc["inventory"].get("shared", {}))),
            shared_rules={k: _rule(v) for k, v in rules.get("shared", {}).items()},
            nonshared_rules={k: _rule(v) for k, v in rules.get("nonshared", {}).items()},
            metadata=dict(doc.get("metadata", {})),
        )
    except KeyError as exc:
        raise InstanceValidationError([f"missing section or field {exc}"]) from None
    except ValueError as exc:
        raise InstanceValidationError([str(exc)]) from None
    if validate:
        validate_instance(inst)
    return inst


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def save_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(inst))


def load_instance(path, validate: bool = True) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh), validate=validate)


def dumps_solution(solution) -> str:
    return json.dumps([[int(a), int(b)] for a, b in solution]) + "\n"


def solution_from_json(doc) -> tuple[tuple[int, int], ...]:
    if isinstance(doc, dict):
        doc = doc["solution"]
    return tuple((int(a), int(b)) for a, b in doc)


# ------------------------------------------------------------------ validation


def _nonneg(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) and x >= 0


def program_problems(inst: Instance, p: PreventionProgram) -> list[str]:
    """Structural problems of one program against an instance's catalog."""
    out = []
    tag = f"program {p.id}"
    drug_ids = {d.id for d in inst.drugs}
    comm_ids = {c.id for c in inst.communities}
    if not _nonneg(p.weight):
        out.append(f"{tag}.weight must be a finite number >= 0")
    if not isinstance(p.users, int) or isinstance(p.users, bool) or p.users < 0:
        out.append(f"{tag}.users must be a non-negative integer")
    for cid, n in p.coverage.items():
        if cid not in comm_ids:
            out.append(f"{tag}.coverage: unknown community {cid!r}")
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            out.append(f"{tag}.coverage[{cid}] must be a non-negative integer")
    if all(isinstance(n, int) for n in p.coverage.values()) and sum(p.coverage.values()) != p.users:
        out.append(f"{tag}.users={p.users} differs from coverage total {sum(p.coverage.values())}")
    for k, line in p.prescription.items():
        if k not in drug_ids:
            out.append(f"{tag}.prescription: unknown drug {k!r}")
        if not isinstance(line, DrugLine):
            out.append(f"{tag}.prescription[{k}] malformed")
            continue
        if not _nonneg(line.quantity):
            out.append(f"{tag}.prescription[{k}].quantity must be >= 0")
        if not _nonneg(line.weight):
            out.append(f"{tag}.prescription[{k}].weight must be >= 0")
    if len(set(p.replaceable)) != len(p.replaceable):
        out.append(f"{tag}.replaceable has duplicates")
    for k in p.replaceable:
        if k not in p.prescription:
            out.append(f"{tag}.replaceable: {k!r} not in prescription")
        if not inst.alternatives.get(k):
            out.append(f"{tag}.replaceable: {k!r} has no alternatives")
    for section in ("shared", "nonshared"):
        for k, q in getattr(p, section).items():
            if not _nonneg(q):
                out.append(f"{tag}.{section}[{k}] must be >= 0")
    return out


def instance_problems(inst: Instance) -> list[str]:
    out = []
    ids = [d.id for d in inst.drugs]
    if len(set(ids)) != len(ids):
        out.append("drugs: duplicate ids")
    drugs = {d.id: d for d in inst.drugs}
    for k, bundles in inst.alternatives.items():
        if k not in drugs:
            out.append(f"alternatives: unknown drug {k!r}")
            continue
        for i, b in enumerate(bundles, 1):
            tag = f"alternatives[{k}][{i}]"
            if b.drug not in drugs:
                out.append(f"{tag}: unknown replacement drug {b.drug!r}")
            if b.drug == k:
                out.append(f"{tag}: replacement equals the original drug")
            if not _nonneg(b.quantity):
                out.append(f"{tag}.quantity must be >= 0")
            if b.auxiliary and not drugs[k].main:
                out.append(f"{tag}: auxiliary replacements only allowed for main drugs")
            for a in b.auxiliary:
                if a.remove not in drugs or a.add not in drugs:
                    out.append(f"{tag}: auxiliary refers to unknown drug")
                if not _nonneg(a.quantity):
                    out.append(f"{tag}: auxiliary quantity must be >= 0")
    cids = [c.id for c in inst.communities]
    if len(set(cids)) != len(cids):
        out.append("communities: duplicate ids")
    for c in inst.communities:
        if not _nonneg(c.weight):
            out.append(f"community {c.id}.weight must be a finite number >= 0")
        for k, q in c.nonshared.items():
            if not _nonneg(q):
                out.append(f"community {c.id}.nonshared[{k}] must be >= 0")
    pids = [p.id for p in inst.programs]
    if len(set(pids)) != len(pids):
        out.append("programs: duplicate ids")
    for p in inst.programs:
        out.extend(program_problems(inst, p))
    for section in ("drugs", "shared"):
        for k, q in getattr(inst.inventory, section).items():
            if not _nonneg(q):
                out.append(f"inventory.{section}[{k}] must be >= 0")
    for k in inst.inventory.drugs:
        if k not in drugs:
            out.append(f"inventory.drugs: unknown drug {k!r}")
    return out


def validate_instance(inst: Instance) -> None:
    problems = instance_problems(inst)
    if problems:
        raise InstanceValidationError(problems)


# ------------------------------------------------------------------- solutions


def replaceable_positions(p: PreventionProgram) -> list[int]:
    rep = set(p.replaceable)
    return [i for i, k in enumerate(p.positions(), 1) if k in rep]


def program_options(inst: Instance, j: int) -> list[tuple[int, int]]:
    """All valid pairs for program ``j``: unchanged first, then by position and bundle."""
    p = inst.programs[j]
    pos = p.positions()
    opts = [NO_CHANGE]
    for x in replaceable_positions(p):
        opts.extend((x, b) for b in range(1, len(inst.alternatives[pos[x - 1]]) + 1))
    return opts


def space_size(inst: Instance) -> int:
    size = 1
    for j in range(inst.N):
        size *= len(program_options(inst, j))
    return size


def check_pair(program: PreventionProgram, pair, alternatives: Mapping) -> None:
    x, xb = pair
    if (x, xb) == NO_CHANGE:
        return
    pos = program.positions()
    if not (1 <= x <= len(pos)):
        raise EncodingError(f"program {program.id}: position {x} outside 1..{len(pos)}")
    drug = pos[x - 1]
    if drug not in program.replaceable:
        raise EncodingError(f"program {program.id}: drug {drug!r} at position {x} is not replaceable")
    n_alt = len(alternatives.get(drug, ()))
    if not (1 <= xb <= n_alt):
        raise EncodingError(f"program {program.id}: bundle {xb} outside 1..{n_alt} for {drug!r}")


def check_solution(inst: Instance, solution) -> None:
    if len(solution) != inst.N:
        raise EncodingError(f"solution has {len(solution)} pairs for {inst.N} programs")
    for p, pair in zip(inst.programs, solution):
        check_pair(p, pair, inst.alternatives)


def _merge_line(presc: dict, drug: str, qty, weight) -> None:
    if drug in presc:
        old = presc[drug]
        presc[drug] = DrugLine(old.quantity + qty, old.weight)
    else:
        presc[drug] = DrugLine(qty, weight)


def apply_update(program: PreventionProgram, pair, alternatives: Mapping) -> PreventionProgram:
    """The program after substituting bundle ``pair[1]`` for the drug at ``pair[0]``.

    The original line is dropped and the replacement added at the bundle's
    quantity, inheriting the original line's importance weight (quantities
    add up if the replacement is already prescribed).  Auxiliary triples
    swap ``remove`` for ``add`` when ``remove`` is prescribed.  Resource
    deltas are added and floored at zero.
    """
    check_pair(program, pair, alternatives)
    if tuple(pair) == NO_CHANGE:
        return program
    x, xb = pair
    drug = program.positions()[x - 1]
    bundle = alternatives[drug][xb - 1]
    presc = dict(program.prescription)
    removed = presc.pop(drug)
    _merge_line(presc, bundle.drug, bundle.quantity, removed.weight)
    gone = {drug}
    for aux in bundle.auxiliary:
        if aux.remove in presc and aux.remove not in gone:
            old = presc.pop(aux.remove)
            gone.add(aux.remove)
            _merge_line(presc, aux.add, aux.quantity, old.weight)
    shared = dict(program.shared)
    for k, d in bundle.shared_delta.items():
        shared[k] = max(0, shared.get(k, 0) + d)
    nonshared = dict(program.nonshared)
    for k, d in bundle.nonshared_delta.items():
        nonshared[k] = max(0, nonshared.get(k, 0) + d)
    replaceable = [k for k in program.replaceable if k in presc and k not in gone]
    if bundle.drug not in replaceable and alternatives.get(bundle.drug):
        replaceable.append(bundle.drug)
    return replace(
        program,
        prescription={k: presc[k] for k in sorted(presc)},
        replaceable=tuple(replaceable),
        shared=shared,
        nonshared=nonshared,
    )


def deviation(program: PreventionProgram, pair) -> float:
    """Importance weight of the replaced drug times the 1-based bundle index."""
    x, xb = pair
    if (x, xb) == NO_CHANGE:
        return 0.0
    pos = program.positions()
    if not (1 <= x <= len(pos)) or xb < 1:
        raise EncodingError(f"program {program.id}: invalid pair {pair}")
    return program.prescription[pos[x - 1]].weight * xb


def program_cost(inst: Instance, j: int, pair) -> float:
    p = inst.programs[j]
    dev = deviation(p, pair)
    if dev == 0:
        return 0.0
    weights = {c.id: c.weight for c in inst.communities}
    total = 0.0
    for cid in p.covered():
        total += p.weight * weights[cid] * dev
    return total


def objective(inst: Instance, solution) -> float:
    check_solution(inst, solution)
    total = 0.0
    for j, pair in enumerate(solution):
        total += program_cost(inst, j, pair)
    return total


def aggregate(usages: Iterable[tuple[float, float]], rule: AggregationRule = SUM_RULE) -> float:
    """Total demand of ``(count, per-unit quantity)`` usage lines under ``rule``.

    ``batch_ceil`` rounds every line up to whole batches; ``batch_ceil_pooled``
    rounds the pooled total once.
    """
    if rule.kind == SUM:
        total = 0
        for n, q in usages:
            total += n * q
        return total
    b = rule.batch_size
    if rule.kind == BATCH_CEIL:
        total = 0
        for n, q in usages:
            total += math.ceil(n * q / b)
        return total
    raw = 0
    for n, q in usages:
        raw += n * q
    return math.ceil(raw / b)


@dataclass(frozen=True)
class ConstraintRow:
    kind: str  # "drug" | "shared" | "nonshared"
    resource: str
    community: str | None
    demand: float
    available: float

    @property
    def slack(self) -> float:
        return self.available - self.demand


@dataclass(frozen=True)
class ConstraintReport:
    rows: tuple[ConstraintRow, ...]

    @property
    def feasible(self) -> bool:
        return all(r.slack >= 0 for r in self.rows)

    def violation(self, kind: str) -> float:
        total = 0.0
        for r in self.rows:
            if r.kind == kind and r.slack < 0:
                total += -r.slack
        return total

    def to_list(self) -> list[dict]:
        return [
            {
                "kind": r.kind,
                "resource": r.resource,
                "community": r.community,
                "demand": r.demand,
                "available": r.available,
                "slack": r.slack,
            }
            for r in self.rows
        ]


def updated_programs(inst: Instance, solution) -> list[PreventionProgram]:
    check_solution(inst, solution)
    return [apply_update(p, pair, inst.alternatives) for p, pair in zip(inst.programs, solution)]


def report_for_programs(inst: Instance, programs: Sequence[PreventionProgram]) -> ConstraintReport:
    """Demands of ``programs`` against the instance inventory."""
    rows = []
    for d in inst.drugs:
        lines = [(p.users, p.prescription[d.id].quantity) for p in programs if d.id in p.prescription]
        rows.append(ConstraintRow("drug", d.id, None, aggregate(lines), inst.inventory.drugs.get(d.id, 0)))
    for rid in inst.shared_ids():
        lines = [(p.users, p.shared[rid]) for p in programs if rid in p.shared]
        rows.append(
            ConstraintRow("shared", rid, None, aggregate(lines, inst.shared_rule(rid)), inst.inventory.shared.get(rid, 0))
        )
    nonshared = inst.nonshared_ids()
    for c in inst.communities:
        for rid in nonshared:
            lines = [
                (p.coverage[c.id], p.nonshared[rid])
                for p in programs
                if rid in p.nonshared and p.coverage.get(c.id, 0) > 0
            ]
            rows.append(
                ConstraintRow("nonshared", rid, c.id, aggregate(lines, inst.nonshared_rule(rid)), c.nonshared.get(rid, 0))
            )
    return ConstraintReport(tuple(rows))


def check_constraints(inst: Instance, solution) -> ConstraintReport:
    return report_for_programs(inst, updated_programs(inst, solution))


def all_unchanged(inst: Instance) -> tuple[tuple[int, int], ...]:
    return tuple(NO_CHANGE for _ in inst.programs)
