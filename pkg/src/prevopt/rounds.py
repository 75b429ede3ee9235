"""Multi-round optimize / review / close workflow with file-based review.

A round runs the optimizer on the current instance and writes a review
bundle: one editable entry per program with a ``status`` field starting at
``pending``.  A reviewer (or a scripted policy) marks each entry
``approved`` or ``modified``, possibly editing the entry's ``after``
program.  Closing the round either yields the final program set or opens
a new round whose base programs are the reviewed ones.

Directory layout::

    state.json                  round counter, status and history
    round_001_instance.json     instance optimized in round 1
    round_001_review.json       editable review bundle
    round_001_trace.csv         optimizer trace
    final.json                  written once the loop terminates
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

from .csvio import write_table
from .errors import FormatVersionError, InstanceValidationError, NotCloseableError, SchemaError
from .program_model import (
    NO_CHANGE,
    Instance,
    Inventory,
    Community,
    PreventionProgram,
    deviation,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    program_cost,
    program_from_dict,
    program_problems,
    program_to_dict,
    report_for_programs,
    save_instance,
    updated_programs,
)
from .wwo import TRACE_FIELDS, WwoConfig, WwoResult, run_wwo

FORMAT_VERSION = 1
PENDING, APPROVED, MODIFIED = "pending", "approved", "modified"
STATUSES = (PENDING, APPROVED, MODIFIED)
POLICIES = ("manual", "auto-approve", "auto-revert")

STATE_FILE = "state.json"
FINAL_FILE = "final.json"


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def round_file(round_no: int, kind: str) -> str:
    ext = "csv" if kind == "trace" else "json"
    return f"round_{round_no:03d}_{kind}.{ext}"


# ------------------------------------------------------------- review bundle


def prescription_diff(before: PreventionProgram, after: PreventionProgram) -> dict:
    """Drug lines removed, added, and with changed quantity."""
    b, a = before.prescription, after.prescription
    return {
        "removed": {d: b[d].quantity for d in sorted(b) if d not in a},
        "added": {d: a[d].quantity for d in sorted(a) if d not in b},
        "changed": {d: [b[d].quantity, a[d].quantity] for d in sorted(b) if d in a and b[d].quantity != a[d].quantity},
    }


def build_review_bundle(inst: Instance, result: WwoResult, round_no: int) -> dict:
    after = updated_programs(inst, result.solution)
    report = report_for_programs(inst, after)
    entries = []
    for j, (p, q, pair) in enumerate(zip(inst.programs, after, result.solution)):
        entries.append(
            {
                "id": p.id,
                "status": PENDING,
                "pair": list(pair),
                "deviation": deviation(p, pair),
                "cost": program_cost(inst, j, pair),
                "diff": prescription_diff(p, q),
                "before": program_to_dict(p),
                "after": program_to_dict(q),
            }
        )
    return {
        "format_version": FORMAT_VERSION,
        "round": round_no,
        "feasible": report.feasible,
        "objective": result.f,
        "violations": {"drug": result.v_drug, "shared": result.v_shared, "nonshared": result.v_nonshared},
        "evaluations": result.evaluations,
        "programs": entries,
        "resources": report.to_list(),
    }


def dumps_bundle(bundle: dict) -> str:
    return _dumps(bundle)


def load_bundle(path) -> dict:
    doc = _read_json(path)
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported review bundle format_version {doc.get('format_version')!r}")
    return doc


def apply_policy(bundle: dict, policy: str) -> dict:
    """Scripted review decisions; only ``pending`` entries are touched.

    ``auto-approve`` approves every pending entry.  ``auto-revert`` marks the
    first substituted program of round 1 ``modified`` with its original
    definition and approves everything else, so a scripted loop exercises
    the modification path once and then terminates.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if policy == "manual":
        return bundle
    reverted = policy != "auto-revert" or bundle.get("round") != 1
    for entry in bundle["programs"]:
        if entry["status"] != PENDING:
            continue
        if not reverted and tuple(entry["pair"]) != NO_CHANGE:
            entry["after"] = json.loads(json.dumps(entry["before"]))
            entry["status"] = MODIFIED
            reverted = True
        else:
            entry["status"] = APPROVED
    return bundle


# --------------------------------------------------------------- round state


@dataclass
class RoundState:
    round: int
    instance: Instance
    solution: tuple | None = None
    statuses: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    status: str = "open"  # "open" while a bundle awaits review, then "final"

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "round": self.round,
            "status": self.status,
            "solution": None if self.solution is None else [list(p) for p in self.solution],
            "statuses": dict(self.statuses),
            "history": self.history,
        }

    @classmethod
    def from_dict(cls, doc: dict, instance: Instance) -> "RoundState":
        if doc.get("format_version") != FORMAT_VERSION:
            raise FormatVersionError(f"unsupported round state format_version {doc.get('format_version')!r}")
        sol = doc.get("solution")
        return cls(
            round=doc["round"],
            instance=instance,
            solution=None if sol is None else tuple(tuple(p) for p in sol),
            statuses=dict(doc.get("statuses", {})),
            history=list(doc.get("history", [])),
            status=doc.get("status", "open"),
        )


@dataclass(frozen=True)
class CloseOutcome:
    final: bool
    state: RoundState  # the closed state when final, otherwise the next round's state
    programs: tuple[PreventionProgram, ...]
    feasible: bool


def round_seed(config: WwoConfig, round_no: int) -> WwoConfig:
    return replace(config, seed=config.seed + round_no - 1)


def run_round(state: RoundState, wwo_config: WwoConfig) -> tuple[dict, WwoResult]:
    """Optimize the current instance and return a fresh review bundle."""
    result = run_wwo(state.instance, round_seed(wwo_config, state.round))
    bundle = build_review_bundle(state.instance, result, state.round)
    state.solution = result.solution
    state.statuses = {p.id: PENDING for p in state.instance.programs}
    state.status = "open"
    return bundle, result


def reviewed_programs(state: RoundState, bundle: dict) -> list[PreventionProgram]:
    """Programs as decided by the reviewer; raises on pending or invalid entries."""
    if bundle.get("round") != state.round:
        raise NotCloseableError(f"bundle is for round {bundle.get('round')}, state is at round {state.round}")
    entries = bundle["programs"]
    ids = [p.id for p in state.instance.programs]
    if [e.get("id") for e in entries] != ids:
        raise SchemaError("bundle program ids differ from the round's instance")
    pending = [e["id"] for e in entries if e.get("status") == PENDING]
    if pending:
        raise NotCloseableError(f"programs still pending review: {pending}")
    bad = [e["id"] for e in entries if e.get("status") not in STATUSES]
    if bad:
        raise SchemaError(f"unknown review status for programs {bad}")
    programs, problems = [], []
    for entry in entries:
        p = program_from_dict(entry["after"])
        if entry["status"] == MODIFIED:
            if p.id != entry["id"]:
                problems.append(f"program {entry['id']}.id must not change (got {p.id!r})")
            problems.extend(program_problems(state.instance, p))
        programs.append(p)
    if problems:
        raise InstanceValidationError(problems)
    return programs


def close_round(state: RoundState, bundle: dict) -> CloseOutcome:
    """Close a reviewed round.

    Approved-only rounds close finally when the optimizer's solution meets
    every constraint and are not closeable otherwise.  Rounds with
    modifications re-check constraints on the reviewed programs: the loop
    ends if they hold, else a new round opens on the reviewed programs.
    """
    programs = reviewed_programs(state, bundle)
    statuses = {e["id"]: e["status"] for e in bundle["programs"]}
    modified = any(s == MODIFIED for s in statuses.values())
    report = report_for_programs(state.instance, programs)
    if not modified and not report.feasible:
        raise NotCloseableError("solver found no feasible solution; modify programs or update inventory")
    state.statuses = statuses
    state.history.append(
        {
            "round": state.round,
            "solution": [list(p) for p in state.solution] if state.solution is not None else None,
            "objective": bundle["objective"],
            "violations": bundle["violations"],
            "solver_feasible": bundle["feasible"],
            "statuses": statuses,
            "reviewed_feasible": report.feasible,
            "outcome": "final" if report.feasible else "reopened",
        }
    )
    if report.feasible:
        state.status = "final"
        return CloseOutcome(True, state, tuple(programs), True)
    nxt = RoundState(
        round=state.round + 1,
        instance=state.instance.with_programs(programs),
        history=state.history,
    )
    return CloseOutcome(False, nxt, tuple(programs), False)


# ---------------------------------------------------------- inventory update


def apply_inventory_update(inst: Instance, update: dict) -> Instance:
    """Override availabilities listed in ``update``; other entries are kept.

    ``update`` has optional sections ``drugs``, ``shared`` and ``nonshared``
    (the latter keyed by community id, then resource id).
    """
    if update.get("format_version") != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported inventory update format_version {update.get('format_version')!r}")
    drug_ids = {d.id for d in inst.drugs}
    unknown = [d for d in update.get("drugs", {}) if d not in drug_ids]
    comm_ids = {c.id for c in inst.communities}
    unknown += [c for c in update.get("nonshared", {}) if c not in comm_ids]
    if unknown:
        raise SchemaError(f"inventory update names unknown drugs or communities: {unknown}")
    inventory = Inventory(
        {**inst.inventory.drugs, **update.get("drugs", {})},
        {**inst.inventory.shared, **update.get("shared", {})},
    )
    ns = update.get("nonshared", {})
    communities = tuple(Community(c.id, c.weight, {**c.nonshared, **ns.get(c.id, {})}) for c in inst.communities)
    out = replace(inst, inventory=inventory, communities=communities)
    return instance_from_dict(instance_to_dict(out))


# ------------------------------------------------------- on-disk round loop


def _save_state(directory, state: RoundState) -> None:
    _write(os.path.join(directory, STATE_FILE), _dumps(state.to_dict()))


def load_state(directory) -> RoundState:
    doc = _read_json(os.path.join(directory, STATE_FILE))
    inst = load_instance(os.path.join(directory, round_file(doc["round"], "instance")))
    return RoundState.from_dict(doc, inst)


def _start(directory, state: RoundState, wwo_config: WwoConfig) -> str:
    save_instance(state.instance, os.path.join(directory, round_file(state.round, "instance")))
    bundle, result = run_round(state, wwo_config)
    path = os.path.join(directory, round_file(state.round, "review"))
    _write(path, dumps_bundle(bundle))
    write_table(os.path.join(directory, round_file(state.round, "trace")), TRACE_FIELDS, result.trace)
    _save_state(directory, state)
    return path


def open_rounds(directory, wwo_config: WwoConfig, instance: Instance | None = None,
                inventory_update: dict | None = None) -> str:
    """Start round 1 on ``instance``, or continue a finished directory.

    Without ``instance`` the directory must hold a finished loop; the new
    round starts from its final programs.  Returns the review bundle path.
    """
    os.makedirs(directory, exist_ok=True)
    exists = os.path.exists(os.path.join(directory, STATE_FILE))
    if instance is None:
        if not exists:
            raise FileNotFoundError(f"{directory} has no round state; pass an instance")
        prev = load_state(directory)
        if prev.status != "final":
            raise NotCloseableError(f"round {prev.round} is still open; close it first")
        final = _read_json(os.path.join(directory, FINAL_FILE))
        programs = [program_from_dict(p) for p in final["programs"]]
        state = RoundState(prev.round + 1, prev.instance.with_programs(programs), history=prev.history)
    else:
        if exists:
            raise FileExistsError(f"{directory} already holds a round state")
        state = RoundState(1, instance)
    if inventory_update is not None:
        state.instance = apply_inventory_update(state.instance, inventory_update)
    return _start(directory, state, wwo_config)


def close_rounds(directory, wwo_config: WwoConfig, policy: str = "manual") -> CloseOutcome:
    """Close the open round; a reopened loop immediately runs the next round."""
    state = load_state(directory)
    if state.status == "final":
        raise NotCloseableError("round loop already finished")
    path = os.path.join(directory, round_file(state.round, "review"))
    bundle = load_bundle(path)
    if policy != "manual":
        apply_policy(bundle, policy)
        _write(path, dumps_bundle(bundle))
    outcome = close_round(state, bundle)
    if outcome.final:
        final = {
            "format_version": FORMAT_VERSION,
            "round": outcome.state.round,
            "feasible": outcome.feasible,
            "programs": [program_to_dict(p) for p in outcome.programs],
            "resources": report_for_programs(state.instance, outcome.programs).to_list(),
        }
        _write(os.path.join(directory, FINAL_FILE), _dumps(final))
        _save_state(directory, outcome.state)
    else:
        _start(directory, outcome.state, wwo_config)
    return outcome


def run_rounds(directory, instance: Instance, wwo_config: WwoConfig, policy: str = "auto-approve",
               max_rounds: int = 3, inventory_update: dict | None = None) -> CloseOutcome:
    """Open and close rounds under a scripted policy until the loop ends."""
    if policy == "manual":
        raise ValueError("run_rounds needs a scripted policy")
    open_rounds(directory, wwo_config, instance, inventory_update)
    for _ in range(max_rounds):
        outcome = close_rounds(directory, wwo_config, policy)
        if outcome.final:
            return outcome
    raise NotCloseableError(f"loop did not finish within {max_rounds} rounds")
