"""Multi-seed run tables and round summaries."""

from __future__ import annotations

import json
import os
from dataclasses import replace

import numpy as np

from .csvio import read_table, write_table
from .program_model import Instance, load_instance
from .rounds import FINAL_FILE, FORMAT_VERSION, STATE_FILE, load_state, round_file
from .wwo import WwoConfig, run_wwo

RUN_FIELDS = ("instance", "seed", "f", "v_drug", "v_shared", "v_nonshared", "feasible", "evaluations")


def seed_runs(label: str, inst: Instance, config: WwoConfig, seeds) -> list[tuple]:
    """One row per seed: the final best solution's objective and violations."""
    rows = []
    for s in seeds:
        r = run_wwo(inst, replace(config, seed=int(s)))
        rows.append((label, int(s), r.f, r.v_drug, r.v_shared, r.v_nonshared, int(r.feasible), r.evaluations))
    return rows


def _stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med), "q3": float(q3), "max": float(v.max()),
            "mean": float(v.mean())}


def round_summary(directory) -> dict:
    """Summary of a round directory, cross-checked against its trace files."""
    state = load_state(directory)
    rounds = []
    for h in state.history:
        _, trace = read_table(os.path.join(directory, round_file(h["round"], "trace")))
        last = trace[-1]
        rounds.append(
            {
                "round": h["round"],
                "objective": h["objective"],
                "trace_best_f": float(last["best_f"]),
                "trace_evaluations": int(last["evaluations"]),
                "violations": h["violations"],
                "solver_feasible": h["solver_feasible"],
                "reviewed_feasible": h["reviewed_feasible"],
                "approved": sum(s == "approved" for s in h["statuses"].values()),
                "modified": sum(s == "modified" for s in h["statuses"].values()),
                "substituted": sum(tuple(p) != (0, 0) for p in (h["solution"] or [])),
                "outcome": h["outcome"],
            }
        )
    final_path = os.path.join(directory, FINAL_FILE)
    final = None
    if os.path.exists(final_path):
        with open(final_path, encoding="utf-8") as fh:
            final = json.load(fh)
    return {
        "format_version": FORMAT_VERSION,
        "status": state.status,
        "rounds": rounds,
        "total_objective": sum(r["objective"] for r in rounds),
        "final_programs": None if final is None else final["programs"],
    }


def emit_report(out_dir, config: WwoConfig, seeds, round_dir=None, instances=()) -> dict:
    """Write ``runs.csv`` and ``summary.json`` into ``out_dir``.

    ``runs.csv`` holds one row per (instance, seed).  Round instances of
    ``round_dir`` are labelled ``round_001`` and so on; extra ``instances``
    are ``(label, Instance)`` pairs.  Returns the summary document.
    """
    os.makedirs(out_dir, exist_ok=True)
    targets = []
    summary = {"format_version": FORMAT_VERSION, "seeds": [int(s) for s in seeds]}
    if round_dir is not None:
        if not os.path.exists(os.path.join(round_dir, STATE_FILE)):
            raise FileNotFoundError(f"{round_dir} has no round state")
        rs = round_summary(round_dir)
        if not rs["rounds"]:
            raise ValueError("report needs at least one completed round")
        summary.update(rs)
        for r in rs["rounds"]:
            targets.append((f"round_{r['round']:03d}", load_instance(os.path.join(round_dir, round_file(r["round"], "instance")))))
    targets.extend(instances)
    rows = []
    per_instance = {}
    for label, inst in targets:
        block = seed_runs(label, inst, config, seeds)
        rows.extend(block)
        per_instance[label] = {"f": _stats([b[2] for b in block]), "feasible_runs": sum(b[6] for b in block)}
    summary["runs"] = per_instance
    write_table(os.path.join(out_dir, "runs.csv"), RUN_FIELDS, rows)
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(summary, indent=2) + "\n")
    return summary
