"""Command-line entry point: ``prevopt <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .clustering import WEIGHTINGS, PfcmConfig, random_restart_pfcm
from .csvio import write_table
from .ebo import EboConfig, ebo_search
from .errors import BudgetError, PrevoptError
from .generator import GeneratorSpec, generate_instance, generate_residents
from .oracle import enumerate_optimum, recompute_fitness
from .pfs import FeatureSchema, default_schema
from .program_model import all_unchanged, check_solution, load_instance, save_instance, solution_from_json
from .report import emit_report
from .residents import ingest_residents, write_residents
from .rounds import POLICIES, build_review_bundle, close_rounds, dumps_bundle, open_rounds, run_rounds
from .wwo import TRACE_FIELDS, WwoConfig, run_wwo


def _dump(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit(doc, path=None) -> None:
    text = _dump(doc)
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _add_seed(p) -> None:
    p.add_argument("--seed", type=int, required=True, help="random seed (required for reproducibility)")


def _add_wwo(p, budget: int = 10000) -> None:
    g = p.add_argument_group("water wave optimization")
    g.add_argument("--pop-size", type=int, default=10)
    g.add_argument("--stagnation", type=int, default=5, help="generations without improvement before refraction")
    g.add_argument("--budget", type=int, default=budget, help="fitness evaluations per run")


def _wwo_config(args) -> WwoConfig:
    return WwoConfig(pop_size=args.pop_size, stagnation=args.stagnation, budget=args.budget, seed=args.seed)


# ------------------------------------------------------------------ commands


def cmd_gen(args) -> int:
    if args.kind == "instance":
        spec = GeneratorSpec(
            communities=args.communities, programs=args.programs, drugs=args.drugs, shared=args.shared,
            nonshared=args.nonshared, alternatives=args.alternatives, tightness=args.tightness, seed=args.seed,
            drugs_per_program=args.drugs_per_program, replaceable_per_program=args.replaceable_per_program,
        )
        save_instance(generate_instance(spec), args.out)
        return 0
    schema = default_schema()
    rows, labels = generate_residents(schema, args.rows, n_clouds=args.clouds, missing_rate=args.missing_rate,
                                      seed=args.seed)
    write_residents(args.out, schema, rows)
    _write(args.schema_out, schema.dumps())
    if args.labels_out:
        write_table(args.labels_out, ("row", "cloud"), [(i, int(c)) for i, c in enumerate(labels)])
    return 0


def cmd_cluster(args) -> int:
    points, report = ingest_residents(args.residents, FeatureSchema.load(args.schema))
    pfcm = PfcmConfig(c=args.clusters, m=args.m, epsilon=args.epsilon, max_iters=args.max_iters,
                      centroid_weighting=args.weighting)
    trace = []
    if args.method == "ebo":
        cfg = EboConfig.for_budget(args.budget, pop_size=args.ebo_pop_size, eta_min=args.eta_min,
                                   eta_max=args.eta_max, k_neighbors=args.k_neighbors,
                                   stagnation=args.ebo_stagnation)
        res = ebo_search(points, pfcm, cfg, args.seed, max_evaluations=args.budget)
        model, evaluations, trace = res.model, res.evaluations, res.trace
    else:
        model = random_restart_pfcm(points, pfcm, args.budget, args.seed)
        evaluations = args.budget
    doc = model.to_dict()
    doc["labels"] = model.labels().tolist()
    doc["pfcm_calls"] = evaluations
    doc["method"] = args.method
    doc["ingestion"] = {"rows": report.rows, "missing_rate": report.missing_rate}
    _emit(doc, args.out)
    if args.trace:
        if args.method == "ebo":
            write_table(args.trace, ("generation", "pfcm_calls", "best_J"), trace)
        else:
            write_table(args.trace, ("iteration", "J"), list(enumerate(model.history)))
    return 0


def cmd_optimize(args) -> int:
    inst = load_instance(args.instance)
    result = run_wwo(inst, _wwo_config(args))
    _emit(result.to_dict(), args.out)
    if args.trace:
        write_table(args.trace, TRACE_FIELDS, result.trace)
    if args.review:
        _write(args.review, dumps_bundle(build_review_bundle(inst, result, 1)))
    return 0


def cmd_round(args) -> int:
    cfg = _wwo_config(args)
    update = _read_json(args.inventory_update) if args.inventory_update else None
    if args.open:
        inst = load_instance(args.instance) if args.instance else None
        path = open_rounds(args.dir, cfg, inst, update)
        _emit({"review_bundle": path})
    elif args.close:
        out = close_rounds(args.dir, cfg, args.policy)
        _emit({"final": out.final, "round": out.state.round, "feasible": out.feasible})
    else:
        if not args.instance:
            raise SystemExit("--auto requires --instance")
        policy = "auto-approve" if args.policy == "manual" else args.policy
        out = run_rounds(args.dir, load_instance(args.instance), cfg, policy, args.max_rounds, update)
        _emit({"final": out.final, "round": out.state.round, "feasible": out.feasible})
    return 0


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    doc = {"instance": args.instance}
    sol = solution_from_json(_read_json(args.solution)) if args.solution else all_unchanged(inst)
    check_solution(inst, sol)
    f, vd, vg, vf = recompute_fitness(inst, sol)
    doc["solution"] = {"pairs": [list(p) for p in sol], "f": f, "v_drug": vd, "v_shared": vg, "v_nonshared": vf,
                       "feasible": vd == vg == vf == 0}
    try:
        opt = enumerate_optimum(inst, args.budget)
    except BudgetError as exc:
        doc["optimum"] = None
        doc["note"] = str(exc)
    else:
        doc["optimum"] = {"pairs": [list(p) for p in opt.solution], "f": opt.f, "feasible": opt.feasible,
                          "violation": opt.violation, "space": opt.space}
        doc["matches_optimum"] = doc["solution"]["feasible"] == opt.feasible and abs(f - opt.f) <= 1e-9
    _emit(doc, args.out)
    return 0


def cmd_report(args) -> int:
    seeds = np.arange(args.seed, args.seed + args.runs)
    instances = [(path, load_instance(path)) for path in args.instance or []]
    if args.dir is None and not instances:
        raise SystemExit("report needs --dir or --instance")
    emit_report(args.out, _wwo_config(args), seeds, round_dir=args.dir, instances=instances)
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prevopt", description="Resident clustering and prevention-program optimization")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic instance or resident table")
    gsub = gen.add_subparsers(dest="kind", required=True)
    gi = gsub.add_parser("instance")
    _add_seed(gi)
    gi.add_argument("--out", required=True)
    for name, default in (("communities", 3), ("programs", 4), ("drugs", 8), ("shared", 2), ("nonshared", 1),
                          ("alternatives", 3), ("drugs-per-program", 4), ("replaceable-per-program", 2)):
        gi.add_argument(f"--{name}", type=int, default=default)
    gi.add_argument("--tightness", type=float, default=1.0, help="availability as a fraction of base demand")
    gr = gsub.add_parser("residents")
    _add_seed(gr)
    gr.add_argument("--out", required=True, help="resident CSV")
    gr.add_argument("--schema-out", required=True, help="schema JSON sidecar")
    gr.add_argument("--labels-out", help="optional CSV of generating cloud per row")
    gr.add_argument("--rows", type=int, default=200)
    gr.add_argument("--clouds", type=int, default=4)
    gr.add_argument("--missing-rate", type=float, default=0.3)
    gen.set_defaults(func=cmd_gen)

    cl = sub.add_parser("cluster", help="PFCM clustering of a resident table")
    _add_seed(cl)
    cl.add_argument("--residents", required=True)
    cl.add_argument("--schema", required=True)
    cl.add_argument("--clusters", type=int, default=4)
    cl.add_argument("--out", help="model JSON (stdout if omitted)")
    cl.add_argument("--trace", help="trace CSV")
    cl.add_argument("--method", choices=("ebo", "random"), default="ebo",
                    help="centroid seeding: evolved or best of random restarts")
    cl.add_argument("--budget", type=int, default=100, help="PFCM runs allowed")
    g = cl.add_argument_group("PFCM")
    g.add_argument("--m", type=float, default=2.0, help="fuzzifier")
    g.add_argument("--epsilon", type=float, default=1e-6)
    g.add_argument("--max-iters", type=int, default=200)
    g.add_argument("--weighting", choices=WEIGHTINGS, default="stationary")
    g = cl.add_argument_group("ecogeography-based seeding")
    g.add_argument("--ebo-pop-size", type=int, default=20)
    g.add_argument("--eta-min", type=float, default=0.1)
    g.add_argument("--eta-max", type=float, default=0.7)
    g.add_argument("--k-neighbors", type=int, default=3)
    g.add_argument("--ebo-stagnation", type=int, default=5)
    cl.set_defaults(func=cmd_cluster)

    op = sub.add_parser("optimize", help="optimize one instance")
    _add_seed(op)
    op.add_argument("--instance", required=True)
    op.add_argument("--out", help="result JSON (stdout if omitted)")
    op.add_argument("--trace", help="trace CSV")
    op.add_argument("--review", help="also write a review bundle")
    _add_wwo(op)
    op.set_defaults(func=cmd_optimize)

    rd = sub.add_parser("round", help="file-based optimize / review / close loop")
    _add_seed(rd)
    rd.add_argument("--dir", required=True, help="round directory")
    mode = rd.add_mutually_exclusive_group(required=True)
    mode.add_argument("--open", action="store_true", help="start a round (new instance or after a final round)")
    mode.add_argument("--close", action="store_true", help="close the reviewed round")
    mode.add_argument("--auto", action="store_true", help="open and close rounds under --policy")
    rd.add_argument("--instance")
    rd.add_argument("--inventory-update", help="JSON availability overrides applied at round open")
    rd.add_argument("--policy", choices=POLICIES, default="manual")
    rd.add_argument("--max-rounds", type=int, default=3)
    _add_wwo(rd)
    rd.set_defaults(func=cmd_round)

    ve = sub.add_parser("verify", help="check a solution against brute-force enumeration")
    _add_seed(ve)
    ve.add_argument("--instance", required=True)
    ve.add_argument("--solution", help="solution JSON (defaults to no changes)")
    ve.add_argument("--budget", type=int, default=10**6, help="largest solution space to enumerate")
    ve.add_argument("--out")
    ve.set_defaults(func=cmd_verify)

    rp = sub.add_parser("report", help="multi-seed run table and round summary")
    _add_seed(rp)
    rp.add_argument("--dir", help="round directory to summarize")
    rp.add_argument("--instance", action="append", help="extra instance to run (repeatable)")
    rp.add_argument("--runs", type=int, default=30, help="seeds per instance")
    rp.add_argument("--out", required=True, help="output directory")
    _add_wwo(rp)
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PrevoptError, FileNotFoundError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
