"""Time the compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import timeit

import numpy as np

from prevopt import _pykernels, kernels
from prevopt.generator import GeneratorSpec, cloud_points, generate_instance
from prevopt.pfs import squares
from prevopt.wwo import WwoConfig, compile_instance, random_solution, run_wwo

try:
    from prevopt import _kernels
except ImportError:
    _kernels = None

KERNELS = ("pfcm_sqdist", "evaluate_batch", "propagate_batch")


def _cases(seed):
    pts, _ = cloud_points(4, 500, 64, seed=seed)
    rng = np.random.default_rng(seed)
    Psq = squares(pts)
    Vsq = Psq[rng.choice(len(Psq), 8, replace=False)]

    inst = generate_instance(GeneratorSpec(seed=seed, programs=12, tightness=0.8))
    ci = compile_instance(inst)
    pop = np.stack([random_solution(ci, rng) for _ in range(64)])
    lams = rng.integers(1, ci.N + 1, size=len(pop))
    unif = rng.random((len(pop), int(lams.max()), 4))
    prop_args = (ci.rep_progs, ci.slot_start, ci.slot_pos, ci.slot_nb, ci.slot_off, ci.pos_slot, ci.opt_start,
                 ci.contrib, ci.cost, ci.pooled, ci.avail, ci.row_kind)
    return {
        "pfcm_sqdist": lambda m: m.pfcm_sqdist(Psq, Vsq),
        "evaluate_batch": lambda m: m.evaluate_batch(pop, *ci.tables),
        "propagate_batch": lambda m: m.propagate_batch(pop.copy(), lams, unif, *prop_args),
    }, inst


def _time(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def _wwo_time(inst, impl, budget, repeat):
    saved = {name: getattr(kernels, name) for name in KERNELS}
    try:
        for name in KERNELS:
            setattr(kernels, name, getattr(impl, name))
        return _time(lambda: run_wwo(inst, WwoConfig(budget=budget, seed=0)), repeat, 1)
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    ap.add_argument("--wwo-budget", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled extension not built; only the numpy fallback is available")
        return 1
    cases, inst = _cases(args.seed)
    print(f"{'kernel':<18}{'cython (s)':>14}{'python (s)':>14}{'speedup':>10}")
    rows = [(name, _time(lambda: fn(_kernels), args.repeat, args.number),
             _time(lambda: fn(_pykernels), args.repeat, args.number)) for name, fn in cases.items()]
    rows.append(("run_wwo", _wwo_time(inst, _kernels, args.wwo_budget, args.repeat),
                 _wwo_time(inst, _pykernels, args.wwo_budget, args.repeat)))
    for name, cy, py in rows:
        print(f"{name:<18}{cy:>14.6f}{py:>14.6f}{py / cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
