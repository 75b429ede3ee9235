"""Ecogeography-based optimization of initial PFCM centroids.

A genome is a flat float vector of length ``c * D * 2`` holding the
``(mu, nu)`` pairs of ``c`` initial centroids.  Its fitness is the PFCM
objective J reached from those centroids (lower is better).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterModel, PfcmConfig, _as_points, random_centroids, run_pfcm_sq
from .errors import DegenerateClusterError
from .pfs import squares


@dataclass(frozen=True)
class EboConfig:
    pop_size: int = 20
    eta_min: float = 0.1
    eta_max: float = 0.7
    g_max: int = 20
    k_neighbors: int = 3
    stagnation: int = 5
    epsilon_rate: float = 1e-9

    def __post_init__(self):
        if self.pop_size < 3:
            raise ValueError("pop_size must be >= 3")
        if not (0.0 <= self.eta_min <= self.eta_max <= 1.0):
            raise ValueError("need 0 <= eta_min <= eta_max <= 1")
        if self.g_max < 0:
            raise ValueError("g_max must be >= 0")
        if not (1 <= self.k_neighbors < self.pop_size):
            raise ValueError("need 1 <= k_neighbors < pop_size")
        if self.stagnation < 1:
            raise ValueError("stagnation must be >= 1")
        if not self.epsilon_rate > 0:
            raise ValueError("epsilon_rate must be > 0")

    @classmethod
    def for_budget(cls, budget: int, **kwargs) -> "EboConfig":
        """Config whose generation cap spends ``budget`` PFCM runs in total."""
        pop = kwargs.get("pop_size", cls.pop_size)
        if budget < pop:
            raise ValueError(f"budget {budget} smaller than population size {pop}")
        return cls(g_max=(budget - pop) // pop, **kwargs)


@dataclass
class EboResult:
    model: ClusterModel
    genome: np.ndarray
    evaluations: int
    trace: list = field(default_factory=list)  # (generation, evaluations, best J)


def migration_rates(J_values, epsilon_rate: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Emigration and immigration rates from objective values.

    Emigration falls and immigration rises linearly with J between the
    population's best and worst; ``epsilon_rate`` keeps both in (0, 1].
    """
    J = np.asarray(J_values, dtype=float)
    if J.size == 0:
        raise ValueError("J_values must be non-empty")
    jmax, jmin = J.max(), J.min()
    span = jmax - jmin + epsilon_rate
    return (jmax - J + epsilon_rate) / span, (J - jmin + epsilon_rate) / span


def local_migration(x, x_dagger, r):
    return x + r * (x_dagger - x)


def global_migration(x, x_dagger, x_ddagger, r, ddagger_not_worse):
    """Blend a neighbor and a non-neighbor component.

    ``ddagger_not_worse`` is ``J(x_ddagger) <= J(x_dagger)`` (elementwise
    allowed); ties take the first branch.
    """
    return np.where(
        ddagger_not_worse,
        x_dagger + r * (x_ddagger - x),
        x_ddagger + r * (x_dagger - x),
    )


def eta_schedule(g: int, config: EboConfig) -> float:
    if config.g_max == 0:
        return config.eta_min
    return config.eta_min + (g / config.g_max) * (config.eta_max - config.eta_min)


def repair(genome) -> np.ndarray:
    """Clamp to [0, 1] and pull each ``(mu, nu)`` pair back inside the unit circle."""
    g = np.clip(np.asarray(genome, dtype=float), 0.0, 1.0)
    pairs = g.reshape(-1, 2)
    norm = np.sqrt(np.sum(pairs * pairs, axis=1))
    over = norm > 1.0
    if over.any():
        pairs[over] /= norm[over][:, None]
    return pairs.reshape(g.shape)


def random_topology(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """``k`` distinct random neighbors per solution, never itself."""
    nbrs = np.empty((n, k), dtype=np.int64)
    for s in range(n):
        others = np.delete(np.arange(n), s)
        nbrs[s] = rng.choice(others, size=k, replace=False)
    return nbrs


def decode(genome: np.ndarray, c: int, D: int) -> np.ndarray:
    return np.asarray(genome, dtype=float).reshape(c, D, 2)


def initial_population(rng: np.random.Generator, points: np.ndarray, c: int, size: int) -> np.ndarray:
    """Genomes from ``c`` distinct sampled points each, plus one uniform random genome."""
    n, D, _ = points.shape
    if n < c:
        raise ValueError(f"need at least c={c} points, got {n}")
    pop = np.empty((size, c * D * 2))
    for s in range(size - 1):
        idx = rng.choice(n, size=c, replace=False)
        pop[s] = points[idx].ravel()
    pop[size - 1] = random_centroids(rng, c, D).ravel()
    return pop


def _finite_j(J: np.ndarray) -> np.ndarray:
    fin = np.isfinite(J)
    if fin.all():
        return J
    cap = J[fin].max() if fin.any() else 1.0
    return np.where(fin, J, cap)


def ebo_search(points, pfcm_config: PfcmConfig, config: EboConfig, seed: int,
               max_evaluations: int | None = None, population=None) -> EboResult:
    """Evolve initial centroid sets; return the best clustering found.

    Fitness evaluations that hit a degenerate cluster count as J = inf.
    ``population`` overrides the random initial genomes.
    """
    P = _as_points(points)
    Psq = squares(P)
    n, D, _ = P.shape
    c = pfcm_config.c
    rng = np.random.default_rng(seed)
    NP = config.pop_size
    budget = math.inf if max_evaluations is None else max_evaluations

    if population is None:
        pop = initial_population(rng, P, c, NP)
    else:
        pop = np.array(population, dtype=float).reshape(NP, c * D * 2)
    pop = np.stack([repair(g) for g in pop])

    evaluations = 0

    def evaluate(genome):
        nonlocal evaluations
        evaluations += 1
        try:
            return run_pfcm_sq(Psq, pfcm_config, squares(decode(genome, c, D)))
        except DegenerateClusterError:
            return None

    models = [evaluate(g) for g in pop]
    J = np.array([m.J if m is not None else np.inf for m in models])
    best = int(np.argmin(J))
    best_J, best_model, best_genome = J[best], models[best], pop[best].copy()
    trace = [(0, evaluations, float(best_J))]

    nbrs = random_topology(rng, NP, config.k_neighbors)
    stale = 0
    G = pop.shape[1]
    cols = np.arange(G)
    for g in range(1, config.g_max + 1):
        if evaluations >= budget:
            break
        Jf = _finite_j(J)
        E, I = migration_rates(Jf, config.epsilon_rate)
        eta = eta_schedule(g, config)
        candidates = []
        for s in range(NP):
            x = pop[s]
            nb = nbrs[s]
            mask = np.ones(NP, dtype=bool)
            mask[s] = False
            mask[nb] = False
            far = np.nonzero(mask)[0]
            migrate = rng.random(G) < I[s]
            dag = rng.choice(nb, size=G, p=E[nb] / E[nb].sum())
            glob = rng.random(G) < eta
            if far.size:
                ddag = rng.choice(far, size=G, p=E[far] / E[far].sum())
            else:
                ddag = dag
                glob[:] = False
            r = rng.random(G)
            xd = pop[dag, cols]
            xdd = pop[ddag, cols]
            moved = np.where(
                glob,
                global_migration(x, xd, xdd, r, Jf[ddag] <= Jf[dag]),
                local_migration(x, xd, r),
            )
            candidates.append(repair(np.where(migrate, moved, x)))

        improved_best = False
        for s, cand in enumerate(candidates):
            if evaluations >= budget:
                break
            if np.array_equal(cand, pop[s]):
                continue
            model = evaluate(cand)
            if model is None or not model.J < J[s]:
                continue
            pop[s], J[s] = cand, model.J
            if model.J < best_J:
                best_J, best_model, best_genome = model.J, model, cand.copy()
                improved_best = True
        trace.append((g, evaluations, float(best_J)))
        stale = 0 if improved_best else stale + 1
        if stale >= config.stagnation:
            nbrs = random_topology(rng, NP, config.k_neighbors)
            stale = 0

    if best_model is None:
        raise DegenerateClusterError("no genome produced a non-degenerate clustering")
    return EboResult(model=best_model, genome=best_genome, evaluations=evaluations, trace=trace)


def run_ebo(points, pfcm_config: PfcmConfig, ebo_config: EboConfig, seed: int,
            max_evaluations: int | None = None) -> ClusterModel:
    return ebo_search(points, pfcm_config, ebo_config, seed, max_evaluations).model
