"""Pythagorean fuzzy c-means (PFCM).

Points and centroids are ``(mu, nu)`` arrays of shape ``(n, D, 2)`` and
``(c, D, 2)``.  The iteration itself runs on squared degrees: the PFN
distance is a positive definite quadratic form in ``(mu**2, nu**2)``, so a
weighted mean of squared degrees is both a valid PFN and the exact
minimizer of the weighted objective for fixed memberships.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateClusterError, DimensionError, FormatVersionError
from .pfs import check_pfn_array, from_squares, squares

FORMAT_VERSION = 1
WEIGHTINGS = ("stationary", "literal")


@dataclass(frozen=True)
class PfcmConfig:
    """PFCM settings.

    ``centroid_weighting="stationary"`` weights points by ``u**m`` when
    recomputing centroids; ``"literal"`` weights by ``u``.
    """

    c: int
    m: float = 2.0
    epsilon: float = 1e-6
    max_iters: int = 200
    centroid_weighting: str = "stationary"

    def __post_init__(self):
        if self.c < 2:
            raise ValueError(f"c must be >= 2, got {self.c}")
        if not self.m > 1:
            raise ValueError(f"fuzzifier m must be > 1, got {self.m}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.centroid_weighting not in WEIGHTINGS:
            raise ValueError(f"centroid_weighting must be one of {WEIGHTINGS}")


@dataclass
class ClusterModel:
    U: np.ndarray
    V: np.ndarray
    J: float
    iterations: int = 0
    converged: bool = False
    history: list = field(default_factory=list)

    @property
    def c(self) -> int:
        return self.U.shape[0]

    def labels(self) -> np.ndarray:
        """Index of the cluster with the largest membership for each point."""
        return np.argmax(self.U, axis=0)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "c": int(self.U.shape[0]),
            "n": int(self.U.shape[1]),
            "D": int(self.V.shape[1]),
            "J": float(self.J),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "centroids": self.V.tolist(),
            "memberships": self.U.tolist(),
            "j_history": [float(j) for j in self.history],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "ClusterModel":
        if doc.get("format_version") != FORMAT_VERSION:
            raise FormatVersionError(f"unsupported cluster model format_version {doc.get('format_version')!r}")
        return cls(
            U=np.array(doc["memberships"], dtype=float),
            V=np.array(doc["centroids"], dtype=float),
            J=float(doc["J"]),
            iterations=int(doc["iterations"]),
            converged=bool(doc["converged"]),
            history=list(doc.get("j_history", [])),
        )


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise DimensionError(f"points must have shape (n, D, 2), got {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError("need at least one point with at least one dimension")
    return arr


def _check_dims(points: np.ndarray, centroids: np.ndarray) -> None:
    if centroids.ndim != 3 or centroids.shape[2] != 2 or centroids.shape[0] == 0:
        raise DimensionError(f"centroids must have shape (c, D, 2), got {centroids.shape}")
    if centroids.shape[1] != points.shape[1]:
        raise DimensionError(f"dimension mismatch: points D={points.shape[1]}, centroids D={centroids.shape[1]}")


def memberships_from_sqdist(d2: np.ndarray, m: float) -> np.ndarray:
    """Membership matrix from squared distances ``d2`` of shape ``(c, n)``.

    A point at distance zero from some centroid belongs fully to the first
    such centroid.  Otherwise ``u_ij = 1 / sum_k (d_ij / d_kj)**(2/(m-1))``,
    evaluated relative to the nearest centroid to avoid overflow.
    """
    c, n = d2.shape
    U = np.empty((c, n), dtype=float)
    zero = d2 <= 0.0
    has_zero = zero.any(axis=0)
    dmin = d2.min(axis=0)
    safe = ~has_zero
    if safe.any():
        w = (dmin[safe] / d2[:, safe]) ** (1.0 / (m - 1.0))
        U[:, safe] = w / w.sum(axis=0)
    if has_zero.any():
        cols = np.nonzero(has_zero)[0]
        first = np.argmax(zero[:, cols], axis=0)
        U[:, cols] = 0.0
        U[first, cols] = 1.0
    return U


def centroids_sq(points_sq: np.ndarray, U: np.ndarray, m: float, weighting: str = "stationary") -> np.ndarray:
    """Weighted means of squared degrees; returns ``(c, D, 2)`` squares."""
    n, D, _ = points_sq.shape
    if U.shape[1] != n:
        raise DimensionError(f"U has {U.shape[1]} columns for {n} points")
    row = U.sum(axis=1)
    W = U ** m if weighting == "stationary" else U
    wsum = W.sum(axis=1)
    bad = np.nonzero((row < 1e-12) | ~(wsum > 0))[0]
    if bad.size:
        raise DegenerateClusterError(f"clusters {bad.tolist()} have zero total membership")
    V = (W @ points_sq.reshape(n, D * 2)).reshape(-1, D, 2) / wsum[:, None, None]
    np.clip(V, 0.0, 1.0, out=V)
    tot = V.sum(axis=2)
    over = tot > 1.0
    if over.any():
        V[over] /= tot[over][:, None]
    return V


def objective(points, model: ClusterModel, m: float = 2.0) -> float:
    """Mean membership-weighted squared distance ``(1/cn) sum u**m d**2``."""
    P = _as_points(points)
    V = np.asarray(model.V, dtype=float)
    _check_dims(P, V)
    U = np.asarray(model.U, dtype=float)
    if U.shape != (V.shape[0], P.shape[0]):
        raise DimensionError(f"U shape {U.shape} does not match (c, n) = {(V.shape[0], P.shape[0])}")
    d2 = kernels.pfcm_sqdist(squares(P), squares(V))
    return float(np.sum(U ** m * d2) / U.size)


def update_memberships(points, centroids, m: float = 2.0) -> np.ndarray:
    P = _as_points(points)
    V = np.asarray(centroids, dtype=float)
    _check_dims(P, V)
    if not m > 1:
        raise ValueError("m must be > 1")
    return memberships_from_sqdist(kernels.pfcm_sqdist(squares(P), squares(V)), m)


def update_centroids(points, U, m: float = 2.0, weighting: str = "stationary") -> np.ndarray:
    P = _as_points(points)
    return from_squares(centroids_sq(squares(P), np.asarray(U, dtype=float), m, weighting))


def _movement(a_sq: np.ndarray, b_sq: np.ndarray) -> float:
    da = a_sq[..., 0] - b_sq[..., 0]
    dn = a_sq[..., 1] - b_sq[..., 1]
    per = np.sqrt(np.mean(da * da + dn * dn + da * dn, axis=1))
    return float(per.mean())


def run_pfcm_sq(points_sq: np.ndarray, config: PfcmConfig, init_sq: np.ndarray) -> ClusterModel:
    """PFCM on inputs already in squared-degree space (no validation)."""
    m = config.m
    c, n = init_sq.shape[0], points_sq.shape[0]
    Vsq = np.array(init_sq, dtype=float)
    d2 = kernels.pfcm_sqdist(points_sq, Vsq)
    history = []
    converged = False
    U = None
    J = 0.0
    k = 0
    for k in range(1, config.max_iters + 1):
        U = memberships_from_sqdist(d2, m)
        Vnew = centroids_sq(points_sq, U, m, config.centroid_weighting)
        d2 = kernels.pfcm_sqdist(points_sq, Vnew)
        J = float(np.sum(U ** m * d2) / (c * n))
        history.append(J)
        move = _movement(Vnew, Vsq)
        Vsq = Vnew
        if move <= config.epsilon:
            converged = True
            break
    return ClusterModel(U=U, V=from_squares(Vsq), J=J, iterations=k, converged=converged, history=history)


def run_pfcm(points, config: PfcmConfig, initial_centroids) -> ClusterModel:
    """Alternate membership and centroid updates until the centroids settle.

    Stops when the mean per-centroid vector distance between consecutive
    centroid sets is at most ``config.epsilon`` or after ``max_iters``
    iterations.  ``model.history`` holds J after every iteration.
    """
    P = _as_points(points)
    V0 = np.asarray(initial_centroids, dtype=float)
    _check_dims(P, V0)
    if V0.shape[0] != config.c:
        raise DimensionError(f"expected {config.c} initial centroids, got {V0.shape[0]}")
    check_pfn_array(P)
    check_pfn_array(V0)
    return run_pfcm_sq(squares(P), config, squares(V0))


def random_centroids(rng: np.random.Generator, c: int, D: int) -> np.ndarray:
    """Uniformly random valid PFN centroids, shape ``(c, D, 2)``."""
    mu = rng.random((c, D))
    nu = rng.random((c, D)) * np.sqrt(1.0 - mu * mu)
    return np.stack([mu, nu], axis=-1)


def random_restart_pfcm(points, config: PfcmConfig, n_runs: int, seed: int) -> ClusterModel:
    """Best of ``n_runs`` PFCM runs from uniformly random centroids.

    Degenerate runs are skipped; the baseline for seeding comparisons.
    """
    P = _as_points(points)
    Psq = squares(P)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_runs):
        init = random_centroids(rng, config.c, P.shape[1])
        try:
            model = run_pfcm_sq(Psq, config, squares(init))
        except DegenerateClusterError:
            continue
        if best is None or model.J < best.J:
            best = model
    if best is None:
        raise DegenerateClusterError("every random restart degenerated")
    return best
