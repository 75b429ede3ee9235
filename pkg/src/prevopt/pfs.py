"""Pythagorean fuzzy numbers, their distances, and feature encoding.

A Pythagorean fuzzy number (PFN) is a pair ``(mu, nu)`` of membership and
non-membership degrees with ``mu**2 + nu**2 <= 1``.  Feature vectors are
stored as float arrays of shape ``(D, 2)`` holding ``(mu, nu)`` per
dimension; datasets as ``(n, D, 2)``.

Every distance here only depends on the squared degrees, which is why the
clustering code works in ``(mu**2, nu**2)`` space internally.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError, FormatVersionError, RangeError, SchemaError

TOL = 1e-12
FORMAT_VERSION = 1

CATEGORIES = (
    "basic_health",
    "tcm_constitution",
    "tcm_syndrome",
    "past_illness",
    "current_illness",
)
KINDS = ("real", "binary")


@dataclass(frozen=True)
class PFN:
    """A Pythagorean fuzzy number."""

    mu: float
    nu: float

    def __post_init__(self):
        check_pfn(self.mu, self.nu)

    @property
    def hesitancy(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.mu * self.mu - self.nu * self.nu))

    pi = hesitancy

    def as_tuple(self) -> tuple[float, float]:
        return (self.mu, self.nu)


def check_pfn(mu: float, nu: float) -> None:
    if not (math.isfinite(mu) and math.isfinite(nu)):
        raise DomainError(f"non-finite PFN degrees ({mu}, {nu})")
    if mu < -TOL or mu > 1 + TOL or nu < -TOL or nu > 1 + TOL:
        raise DomainError(f"PFN degrees outside [0, 1]: ({mu}, {nu})")
    if mu * mu + nu * nu > 1 + TOL:
        raise DomainError(f"mu^2 + nu^2 > 1 for ({mu}, {nu})")


def check_pfn_array(arr: np.ndarray) -> None:
    """Raise DomainError unless every ``(mu, nu)`` pair in ``arr`` is valid."""
    arr = np.asarray(arr, dtype=float)
    if arr.shape[-1:] != (2,):
        raise DimensionError(f"expected trailing axis of length 2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite PFN degrees")
    if np.any(arr < -TOL) or np.any(arr > 1 + TOL):
        raise DomainError("PFN degrees outside [0, 1]")
    if np.any(np.sum(arr * arr, axis=-1) > 1 + TOL):
        raise DomainError("mu^2 + nu^2 > 1")


def _pair(p) -> tuple[float, float]:
    if isinstance(p, PFN):
        return p.mu, p.nu
    mu, nu = p
    check_pfn(mu, nu)
    return float(mu), float(nu)


def pfn_distance(a, b) -> float:
    """Distance between two PFNs; accepts :class:`PFN` or ``(mu, nu)`` pairs."""
    mua, nua = _pair(a)
    mub, nub = _pair(b)
    dm = mua * mua - mub * mub
    dn = nua * nua - nub * nub
    # pi^2 = 1 - mu^2 - nu^2, so the hesitancy term is -(dm + dn)
    dp = (1.0 - mua * mua - nua * nua) - (1.0 - mub * mub - nub * nub)
    return math.sqrt((dm * dm + dn * dn + dp * dp) / 2.0)


def pfn_distance_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized :func:`pfn_distance` over broadcastable ``(..., 2)`` arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sa, sb = a * a, b * b
    dm = sa[..., 0] - sb[..., 0]
    dn = sa[..., 1] - sb[..., 1]
    dp = (1.0 - sa[..., 0] - sa[..., 1]) - (1.0 - sb[..., 0] - sb[..., 1])
    return np.sqrt((dm * dm + dn * dn + dp * dp) / 2.0)


def as_vector(x) -> np.ndarray:
    """Coerce a sequence of PFNs or an array to a validated ``(D, 2)`` array."""
    if isinstance(x, np.ndarray):
        arr = np.asarray(x, dtype=float)
    else:
        arr = np.array([_pair(p) for p in x], dtype=float).reshape(-1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DimensionError(f"feature vector must have shape (D, 2), got {arr.shape}")
    check_pfn_array(arr)
    return arr


def vector_distance(x, v) -> float:
    """Root mean squared PFN distance between two D-dimensional vectors."""
    xa, va = as_vector(x), as_vector(v)
    if xa.shape != va.shape:
        raise DimensionError(f"length mismatch: {xa.shape[0]} vs {va.shape[0]}")
    if xa.shape[0] == 0:
        raise DimensionError("vectors must have at least one dimension")
    d = pfn_distance_array(xa, va)
    return math.sqrt(float(np.sum(d * d)) / xa.shape[0])


def squares(arr: np.ndarray) -> np.ndarray:
    """Map ``(mu, nu)`` arrays to ``(mu**2, nu**2)``."""
    arr = np.asarray(arr, dtype=float)
    return arr * arr


def from_squares(sq: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(sq, 0.0, 1.0))


def sq_pair_distance2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared PFN distance for inputs already in squared-degree space.

    With ``da = mu_a**2 - mu_b**2`` and ``dn`` likewise the squared distance
    reduces to ``da**2 + dn**2 + da*dn``.
    """
    da = a[..., 0] - b[..., 0]
    dn = a[..., 1] - b[..., 1]
    return da * da + dn * dn + da * dn


def encode_feature(kind: str, value) -> PFN:
    """Encode one raw feature value as a PFN.

    ``value`` is ``None`` for a missing entry, which maps to the fully
    hesitant ``P(0, 0)``.  Real values in [0, 1] map to ``P(v, 1 - v)``;
    binary labels map to ``P(1, 0)`` (present) or ``P(0, 1)`` (absent).
    """
    if value is None:
        return PFN(0.0, 0.0)
    if kind == "binary":
        if value in (1, True):
            return PFN(1.0, 0.0)
        if value in (0, False):
            return PFN(0.0, 1.0)
        raise RangeError(f"binary feature expects 0 or 1, got {value!r}")
    if kind == "real":
        v = float(value)
        if not (0.0 <= v <= 1.0):
            raise RangeError(f"normalized feature outside [0, 1]: {v}")
        return PFN(v, 1.0 - v)
    raise SchemaError(f"unknown feature kind {kind!r}")


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    category: str
    kind: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise SchemaError(f"feature {self.name!r}: unknown category {self.category!r}")
        if self.kind not in KINDS:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class FeatureSchema:
    descriptors: tuple[FeatureDescriptor, ...]

    def __post_init__(self):
        if len(self.descriptors) < 1:
            raise SchemaError("schema needs at least one feature")
        names = [d.name for d in self.descriptors]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate feature names: {dup}")

    def __len__(self):
        return len(self.descriptors)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    def encode_row(self, values: Sequence) -> np.ndarray:
        """Encode one raw row (``None`` = missing) into a ``(D, 2)`` array."""
        if len(values) != len(self.descriptors):
            raise DimensionError(f"row has {len(values)} values, schema has {len(self)}")
        return np.array(
            [encode_feature(d.kind, v).as_tuple() for d, v in zip(self.descriptors, values)],
            dtype=float,
        )

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "features": [
                {"name": d.name, "category": d.category, "kind": d.kind} for d in self.descriptors
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureSchema":
        if doc.get("format_version") != FORMAT_VERSION:
            raise FormatVersionError(f"unsupported schema format_version {doc.get('format_version')!r}")
        try:
            descs = tuple(
                FeatureDescriptor(f["name"], f["category"], f["kind"]) for f in doc["features"]
            )
        except KeyError as exc:
            raise SchemaError(f"schema feature missing field {exc}") from None
        return cls(descs)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "FeatureSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


_BASIC = [
    ("age", "real"),
    ("sex", "binary"),
    ("height", "real"),
    ("weight", "real"),
    ("heart_rate", "real"),
    ("blood_pressure", "real"),
    ("vital_capacity", "real"),
]
_CONSTITUTIONS = [
    "mild", "yang_deficiency", "yin_deficiency", "phlegm_dampness", "wet_heat",
    "qi_stagnation", "qi_deficiency", "blood_stasis", "special",
]
_SYNDROMES = [
    "shire_jinyin", "pixu_shiyun", "xuexu_fengzao", "shire_yuzu", "shire_shangyin", "qizhi_xueyu",
]


def default_schema(n_illness: int = 21) -> FeatureSchema:
    """Desk-scale schema with the five feature categories (64 features by default)."""
    descs: list[FeatureDescriptor] = []
    descs += [FeatureDescriptor(n, "basic_health", k) for n, k in _BASIC]
    descs += [FeatureDescriptor(f"constitution_{n}", "tcm_constitution", "real") for n in _CONSTITUTIONS]
    descs += [FeatureDescriptor(f"syndrome_{n}", "tcm_syndrome", "binary") for n in _SYNDROMES]
    descs += [FeatureDescriptor(f"past_illness_{i:03d}", "past_illness", "binary") for i in range(1, n_illness + 1)]
    descs += [
        FeatureDescriptor(f"current_illness_{i:03d}", "current_illness", "binary")
        for i in range(1, n_illness + 1)
    ]
    return FeatureSchema(tuple(descs))


def stack_vectors(vectors: Iterable) -> np.ndarray:
    """Stack feature vectors into a validated ``(n, D, 2)`` array."""
    arrs = [as_vector(v) for v in vectors]
    if not arrs:
        raise DimensionError("no feature vectors given")
    dims = {a.shape[0] for a in arrs}
    if len(dims) != 1:
        raise DimensionError(f"inconsistent dimensions {sorted(dims)}")
    return np.stack(arrs)
