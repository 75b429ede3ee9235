import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prevopt.clustering import (
    ClusterModel,
    PfcmConfig,
    centroids_sq,
    memberships_from_sqdist,
    objective,
    random_centroids,
    random_restart_pfcm,
    run_pfcm,
    update_centroids,
    update_memberships,
)
from prevopt.errors import DegenerateClusterError, DimensionError, DomainError, FormatVersionError
from prevopt.generator import cloud_points
from prevopt.pfs import squares


def two_clouds(n=60, seed=0):
    rng = np.random.default_rng(seed)
    lo = np.clip(0.1 + rng.normal(0, 0.03, (n // 2, 5)), 0, 1)
    hi = np.clip(0.9 + rng.normal(0, 0.03, (n - n // 2, 5)), 0, 1)
    v = np.concatenate([lo, hi])
    return np.stack([v, 1 - v], -1), np.repeat([0, 1], [n // 2, n - n // 2])


class TestConfig:
    @pytest.mark.parametrize("kw", [{"c": 1}, {"c": 2, "m": 1.0}, {"c": 2, "max_iters": 0},
                                    {"c": 2, "epsilon": 0}, {"c": 2, "centroid_weighting": "x"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PfcmConfig(**kw)


class TestObjective:
    def test_points_on_centroids(self):
        P = np.array([[[0.2, 0.3]], [[0.9, 0.1]]])
        model = ClusterModel(U=np.eye(2), V=P.copy(), J=0)
        assert objective(P, model) == 0

    def test_hand_value(self):
        # one point at distance 1 from both centroids, memberships (0.5, 0.5)
        P = np.array([[[1.0, 0.0]]])
        V = np.array([[[0.0, 1.0]], [[0.0, 1.0]]])
        model = ClusterModel(U=np.array([[0.5], [0.5]]), V=V, J=0)
        assert objective(P, model, m=2) == pytest.approx(0.25)

    def test_larger_m_lowers_j(self):
        P, _ = two_clouds()
        V = random_centroids(np.random.default_rng(1), 2, 5)
        U = update_memberships(P, V)
        model = ClusterModel(U=U, V=V, J=0)
        assert objective(P, model, m=3) < objective(P, model, m=2)

    def test_shape_errors(self):
        P = np.zeros((3, 2, 2))
        with pytest.raises(DimensionError):
            objective(P, ClusterModel(U=np.ones((2, 3)), V=np.zeros((2, 3, 2)), J=0))
        with pytest.raises(DimensionError):
            objective(P, ClusterModel(U=np.ones((2, 4)), V=np.zeros((2, 2, 2)), J=0))


class TestMemberships:
    def test_zero_distance(self):
        U = memberships_from_sqdist(np.array([[0.3], [0.0], [0.2]]), 2.0)
        assert U[:, 0].tolist() == [0.0, 1.0, 0.0]

    def test_zero_tie_first_wins(self):
        U = memberships_from_sqdist(np.array([[0.1], [0.0], [0.0]]), 2.0)
        assert U[:, 0].tolist() == [0.0, 1.0, 0.0]

    def test_equal_distances(self):
        U = memberships_from_sqdist(np.array([[0.4], [0.4]]), 2.0)
        assert U[:, 0].tolist() == [0.5, 0.5]

    def test_hand_value(self):
        # distances 1 and 2, m = 2
        U = memberships_from_sqdist(np.array([[1.0], [4.0]]), 2.0)
        assert U[:, 0] == pytest.approx([0.8, 0.2], abs=1e-15)

    def test_tiny_distances_stable(self):
        U = memberships_from_sqdist(np.array([[1e-300], [1e-290]]), 1.5)
        assert np.all(np.isfinite(U)) and U.sum() == pytest.approx(1.0)

    @settings(max_examples=60)
    @given(st.integers(2, 6), st.integers(1, 20), st.floats(1.1, 4.0), st.integers(0, 10**6))
    def test_columns_sum_to_one(self, c, n, m, seed):
        d2 = np.random.default_rng(seed).random((c, n))
        d2[d2 < 0.05] = 0.0
        U = memberships_from_sqdist(d2, m)
        assert np.allclose(U.sum(axis=0), 1.0, atol=1e-12)
        assert np.all((U >= 0) & (U <= 1))


class TestCentroids:
    def test_identical_points(self):
        P = np.tile(np.array([[0.3, 0.5], [0.7, 0.1]]), (4, 1, 1))
        U = np.random.default_rng(0).random((2, 4))
        V = update_centroids(P, U / U.sum(0))
        assert np.allclose(V, P[:1].repeat(2, 0))

    def test_mean_of_squares(self):
        P = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])
        V = update_centroids(P, np.array([[0.5, 0.5], [0.5, 0.5]]))
        assert V[0, 0] == pytest.approx([np.sqrt(0.5), np.sqrt(0.5)])

    def test_single_point(self):
        P = np.array([[[0.6, 0.7]]])
        assert np.allclose(update_centroids(P, np.array([[1.0]])), P)

    def test_empty_cluster(self):
        P = np.zeros((3, 1, 2))
        with pytest.raises(DegenerateClusterError):
            centroids_sq(squares(P), np.array([[1.0, 1, 1], [0, 0, 0]]), 2.0)

    def test_literal_weighting_differs(self):
        P, _ = two_clouds()
        U = update_memberships(P, random_centroids(np.random.default_rng(3), 2, 5))
        a = update_centroids(P, U, weighting="stationary")
        b = update_centroids(P, U, weighting="literal")
        assert not np.allclose(a, b)

    @settings(max_examples=40)
    @given(st.integers(0, 10**6))
    def test_results_are_valid_pfns(self, seed):
        rng = np.random.default_rng(seed)
        P = np.stack([rng.random((9, 3)), np.zeros((9, 3))], -1)
        P[..., 1] = rng.random((9, 3)) * np.sqrt(1 - P[..., 0] ** 2)
        U = rng.random((3, 9))
        V = update_centroids(P, U / U.sum(0))
        assert np.all(np.sum(V**2, -1) <= 1 + 1e-12)


class TestRunPfcm:
    def test_two_clouds_recovered(self):
        P, labels = two_clouds()
        model = run_pfcm(P, PfcmConfig(c=2), P[[0, -1]])
        assert model.converged
        assert np.array_equal(model.labels(), labels)

    def test_centroids_on_points(self):
        P = np.array([[[0.1, 0.9]], [[0.9, 0.1]], [[0.5, 0.5]]])
        model = run_pfcm(P, PfcmConfig(c=3), P)
        assert model.J == 0 and model.converged and model.iterations == 1

    def test_history_non_increasing(self):
        P, _ = cloud_points(4, 200, 8, spread=0.1, seed=4, missing_rate=0.2)
        model = run_pfcm(P, PfcmConfig(c=4), random_centroids(np.random.default_rng(0), 4, 8))
        assert np.all(np.diff(model.history) <= 1e-9)
        assert model.J == model.history[-1]
        assert model.J == pytest.approx(objective(P, model), rel=1e-12)

    def test_deterministic(self):
        P, _ = two_clouds()
        V0 = random_centroids(np.random.default_rng(9), 2, 5)
        a, b = run_pfcm(P, PfcmConfig(c=2), V0), run_pfcm(P, PfcmConfig(c=2), V0)
        assert np.array_equal(a.U, b.U) and a.J == b.J

    def test_permutation_equivariance(self):
        P, _ = cloud_points(3, 90, 4, seed=2)
        V0 = random_centroids(np.random.default_rng(5), 3, 4)
        perm = np.random.default_rng(1).permutation(90)
        a = run_pfcm(P, PfcmConfig(c=3), V0)
        b = run_pfcm(P[perm], PfcmConfig(c=3), V0)
        assert np.allclose(a.U[:, perm], b.U, atol=1e-9)
        assert np.allclose(a.V, b.V, atol=1e-9)
        assert a.J == pytest.approx(b.J, abs=1e-9)

    def test_errors(self):
        P, _ = two_clouds()
        with pytest.raises(DimensionError):
            run_pfcm(P, PfcmConfig(c=3), P[:2])
        with pytest.raises(DimensionError):
            run_pfcm(P, PfcmConfig(c=2), np.zeros((2, 4, 2)))
        bad = P.copy()
        bad[0, 0] = (0.9, 0.9)
        with pytest.raises(DomainError):
            run_pfcm(bad, PfcmConfig(c=2), P[:2])

    def test_max_iters_respected(self):
        P, _ = cloud_points(4, 100, 4, spread=0.2, seed=1)
        model = run_pfcm(P, PfcmConfig(c=4, max_iters=2, epsilon=1e-15), random_centroids(np.random.default_rng(0), 4, 4))
        assert model.iterations == 2 and not model.converged


def test_model_roundtrip():
    P, _ = two_clouds()
    model = run_pfcm(P, PfcmConfig(c=2), P[[0, -1]])
    text = model.dumps()
    back = ClusterModel.from_dict(json.loads(text))
    assert back.dumps() == text
    doc = json.loads(text)
    doc["format_version"] = 2
    with pytest.raises(FormatVersionError):
        ClusterModel.from_dict(doc)


def test_random_restart_picks_best():
    P, _ = cloud_points(4, 100, 6, seed=3)
    cfg = PfcmConfig(c=4)
    best = random_restart_pfcm(P, cfg, 5, seed=0)
    rng = np.random.default_rng(0)
    js = [run_pfcm(P, cfg, random_centroids(rng, 4, 6)).J for _ in range(5)]
    assert best.J == min(js)
