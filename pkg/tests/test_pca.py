import math

import numpy as np
import pytest

from groklab.pca import (FactorizationResult, circularity_score, cluster_points,
                         infer_factorization, inject_clusters, pca, projection_pairs,
                         scan_factorization, scan_pairs)


def ring(center, radius, count, phase=0.0):
    t = phase + 2 * np.pi * np.arange(count) / count
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def two_level_rows(p, k, big=10.0, small=0.3):
    """Rows whose first two coordinates place class q by (q mod k, q // k)."""
    m = p // k
    q = np.arange(p)
    a = 2 * np.pi * (q % k) / k
    b = 2 * np.pi * (q // k) / m
    return np.column_stack([big * np.cos(a) + small * np.cos(b), big * np.sin(a) + small * np.sin(b)])


# --- pca --------------------------------------------------------------------------

def test_hand_computed_instance():
    rows = np.array([[0.0, 0.0], [2.0, 1.0], [4.0, 5.0]])
    xc = rows - rows.mean(axis=0)
    # 2x2 covariance eigenproblem in closed form
    a, b, c = (xc[:, 0] @ xc[:, 0]) / 2, (xc[:, 0] @ xc[:, 1]) / 2, (xc[:, 1] @ xc[:, 1]) / 2
    disc = math.sqrt(((a - c) / 2) ** 2 + b * b)
    lam1, lam2 = (a + c) / 2 + disc, (a + c) / 2 - disc
    v1 = np.array([b, lam1 - a])
    v1 /= np.linalg.norm(v1)
    v1 *= np.sign(v1[np.argmax(np.abs(v1))])
    res = pca(rows)
    np.testing.assert_allclose(res.explained_variance, [lam1, lam2], rtol=1e-12)
    np.testing.assert_allclose(res.components[0], v1, atol=1e-12)
    np.testing.assert_allclose(res.projections[:, 0], xc @ v1, atol=1e-12)


def test_collinear_points():
    t = np.array([-2.0, 0.5, 1.0, 3.0, 7.0])
    rows = np.outer(t, [1.0, -2.0, 0.5])
    res = pca(rows)
    assert res.explained_variance[0] >= (1 - 1e-9) * res.explained_variance.sum()


@pytest.mark.parametrize("shape", [(20, 6), (11, 40), (7, 7)])
def test_orthonormal_ordered_and_reconstructing(shape, rng):
    rows = rng.standard_normal(shape) * np.linspace(3, 0.5, shape[1])
    res = pca(rows)
    k = res.n_components
    assert k == min(shape)
    np.testing.assert_allclose(res.components @ res.components.T, np.eye(k), atol=1e-8)
    assert np.all(np.diff(res.explained_variance) <= 1e-12)
    centered = rows - rows.mean(axis=0)
    np.testing.assert_allclose(res.projections @ res.components, centered, atol=1e-8)
    total = np.sum(centered**2) / (shape[0] - 1)
    assert res.explained_variance.sum() == pytest.approx(total, rel=1e-8)
    big = np.argmax(np.abs(res.components), axis=1)
    assert np.all(res.components[np.arange(k), big] > 0)


def test_rotation_leaves_variances_unchanged(rng):
    rows = rng.standard_normal((13, 8)) * np.arange(1, 9)
    q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    a, b = pca(rows), pca(rows @ q)
    np.testing.assert_allclose(a.explained_variance, b.explained_variance, rtol=1e-8, atol=1e-10)


def test_rank_deficient_and_errors(rng):
    rows = np.tile(rng.standard_normal(6), (5, 1))
    res = pca(rows)
    assert np.all(res.explained_variance == 0)
    with pytest.raises(ValueError):
        pca(np.ones((1, 4)))


def test_projection_pairs(rng):
    res = pca(rng.standard_normal((9, 7)))
    pairs = projection_pairs(res, 3)
    assert [p.components for p in pairs] == [(0, 1), (2, 3), (4, 5)]
    assert all(p.labels.tolist() == list(range(9)) for p in pairs)
    np.testing.assert_array_equal(pairs[1].points, res.projections[:, 2:4])
    assert projection_pairs(res, 0) == []
    with pytest.raises(ValueError):
        projection_pairs(res, 4)


# --- circularity ------------------------------------------------------------------------

def test_circularity_examples(rng):
    assert circularity_score(ring((3, -1), 2.0, 12)) == pytest.approx(1.0, abs=1e-12)
    line = np.column_stack([np.array([-5.0, -1, -0.2, 0.2, 1, 5]), np.zeros(6)])
    assert circularity_score(line) < 0.5
    t = rng.uniform(0, 2 * np.pi, 20000)
    r = 1.0 + 0.05 * rng.standard_normal(t.size)
    noisy = np.column_stack([r * np.cos(t), r * np.sin(t)])
    assert circularity_score(noisy) == pytest.approx(0.95, abs=0.005)
    with pytest.raises(ValueError):
        circularity_score(np.ones((4, 2)))


# --- clustering -----------------------------------------------------------------------------

def test_cluster_examples(rng):
    pts = np.vstack([ring(c, 0.2, 4, 0.3) for c in ring((0, 0), 10, 5)])
    clusters = cluster_points(pts)
    assert sorted(map(len, clusters)) == [4] * 5
    blob = 0.01 * rng.standard_normal((12, 2))
    blob[:, 0] += np.linspace(0, 0.05, 12)
    assert len(cluster_points(blob)) == 1
    pairs = np.vstack([[c, c + 1e-3] for c in 5 * rng.standard_normal((10, 2))])
    pairs = np.vstack([pairs[0::2], pairs[1::2]])
    clusters = cluster_points(pairs)
    assert sorted(map(len, clusters)) == [2] * 10
    assert all(b - a == 10 for a, b in clusters)


def test_clustering_is_deterministic(rng):
    pts = rng.standard_normal((30, 2))
    assert cluster_points(pts) == cluster_points(pts.copy())
    with pytest.raises(ValueError):
        cluster_points(np.zeros((1, 2)))


# --- factorization -------------------------------------------------------------------------

def test_infer_factorization_examples():
    five_by_four = [[q for q in range(20) if q % 5 == r] for r in range(5)]
    res = infer_factorization(five_by_four, 20)
    assert (res.k, res.m) == (5, 4) and res.residue_modulus == 5
    tens = [[q, q + 10] for q in range(10)]
    res = infer_factorization(tens, 20)
    assert (res.k, res.m, res.residue_modulus) == (10, 2, 10)
    assert infer_factorization([list(range(12)), list(range(12, 20))], 20) is None
    assert infer_factorization([list(range(20))], 20) is None
    assert infer_factorization([[q] for q in range(20)], 20) is None
    with pytest.raises(ValueError):
        infer_factorization([[0, 1]], 20)


def test_residue_absent_for_scrambled_equal_clusters():
    clusters = [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11], [12, 13, 14, 15], [16, 17, 18, 19]]
    res = infer_factorization(clusters, 20)
    assert (res.k, res.m, res.residue_modulus) == (5, 4, None)


def test_trivial_factorization_cannot_be_constructed():
    with pytest.raises(ValueError):
        FactorizationResult(1, 20, 0, None)
    with pytest.raises(ValueError):
        FactorizationResult(20, 1, 0, None)


@pytest.mark.parametrize("k,pair", [(5, 0), (4, 1), (10, 2), (2, 0)])
def test_injected_structure_detected_at_its_pair(k, pair):
    res = pca(inject_clusters(20, k, width=16, pair=pair, seed=k))
    scans = scan_pairs(res, 20, 3)
    found = scans[pair].factorization
    assert found is not None and (found.k, found.m) == (k, 20 // k)
    best = scan_factorization(res, 20, 3)
    assert best.k * best.m == 20


def test_twenty_one_shows_three_and_seven():
    rows = np.zeros((21, 10))
    rows[:, 0:2] = two_level_rows(21, 3, big=10.0)
    rows[:, 2:4] = two_level_rows(21, 7, big=4.0)
    scans = scan_pairs(pca(rows), 21, 2)
    found = {(s.factorization.k, s.factorization.m) for s in scans if s.factorization}
    assert found == {(3, 7), (7, 3)}


def test_prime_modulus_gives_absent(rng):
    assert scan_factorization(pca(rng.standard_normal((23, 30))), 23, 3) is None
    # even a perfect ring of 23 has no equal split
    rows = np.zeros((23, 6))
    rows[:, :2] = ring((0, 0), 1.0, 23)
    assert scan_factorization(pca(rows), 23, 2) is None


def test_any_reported_factorization_multiplies_out(rng):
    for seed in range(20):
        r = np.random.default_rng(seed)
        p = int(r.choice([12, 15, 20, 21]))
        res = pca(r.standard_normal((p, 12)) * np.linspace(4, 1, 12))
        for scan in scan_pairs(res, p, 3, link_factor=float(r.uniform(1, 4))):
            if scan.factorization:
                assert scan.factorization.k * scan.factorization.m == p
