import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mazeqd import divergence as dv

import oracles


def test_identical_behaviors_zero_novelty():
    assert dv.novelty_score((5.0, 5.0), [(5.0, 5.0)] * 20) == 0.0


def test_single_neighbor():
    assert dv.novelty_score((0.0, 0.0), [(3.0, 4.0)], n_ns=15) == 5.0


def test_empty_neighbors_zero():
    assert dv.novelty_score((0.0, 0.0), np.zeros((0, 2))) == 0.0


def test_default_neighbourhood():
    import inspect
    assert inspect.signature(dv.novelty_score).parameters["n_ns"].default == 15


def test_novelty_matches_oracle_200():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 200, (200, 2))
    for t in range(50):
        target = rng.uniform(0, 200, 2)
        assert dv.novelty_score(target, pts, None, 15) == oracles.knn_mean(target, pts, 15)


def test_novelty_includes_archive():
    arch = dv.NoveltyArchive(threshold=1.0)
    arch.consider((10.0, 0.0), 5.0)
    pop = [(100.0, 0.0)]
    assert dv.novelty_score((0.0, 0.0), pop, arch, 1) == 10.0
    assert dv.novelty_score((0.0, 0.0), pop, arch, 2) == 55.0


def test_novelty_scores_all_excludes_self():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 50, (40, 2)).round(0)
    got = dv.novelty_scores_all(pts, None, 5)
    for i in range(40):
        others = np.delete(pts, i, axis=0)
        assert got[i] == oracles.knn_mean(pts[i], others, 5)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=0, max_size=60))
def test_fsum_kernel_matches_math_fsum(xs):
    arr = np.array(xs, dtype=float)
    assert dv.fsum_kernel(arr, len(arr)) == math.fsum(xs)


def test_archive_threshold_strict():
    a = dv.NoveltyArchive(threshold=3.0)
    assert not a.consider((0, 0), 3.0)
    assert a.consider((0, 0), 3.0000001)
    assert len(a) == 1


def test_archive_raise_after_five_adds():
    a = dv.NoveltyArchive.for_world(math.hypot(200, 200))
    rho = a.threshold
    assert rho == pytest.approx(0.1 * math.hypot(200, 200))
    for i in range(5):
        assert a.consider((i, i), rho + 1)
    a.end_window()
    assert a.threshold == pytest.approx(rho * 1.2)


def test_archive_four_adds_keep_threshold():
    a = dv.NoveltyArchive(threshold=10.0)
    for i in range(4):
        a.consider((i, 0), 11.0)
    a.end_window()
    assert a.threshold == 10.0


def test_archive_lower_after_four_stagnant_windows():
    a = dv.NoveltyArchive(threshold=10.0)
    for w in range(3):
        a.end_window()
        assert a.threshold == 10.0
    a.end_window()
    assert a.threshold == pytest.approx(8.0)


def test_archive_floor():
    a = dv.NoveltyArchive(threshold=0.55)
    for _ in range(8):
        a.end_window()
    assert a.threshold == 0.5


def test_archive_monotone_and_order_independent():
    rng = np.random.default_rng(3)
    items = [(tuple(rng.uniform(0, 200, 2)), float(rng.uniform(0, 40))) for _ in range(100)]
    a, b = dv.NoveltyArchive(threshold=20.0), dv.NoveltyArchive(threshold=20.0)
    sizes = []
    for beh, nov in items:
        a.consider(beh, nov)
        sizes.append(len(a))
    for beh, nov in reversed(items):
        b.consider(beh, nov)
    assert sizes == sorted(sizes)
    assert sorted(a.behaviors) == sorted(b.behaviors)


def test_archive_arrays_follow_lists():
    a = dv.NoveltyArchive(threshold=0.0)
    for i in range(200):
        a.consider((i, -i), 1.0, objective=float(i))
    assert np.array_equal(a.points(), np.array([(i, -i) for i in range(200)], float))
    assert np.array_equal(a.objective_array(), np.arange(200.0))


def test_consider_for_archive_returns_archive():
    a = dv.NoveltyArchive(threshold=1.0)
    assert dv.consider_for_archive(a, (1, 1), 2.0) is a and len(a) == 1


def test_surprise_model_linear_extrapolation():
    m = dv.update_surprise_model([(0.0, 0.0)], [(1.0, 1.0)], k=1, seed=0)
    assert np.array_equal(m.predictions, [[2.0, 2.0]])


def test_surprise_model_stationary():
    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 200, (60, 2))
    m = dv.update_surprise_model(pts, pts, k=10, seed=1)
    assert np.allclose(m.predictions, m.centroids_prev1, atol=1e-12)


def test_surprise_model_k_clamped_and_invariant():
    rng = np.random.default_rng(5)
    a, b = rng.uniform(0, 200, (30, 2)), rng.uniform(0, 200, (30, 2))
    m = dv.update_surprise_model(a, b, k=200, seed=2)
    assert len(m.predictions) == 30
    assert np.array_equal(m.predictions, 2 * m.centroids_prev1 - m.centroids_prev2)


def test_predictions_not_clamped():
    m = dv.update_surprise_model([(190.0, 190.0)], [(199.0, 199.0)], k=1, seed=0)
    assert m.predictions[0, 0] > 200


def test_surprise_zero_when_on_predictions():
    assert dv.surprise_score((1.0, 1.0), np.array([[1.0, 1.0], [1.0, 1.0], [50.0, 50.0]]), 2) == 0.0


def test_surprise_arithmetic():
    preds = np.array([[3.0, 4.0], [6.0, 8.0], [30.0, 40.0]])
    assert dv.surprise_score((0.0, 0.0), preds, 2) == 7.5


def test_surprise_matches_oracle_200():
    rng = np.random.default_rng(6)
    preds = rng.uniform(-50, 250, (200, 2))
    for _ in range(50):
        t = rng.uniform(0, 200, 2)
        assert dv.surprise_score(t, preds, 2) == oracles.knn_mean(t, preds, 2)


def test_surprise_with_extra_points():
    preds = np.array([[100.0, 0.0]])
    assert dv.surprise_score((0.0, 0.0), preds, 1, extra=np.array([[1.0, 0.0]])) == 1.0


def test_model_csv(tmp_path):
    m = dv.update_surprise_model([(0.0, 0.0), (5.0, 5.0)], [(1.0, 1.0), (6.0, 5.0)], k=2, seed=0)
    p = tmp_path / "model.csv"
    m.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("cluster,") and len(lines) == 3


def test_nss_bounds():
    assert dv.nss_score(3.0, 7.0, 1.0) == 3.0
    assert dv.nss_score(3.0, 7.0, 0.0) == 7.0
    assert dv.nss_score(10.0, 0.0, 0.7) == pytest.approx(7.0)
    with pytest.raises(ValueError):
        dv.nss_score(1.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        dv.nss_score(1.0, 1.0, -0.1)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0.01, 0.99))
def test_nss_monotone(n, s, dn, lam):
    base = dv.nss_score(n, s, lam)
    assert dv.nss_score(n + dn, s, lam) >= base
    assert dv.nss_score(n, s + dn, lam) >= base


def test_kmeans_single_cluster_is_mean():
    rng = np.random.default_rng(7)
    pts = rng.normal(0, 1, (100, 2))
    c = dv.kmeans(pts, 1, 0)
    assert np.allclose(c[0], pts.mean(axis=0), atol=1e-12)


def test_kmeans_k_equals_n():
    pts = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 9.0], [3.0, 3.0]])
    c = dv.kmeans(pts, 4, 3)
    assert sorted(map(tuple, c)) == sorted(map(tuple, pts))


def test_kmeans_two_blobs():
    rng = np.random.default_rng(8)
    sigma = 1.0
    a = rng.normal((20, 20), sigma, (100, 2))
    b = rng.normal((150, 80), sigma, (100, 2))
    c = dv.kmeans(np.vstack([a, b]), 2, 5)
    c = c[np.argsort(c[:, 0])]
    assert np.all(np.abs(c[0] - (20, 20)) < 3 * sigma)
    assert np.all(np.abs(c[1] - (150, 80)) < 3 * sigma)


def test_kmeans_empty_cluster_reseeded():
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0]])
    init = np.array([[0.0, 0.5], [1000.0, 1000.0]])
    c = dv.kmeans(pts, 2, init)
    # the far centroid lost every point; it is re-seeded with the farthest one
    assert np.allclose(sorted(map(tuple, c)), [(0.0, 0.5), (10.0, 0.0)])


def test_kmeans_deterministic():
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 200, (250, 2))
    assert np.array_equal(dv.kmeans(pts, 20, 11), dv.kmeans(pts, 20, 11))


def test_kmeans_duplicate_points():
    pts = np.array([[1.0, 1.0]] * 5)
    c = dv.kmeans(pts, 3, 0)
    assert np.all(c == 1.0)
