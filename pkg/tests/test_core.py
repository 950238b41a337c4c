import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffcm.core import (
    ClusteringError,
    DegenerateClusterError,
    FcmConfig,
    KmeansConfig,
    fcm_center_update,
    fcm_fit,
    fcm_membership_update,
    fcm_objective,
    kmeans_assign,
    kmeans_center_update,
    kmeans_fit,
    kmeans_objective,
    kmeanspp_init,
    random_membership,
)

LINE = np.array([0.0, 1, 2, 10, 11, 12])[:, None]
LITERAL = FcmConfig(m=2.0, membership_formula="paper")
BEZDEK = FcmConfig(m=2.0, membership_formula="bezdek")


def brute_force_labels(x, c):
    labels = []
    for xi in x:
        best, best_k = np.inf, None
        for k, ck in enumerate(c):
            d = float(np.sum((xi - ck) ** 2))
            if d < best:
                best, best_k = d, k
        labels.append(best_k)
    return np.array(labels)


def best_partition_objective(x, k):
    """Minimum k-means objective over every labelling (tiny inputs only)."""
    best = np.inf
    for labels in itertools.product(range(k), repeat=len(x)):
        labels = np.array(labels)
        if len(set(labels)) < k:
            continue
        total = sum(np.sum((x[labels == j] - x[labels == j].mean(axis=0)) ** 2) for j in range(k))
        best = min(best, total)
    return best


class TestKmeansAssign:
    def test_point_on_center(self):
        assert kmeans_assign([[0.0, 0.0]], [[0, 0], [5, 5]]).tolist() == [0]

    def test_tie_goes_to_lowest_index(self):
        assert kmeans_assign([[1.0, 1.0]], [[0, 0], [2, 2]]).tolist() == [0]
        assert kmeans_assign([[1.0, 1.0]], [[2, 2], [0, 0]]).tolist() == [0]

    def test_line_example(self):
        labels = kmeans_assign(LINE, [[1.0], [11.0]])
        assert labels.tolist() == brute_force_labels(LINE, np.array([[1.0], [11.0]])).tolist()
        assert labels.tolist() == [0, 0, 0, 1, 1, 1]

    def test_dimension_mismatch(self):
        with pytest.raises(ClusteringError, match="dimension"):
            kmeans_assign([[0.0, 0.0]], [[0.0, 0.0, 0.0]])

    def test_random_against_brute_force(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(50, 3))
        c = rng.normal(size=(4, 3))
        assert np.array_equal(kmeans_assign(x, c), brute_force_labels(x, c))


class TestKmeansCenterUpdate:
    def test_two_point_mean(self):
        assert kmeans_center_update([[0.0], [2.0]], [0, 0], 1).tolist() == [[1.0]]

    def test_line_example(self):
        c = kmeans_center_update(LINE, [0, 0, 0, 1, 1, 1], 2)
        assert c.ravel().tolist() == [1.0, 11.0]

    def test_empty_cluster_reseeded_to_farthest_point(self):
        # mean of all points is 6; points 0 and 12 are both 6 away, lowest index wins
        c = kmeans_center_update(LINE, [0] * 6, 2)
        assert c.ravel().tolist() == [6.0, 0.0]
        x = np.array([[0.0], [1.0], [5.0]])
        c = kmeans_center_update(x, [0, 0, 0], 2)
        assert c.ravel().tolist() == [2.0, 5.0]

    def test_several_empty_clusters_take_distinct_points(self):
        x = np.array([[0.0], [1.0], [5.0], [-4.0]])
        c = kmeans_center_update(x, [0, 0, 0, 0], 3)
        assert c[0, 0] == pytest.approx(0.5)
        assert sorted(c[1:, 0].tolist()) == [-4.0, 5.0]

    def test_label_out_of_range(self):
        with pytest.raises(ClusteringError):
            kmeans_center_update(LINE, [0, 0, 0, 2, 2, 2], 2)


class TestKmeansObjective:
    def test_zero_when_points_on_centers(self):
        assert kmeans_objective([[1.0], [2.0]], [0, 1], [[1.0], [2.0]]) == 0.0

    def test_line_example(self):
        assert kmeans_objective(LINE, [0, 0, 0, 1, 1, 1], [[1.0], [11.0]]) == 4.0

    def test_single_point(self):
        assert kmeans_objective([[1.0, 2.0]], [0], [[4.0, 6.0]]) == 25.0

    def test_shape_mismatch(self):
        with pytest.raises(ClusteringError):
            kmeans_objective(LINE, [0, 1], [[1.0], [11.0]])


class TestKmeansPP:
    def test_n_equals_k_selects_everything(self):
        x = np.array([[0.0, 0], [1, 0], [0, 1], [5, 5]])
        c = kmeanspp_init(x, 4, np.random.default_rng(0))
        assert sorted(map(tuple, c)) == sorted(map(tuple, x))

    def test_deterministic(self):
        x = np.random.default_rng(1).normal(size=(100, 2))
        a = kmeanspp_init(x, 5, np.random.default_rng(42))
        b = kmeanspp_init(x, 5, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_distinct_points(self):
        x = np.array([[0.0], [0.0], [0.0], [1.0]])
        c = kmeanspp_init(x, 3, np.random.default_rng(0))
        assert c.shape == (3, 1)

    def test_far_pairs_are_split(self):
        x = np.array([[0.0, 0.0], [0.1, 0.0], [100.0, 100.0], [100.1, 100.0]])
        split = 0
        for seed in range(1000):
            c = kmeanspp_init(x, 2, np.random.default_rng(seed))
            split += (c[0, 0] < 50) != (c[1, 0] < 50)
        assert split / 1000 > 0.95

    def test_too_few_points(self):
        with pytest.raises(ClusteringError):
            kmeanspp_init([[0.0]], 2, np.random.default_rng(0))


class TestKmeansFit:
    def test_k_distinct_points(self):
        x = np.array([[0.0, 0], [3, 4], [-1, 7]])
        res = kmeans_fit(x, 3, KmeansConfig(rng_seed=0))
        assert res.objective == 0.0
        assert sorted(map(tuple, res.centers)) == sorted(map(tuple, x))

    def test_line_example_matches_exhaustive_optimum(self):
        res = kmeans_fit(LINE, 2, KmeansConfig(rng_seed=0))
        assert best_partition_objective(LINE, 2) == pytest.approx(4.0)
        assert res.objective == pytest.approx(4.0)
        assert sorted(res.centers.ravel().tolist()) == [1.0, 11.0]

    def test_g2_style_recovers_means(self):
        rng = np.random.default_rng(5)
        x = np.vstack([rng.normal(500, 10, (200, 2)), rng.normal(600, 10, (200, 2))])
        res = kmeans_fit(x, 2, KmeansConfig(rng_seed=1))
        c = res.centers[np.argsort(res.centers[:, 0])]
        assert np.all(np.abs(c[0] - 500) < 5)
        assert np.all(np.abs(c[1] - 600) < 5)

    def test_too_few_points(self):
        with pytest.raises(ClusteringError):
            kmeans_fit(LINE, 7)

    def test_warm_start(self):
        res = kmeans_fit(LINE, 2, init=[[0.0], [12.0]])
        assert res.centers.ravel().tolist() == [1.0, 11.0]

    def test_history_nonincreasing(self):
        x = np.random.default_rng(9).normal(size=(150, 3))
        res = kmeans_fit(x, 4, KmeansConfig(rng_seed=3, n_init=1))
        assert np.all(np.diff(res.history) <= 1e-9)


class TestFcmMembership:
    def test_point_on_center_is_one_hot(self):
        u = fcm_membership_update([[2.0, 0.0]], [[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]], LITERAL)
        assert u.tolist() == [[0.0, 1.0, 0.0]]

    def test_point_on_two_coincident_centers_splits(self):
        u = fcm_membership_update([[1.0]], [[1.0], [1.0], [3.0]], LITERAL)
        assert u.tolist() == [[0.5, 0.5, 0.0]]

    @pytest.mark.parametrize("m", [1.1, 1.5, 2.0, 3.0])
    @pytest.mark.parametrize("formula", ["paper", "bezdek"])
    def test_equidistant_symmetry(self, m, formula):
        u = fcm_membership_update([[1.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]], FcmConfig(m=m, membership_formula=formula))
        np.testing.assert_allclose(u, [[0.5, 0.5]], atol=1e-15)

    def test_hand_evaluated_paper_literal(self):
        # squared-distance ratio 0.25/2.25 = 1/9, raised to 2/(m-1) = 2 -> 1/81
        u = fcm_membership_update([[0.5]], [[0.0], [2.0]], LITERAL)
        assert u[0, 0] == pytest.approx(81 / 82, rel=1e-14)
        assert u[0, 1] == pytest.approx(1 / 82, rel=1e-14)

    def test_hand_evaluated_bezdek(self):
        u = fcm_membership_update([[0.5]], [[0.0], [2.0]], BEZDEK)
        assert u[0, 0] == pytest.approx(0.9, rel=1e-14)

    def test_scalar_reference(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(20, 3))
        c = rng.normal(size=(4, 3))
        for cfg, p in ((FcmConfig(m=1.7), 2 / 0.7), (FcmConfig(m=1.7, membership_formula="bezdek"), 1 / 0.7)):
            u = fcm_membership_update(x, c, cfg)
            for i in range(20):
                for j in range(4):
                    dij = sum((x[i, t] - c[j, t]) ** 2 for t in range(3))
                    ref = 1.0 / sum((dij / sum((x[i, t] - c[k, t]) ** 2 for t in range(3))) ** p for k in range(4))
                    assert u[i, j] == pytest.approx(ref, rel=1e-10)

    def test_small_m_does_not_overflow(self):
        x = np.array([[1e-12, 0.0], [50.0, 50.0]])
        u = fcm_membership_update(x, [[0.0, 0.0], [100.0, 100.0]], FcmConfig(m=1.01))
        assert np.all(np.isfinite(u))
        np.testing.assert_allclose(u.sum(axis=1), 1.0, atol=1e-12)


class TestFcmCenterUpdate:
    def test_one_hot_reduces_to_mean(self):
        x = LINE
        u = np.zeros((6, 2))
        u[:3, 0] = u[3:, 1] = 1
        assert fcm_center_update(x, u, 2.0).ravel().tolist() == [1.0, 11.0]

    def test_single_cluster(self):
        assert fcm_center_update([[0.0], [2.0]], [[1.0], [1.0]], 2.0).tolist() == [[1.0]]

    def test_hand_evaluated(self):
        u = np.array([[0.9, 0.1], [0.1, 0.9]])
        c = fcm_center_update([[0.0], [2.0]], u, 2.0)
        assert c[0, 0] == pytest.approx(0.02 / 0.82, rel=1e-14)
        assert c[0, 0] == pytest.approx(0.02439, abs=1e-5)

    def test_degenerate_cluster(self):
        with pytest.raises(DegenerateClusterError) as exc:
            fcm_center_update([[0.0], [2.0]], [[1.0, 0.0], [1.0, 0.0]], 2.0)
        assert exc.value.clusters == [1]


class TestFcmObjective:
    def test_zero_at_one_hot_centers(self):
        assert fcm_objective([[1.0], [3.0]], [[1, 0], [0, 1]], [[1.0], [3.0]], 2.0) == 0.0

    def test_hand_evaluated(self):
        assert fcm_objective([[0.0]], [[0.5, 0.5]], [[1.0], [-1.0]], 2.0) == pytest.approx(0.5)

    def test_one_hot_equals_kmeans_objective(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(30, 2))
        c = rng.normal(size=(3, 2))
        labels = rng.integers(0, 3, 30)
        u = np.eye(3)[labels]
        assert fcm_objective(x, u, c, 2.3) == pytest.approx(kmeans_objective(x, labels, c), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ClusteringError):
            fcm_objective([[0.0]], [[0.5, 0.5]], [[1.0]], 2.0)


class TestFcmFit:
    def test_two_blobs_1d(self):
        rng = np.random.default_rng(0)
        x = np.concatenate([rng.normal(-5, 0.5, 300), rng.normal(5, 0.5, 300)])[:, None]
        blob_means = [x[:300].mean(), x[300:].mean()]
        for cfg in (LITERAL, BEZDEK):
            res = fcm_fit(x, 2, cfg)
            c = np.sort(res.centers.ravel())
            np.testing.assert_allclose(c, blob_means, atol=0.1)

    def test_history_nonincreasing_bezdek(self):
        x = np.random.default_rng(4).normal(size=(120, 2))
        res = fcm_fit(x, 3, BEZDEK)
        assert np.all(np.diff(res.history) <= 1e-9)

    def test_returned_u_matches_centers(self):
        x = np.random.default_rng(4).normal(size=(50, 2))
        res = fcm_fit(x, 3, LITERAL)
        np.testing.assert_array_equal(res.u, fcm_membership_update(x, res.centers, LITERAL))

    def test_seeded(self):
        x = np.random.default_rng(4).normal(size=(50, 2))
        a = fcm_fit(x, 3, FcmConfig(rng_seed=7))
        b = fcm_fit(x, 3, FcmConfig(rng_seed=7))
        assert np.array_equal(a.centers, b.centers)

    def test_init_centers(self):
        x = np.random.default_rng(4).normal(size=(50, 2))
        init = np.array([[-1.0, 0.0], [1.0, 0.0]])
        res = fcm_fit(x, 2, LITERAL, init_centers=init)
        first = fcm_center_update(x, fcm_membership_update(x, init, LITERAL), 2.0)
        np.testing.assert_array_equal(res.center_trajectory[0], first)

    def test_too_few_points(self):
        with pytest.raises(ClusteringError):
            fcm_fit([[0.0]], 2)

    def test_config_validation(self):
        with pytest.raises(ClusteringError):
            FcmConfig(m=1.0)
        with pytest.raises(ClusteringError):
            FcmConfig(epsilon=0)
        with pytest.raises(ClusteringError):
            KmeansConfig(n_init=0)


def test_random_membership_rows_sum_to_one():
    u = random_membership(100, 4, np.random.default_rng(0))
    assert np.all(u >= 0)
    np.testing.assert_allclose(u.sum(axis=1), 1.0, atol=1e-12)


# property tests

dims = st.integers(1, 5)


@st.composite
def data_and_centers(draw):
    d = draw(dims)
    n = draw(st.integers(1, 40))
    k = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, d)) * 3, rng.normal(size=(k, d)) * 3


@settings(max_examples=60, deadline=None)
@given(data_and_centers(), st.floats(1.05, 4.0), st.sampled_from(["paper", "bezdek"]))
def test_membership_rows_sum_to_one(dc, m, formula):
    x, c = dc
    u = fcm_membership_update(x, c, FcmConfig(m=m, membership_formula=formula))
    assert np.all((u >= 0) & (u <= 1))
    np.testing.assert_allclose(u.sum(axis=1), 1.0, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(data_and_centers(), st.floats(1.05, 4.0), st.sampled_from(["paper", "bezdek"]), st.floats(1e-3, 1e3))
def test_membership_scale_invariant(dc, m, formula, scale):
    x, c = dc
    cfg = FcmConfig(m=m, membership_formula=formula)
    np.testing.assert_allclose(
        fcm_membership_update(x * scale, c * scale, cfg), fcm_membership_update(x, c, cfg), atol=1e-9
    )


@settings(max_examples=60, deadline=None)
@given(data_and_centers(), st.floats(1.05, 4.0), st.sampled_from(["paper", "bezdek"]))
def test_membership_argmax_matches_nearest_center(dc, m, formula):
    x, c = dc
    d2 = np.sort(((x[:, None] - c[None]) ** 2).sum(-1), axis=1)
    # only points with a clear nearest center
    clear = d2[:, 0] < d2[:, 1] * (1 - 1e-6) if c.shape[0] > 1 else np.ones(len(x), bool)
    u = fcm_membership_update(x, c, FcmConfig(m=m, membership_formula=formula))
    assert np.array_equal(np.argmax(u, axis=1)[clear], kmeans_assign(x, c)[clear])


@settings(max_examples=60, deadline=None)
@given(data_and_centers(), st.floats(1.05, 4.0))
def test_one_hot_center_update_equals_kmeans_bitwise(dc, m):
    x, c = dc
    labels = kmeans_assign(x, c)
    k = c.shape[0]
    if len(set(labels.tolist())) < k:
        return  # empty clusters are repaired by k-means, undefined for FCM
    u = np.eye(k)[labels]
    assert np.array_equal(fcm_center_update(x, u, m), kmeans_center_update(x, labels, k))


@settings(max_examples=40, deadline=None)
@given(data_and_centers())
def test_fcm_centers_in_convex_hull_box(dc):
    x, c = dc
    u = fcm_membership_update(x, c, LITERAL)
    centers = fcm_center_update(x, u, 2.0)
    assert np.all(centers >= x.min(axis=0) - 1e-9)
    assert np.all(centers <= x.max(axis=0) + 1e-9)
