import numpy as np
import pytest
from scipy.stats import kstest

from hidalgo.geometry import (
    DistanceMatrix,
    GeometryError,
    Metric,
    PointCloud,
    build_neighbor_data,
    compute_distances,
    independent_subset,
)


def nd_from_points(points, q=2, metric=None):
    cloud = PointCloud(np.asarray(points, dtype=float))
    dm = compute_distances(cloud, metric or Metric.euclidean())
    return build_neighbor_data(dm, q)


class TestComputeDistances:
    def test_euclidean_line(self):
        dm = compute_distances(PointCloud([[0.0], [1.0], [3.0]]), Metric.euclidean())
        assert dm.d[0, 1] == pytest.approx(1.0)
        assert dm.d[0, 2] == pytest.approx(3.0)
        assert dm.d[1, 2] == pytest.approx(2.0)

    def test_periodic_minimum_image(self):
        two_pi = 2.0 * np.pi
        pts = [[0.1], [two_pi - 0.1], [3.0]]
        dm = compute_distances(PointCloud(pts), Metric.periodic([two_pi]))
        assert dm.d[0, 1] == pytest.approx(0.2, rel=1e-12)

    def test_periodic_broadcast_single_period(self):
        pts = np.array([[0.1, 0.1], [3.9, 3.9], [1.0, 2.0]])
        dm = compute_distances(PointCloud(pts), Metric.periodic([4.0]))
        # wraps in both coordinates
        assert dm.d[0, 1] == pytest.approx(np.sqrt(2 * 0.2**2), rel=1e-12)

    def test_normalized_collapses_scaled_rows_to_tie(self):
        pts = [[3.0, 4.0], [6.0, 8.0], [1.0, 0.0]]
        with pytest.raises(GeometryError, match="coincide"):
            compute_distances(PointCloud(pts), Metric.normalized())

    def test_normalized_zero_norm_row(self):
        pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        with pytest.raises(GeometryError, match="zero-norm"):
            compute_distances(PointCloud(pts), Metric.normalized())

    def test_nonpositive_period_rejected(self):
        with pytest.raises(GeometryError):
            Metric.periodic([1.0, -2.0])
        with pytest.raises(GeometryError):
            Metric.periodic([0.0])

    def test_period_count_mismatch(self):
        pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        with pytest.raises(GeometryError, match="periods"):
            compute_distances(PointCloud(pts), Metric.periodic([1.0, 1.0, 1.0]))

    def test_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(0)
        cloud = PointCloud(rng.normal(size=(20, 3)))
        dm = compute_distances(cloud, Metric.euclidean())
        assert np.allclose(dm.d, dm.d.T)
        assert np.all(np.diag(dm.d) == 0.0)


class TestPointCloudValidation:
    def test_too_few_points(self):
        with pytest.raises(GeometryError):
            PointCloud([[0.0], [1.0]])

    def test_nonfinite_coordinates(self):
        with pytest.raises(GeometryError):
            PointCloud([[0.0], [np.nan], [1.0]])


class TestBuildNeighborData:
    def test_three_point_line_mu(self):
        nd = nd_from_points([[0.0], [1.0], [3.0]])
        # point 0: r1 = 1 (point 1), r2 = 3 (point 2)
        assert nd.mu[0] == pytest.approx(3.0)
        assert list(nd.nn_idx[0]) == [1, 2]

    def test_unit_square_corners(self):
        pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        nd = nd_from_points(pts, q=2)
        assert np.allclose(nd.mu, np.sqrt(2.0))

    def test_coincident_points_rejected(self):
        with pytest.raises(GeometryError, match="coincide"):
            nd_from_points([[0.0], [0.0], [1.0]])

    def test_q_bounds(self):
        dm = compute_distances(PointCloud([[0.0], [1.0], [3.0]]), Metric.euclidean())
        with pytest.raises(GeometryError):
            build_neighbor_data(dm, 1)
        with pytest.raises(GeometryError):
            build_neighbor_data(dm, 3)

    def test_tie_break_prefers_lower_index(self):
        # points 1 and 2 are equidistant from point 0
        pts = [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 5.0]]
        nd = nd_from_points(pts, q=3)
        assert list(nd.nn_idx[0][:2]) == [1, 2]

    def test_rev_is_transpose_of_nn(self):
        rng = np.random.default_rng(1)
        nd = nd_from_points(rng.normal(size=(40, 3)), q=4)
        n = nd.n_points
        assert nd.rev_data.size == 4 * n
        forward = {(i, j) for i in range(n) for j in nd.nn_idx[i]}
        backward = {(i, j) for j in range(n) for i in nd.rev_idx(j)}
        assert forward == backward

    def test_mu_invariant_under_power_of_two_rescaling(self):
        rng = np.random.default_rng(2)
        pts = rng.normal(size=(30, 2))
        nd1 = nd_from_points(pts)
        nd2 = nd_from_points(pts * 4.0)
        assert np.array_equal(nd1.mu, nd2.mu)

    def test_mu_invariant_under_generic_rescaling(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(30, 2))
        nd1 = nd_from_points(pts)
        nd2 = nd_from_points(pts * 1.7364)
        assert np.allclose(nd1.mu, nd2.mu, rtol=1e-12)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(25, 3))
        perm = rng.permutation(25)
        nd1 = nd_from_points(pts)
        nd2 = nd_from_points(pts[perm])
        # nn lists map through the permutation; mu values follow their points
        inv = np.empty(25, dtype=int)
        inv[perm] = np.arange(25)
        assert np.array_equal(inv[nd1.nn_idx[perm]], nd2.nn_idx)
        assert np.array_equal(nd1.mu[perm], nd2.mu)

    def test_mu_follows_pareto_in_uniform_ball(self):
        # uniform samples in a 2-ball: mu is Pareto(2); KS < 0.05 in >= 9/10 trials
        passed = 0
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            r = np.sqrt(rng.random(2000))
            phi = rng.random(2000) * 2 * np.pi
            pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
            nd = nd_from_points(pts)
            stat = kstest(nd.mu, lambda x: 1.0 - x**-2.0).statistic
            passed += stat < 0.05
        assert passed >= 9


class TestIndependentSubset:
    def test_collinear_triple_keeps_one(self):
        nd = nd_from_points([[0.0], [1.0], [3.0]])
        assert list(independent_subset(nd)) == [0]

    def test_two_far_triples_keep_one_each(self):
        pts = [[0.0], [1.0], [2.0], [100.0], [101.0], [102.0]]
        nd = nd_from_points(pts)
        assert list(independent_subset(nd)) == [0, 3]

    def test_minimal_cloud_nonempty(self):
        nd = nd_from_points([[0.0], [2.0], [5.0]])
        assert independent_subset(nd).size >= 1

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_validity_and_greedy_maximality(self, seed):
        rng = np.random.default_rng(seed)
        nd = nd_from_points(rng.normal(size=(60, 2)), q=3)
        keep = independent_subset(nd)
        first_two = {i: set(nd.nn_idx[i][:2]) for i in range(60)}

        def conflict(i, j):
            return (first_two[i] & first_two[j]) or (i in first_two[j]) or (j in first_two[i])

        for a_idx, i in enumerate(keep):
            for j in keep[a_idx + 1:]:
                assert not conflict(i, j)
        # greedy maximality: every excluded point conflicts with a retained one
        for i in set(range(60)) - set(keep):
            assert any(conflict(i, j) or i == j for j in keep)

    def test_retention_fraction_plausible(self):
        rng = np.random.default_rng(9)
        nd = nd_from_points(rng.normal(size=(500, 4)), q=3)
        frac = independent_subset(nd).size / 500
        assert 0.10 <= frac <= 0.35
