"""Distances, q-nearest-neighbor structure, and the two-neighbor ratio mu.

Everything downstream of this module works purely on distances: the sampler
never sees coordinates. Three metrics cover the common preprocessing choices
for point clouds, angle vectors, and scale-normalized feature vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PointCloud",
    "DistanceMatrix",
    "Metric",
    "NeighborData",
    "compute_distances",
    "build_neighbor_data",
    "independent_subset",
]


class GeometryError(ValueError):
    """Invalid geometric input (bad shapes, ties, degenerate metrics)."""


@dataclass(frozen=True)
class PointCloud:
    """Raw coordinates, one point per row."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2:
            raise GeometryError("coords must be a 2-D array (n_points, n_dims)")
        if coords.shape[0] < 3:
            raise GeometryError("need at least 3 points (each point needs two distinct neighbors)")
        if not np.all(np.isfinite(coords)):
            raise GeometryError("coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def n_dims(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distances with zero diagonal and no off-diagonal ties at zero.

    Coincident points are a hard error: zero inter-point distances make the
    two-neighbor ratio meaningless, so they are rejected instead of perturbed.
    """

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise GeometryError("distance matrix must be square")
        if d.shape[0] < 3:
            raise GeometryError("need at least 3 points")
        if not np.all(np.isfinite(d)):
            raise GeometryError("distances must be finite")
        if not np.allclose(d, d.T, rtol=0.0, atol=1e-12):
            raise GeometryError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0.0):
            raise GeometryError("distance matrix must have zero diagonal")
        if np.any(d < 0.0):
            raise GeometryError("distances must be nonnegative")
        off = d + np.eye(d.shape[0])
        if np.any(off == 0.0):
            i, j = np.argwhere((d == 0.0) & ~np.eye(d.shape[0], dtype=bool))[0]
            raise GeometryError(
                f"points {i} and {j} coincide: ties with zero distance jeopardize mu"
            )
        object.__setattr__(self, "d", d)

    @property
    def n_points(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class Metric:
    """Distance kind: plain Euclidean, per-coordinate periodic, or row-normalized.

    ``periodic`` wraps each coordinate by its period (minimum image);
    ``normalized`` divides each row by its L2 norm before the Euclidean
    distance, which removes overall scale differences between points.
    """

    kind: str = "euclidean"
    periods: np.ndarray | None = None

    _KINDS = ("euclidean", "periodic_euclidean", "normalized_euclidean")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise GeometryError(f"unknown metric kind {self.kind!r}; expected one of {self._KINDS}")
        if self.kind == "periodic_euclidean":
            if self.periods is None:
                raise GeometryError("periodic_euclidean requires periods")
            periods = np.atleast_1d(np.asarray(self.periods, dtype=np.float64))
            if not np.all(np.isfinite(periods)) or np.any(periods <= 0.0):
                raise GeometryError("periods must be finite and positive")
            object.__setattr__(self, "periods", periods)
        elif self.periods is not None:
            raise GeometryError(f"metric {self.kind!r} takes no periods")

    @classmethod
    def euclidean(cls) -> "Metric":
        return cls("euclidean")

    @classmethod
    def periodic(cls, periods) -> "Metric":
        return cls("periodic_euclidean", periods)

    @classmethod
    def normalized(cls) -> "Metric":
        return cls("normalized_euclidean")


@dataclass(frozen=True)
class NeighborData:
    """The q-NN graph plus everything the sampler reads from geometry.

    nn_idx[i] lists the q nearest neighbors of i in ascending distance
    (ties broken toward the lower index, for determinism). mu[i] is the
    ratio of second- to first-neighbor distance. rev_indptr/rev_data store,
    in CSR form, the transpose relation: the points that list i among their
    q neighbors.
    """

    q: int
    nn_idx: np.ndarray
    nn_dist: np.ndarray
    mu: np.ndarray
    rev_indptr: np.ndarray
    rev_data: np.ndarray

    @property
    def n_points(self) -> int:
        return self.nn_idx.shape[0]

    def rev_idx(self, i: int) -> np.ndarray:
        """Points that list ``i`` among their q nearest neighbors."""
        return self.rev_data[self.rev_indptr[i]:self.rev_indptr[i + 1]]


def compute_distances(cloud: PointCloud, metric: Metric) -> DistanceMatrix:
    """Pairwise distance matrix of a point cloud under the given metric.

    Parameters
    ----------
    cloud : PointCloud
    metric : Metric

    Returns
    -------
    DistanceMatrix

    Raises
    ------
    GeometryError
        On zero-norm rows under the normalized metric, period/dimension
        mismatch, or coincident points (zero off-diagonal distance).
    """
    x = cloud.coords
    if metric.kind == "euclidean":
        d = _euclidean(x)
    elif metric.kind == "normalized_euclidean":
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0.0):
            raise GeometryError("normalized_euclidean: zero-norm row")
        d = _euclidean(x / norms[:, None])
    else:
        periods = metric.periods
        if periods.size == 1:
            periods = np.full(cloud.n_dims, periods[0])
        if periods.size != cloud.n_dims:
            raise GeometryError(
                f"got {periods.size} periods for {cloud.n_dims} coordinates"
            )
        d2 = np.zeros((cloud.n_points, cloud.n_points))
        for c in range(cloud.n_dims):
            delta = np.abs(x[:, c, None] - x[None, :, c]) % periods[c]
            delta = np.minimum(delta, periods[c] - delta)
            d2 += delta * delta
        d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


def _euclidean(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def build_neighbor_data(dm: DistanceMatrix, q: int) -> NeighborData:
    """Build the q-NN lists, the mu ratios, and the reverse-neighbor relation.

    Neighbor lists are sorted by distance with ties broken toward the lower
    point index, so results are reproducible across runs and platforms.

    Parameters
    ----------
    dm : DistanceMatrix
    q : int
        Number of neighbors to record; at least 2 (mu needs two neighbors).

    Returns
    -------
    NeighborData
    """
    n = dm.n_points
    if q < 2:
        raise GeometryError("q must be >= 2 (mu needs two neighbors)")
    if q >= n:
        raise GeometryError(f"q={q} requires more than {n} points")
    # stable sort on each row: equal distances keep ascending index order
    order = np.argsort(dm.d, axis=1, kind="stable")
    # self sits first in every row (zero distance, and index ties resolve to i
    # only when another zero exists, which DistanceMatrix already rejects)
    nn_idx = order[:, 1:q + 1].astype(np.int64)
    rows = np.arange(n)[:, None]
    nn_dist = dm.d[rows, nn_idx]
    r1 = nn_dist[:, 0]
    if np.any(r1 == 0.0):
        raise GeometryError("zero first-neighbor distance: ties jeopardize mu")
    mu = nn_dist[:, 1] / r1

    counts = np.bincount(nn_idx.ravel(), minlength=n)
    rev_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=rev_indptr[1:])
    rev_data = np.empty(q * n, dtype=np.int64)
    cursor = rev_indptr[:-1].copy()
    for i in range(n):
        for j in nn_idx[i]:
            rev_data[cursor[j]] = i
            cursor[j] += 1
    return NeighborData(q=q, nn_idx=nn_idx, nn_dist=nn_dist, mu=mu,
                        rev_indptr=rev_indptr, rev_data=rev_data)


def independent_subset(nd: NeighborData) -> np.ndarray:
    """Greedy maximal set of points with non-overlapping first/second neighbors.

    Two retained points never share a first or second neighbor, and neither
    is the other's first or second neighbor, which makes their mu values
    independent draws. The scan is greedy in ascending index order, so the
    result is deterministic. Typical retention is 15-25% of the points.

    Returns
    -------
    ndarray of retained point indices, ascending.
    """
    n = nd.n_points
    first_two = nd.nn_idx[:, :2]
    blocked = np.zeros(n, dtype=bool)
    keep = []
    for i in range(n):
        a, b = first_two[i]
        if blocked[i] or blocked[a] or blocked[b]:
            continue
        keep.append(i)
        blocked[i] = blocked[a] = blocked[b] = True
    return np.asarray(keep, dtype=np.int64)
