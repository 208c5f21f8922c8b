import numpy as np
import pytest

from hidalgo.geometry import Metric, PointCloud, build_neighbor_data, compute_distances
from hidalgo.model import HomogeneityGraph


def make_graph(nn_idx) -> HomogeneityGraph:
    """HomogeneityGraph from a bare neighbor-index array (tests only)."""
    nn_idx = np.asarray(nn_idx, dtype=np.int64)
    n, q = nn_idx.shape
    counts = np.bincount(nn_idx.ravel(), minlength=n)
    rev_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=rev_indptr[1:])
    rev_data = np.empty(q * n, dtype=np.int64)
    cursor = rev_indptr[:-1].copy()
    for i in range(n):
        for j in nn_idx[i]:
            rev_data[cursor[j]] = i
            cursor[j] += 1
    return HomogeneityGraph(q=q, nn_idx=nn_idx, rev_indptr=rev_indptr, rev_data=rev_data)


def neighbor_data_for(points, q):
    cloud = PointCloud(np.asarray(points, dtype=float))
    dm = compute_distances(cloud, Metric.euclidean())
    return build_neighbor_data(dm, q)


@pytest.fixture
def small_instance():
    """8 random planar points with q=2 neighbor structure."""
    rng = np.random.default_rng(42)
    nd = neighbor_data_for(rng.normal(size=(8, 2)), q=2)
    return nd
