"""Segmentation of point clouds into regions of distinct intrinsic dimension.

The pipeline: distances -> q-nearest-neighbor structure and two-neighbor
ratios -> Gibbs sampling of a Pareto-mixture model with a
neighborhood-homogeneity term -> per-point manifold assignments with
per-manifold dimension estimates. Model selection over the number of
manifolds, a stationarity diagnostic, synthetic benchmark generators, and
NMI scoring round out the toolkit.
"""

__version__ = "0.1.0"

from .evaluation import (
    ConvergenceReport,
    KSelectionReport,
    convergence_check,
    nmi,
    select_k,
)
from .geometry import (
    DistanceMatrix,
    Metric,
    NeighborData,
    PointCloud,
    build_neighbor_data,
    compute_distances,
    independent_subset,
)
from .model import (
    HidalgoConfig,
    HomogeneityGraph,
    LogZTable,
    MixtureState,
    log_mixture_likelihood,
    log_neighborhood_likelihood,
    log_posterior,
    log_z,
    restrict_graph,
)
from .sampler import (
    ChainTrace,
    FitResult,
    fit,
    gibbs_sweep,
    run_chain,
    sample_d,
    sample_p,
    sample_z_one,
)
from .synth import (
    LabeledCloud,
    ManifoldSpec,
    gen_curved,
    gen_gaussian_mixture,
    preset_five_gauss_curved,
    preset_five_gauss_linear,
    preset_two_gauss,
)
from .twonn import TwonnEstimate, pareto_quantile, twonn_fit

__all__ = [
    "__version__",
    "ChainTrace",
    "ConvergenceReport",
    "DistanceMatrix",
    "FitResult",
    "HidalgoConfig",
    "HomogeneityGraph",
    "KSelectionReport",
    "LabeledCloud",
    "LogZTable",
    "ManifoldSpec",
    "Metric",
    "MixtureState",
    "NeighborData",
    "PointCloud",
    "TwonnEstimate",
    "build_neighbor_data",
    "compute_distances",
    "convergence_check",
    "fit",
    "gen_curved",
    "gen_gaussian_mixture",
    "gibbs_sweep",
    "independent_subset",
    "log_mixture_likelihood",
    "log_neighborhood_likelihood",
    "log_posterior",
    "log_z",
    "nmi",
    "pareto_quantile",
    "preset_five_gauss_curved",
    "preset_five_gauss_linear",
    "preset_two_gauss",
    "restrict_graph",
    "run_chain",
    "sample_d",
    "sample_p",
    "sample_z_one",
    "select_k",
    "twonn_fit",
]
