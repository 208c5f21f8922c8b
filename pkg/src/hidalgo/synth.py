"""Synthetic benchmark clouds: Gaussian mixtures of prescribed intrinsic
dimension, either embedded linearly (zero-padded coordinates) or mapped onto
curved manifolds (circle, torus, Swiss roll, spheres), with ground-truth
labels.

The curved maps all preserve local intrinsic dimension, which is the only
property the segmentation is sensitive to; radii and angle scalings are
fixed conventions, not tuned quantities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud

__all__ = [
    "ManifoldSpec",
    "LabeledCloud",
    "gen_gaussian_mixture",
    "gen_curved",
    "preset_two_gauss",
    "preset_five_gauss_linear",
    "preset_five_gauss_curved",
    "PRESETS",
]

_CURVED = ("circle", "torus", "swiss_roll", "sphere")
_SHAPES = ("gaussian_linear",) + _CURVED

# Swiss roll winding range for the rolled coordinate
_ROLL_LO = 1.5 * np.pi
_ROLL_HI = 4.5 * np.pi


@dataclass(frozen=True)
class ManifoldSpec:
    """One mixture component: an intrinsic dimension, a size, and a shape.

    scale is the per-coordinate standard deviation of the latent Gaussian;
    None means 1/sqrt(d), the convention that gives every component unit
    expected squared radius.
    """

    intrinsic_dim: int
    n_points: int
    shape: str = "gaussian_linear"
    center: tuple = ()
    scale: float | None = None

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.intrinsic_dim < 1:
            raise ValueError("intrinsic_dim must be >= 1")
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.scale is not None and self.scale < 0:
            raise ValueError("scale must be nonnegative")
        if self.shape == "circle" and self.intrinsic_dim != 1:
            raise ValueError("circle has intrinsic dimension 1")
        if self.shape == "torus" and self.intrinsic_dim != 2:
            raise ValueError("torus has intrinsic dimension 2")
        if self.shape == "swiss_roll" and self.intrinsic_dim < 2:
            raise ValueError("swiss_roll needs intrinsic dimension >= 2")

    @property
    def sigma(self) -> float:
        return self.scale if self.scale is not None else 1.0 / np.sqrt(self.intrinsic_dim)

    @property
    def embed_dims_needed(self) -> int:
        if self.shape == "gaussian_linear":
            return self.intrinsic_dim
        if self.shape == "circle":
            return 2
        if self.shape == "torus":
            return 4
        if self.shape == "swiss_roll":
            return self.intrinsic_dim + 1
        return self.intrinsic_dim + 1  # sphere


@dataclass(frozen=True)
class LabeledCloud:
    cloud: PointCloud
    labels: np.ndarray

    @property
    def n_points(self) -> int:
        return self.cloud.n_points


def _embed(points: np.ndarray, embed_dim: int, center) -> np.ndarray:
    n, d = points.shape
    if d > embed_dim:
        raise ValueError(f"shape needs {d} coordinates but embed_dim={embed_dim}")
    out = np.zeros((n, embed_dim))
    out[:, :d] = points
    if len(center):
        c = np.zeros(embed_dim)
        c[:len(center)] = center
        out += c
    return out


def _curved_points(spec: ManifoldSpec, rng: np.random.Generator) -> np.ndarray:
    d, n, s = spec.intrinsic_dim, spec.n_points, spec.sigma
    latent = rng.normal(0.0, s if s > 0 else 1.0, size=(n, d))
    if s == 0:
        latent[:] = 0.0
    if spec.shape == "circle":
        theta = latent[:, 0]
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if spec.shape == "torus":
        t1, t2 = latent[:, 0], latent[:, 1]
        return np.column_stack([np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2)])
    if spec.shape == "swiss_roll":
        sigma = s if s > 0 else 1.0
        mid = 0.5 * (_ROLL_LO + _ROLL_HI)
        slope = (_ROLL_HI - _ROLL_LO) / (4.0 * sigma)  # +-2 sigma spans the range
        t = mid + slope * latent[:, 0]
        return np.column_stack([t * np.cos(t), t * np.sin(t), latent[:, 1:]])
    # sphere: uniform on the unit d-sphere in d+1 coordinates
    g = rng.normal(0.0, 1.0, size=(n, d + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def gen_gaussian_mixture(specs, embed_dim: int, seed) -> LabeledCloud:
    """Mixture of linearly embedded Gaussians with ground-truth labels.

    Each component samples an isotropic Gaussian in its first
    intrinsic_dim coordinates, zero-pads to embed_dim, and translates to
    its center.
    """
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for idx, spec in enumerate(specs):
        if spec.shape != "gaussian_linear":
            raise ValueError("gen_gaussian_mixture handles gaussian_linear specs only")
        pts = rng.normal(0.0, spec.sigma, size=(spec.n_points, spec.intrinsic_dim))
        blocks.append(_embed(pts, embed_dim, spec.center))
        labels.append(np.full(spec.n_points, idx, dtype=np.int64))
    return LabeledCloud(PointCloud(np.vstack(blocks)), np.concatenate(labels))


def gen_curved(specs, embed_dim: int = 10, seed=0) -> LabeledCloud:
    """Mixture of Gaussians mapped onto curved manifolds.

    Maps: circle - the first latent coordinate becomes the angle on a unit
    circle; torus - two latent angles on the flat unit torus in four
    coordinates; swiss_roll - the first latent coordinate is wound as
    (t cos t, t sin t) over one and a half turns, remaining latents pass
    through; sphere - a (d+1)-dimensional standard Gaussian normalized onto
    the unit d-sphere. Everything is zero-padded and translated like the
    linear case.
    """
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for idx, spec in enumerate(specs):
        if spec.shape == "gaussian_linear":
            pts = rng.normal(0.0, spec.sigma, size=(spec.n_points, spec.intrinsic_dim))
        else:
            pts = _curved_points(spec, rng)
        blocks.append(_embed(pts, embed_dim, spec.center))
        labels.append(np.full(spec.n_points, idx, dtype=np.int64))
    return LabeledCloud(PointCloud(np.vstack(blocks)), np.concatenate(labels))


def preset_two_gauss(n_per: int = 1000, d1: int = 9, d2: int = 4, seed=0) -> LabeledCloud:
    """Two partly overlapping Gaussians of different dimension (the K=2 benchmark).

    Variance 1/d per coordinate (unit RMS radius for both clouds), embedded
    in the higher of the two dimensions. The lower-dimensional cloud is
    offset along the last embedding coordinate, i.e. orthogonally to its
    own span: an offset inside the span would leave the thin manifold
    slicing through the core of the wider cloud no matter how large the
    shift. The magnitude, 1.25 radial units, keeps the radius-1 clouds
    intersecting while the interface region stays small.
    """
    if d1 == d2:
        raise ValueError("the two dimensions must differ")
    embed = max(d1, d2)
    offset = tuple([0.0] * (embed - 1) + [1.25])
    specs = [
        ManifoldSpec(intrinsic_dim=d1, n_points=n_per,
                     center=offset if d1 < d2 else ()),
        ManifoldSpec(intrinsic_dim=d2, n_points=n_per,
                     center=offset if d2 < d1 else ()),
    ]
    return gen_gaussian_mixture(specs, embed_dim=embed, seed=seed)


def preset_five_gauss_linear(n_per: int = 1000, seed=0) -> LabeledCloud:
    """Five unit-variance Gaussians of dimensions 1, 2, 4, 5, 9.

    The 9-dimensional component fills the space and intersects everything;
    the lower-dimensional ones are shifted along coordinates orthogonal to
    their own spans (an in-span shift would leave them slicing through the
    other clouds), in different directions so adjacent-dimension pairs
    keep an interface but not a full overlap.
    """
    specs = [
        ManifoldSpec(1, n_per, center=(), scale=1.0),
        ManifoldSpec(2, n_per, center=(0, 0, 0, 0, 0, 0, 0, 0, 1.25), scale=1.0),
        ManifoldSpec(4, n_per, center=(0, 0, 0, 0, 0, 0, 0, 0, -1.25), scale=1.0),
        ManifoldSpec(5, n_per, center=(0, 0, 0, 0, 0, 0, 0, 1.25, 0), scale=1.0),
        ManifoldSpec(9, n_per, center=(), scale=1.0),
    ]
    return gen_gaussian_mixture(specs, embed_dim=9, seed=seed)


def preset_five_gauss_curved(n_per: int = 1000, seed=0) -> LabeledCloud:
    """Five curved manifolds of dimensions 1, 2, 4, 5, 9.

    A unit circle, the flat torus, a Swiss roll with three latent
    pass-through coordinates, and the unit 5- and 9-spheres; centers are
    nudged so the shells intersect partially rather than nest.
    """
    specs = [
        ManifoldSpec(1, n_per, shape="circle", center=(0.3,), scale=1.0),
        ManifoldSpec(2, n_per, shape="torus", center=(0.0, 0.3), scale=1.0),
        ManifoldSpec(4, n_per, shape="swiss_roll", center=(), scale=1.0),
        ManifoldSpec(5, n_per, shape="sphere", center=(-0.3,), scale=1.0),
        ManifoldSpec(9, n_per, shape="sphere", center=(), scale=1.0),
    ]
    return gen_curved(specs, embed_dim=10, seed=seed)


PRESETS = {
    "two-gauss": preset_two_gauss,
    "five-gauss-linear": preset_five_gauss_linear,
    "five-gauss-curved": preset_five_gauss_curved,
}
