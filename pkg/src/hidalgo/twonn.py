"""Single-manifold intrinsic dimension from two-neighbor ratios.

The ratio mu = r2/r1 of second- to first-neighbor distance is Pareto(d)
distributed on a d-dimensional manifold, so the likelihood of all ratios is
d^N exp(-(d+1) V) with V = sum log mu. A Gamma(a, b) prior is conjugate:
the d-independent exp(-V) factor drops and the posterior is
Gamma(a + N, b + V).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["TwonnEstimate", "twonn_fit", "pareto_quantile"]


@dataclass(frozen=True)
class TwonnEstimate:
    d_mle: float
    d_post_mean: float
    d_post_sd: float
    n_used: int
    v: float

    def to_dict(self) -> dict:
        return {
            "d_mle": self.d_mle,
            "d_post_mean": self.d_post_mean,
            "d_post_sd": self.d_post_sd,
            "n_used": self.n_used,
            "v": self.v,
        }


def twonn_fit(mu, prior_a: float = 1.0, prior_b: float = 1.0) -> TwonnEstimate:
    """Maximum-likelihood and Bayesian dimension estimates from mu ratios.

    Parameters
    ----------
    mu : array-like
        Two-neighbor distance ratios, all >= 1.
    prior_a, prior_b : float
        Gamma prior hyperparameters; the defaults encode a prior expectation
        of dimension 1.

    Returns
    -------
    TwonnEstimate
        d_mle = N / V, posterior mean (a+N)/(b+V), posterior sd
        sqrt(a+N)/(b+V).
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.ndim != 1 or mu.size == 0:
        raise ValueError("mu must be a nonempty 1-D array")
    if np.any(mu < 1.0):
        raise ValueError("all mu ratios must be >= 1")
    if prior_a <= 0 or prior_b <= 0:
        raise ValueError("prior hyperparameters must be positive")
    n = mu.size
    v = float(np.sum(np.log(mu)))
    if v == 0.0:
        raise ValueError("degenerate sample: all mu ratios equal 1")
    shape = prior_a + n
    rate = prior_b + v
    return TwonnEstimate(
        d_mle=n / v,
        d_post_mean=shape / rate,
        d_post_sd=math.sqrt(shape) / rate,
        n_used=n,
        v=v,
    )


def pareto_quantile(d: float, u: float) -> float:
    """u-quantile of the Pareto(d) ratio distribution: (1-u)^(-1/d).

    Useful as an exact inverse-CDF sampler: feed it uniform draws.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    if not (0.0 < u < 1.0):
        raise ValueError("u must lie strictly between 0 and 1")
    return (1.0 - u) ** (-1.0 / d)
