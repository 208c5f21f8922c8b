"""Model selection over the number of manifolds, NMI scoring, and the
cumulative-sum stationarity diagnostic for chain traces."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

from .geometry import NeighborData
from .model import HidalgoConfig
from .sampler import FitResult, fit

__all__ = [
    "KSelectionReport",
    "ConvergenceReport",
    "select_k",
    "nmi",
    "convergence_check",
    "THETA_LADDER",
]

THETA_LADDER = (10, 20, 50, 100, 200, 500)


@dataclass(frozen=True)
class KSelectionReport:
    k_values: tuple
    avg_logpost: tuple
    best_k: int
    fits: tuple

    def to_dict(self) -> dict:
        return {
            "k_values": list(self.k_values),
            "avg_logpost": list(self.avg_logpost),
            "best_k": self.best_k,
        }


def select_k(mu, nd: NeighborData, base_cfg: HidalgoConfig, k_max: int) -> KSelectionReport:
    """Fit with 1..k_max manifolds and pick the best average log-posterior.

    All fits share the seed, sweep count, and chain count of base_cfg, so
    the comparison across K is apples to apples. best_k is the argmax of
    the average log-posterior over the swept range; no significance
    thresholding is applied.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    fits = []
    for k in range(1, k_max + 1):
        fits.append(fit(mu, nd, replace(base_cfg, n_manifolds=k)))
    scores = [f.avg_logpost for f in fits]
    best = int(np.argmax(scores))
    return KSelectionReport(
        k_values=tuple(range(1, k_max + 1)),
        avg_logpost=tuple(scores),
        best_k=best + 1,
        fits=tuple(fits),
    )


def nmi(labels_a, labels_b) -> float:
    """Mutual information of two labelings over the entropy of the second.

    labels_b is the ground truth: the normalization is asymmetric, MI / H(b),
    in natural logs with plug-in estimates. Any hashable labels work;
    "uncertain" assignments should be passed through as their own label
    rather than dropped, so scores stay comparable across methods.
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be 1-D and of equal length")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka = ai.max() + 1
    kb = bi.max() + 1
    cont = np.zeros((ka, kb))
    np.add.at(cont, (ai, bi), 1.0)
    pb = cont.sum(axis=0) / n
    h_b = -np.sum(pb[pb > 0] * np.log(pb[pb > 0]))
    if h_b == 0.0:
        raise ValueError("ground truth labeling is constant: entropy is zero")
    pa = cont.sum(axis=1) / n
    pj = cont / n
    mask = pj > 0
    mi = np.sum(pj[mask] * (np.log(pj[mask])
                            - np.log(pa[:, None] * pb[None, :])[mask]))
    return float(mi / h_b)


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of the cumulative-sum stationarity test.

    e_frac holds, per monitored series, the running fraction of strict
    local extrema of the cumulative sums; at stationarity it hovers
    around 1/2 within binomial bounds. windows flags, per window of 20
    subsampled points, whether every series stayed within bounds at >= 19
    of the 20 points. t_conv is the raw-index end of the first passing
    window, or None.
    """

    theta: int
    t0: int
    alpha: float
    e_frac: tuple
    windows: tuple
    t_conv: int | None

    @property
    def converged(self) -> bool:
        return self.t_conv is not None

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "t0": self.t0,
            "alpha": self.alpha,
            "windows": list(self.windows),
            "t_conv": self.t_conv,
            "converged": self.converged,
        }


def extrema_indicator(s: np.ndarray) -> np.ndarray:
    """1 where the cumulative-sum series has a strict local extremum."""
    inner_up = (s[1:-1] > s[:-2]) & (s[1:-1] > s[2:])
    inner_dn = (s[1:-1] < s[:-2]) & (s[1:-1] < s[2:])
    return (inner_up | inner_dn).astype(np.int64)


def running_extrema_fraction(series: np.ndarray) -> np.ndarray:
    """Running mean of the extrema indicator of the centered cumulative sums."""
    x = np.asarray(series, dtype=np.float64)
    s = np.concatenate(([0.0], np.cumsum(x - x.mean())))
    e = extrema_indicator(s)
    counts = np.cumsum(e)
    return counts / np.arange(1, e.size + 1)


def bound_half_width(n, alpha: float):
    """Half-width z_(alpha/2)/sqrt(n) of the acceptance band around 1/2."""
    return norm.ppf(1.0 - alpha / 2.0) / np.sqrt(n)


def _windows_passing(e_frac_list, alpha: float, window: int = 20,
                     min_inside: int = 19) -> list:
    n_pts = min(len(ef) for ef in e_frac_list)
    n_windows = n_pts // window
    passing = []
    counts = np.arange(1, n_pts + 1)
    half = bound_half_width(counts, alpha)
    for w in range(n_windows):
        lo, hi = w * window, (w + 1) * window
        ok = True
        for ef in e_frac_list:
            inside = np.abs(ef[lo:hi] - 0.5) <= half[lo:hi]
            if int(inside.sum()) < min_inside:
                ok = False
                break
        passing.append(ok)
    return passing


def convergence_check(series, theta: int = 10, t0: int = 0,
                      alpha: float = 0.05) -> ConvergenceReport:
    """Stationarity test on one or more per-sweep scalar traces.

    Each trace is subsampled at stride theta, centered cumulative sums are
    formed from raw index t0 on, and the running fraction of strict local
    extrema is compared against 1/2 +- z_(alpha/2)/sqrt(n). Windows of 20
    subsampled points pass when at least 19 points of every series stay
    inside the band. If the extrema fraction fails to settle near 1/2 the
    subsampling stride is escalated through {10, 20, 50, 100, 200, 500},
    since a drifting fraction signals correlated samples rather than
    non-stationarity.

    Parameters
    ----------
    series : (T,) or (T, n_series) array
    theta : int
        Initial subsampling stride.
    t0 : int
        Raw index from which the test starts (burn-in guess).
    alpha : float
        Nominal level of the binomial bounds.

    Returns
    -------
    ConvergenceReport
        t_conv is reported in raw trace indices.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    t_len = x.shape[0]
    ladder = [theta] + [t for t in THETA_LADDER if t > theta]
    if t_len < t0 + 40 * theta:
        raise ValueError(
            f"series of length {t_len} is too short for theta={theta}, t0={t0}"
            " (need two windows of 20 subsampled points)")

    last_report = None
    for th in ladder:
        j0 = math.ceil(t0 / th)
        sub = x[::th][j0:]
        if sub.shape[0] < 40:
            break
        e_fracs = [running_extrema_fraction(sub[:, c]) for c in range(sub.shape[1])]
        windows = _windows_passing(e_fracs, alpha)
        t_conv = None
        for w, ok in enumerate(windows):
            if ok:
                t_conv = th * (j0 + 20 * (w + 1))
                break
        last_report = ConvergenceReport(
            theta=th, t0=t0, alpha=alpha,
            e_frac=tuple(np.asarray(ef) for ef in e_fracs),
            windows=tuple(windows), t_conv=t_conv,
        )
        if t_conv is not None:
            return last_report
        # escalate only when the extrema fraction has not settled near 1/2,
        # the signature of correlated rather than non-stationary samples
        tails = [ef[len(ef) // 2:] for ef in e_fracs]
        if all(abs(float(np.mean(tl)) - 0.5) <= 0.1 for tl in tails):
            return last_report
    return last_report
