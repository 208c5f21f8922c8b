"""Gibbs sampler over labels, dimensions, and mixing weights.

Full conditionals:
  d_k | rest ~ Gamma(a + n_k, b + v_k), drawn by inverse CDF;
  p   | rest ~ Dirichlet(c + n_1, ..., c + n_K), via normalized Gammas;
  z_i | rest ~ categorical over k with unnormalized log-weight

      log p_k + log d_k - (d_k + 1) log mu_i
    + log(xi/(1-xi)) * (m_i(k) + r_i(k))
    - [(n_k^-i + 1) log Z(n_k^-i + 1) - n_k^-i log Z(n_k^-i)]

  where m_i(k) counts i's own neighbors labeled k, r_i(k) counts the points
  that list i as a neighbor and are labeled k, and n_k^-i are manifold sizes
  with i removed. Everything else in the joint cancels between candidates.

Label draws use the Gumbel-max trick and parameter draws use quantile
transforms of explicit uniforms, so a single chain consumes one reproducible
uniform stream and the whole sweep is an exactly label-equivariant function
of that stream (exercised by the permutation tests).

The per-point scan is JIT-compiled; a pure-Python single-site implementation
(`site_log_weights` / `sample_z_one`) serves as the readable reference the
kernel is tested against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import gammaincinv

from .geometry import NeighborData
from .model import (
    D_MAX,
    D_MIN,
    HidalgoConfig,
    HomogeneityGraph,
    LogZTable,
    MixtureState,
    restrict_graph,
)

__all__ = [
    "ChainTrace",
    "FitResult",
    "sample_d",
    "sample_p",
    "sample_z_one",
    "site_log_weights",
    "gibbs_sweep",
    "run_chain",
    "fit",
]

UNCERTAIN = -1
ASSIGN_THRESHOLD = 0.8

# keep uniforms strictly inside (0, 1) so quantile/Gumbel transforms stay finite
_U_EPS = 1e-15


@dataclass
class ChainTrace:
    """Per-sweep record of one Gibbs chain."""

    d_samples: np.ndarray       # (n_sweeps, K)
    p_samples: np.ndarray       # (n_sweeps, K)
    logpost_samples: np.ndarray  # (n_sweeps,)
    z_freq: np.ndarray          # (N, K) counts over retained sweeps
    retained_start: int
    max_logpost: float
    flagged_sweeps: list

    @property
    def n_retained(self) -> int:
        return self.logpost_samples.shape[0] - self.retained_start


@dataclass
class FitResult:
    """Posterior summaries from the best of several chains.

    pi[i, k] is the retained-sample frequency of label k for point i;
    hard_z[i] is k when pi[i, k] > 0.8 and -1 ("uncertain") otherwise.
    avg_logpost is the retained-window mean of the full log-posterior and is
    the quantity compared across different numbers of manifolds.
    """

    d_mean: np.ndarray
    d_sd: np.ndarray
    p_mean: np.ndarray
    pi: np.ndarray
    hard_z: np.ndarray
    avg_logpost: float
    best_chain: int
    max_logpost: float
    n_retained: int
    best_trace: "ChainTrace | None" = None

    def to_dict(self) -> dict:
        return {
            "d_mean": self.d_mean.tolist(),
            "d_sd": self.d_sd.tolist(),
            "p_mean": self.p_mean.tolist(),
            "avg_logpost": self.avg_logpost,
            "best_chain": self.best_chain,
            "max_logpost": self.max_logpost,
            "n_retained": self.n_retained,
            "n_uncertain": int(np.sum(self.hard_z == UNCERTAIN)),
        }


# ---------------------------------------------------------------------------
# parameter conditionals


def _d_from_uniforms(n_k, v_k, cfg: HidalgoConfig, u: np.ndarray) -> np.ndarray:
    """Gamma(a + n_k, b + v_k) draws by inverse CDF; empty manifolds hit the prior."""
    u = np.clip(u, _U_EPS, 1.0 - _U_EPS)
    shape = cfg.prior_a + n_k
    rate = cfg.prior_b + v_k
    d = gammaincinv(shape, u) / rate
    return np.clip(d, D_MIN, D_MAX)


def _p_from_uniforms(n_k, cfg: HidalgoConfig, u: np.ndarray) -> np.ndarray:
    """Dirichlet(c + n_k) via independent Gamma quantiles, normalized exactly.

    The normalizing sum uses math.fsum so the result does not depend on
    component order.
    """
    u = np.clip(u, _U_EPS, 1.0 - _U_EPS)
    gam = gammaincinv(cfg.prior_c + n_k, u)
    return gam / math.fsum(gam)


def sample_d(state: MixtureState, cfg: HidalgoConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw the per-manifold dimensions from their conjugate conditional."""
    state.d = _d_from_uniforms(state.n_k, state.v_k, cfg, rng.random(state.n_manifolds))
    return state.d


def sample_p(state: MixtureState, cfg: HidalgoConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw the mixing weights from their Dirichlet conditional."""
    state.p = _p_from_uniforms(state.n_k, cfg, rng.random(state.n_manifolds))
    return state.p


# ---------------------------------------------------------------------------
# label conditional, reference path


def site_log_weights(i: int, state: MixtureState, mu: np.ndarray,
                     graph: HomogeneityGraph, cfg: HidalgoConfig,
                     table: LogZTable) -> np.ndarray:
    """Unnormalized log-weights of every candidate label for point i."""
    k = state.n_manifolds
    m = np.bincount(state.z[graph.nn_idx[i]], minlength=k)
    r = np.bincount(state.z[graph.rev_idx(i)], minlength=k)
    nk_minus = state.n_k.copy()
    nk_minus[state.z[i]] -= 1
    s = math.log(cfg.xi) - math.log1p(-cfg.xi)
    lam = math.log(mu[i])
    return (
        np.log(state.p) + np.log(state.d) - (state.d + 1.0) * lam
        + s * (m + r) - table.dz[nk_minus]
    )


def _apply_flip(i: int, new: int, state: MixtureState, mu: np.ndarray,
                graph: HomogeneityGraph) -> None:
    old = int(state.z[i])
    k = state.n_manifolds
    m = np.bincount(state.z[graph.nn_idx[i]], minlength=k)
    r = np.bincount(state.z[graph.rev_idx(i)], minlength=k)
    state.n_k[old] -= 1
    state.n_k[new] += 1
    state.n_in[i] = m[new]
    if new != old:
        lam = math.log(mu[i])
        state.z[i] = new
        state.v_k[old] -= lam
        state.v_k[new] += lam
        state.n_k_in[old] -= m[old] + r[old]
        state.n_k_in[new] += m[new] + r[new]
        for l in graph.rev_idx(i):
            if state.z[l] == old:
                state.n_in[l] -= 1
            elif state.z[l] == new:
                state.n_in[l] += 1


def sample_z_one(i: int, state: MixtureState, mu: np.ndarray,
                 graph: HomogeneityGraph, cfg: HidalgoConfig,
                 table: LogZTable, rng: np.random.Generator) -> int:
    """Resample the label of point i from its full conditional.

    Draws via Gumbel-max over the candidate log-weights and updates all
    cached sufficient statistics incrementally. If every candidate is
    impossible (-inf weight) the current label is kept.
    """
    logw = site_log_weights(i, state, mu, graph, cfg, table)
    u = np.clip(rng.random(state.n_manifolds), _U_EPS, 1.0 - _U_EPS)
    perturbed = logw - np.log(-np.log(u))
    if np.all(np.isneginf(perturbed)):
        new = int(state.z[i])
    else:
        new = int(np.argmax(perturbed))
    _apply_flip(i, new, state, mu, graph)
    return new


# ---------------------------------------------------------------------------
# label conditional, compiled scan


@njit(cache=True, nogil=True)
def _z_scan(z, n_k, v_k, n_in, n_k_in, log_mu, nn_idx, rev_indptr, rev_data,
            log_p, log_d, d_plus_1, s_xi, dz, order, gum):
    n, q = nn_idx.shape
    kc = log_p.shape[0]
    m = np.zeros(kc, np.int64)
    r = np.zeros(kc, np.int64)
    flagged = 0
    for t in range(order.shape[0]):
        i = order[t]
        for k in range(kc):
            m[k] = 0
            r[k] = 0
        for a in range(q):
            m[z[nn_idx[i, a]]] += 1
        for a in range(rev_indptr[i], rev_indptr[i + 1]):
            r[z[rev_data[a]]] += 1
        old = z[i]
        n_k[old] -= 1
        lam = log_mu[i]
        best = -1
        best_val = -np.inf
        for k in range(kc):
            w = log_p[k] + log_d[k] - d_plus_1[k] * lam + s_xi * (m[k] + r[k]) - dz[n_k[k]]
            w = w + gum[t, k]
            if w > best_val:
                best_val = w
                best = k
        if best < 0:
            best = old
            flagged += 1
        n_k[best] += 1
        if best != old:
            z[i] = best
            v_k[old] -= lam
            v_k[best] += lam
            n_in[i] = m[best]
            n_k_in[old] -= m[old] + r[old]
            n_k_in[best] += m[best] + r[best]
            for a in range(rev_indptr[i], rev_indptr[i + 1]):
                l = rev_data[a]
                if z[l] == old:
                    n_in[l] -= 1
                elif z[l] == best:
                    n_in[l] += 1
        else:
            n_in[i] = m[old]
    return flagged


def _z_sweep_with_uniforms(state: MixtureState, log_mu: np.ndarray,
                           graph: HomogeneityGraph, cfg: HidalgoConfig,
                           table: LogZTable, u_z: np.ndarray,
                           order: np.ndarray) -> int:
    u = np.clip(u_z, _U_EPS, 1.0 - _U_EPS)
    gum = -np.log(-np.log(u))
    s_xi = math.log(cfg.xi) - math.log1p(-cfg.xi)
    return _z_scan(
        state.z, state.n_k, state.v_k, state.n_in, state.n_k_in,
        log_mu, graph.nn_idx, graph.rev_indptr, graph.rev_data,
        np.log(state.p), np.log(state.d), state.d + 1.0,
        s_xi, table.dz, order, gum,
    )


def z_sweep(state: MixtureState, mu: np.ndarray, graph: HomogeneityGraph,
            cfg: HidalgoConfig, table: LogZTable, rng: np.random.Generator) -> int:
    """One pass of label updates only (d and p held fixed)."""
    n = state.n_points
    order = _scan_order(n, cfg, rng)
    u_z = rng.random((n, state.n_manifolds))
    return _z_sweep_with_uniforms(state, np.log(mu), graph, cfg, table, u_z, order)


def _scan_order(n: int, cfg: HidalgoConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.scan == "systematic":
        return np.arange(n, dtype=np.int64)
    return rng.permutation(n).astype(np.int64)


# ---------------------------------------------------------------------------
# sweeps and chains


def _logpost_from_caches(state: MixtureState, cfg: HidalgoConfig,
                         table: LogZTable) -> float:
    """Full normalized log-posterior in O(K) from the cached statistics.

    Summation over manifolds uses fsum, so the value is exactly invariant
    under component relabeling.
    """
    a, b, c = cfg.prior_a, cfg.prior_b, cfg.prior_c
    k = state.n_manifolds
    log_xi = math.log(cfg.xi)
    log_om = math.log1p(-cfg.xi)
    log_d = np.log(state.d)
    log_p = np.log(state.p)
    per_k = (
        state.n_k * log_d - (state.d + 1.0) * state.v_k
        + state.n_k_in * log_xi + (cfg.q * state.n_k - state.n_k_in) * log_om
        - state.n_k * table.logz[state.n_k]
        + state.n_k * log_p
        + (a - 1.0) * log_d - b * state.d
        + (c - 1.0) * log_p
    )
    const = k * (a * math.log(b) - math.lgamma(a)) + math.lgamma(k * c) - k * math.lgamma(c)
    return math.fsum(per_k) + const


def gibbs_sweep_with_uniforms(state: MixtureState, mu: np.ndarray,
                              graph: HomogeneityGraph, cfg: HidalgoConfig,
                              table: LogZTable, u_d: np.ndarray,
                              u_p: np.ndarray, u_z: np.ndarray,
                              order: np.ndarray) -> tuple[float, int]:
    """Deterministic core of one sweep, given all uniforms up front."""
    state.d = _d_from_uniforms(state.n_k, state.v_k, cfg, u_d)
    state.p = _p_from_uniforms(state.n_k, cfg, u_p)
    flagged = _z_sweep_with_uniforms(state, np.log(mu), graph, cfg, table, u_z, order)
    return _logpost_from_caches(state, cfg, table), flagged


def gibbs_sweep(state: MixtureState, mu: np.ndarray, graph: HomogeneityGraph,
                cfg: HidalgoConfig, table: LogZTable,
                rng: np.random.Generator) -> float:
    """One full Gibbs pass: d, then p, then every label in scan order.

    Returns the log-posterior of the resulting state.
    """
    k = state.n_manifolds
    n = state.n_points
    u_d = rng.random(k)
    u_p = rng.random(k)
    u_z = rng.random((n, k))
    order = _scan_order(n, cfg, rng)
    logpost, _ = gibbs_sweep_with_uniforms(state, mu, graph, cfg, table,
                                           u_d, u_p, u_z, order)
    return logpost


def _init_state(mu: np.ndarray, graph: HomogeneityGraph, cfg: HidalgoConfig,
                rng: np.random.Generator) -> MixtureState:
    k = cfg.n_manifolds
    z = rng.integers(0, k, size=mu.shape[0])
    d = np.clip(rng.gamma(cfg.prior_a, 1.0 / cfg.prior_b, size=k), D_MIN, D_MAX)
    p = rng.dirichlet(np.full(k, cfg.prior_c))
    return MixtureState.from_labels(z, d, p, mu, graph)


def run_chain(mu: np.ndarray, nd: NeighborData, cfg: HidalgoConfig,
              chain_seed, graph: HomogeneityGraph | None = None,
              table: LogZTable | None = None) -> ChainTrace:
    """Run one chain from a random configuration and record its trace.

    The same chain_seed reproduces the trace bit for bit.
    """
    if graph is None:
        graph = restrict_graph(nd, cfg.q)
    if table is None:
        table = LogZTable.build(cfg.xi, cfg.q, mu.shape[0])
    rng = np.random.default_rng(chain_seed)
    state = _init_state(mu, graph, cfg, rng)

    n, k = mu.shape[0], cfg.n_manifolds
    retained_start = int(cfg.burn_in_fraction * cfg.n_sweeps)
    d_samples = np.empty((cfg.n_sweeps, k))
    p_samples = np.empty((cfg.n_sweeps, k))
    logpost = np.empty(cfg.n_sweeps)
    z_freq = np.zeros((n, k), dtype=np.int64)
    flagged = []
    rows = np.arange(n)
    for t in range(cfg.n_sweeps):
        u_d = rng.random(k)
        u_p = rng.random(k)
        u_z = rng.random((n, k))
        order = _scan_order(n, cfg, rng)
        logpost[t], nflag = gibbs_sweep_with_uniforms(
            state, mu, graph, cfg, table, u_d, u_p, u_z, order)
        if nflag:
            flagged.append(t)
        d_samples[t] = state.d
        p_samples[t] = state.p
        if t >= retained_start:
            z_freq[rows, state.z] += 1
    return ChainTrace(
        d_samples=d_samples, p_samples=p_samples, logpost_samples=logpost,
        z_freq=z_freq, retained_start=retained_start,
        max_logpost=float(np.max(logpost)), flagged_sweeps=flagged,
    )


def hard_assignments(pi: np.ndarray, threshold: float = ASSIGN_THRESHOLD) -> np.ndarray:
    """Labels from posterior assignment probabilities.

    A point gets label k only when pi[i, k] strictly exceeds the threshold;
    otherwise it is marked uncertain (-1).
    """
    return np.where(np.max(pi, axis=1) > threshold,
                    np.argmax(pi, axis=1), UNCERTAIN).astype(np.int64)


def fit(mu: np.ndarray, nd: NeighborData, cfg: HidalgoConfig,
        n_threads: int = 1) -> FitResult:
    """Run the configured number of chains and summarize the best one.

    Chain seeds are spawned from cfg.seed; the chain with the highest
    maximum log-posterior supplies all posterior summaries. Chains are
    independent and may run on n_threads worker threads (the label scan
    releases the GIL); results do not depend on the thread count.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if np.any(mu < 1.0):
        raise ValueError("all mu ratios must be >= 1")
    graph = restrict_graph(nd, cfg.q)
    table = LogZTable.build(cfg.xi, cfg.q, mu.shape[0])
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)
    if n_threads > 1 and cfg.n_chains > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            traces = list(pool.map(
                lambda s: run_chain(mu, nd, cfg, s, graph=graph, table=table), seeds))
    else:
        traces = [run_chain(mu, nd, cfg, s, graph=graph, table=table) for s in seeds]

    best = int(np.argmax([t.max_logpost for t in traces]))
    tr = traces[best]
    ret = slice(tr.retained_start, None)
    pi = tr.z_freq / tr.n_retained
    hard_z = hard_assignments(pi)
    return FitResult(
        d_mean=tr.d_samples[ret].mean(axis=0),
        d_sd=tr.d_samples[ret].std(axis=0),
        p_mean=tr.p_samples[ret].mean(axis=0),
        pi=pi,
        hard_z=hard_z,
        avg_logpost=float(tr.logpost_samples[ret].mean()),
        best_chain=best,
        max_logpost=tr.max_logpost,
        n_retained=tr.n_retained,
        best_trace=tr,
    )
