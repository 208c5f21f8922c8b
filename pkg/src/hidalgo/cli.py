"""Command-line surface: CSV in, JSON/CSV out.

Subcommands: fit, select-k, generate, nmi, twonn, convergence. Every output
file starts with a run-manifest block (config echo, input hashes, seed,
timings, version) so a run can be reproduced from its artifacts alone.

Exit codes: 0 ok, 1 usage/validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import convergence_check, nmi, select_k
from .geometry import (
    DistanceMatrix,
    Metric,
    NeighborData,
    PointCloud,
    build_neighbor_data,
    compute_distances,
    independent_subset,
)
from .model import HidalgoConfig
from .sampler import UNCERTAIN, fit
from .synth import PRESETS
from .twonn import twonn_fit

__all__ = ["main"]


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# file IO


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _data_rows(path: Path):
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([tok.strip() for tok in line.split(",")])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def read_matrix_csv(path: Path) -> np.ndarray:
    """Numeric CSV with an optional single header row and comment lines."""
    rows = _data_rows(path)
    if not all(_is_number(t) for t in rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: header only, no data")
    return np.array([[float(t) for t in r] for r in rows])


def read_labels_csv(path: Path) -> np.ndarray:
    """One label per row, or an assignment CSV written by `fit`."""
    rows = _data_rows(path)
    if rows[0][0] == "point" and "label" in rows[0]:
        col = rows[0].index("label")
        return np.array([r[col] for r in rows[1:]])
    return np.array([r[0] for r in rows])


def _manifest(command: str, params: dict, inputs: dict, elapsed: float) -> dict:
    return {
        "tool": "hidalgo",
        "version": __version__,
        "command": command,
        "params": params,
        "input_sha256": inputs,
        "elapsed_s": round(elapsed, 3),
    }


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")


def write_csv(path: Path, manifest: dict, header: list, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("# manifest " + json.dumps(manifest) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# shared argument handling


def _parse_metric(spec: str) -> Metric | None:
    if spec == "none":
        return None
    if spec == "euclidean":
        return Metric.euclidean()
    if spec == "normalized":
        return Metric.normalized()
    if spec.startswith("periodic:"):
        periods = [float(t) for t in spec.split(":", 1)[1].split(",") if t]
        if not periods:
            raise UsageError("periodic metric needs at least one period")
        return Metric.periodic(periods)
    raise UsageError(f"unknown metric {spec!r}")


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", type=Path, help="coordinate CSV, one point per row")
    p.add_argument("--distances", type=Path, help="square distance-matrix CSV")
    p.add_argument("--metric", default="euclidean",
                   help="euclidean | periodic:<p1,p2,...> | normalized | none")


def _add_sampler_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--xi", type=float, default=0.8)
    p.add_argument("--sweeps", type=int, default=10000)
    p.add_argument("--chains", type=int, default=5)
    p.add_argument("--burn-in", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prior-a", type=float, default=1.0)
    p.add_argument("--prior-b", type=float, default=1.0)
    p.add_argument("--prior-c", type=float, default=1.0)
    p.add_argument("--scan", choices=("systematic", "random"), default="systematic")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("HIDALGO_THREADS", "1")))


def _load_distances(args) -> tuple[DistanceMatrix, dict]:
    if (args.input is None) == (args.distances is None):
        raise UsageError("exactly one of --input or --distances is required")
    inputs = {}
    if args.distances is not None:
        if _parse_metric(args.metric) is not None:
            raise UsageError("--distances requires --metric none")
        inputs[str(args.distances)] = _sha256(args.distances)
        dm = DistanceMatrix(read_matrix_csv(args.distances))
    else:
        metric = _parse_metric(args.metric)
        if metric is None:
            raise UsageError("--metric none only makes sense with --distances")
        inputs[str(args.input)] = _sha256(args.input)
        cloud = PointCloud(read_matrix_csv(args.input))
        dm = compute_distances(cloud, metric)
    return dm, inputs


def _config_from_args(args, k: int) -> HidalgoConfig:
    try:
        return HidalgoConfig(
            n_manifolds=k, q=args.q, xi=args.xi,
            prior_a=args.prior_a, prior_b=args.prior_b, prior_c=args.prior_c,
            n_sweeps=args.sweeps, n_chains=args.chains,
            burn_in_fraction=args.burn_in, seed=args.seed, scan=args.scan,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _neighbor_inputs(dm: DistanceMatrix, cfg: HidalgoConfig,
                     independent: bool) -> tuple[np.ndarray, NeighborData, np.ndarray]:
    """mu vector, neighbor graph, and the original indices of the points used.

    Under the independent restriction, mu keeps the full-data values (that
    is the point of the restriction) while the homogeneity graph is rebuilt
    among the retained points only.
    """
    q_build = max(2, cfg.q)
    nd = build_neighbor_data(dm, q_build)
    if not independent:
        return nd.mu, nd, np.arange(dm.n_points)
    subset = independent_subset(nd)
    dm_sub = DistanceMatrix(dm.d[np.ix_(subset, subset)])
    nd_sub = build_neighbor_data(dm_sub, q_build)
    return nd.mu[subset], nd_sub, subset


def _hard_label(k: int) -> str:
    return "uncertain" if k == UNCERTAIN else str(k)


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args) -> int:
    cfg = _config_from_args(args, args.k)
    dm, inputs = _load_distances(args)
    t_start = time.perf_counter()
    mu, nd, idx = _neighbor_inputs(dm, cfg, args.independent)
    result = fit(mu, nd, cfg, n_threads=args.threads)
    elapsed = time.perf_counter() - t_start

    params = {
        "k": args.k, "q": cfg.q, "xi": cfg.xi, "sweeps": cfg.n_sweeps,
        "chains": cfg.n_chains, "burn_in": cfg.burn_in_fraction,
        "seed": cfg.seed, "metric": args.metric, "scan": cfg.scan,
        "independent": args.independent,
        "priors": [cfg.prior_a, cfg.prior_b, cfg.prior_c],
    }
    manifest = _manifest("fit", params, inputs, elapsed)
    out = Path(args.out)
    payload = {"manifest": manifest, **result.to_dict()}
    write_json(out / "fit.json", payload)

    header = ["point", "label"] + [f"pi_{k}" for k in range(cfg.n_manifolds)]
    rows = [
        [int(idx[i]), _hard_label(int(result.hard_z[i]))] +
        [f"{v:.6f}" for v in result.pi[i]]
        for i in range(len(idx))
    ]
    write_csv(out / "assignment.csv", manifest, header, rows)

    if args.trace_out is not None:
        tr = result.best_trace
        k_range = range(cfg.n_manifolds)
        trace_header = (["sweep", "logpost"]
                        + [f"d_{k}" for k in k_range] + [f"p_{k}" for k in k_range])
        trace_rows = (
            [t, f"{tr.logpost_samples[t]:.10g}"]
            + [f"{v:.10g}" for v in tr.d_samples[t]]
            + [f"{v:.10g}" for v in tr.p_samples[t]]
            for t in range(tr.logpost_samples.shape[0])
        )
        write_csv(Path(args.trace_out), manifest, trace_header, trace_rows)
    print(json.dumps(payload, indent=2))
    return 0


def cmd_select_k(args) -> int:
    cfg = _config_from_args(args, 1)
    if args.k_max < 1:
        raise UsageError("--k-max must be >= 1")
    dm, inputs = _load_distances(args)
    t_start = time.perf_counter()
    mu, nd, _ = _neighbor_inputs(dm, cfg, args.independent)
    report = select_k(mu, nd, cfg, args.k_max)
    elapsed = time.perf_counter() - t_start
    params = {"k_max": args.k_max, "q": cfg.q, "xi": cfg.xi,
              "sweeps": cfg.n_sweeps, "chains": cfg.n_chains, "seed": cfg.seed,
              "metric": args.metric, "independent": args.independent}
    payload = {"manifest": _manifest("select-k", params, inputs, elapsed),
               **report.to_dict()}
    if args.out is not None:
        write_json(Path(args.out) / "select_k.json", payload)
    print(json.dumps(payload, indent=2))
    return 0


def cmd_generate(args) -> int:
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
    t_start = time.perf_counter()
    kwargs = {"n_per": args.n_per, "seed": args.seed}
    if args.preset == "two-gauss":
        kwargs.update(d1=args.d1, d2=args.d2)
    labeled = PRESETS[args.preset](**kwargs)
    elapsed = time.perf_counter() - t_start
    params = {"preset": args.preset, **kwargs}
    manifest = _manifest("generate", params, {}, elapsed)
    out = Path(args.out)
    coords = labeled.cloud.coords
    write_csv(out / "coords.csv", manifest,
              [f"x{j}" for j in range(coords.shape[1])],
              ([f"{v:.17g}" for v in row] for row in coords))
    write_csv(out / "labels.csv", manifest, ["label"],
              ([int(v)] for v in labeled.labels))
    print(json.dumps({"manifest": manifest, "n_points": labeled.n_points,
                      "files": [str(out / "coords.csv"), str(out / "labels.csv")]}))
    return 0


def cmd_nmi(args) -> int:
    pred = read_labels_csv(args.pred)
    truth = read_labels_csv(args.truth)
    inputs = {str(args.pred): _sha256(args.pred), str(args.truth): _sha256(args.truth)}
    value = nmi(pred, truth)
    print(json.dumps({"manifest": _manifest("nmi", {}, inputs, 0.0), "nmi": value}))
    return 0


def cmd_twonn(args) -> int:
    dm, inputs = _load_distances(args)
    t_start = time.perf_counter()
    nd = build_neighbor_data(dm, 2)
    est = twonn_fit(nd.mu, prior_a=args.prior_a, prior_b=args.prior_b)
    elapsed = time.perf_counter() - t_start
    params = {"metric": args.metric, "prior_a": args.prior_a, "prior_b": args.prior_b}
    print(json.dumps({"manifest": _manifest("twonn", params, inputs, elapsed),
                      **est.to_dict()}, indent=2))
    return 0


def cmd_convergence(args) -> int:
    raw = read_matrix_csv(args.trace)
    cols = None
    header_line = None
    for line in Path(args.trace).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            header_line = [t.strip() for t in line.split(",")]
            break
    if header_line is not None and not _is_number(header_line[0]):
        cols = [j for j, name in enumerate(header_line) if name.startswith("d_")]
    series = raw if cols is None or not cols else raw[:, cols]
    inputs = {str(args.trace): _sha256(args.trace)}
    report = convergence_check(series, theta=args.theta, t0=args.t0, alpha=args.alpha)
    params = {"theta": args.theta, "t0": args.t0, "alpha": args.alpha}
    print(json.dumps({"manifest": _manifest("convergence", params, inputs, 0.0),
                      **report.to_dict()}, indent=2))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hidalgo",
        description="Segment a point cloud into regions of distinct intrinsic dimension.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the mixture and write posterior summaries")
    _add_input_args(p)
    _add_sampler_args(p)
    p.add_argument("--k", type=int, required=True, help="number of manifolds")
    p.add_argument("--independent", action="store_true",
                   help="restrict to points with non-overlapping first/second neighbors")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--trace-out", type=Path, default=None,
                   help="also write the best chain's per-sweep trace CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select-k", help="compare average log-posterior across K")
    _add_input_args(p)
    _add_sampler_args(p)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--independent", action="store_true")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("generate", help="write a synthetic benchmark dataset")
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--n-per", type=int, default=1000, help="points per manifold")
    p.add_argument("--d1", type=int, default=9, help="two-gauss: higher dimension")
    p.add_argument("--d2", type=int, default=4, help="two-gauss: lower dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("nmi", help="normalized mutual information of two labelings")
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True,
                   help="ground truth (normalizes the score)")
    p.set_defaults(func=cmd_nmi)

    p = sub.add_parser("twonn", help="single-manifold dimension estimate")
    _add_input_args(p)
    p.add_argument("--prior-a", type=float, default=1.0)
    p.add_argument("--prior-b", type=float, default=1.0)
    p.set_defaults(func=cmd_twonn)

    p = sub.add_parser("convergence", help="cumulative-sum stationarity test on a trace CSV")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--theta", type=int, default=10)
    p.add_argument("--t0", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; usage problems are exit 1 here
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - uniform runtime error reporting
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
