"""Command-line front end.

Subcommands: estimate-diag, query (pair | source | allpairs), topk, join,
oracle, accuracy.  All randomness flows from --seed (default 0, never
entropy), so rerunning a command with identical flags reproduces its output
byte for byte.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .diag import (DiagonalCorrection, EstimationConfig, estimate_diagonal,
                   load_diagonal, residual_norm, save_diagonal)
from .graph import Config, Graph, load_edge_list
from .join import join
from .mc import mc_single_pair
from .oracle import naive_simrank
from .query import DEFAULT_OUTPUT_THRESHOLD, all_pairs, single_pair, single_source
from .topk import build_bounds_index, load_bounds_index, save_bounds_index, topk_query

RESIDUAL_CHECK_CAP = 2000


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--graph", required=True, help="edge list file, 'u v' per line")
    parser.add_argument("--c", type=float, default=0.6, help="decay factor")
    parser.add_argument("--T", type=int, default=11, help="truncation depth")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (SIMRANK_THREADS as fallback)")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SIMRANK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_graph(args) -> tuple[Graph, Config]:
    with open(args.graph) as fh:
        g = load_edge_list(fh)
    return g, Config(c=args.c, T=args.T, seed=args.seed)


def _diagonal(args, g: Graph, cfg: Config) -> DiagonalCorrection:
    """From --diag when given, else an exact-mode estimate at the defaults."""
    if getattr(args, "diag", None):
        D = load_diagonal(args.diag)
        if len(D) != g.n:
            raise ValueError(
                f"diagonal file has {len(D)} values but graph has {g.n} vertices")
        return D
    return estimate_diagonal(g, cfg, EstimationConfig(L=3, mode="exact"))


def cmd_estimate_diag(args) -> int:
    g, cfg = _load_graph(args)
    est_cfg = EstimationConfig(L=args.L, R=args.R, mode=args.mode)
    start = time.perf_counter()
    D = estimate_diagonal(g, cfg, est_cfg)
    elapsed = time.perf_counter() - start
    save_diagonal(args.out, D)
    summary = (f"n={g.n} m={g.m} mode={args.mode} L={args.L} "
               f"clamped={D.clamped} skipped={D.skipped} time={elapsed:.3f}s")
    if args.mode == "exact" and g.n <= RESIDUAL_CHECK_CAP:
        summary += f" residual_norm={residual_norm(g, cfg, D):.3e}"
    print(summary)
    return 0


def cmd_query(args) -> int:
    g, cfg = _load_graph(args)
    D = _diagonal(args, g, cfg)
    rng = cfg.rng()

    def score(i: int, j: int) -> float:
        if args.estimator == "mc":
            return mc_single_pair(g, cfg, D, i, j, args.R, rng)
        return single_pair(g, cfg, D, i, j)

    expected = {"pair": 2, "source": 1, "allpairs": 0}[args.submode]
    if len(args.vertices) != expected:
        raise ValueError(
            f"query {args.submode} takes {expected} vertex argument(s), "
            f"got {len(args.vertices)}")

    if args.submode == "pair":
        i, j = args.vertices
        _check_vertex(g, i)
        _check_vertex(g, j)
        print(f"{score(i, j):.6f}")
    elif args.submode == "source":
        (i,) = args.vertices
        _check_vertex(g, i)
        if args.estimator == "mc":
            col = np.array([score(i, j) for j in range(g.n)])
        else:
            col = single_source(g, cfg, D, i)
        for j in range(g.n):
            print(f"{j}\t{col[j]:.6f}")
    else:  # allpairs
        if not args.out:
            raise ValueError("allpairs requires --out")
        with open(args.out, "w") as fh:
            rows = all_pairs(g, cfg, D, fh, threshold=args.threshold)
        print(f"rows={rows}")
    return 0


def cmd_topk(args) -> int:
    g, cfg = _load_graph(args)
    _check_vertex(g, args.source)
    D = _diagonal(args, g, cfg)
    index = None
    if args.index:
        if args.build_index:
            index = build_bounds_index(g, cfg, D, rng=cfg.rng())
            save_bounds_index(args.index, index)
        else:
            index = load_bounds_index(args.index)
    adaptive = None
    if args.estimator == "mc":
        adaptive = (args.R_lo, args.R_hi)
    ranked = topk_query(g, cfg, D, index, args.source, args.k,
                        theta_floor=args.theta_floor, adaptive=adaptive,
                        rng=cfg.rng())
    for v, s in ranked:
        print(f"{v}\t{s:.6f}")
    return 0


def cmd_join(args) -> int:
    g, cfg = _load_graph(args)
    D = _diagonal(args, g, cfg)
    beta_skip = None if args.beta_skip <= 0 else args.beta_skip
    result = join(g, cfg, D, args.theta, gamma_acc=args.gamma,
                  beta_skip=beta_skip, p=args.p, R_max=args.rmax,
                  rng=cfg.rng())
    sink = open(args.out, "w") if args.out else sys.stdout
    try:
        for i, j in sorted(result.result):
            source = "filter" if (i, j) in result.J_L else "verified"
            sink.write(f"{i}\t{j}\t{source}\n")
    finally:
        if args.out:
            sink.close()
    print(json.dumps(result.stats, sort_keys=True), file=sys.stderr)
    return 0


def cmd_oracle(args) -> int:
    g, cfg = _load_graph(args)
    S = naive_simrank(g, cfg, cap=args.cap)
    sink = open(args.out, "w") if args.out else sys.stdout
    try:
        for i in range(g.n):
            for j in range(g.n):
                sink.write(f"{i}\t{j}\t{S[i, j]:.6f}\n")
    finally:
        if args.out:
            sink.close()
    return 0


def cmd_accuracy(args) -> int:
    g, cfg = _load_graph(args)
    S_true = naive_simrank(g, cfg, cap=args.cap)
    S_est = np.zeros((g.n, g.n))
    with open(args.scores) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = text.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{args.scores}:{lineno}: expected 'i<TAB>j<TAB>score'")
            i, j, s = int(parts[0]), int(parts[1]), float(parts[2])
            _check_vertex(g, i)
            _check_vertex(g, j)
            S_est[i, j] = s
    me = float(np.abs(S_est - S_true).sum() / (g.n * g.n))
    print(f"{me:.9f}")
    return 0


def _check_vertex(g: Graph, v: int) -> None:
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range for graph with {g.n} vertices")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="simrank",
                                  description="Linearized SimRank toolkit")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-diag", help="estimate the diagonal correction")
    _add_common(p)
    p.add_argument("--L", type=int, default=3, help="Gauss-Seidel sweeps")
    p.add_argument("--R", type=int, default=100, help="walks per estimate (mc mode)")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--out", required=True, help="output diagonal file")
    p.set_defaults(func=cmd_estimate_diag)

    p = sub.add_parser("query", help="similarity scores for pairs or sources")
    _add_common(p)
    p.add_argument("submode", choices=("pair", "source", "allpairs"))
    p.add_argument("vertices", type=int, nargs="*",
                   help="i j for pair, i for source, none for allpairs")
    p.add_argument("--diag", help="diagonal file (default: exact estimate)")
    p.add_argument("--estimator", choices=("exact", "mc"), default="exact")
    p.add_argument("--R", type=int, default=100, help="walks per mc estimate")
    p.add_argument("--out", help="output file (allpairs)")
    p.add_argument("--threshold", type=float, default=DEFAULT_OUTPUT_THRESHOLD,
                   help="allpairs emission threshold")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("topk", help="top-k most similar vertices")
    _add_common(p)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--theta-floor", type=float, default=0.0, dest="theta_floor")
    p.add_argument("--index", help="bounds index path")
    p.add_argument("--build-index", action="store_true",
                   help="build and save the index at --index before querying")
    p.add_argument("--diag", help="diagonal file (default: exact estimate)")
    p.add_argument("--estimator", choices=("exact", "mc"), default="exact")
    p.add_argument("--R-lo", type=int, default=10, dest="R_lo")
    p.add_argument("--R-hi", type=int, default=100, dest="R_hi")
    p.set_defaults(func=cmd_topk)

    p = sub.add_parser("join", help="all pairs above a similarity threshold")
    _add_common(p)
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.0,
                   help="accuracy split in [0,1); larger shrinks the filter work")
    p.add_argument("--beta-skip", type=float, default=100.0, dest="beta_skip",
                   help="thresholding rate; <= 0 disables thresholding")
    p.add_argument("--p", type=float, default=0.01,
                   help="verification failure probability")
    p.add_argument("--rmax", type=int, default=1000,
                   help="verification sample cap")
    p.add_argument("--diag", help="diagonal file (default: exact estimate)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_join)

    p = sub.add_parser("oracle", help="converged scores by fixed-point iteration")
    _add_common(p)
    p.add_argument("--cap", type=int, default=5000, help="vertex cap")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("accuracy", help="mean error of a score file vs the oracle")
    _add_common(p)
    p.add_argument("--scores", required=True,
                   help="TSV 'i<TAB>j<TAB>score'; missing entries count as 0")
    p.add_argument("--cap", type=int, default=5000, help="oracle vertex cap")
    p.set_defaults(func=cmd_accuracy)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _threads(args)  # validated; execution is currently sequential
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # runtime failure -> exit 1 with a message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
