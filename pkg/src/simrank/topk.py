"""Top-k similarity search with admissible pruning bounds.

Two upper bounds on the truncated score s^(T)(u,v): a distance-indexed bound
beta(u, d) built from per-step maxima alpha(u, d, t), and a norm bound
sum_t c^t gamma(u,t) gamma(v,t) with gamma(u,t) = ||sqrt(D) P^t e_u||.  The
query scans BFS shells in ascending distance, keeps a size-k min-heap, and
prunes shells via beta and individual vertices via the norm bound.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass, field

import numpy as np

from .diag import DiagonalCorrection
from .graph import Config, Graph, bfs_distances, walk_positions, walk_trajectory
from .mc import mc_single_pair
from .query import single_pair

DEFAULT_P_WALKS = 10
DEFAULT_Q_WALKS = 5
INDEX_MAGIC = b"SRBIDX1\n"


@dataclass
class AlphaBeta:
    u: int
    alpha: np.ndarray  # (d_max+1, T); row 0 is the query vertex itself
    beta: np.ndarray   # (d_max+1,)


@dataclass
class BoundsIndex:
    gamma: np.ndarray                      # (n, T)
    candidates: dict[int, set[int]]
    params: dict = field(default_factory=dict)


def build_gamma(g: Graph, cfg: Config, D: DiagonalCorrection, u: int,
                mode: str = "exact", R: int = 100,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Row gamma(u, t) for t = 0..T-1."""
    dvals = D.as_array()
    out = np.zeros(cfg.T)
    if mode == "exact":
        x = np.zeros(g.n)
        x[u] = 1.0
        P = g.P
        for t in range(cfg.T):
            out[t] = np.sqrt(float(np.sum(dvals * x * x)))
            x = P @ x
    else:
        if rng is None:
            rng = cfg.rng()
        for t, hist in enumerate(walk_positions(g, u, cfg.T, R, rng)):
            p = hist / R
            out[t] = np.sqrt(float(np.sum(dvals * p * p)))
    return out


def build_alpha_beta(g: Graph, cfg: Config, D: DiagonalCorrection, u: int,
                     d_max: int, mode: str = "exact", R: int = 100,
                     rng: np.random.Generator | None = None) -> AlphaBeta:
    """alpha(u,d,t) = max over w at distance d of D_ww (P^t e_u)_w, and beta rows.

    beta(u,d) = sum_t c^t max_{d-t <= d' <= d+t} alpha(u,d',t); sound for the
    truncated score of any v at undirected distance d because step-t walk
    positions stay within distance t of their start.
    """
    dvals = D.as_array()
    dist_map = bfs_distances(g, u, d_max)
    dist_arr = np.full(g.n, -1, dtype=np.int64)
    for w, d in dist_map.items():
        dist_arr[w] = d

    alpha = np.zeros((d_max + 1, cfg.T))
    if mode == "exact":
        x = np.zeros(g.n)
        x[u] = 1.0
        P = g.P
        for t in range(cfg.T):
            supp = np.nonzero(x)[0]
            known = supp[dist_arr[supp] >= 0]
            np.maximum.at(alpha[:, t], dist_arr[known], dvals[known] * x[known])
            x = P @ x
    else:
        if rng is None:
            rng = cfg.rng()
        for t, hist in enumerate(walk_positions(g, u, cfg.T, R, rng)):
            supp = np.nonzero(hist)[0]
            known = supp[dist_arr[supp] >= 0]
            np.maximum.at(alpha[:, t], dist_arr[known],
                          dvals[known] * hist[known] / R)

    beta = np.zeros(d_max + 1)
    weights = cfg.c ** np.arange(cfg.T)
    for d in range(d_max + 1):
        acc = 0.0
        for t in range(cfg.T):
            lo = max(d - t, 0)
            hi = min(d + t, d_max)
            acc += weights[t] * float(np.max(alpha[lo:hi + 1, t]))
        beta[d] = acc
    return AlphaBeta(u, alpha, beta)


def l2_bound(gamma_u: np.ndarray, gamma_v: np.ndarray, c: float) -> float:
    """sum_t c^t gamma(u,t) gamma(v,t); admissible for s^(T)(u,v)."""
    if len(gamma_u) != len(gamma_v):
        raise ValueError("gamma rows must have equal length")
    weights = c ** np.arange(len(gamma_u))
    return float(np.sum(weights * gamma_u * gamma_v))


def build_candidate_index(g: Graph, cfg: Config, P_walks: int = DEFAULT_P_WALKS,
                          Q_walks: int = DEFAULT_Q_WALKS,
                          rng: np.random.Generator | None = None) -> dict[int, set[int]]:
    """Anchor-sharing candidate map.

    Per vertex, P_walks rounds: one pilot walk and Q_walks probe walks; the
    pilot's step-t vertex becomes an anchor whenever two probes coincide at
    step t.  Candidates of u are all v sharing an anchor with u.
    """
    if rng is None:
        rng = cfg.rng()
    anchors: list[set[int]] = [set() for _ in range(g.n)]
    for u in range(g.n):
        for _ in range(P_walks):
            pilot = walk_trajectory(g, u, cfg.T, rng)
            probes = [walk_trajectory(g, u, cfg.T, rng) for _ in range(Q_walks)]
            for t in range(1, len(pilot)):
                at_t = [w[t] for w in probes if len(w) > t]
                if len(at_t) - len(set(at_t)) >= 1:
                    anchors[u].add(pilot[t])

    by_anchor: dict[int, set[int]] = {}
    for u, marks in enumerate(anchors):
        for a in marks:
            by_anchor.setdefault(a, set()).add(u)
    candidates: dict[int, set[int]] = {u: set() for u in range(g.n)}
    for members in by_anchor.values():
        for u in members:
            candidates[u].update(members)
    for u in range(g.n):
        candidates[u].discard(u)
    return candidates


def build_bounds_index(g: Graph, cfg: Config, D: DiagonalCorrection,
                       mode: str = "exact", R: int = 100,
                       P_walks: int = DEFAULT_P_WALKS,
                       Q_walks: int = DEFAULT_Q_WALKS,
                       rng: np.random.Generator | None = None) -> BoundsIndex:
    if rng is None:
        rng = cfg.rng()
    gamma = np.vstack([build_gamma(g, cfg, D, u, mode, R, rng)
                       for u in range(g.n)])
    candidates = build_candidate_index(g, cfg, P_walks, Q_walks, rng)
    return BoundsIndex(gamma, candidates,
                       params={"R_gamma": R, "P_walks": P_walks,
                               "Q_walks": Q_walks, "T": cfg.T})


def save_bounds_index(path: str, index: BoundsIndex) -> None:
    """Binary gamma table with a versioned header; candidates as text sidecar."""
    n, T = index.gamma.shape
    p = index.params
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<5q", n, T, p.get("R_gamma", 0),
                             p.get("P_walks", 0), p.get("Q_walks", 0)))
        fh.write(np.ascontiguousarray(index.gamma, dtype=np.float64).tobytes())
    with open(path + ".cand", "w") as fh:
        for u in range(n):
            members = " ".join(str(v) for v in sorted(index.candidates.get(u, ())))
            fh.write(f"{u}: {members}".rstrip() + "\n")


def load_bounds_index(path: str) -> BoundsIndex:
    with open(path, "rb") as fh:
        magic = fh.read(len(INDEX_MAGIC))
        if magic != INDEX_MAGIC:
            raise ValueError(f"not a bounds index file: {path}")
        n, T, R_gamma, P_walks, Q_walks = struct.unpack("<5q", fh.read(40))
        gamma = np.frombuffer(fh.read(n * T * 8), dtype=np.float64).reshape(n, T)
    candidates: dict[int, set[int]] = {}
    with open(path + ".cand") as fh:
        for line in fh:
            head, _, tail = line.partition(":")
            u = int(head)
            candidates[u] = {int(tok) for tok in tail.split()}
    return BoundsIndex(gamma.copy(), candidates,
                       params={"R_gamma": R_gamma, "P_walks": P_walks,
                               "Q_walks": Q_walks, "T": T})


def topk_query(g: Graph, cfg: Config, D: DiagonalCorrection,
               index: BoundsIndex | None, u: int, k: int,
               theta_floor: float = 0.0,
               adaptive: tuple[int, int] | None = None,
               rng: np.random.Generator | None = None,
               use_bounds: bool = True,
               use_distance_bound: bool = False) -> list[tuple[int, float]]:
    """Up to k (vertex, score) pairs, descending score, ties by ascending id.

    Scans shells in ascending undirected distance up to d_max = T.  With
    adaptive=(R_lo, R_hi), scores come from the MC estimator at R_lo, then
    R_hi when the cheap estimate exceeds half the current kth score;
    otherwise the deterministic truncated score is used.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if adaptive is not None and rng is None:
        rng = cfg.rng()
    d_max = cfg.T
    dist_map = bfs_distances(g, u, d_max)

    allowed = None
    if index is not None:
        allowed = index.candidates.get(u, set())
    shells: dict[int, list[int]] = {}
    for v, d in dist_map.items():
        if v == u or d == 0:
            continue
        if allowed is not None and v not in allowed:
            continue
        shells.setdefault(d, []).append(v)
    for members in shells.values():
        members.sort()

    ab = build_alpha_beta(g, cfg, D, u, d_max)
    gamma_cache: dict[int, np.ndarray] = {}

    def gamma_of(v: int) -> np.ndarray:
        if index is not None:
            return index.gamma[v]
        if v not in gamma_cache:
            gamma_cache[v] = build_gamma(g, cfg, D, v)
        return gamma_cache[v]

    def score_of(v: int, kth: float | None) -> float:
        if adaptive is None:
            return single_pair(g, cfg, D, u, v)
        R_lo, R_hi = adaptive
        rough = mc_single_pair(g, cfg, D, u, v, R_lo, rng)
        if kth is None or rough > 0.5 * kth:
            return mc_single_pair(g, cfg, D, u, v, R_hi, rng)
        return rough

    # min-heap over (score, -v): the root is the lowest score, with the
    # largest id losing ties, so final ties rank by ascending id
    heap: list[tuple[float, int]] = []
    for d in range(1, d_max + 1):
        kth = heap[0][0] if len(heap) == k else None
        if use_bounds:
            if kth is not None and ab.beta[d] <= kth:
                break
            if ab.beta[d] <= theta_floor:
                break
        for v in shells.get(d, ()):
            if kth is not None and use_bounds:
                if l2_bound(gamma_of(u), gamma_of(v), cfg.c) <= kth:
                    continue
                if use_distance_bound and cfg.c ** d <= kth:
                    continue
            s = score_of(v, kth)
            entry = (s, -v)
            if len(heap) < k:
                heapq.heappush(heap, entry)
            elif entry > heap[0]:
                heapq.heapreplace(heap, entry)
            kth = heap[0][0] if len(heap) == k else None
    ranked = sorted(heap, key=lambda e: (-e[0], -e[1]))
    return [(-neg_v, s) for s, neg_v in ranked]
