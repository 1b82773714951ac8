"""Monte-Carlo estimators and adaptive pair verification.

Two families: single-pair estimation from two batches of in-link walks over
the series expansion, and first-meeting-time sampling of coupled walks, where
the score equals E[c^tau] for the first step tau at which the walks coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diag import DiagonalCorrection
from .graph import Config, Graph, walk_positions

VERIFY_CHUNK = 64


@dataclass
class WalkBatch:
    """R walks from one source; per-step position histograms (absorbed walks drop out)."""

    source: int
    R: int
    positions: list[np.ndarray]

    @classmethod
    def simulate(cls, g: Graph, cfg: Config, source: int, R: int,
                 rng: np.random.Generator) -> "WalkBatch":
        return cls(source, R, walk_positions(g, source, cfg.T, R, rng))


def mc_single_pair(g: Graph, cfg: Config, D: DiagonalCorrection,
                   i: int, j: int, R: int, rng: np.random.Generator) -> float:
    """sum_t c^t sum_w D_ww count_i(w,t) count_j(w,t) / R^2 from two batches."""
    if i == j:
        return 1.0
    dvals = D.as_array()
    batch_i = WalkBatch.simulate(g, cfg, i, R, rng)
    batch_j = WalkBatch.simulate(g, cfg, j, R, rng)
    score = 0.0
    weight = 1.0
    for hi, hj in zip(batch_i.positions, batch_j.positions):
        score += weight * float(np.sum(dvals * hi * hj)) / (R * R)
        weight *= cfg.c
    return score


def meeting_time_sample(g: Graph, cfg: Config, i: int, j: int,
                        rng: np.random.Generator) -> float:
    """One draw of c^tau for synchronous coupled walks from i and j.

    Both walks step simultaneously; tau is the first t with equal positions.
    Returns 0 if either walk is absorbed or no meeting occurs within T steps.
    """
    return float(meeting_time_samples(g, cfg, i, j, 1, rng)[0])


def meeting_time_samples(g: Graph, cfg: Config, i: int, j: int, R: int,
                         rng: np.random.Generator) -> np.ndarray:
    """R independent draws of c^tau, vectorized over the sample axis."""
    values = np.zeros(R)
    if i == j:
        values[:] = 1.0
        return values
    pos_a = np.full(R, i, dtype=np.int64)
    pos_b = np.full(R, j, dtype=np.int64)
    active = np.arange(R)
    weight = 1.0
    for _ in range(cfg.T):
        deg_a = g.in_degree[pos_a]
        deg_b = g.in_degree[pos_b]
        alive = (deg_a > 0) & (deg_b > 0)
        pos_a, pos_b, active = pos_a[alive], pos_b[alive], active[alive]
        if active.size == 0:
            break
        deg_a, deg_b = deg_a[alive], deg_b[alive]
        pos_a = g.in_adj[g.in_ptr[pos_a] + (rng.random(active.size) * deg_a).astype(np.int64)]
        pos_b = g.in_adj[g.in_ptr[pos_b] + (rng.random(active.size) * deg_b).astype(np.int64)]
        weight *= cfg.c
        met = pos_a == pos_b
        values[active[met]] = weight
        keep = ~met
        pos_a, pos_b, active = pos_a[keep], pos_b[keep], active[keep]
        if active.size == 0:
            break
    return values


@dataclass
class VerifyResult:
    decision: str            # "similar" | "dissimilar" | "undecided"
    side: str                # side of theta the estimate landed on
    estimate: float
    samples_used: int

    @property
    def undecided(self) -> bool:
        return self.decision == "undecided"


def verify_pair(g: Graph, cfg: Config, i: int, j: int, theta: float,
                p: float, R_max: int, rng: np.random.Generator) -> VerifyResult:
    """Adaptive thresholding of s(i,j) against theta.

    Draws meeting-time samples one at a time (batched internally), keeps the
    running mean s^(R) (which averages c**tau, not tau), and stops at the first
    R with R * (s^(R) - theta)^2 >= log(1/p)/2 * (c/(1-c))^2.  Similar iff
    s^(R) >= theta; hitting R_max without stopping flags the result undecided
    while still reporting the side.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must be in (0,1), got {theta}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0,1), got {p}")
    if R_max < 1:
        raise ValueError(f"R_max must be >= 1, got {R_max}")

    bar = math.log(1.0 / p) / 2.0 * (cfg.c / (1.0 - cfg.c)) ** 2
    total = 0.0
    used = 0
    terminated = False
    while used < R_max:
        chunk = min(VERIFY_CHUNK, R_max - used)
        draws = meeting_time_samples(g, cfg, i, j, chunk, rng)
        counts = used + 1 + np.arange(chunk)
        means = (total + np.cumsum(draws)) / counts
        ok = counts * (means - theta) ** 2 >= bar
        hit = int(np.argmax(ok)) if ok.any() else -1
        if hit >= 0:
            used += hit + 1
            total += float(np.sum(draws[:hit + 1]))
            terminated = True
            break
        used += chunk
        total += float(np.sum(draws))
    estimate = total / used if used else 0.0
    side = "similar" if estimate >= theta else "dissimilar"
    decision = side if terminated else "undecided"
    return VerifyResult(decision, side, estimate, used)
