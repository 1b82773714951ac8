"""Diagonal correction estimation.

The correction matrix D is the diagonal matrix making S = c P^T S P + D hold
for the true similarity matrix.  It is characterized by S^L(D)_kk = 1 for all
k, where S^L(Theta) = sum_t c^t P^{T t} Theta P^t.  We solve that condition by
Gauss-Seidel sweeps: each visit updates D_kk by (1 - S^L(D)_kk) /
S^L(E^(k,k))_kk, with the two inner quantities evaluated either by exact
truncated propagation or by Monte-Carlo walk histograms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Config, Distribution, Graph, step, walk_positions

EXACT_CLAMP_SLACK = 1e-9
MC_CLAMP_SLACK = 0.05
SUPPORT_CAP = 10**6


@dataclass
class DiagonalCorrection:
    values: np.ndarray
    params: dict = field(default_factory=dict)
    clamped: int = 0
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class EstimationConfig:
    L: int = 3
    R: int = 100
    mode: str = "exact"  # "exact" | "mc"

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.mode not in ("exact", "mc"):
            raise ValueError(f"mode must be 'exact' or 'mc', got {self.mode!r}")
        if self.mode == "mc" and self.R < 1:
            raise ValueError(f"R must be >= 1 in mc mode, got {self.R}")

    @property
    def clamp_slack(self) -> float:
        return EXACT_CLAMP_SLACK if self.mode == "exact" else MC_CLAMP_SLACK


def initial_guess(g: Graph, cfg: Config) -> DiagonalCorrection:
    """diag(D) = 1 - c * sum_i P_ik^2; one pass over in-degrees.

    Column k of P holds |I(k)| entries of 1/|I(k)|, so the column sum of
    squares is 1/|I(k)| (0 for an isolated column, giving D_kk = 1).
    """
    values = np.ones(g.n)
    nonzero = g.in_degree > 0
    values[nonzero] -= cfg.c / g.in_degree[nonzero]
    return DiagonalCorrection(values, params=_params(cfg, None, "initial"))


def inner_estimates(g: Graph, cfg: Config, D: DiagonalCorrection, k: int,
                    est_cfg: EstimationConfig,
                    rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Truncated (a, b) with a ~ S^L(E^(k,k))_kk and b ~ S^L(D)_kk.

    a = sum_t c^t (P^t e_k)_k^2 and b = sum_t c^t sum_w (P^t e_k)_w^2 D_ww;
    exact mode propagates P^t e_k sparsely, mc mode substitutes squared
    empirical frequencies from R walks.
    """
    dvals = D.as_array()
    a = 0.0
    b = 0.0
    if est_cfg.mode == "exact":
        dist = Distribution.point(k)
        weight = 1.0
        for _ in range(cfg.T):
            a += weight * dist.entries.get(k, 0.0) ** 2
            b += weight * sum(mass * mass * dvals[w]
                              for w, mass in dist.entries.items())
            dist = step(g, dist)
            if len(dist.entries) > SUPPORT_CAP:
                raise RuntimeError(
                    f"propagation support exceeded {SUPPORT_CAP} nonzeros")
            weight *= cfg.c
    else:
        if rng is None:
            rng = cfg.rng()
        R = est_cfg.R
        hists = walk_positions(g, k, cfg.T, R, rng)
        weight = 1.0
        for hist in hists:
            p = hist / R
            a += weight * float(p[k]) ** 2
            b += weight * float(np.sum(p * p * dvals))
            weight *= cfg.c
    return a, b


def estimate_diagonal(g: Graph, cfg: Config,
                      est_cfg: EstimationConfig) -> DiagonalCorrection:
    """L Gauss-Seidel sweeps over k = 0..n-1 from the initial guess."""
    D = initial_guess(g, cfg)
    lo = 1.0 - cfg.c - est_cfg.clamp_slack
    hi = 1.0 + est_cfg.clamp_slack
    for sweep in range(est_cfg.L):
        for k in range(g.n):
            rng = None
            if est_cfg.mode == "mc":
                # independent, order-insensitive stream per (sweep, vertex)
                rng = np.random.default_rng([cfg.seed, sweep, k])
            a, b = inner_estimates(g, cfg, D, k, est_cfg, rng)
            if a <= 0.0:
                D.skipped += 1
                continue
            updated = D.values[k] + (1.0 - b) / a
            clamped = min(max(updated, lo), hi)
            if clamped != updated:
                D.clamped += 1
            D.values[k] = clamped
    D.params = _params(cfg, est_cfg, est_cfg.mode)
    return D


def residual_norm(g: Graph, cfg: Config, D: DiagonalCorrection) -> float:
    """max_k |S^L(D)_kk - 1| with S^L truncated at T, evaluated exactly."""
    dvals = D.as_array()
    P = g.P
    X = np.eye(g.n)
    diag = np.zeros(g.n)
    weight = 1.0
    for _ in range(cfg.T):
        # column k of X is P^t e_k
        diag += weight * ((X * X).T @ dvals)
        X = P @ X
        weight *= cfg.c
    return float(np.max(np.abs(diag - 1.0)))


def _params(cfg: Config, est_cfg: EstimationConfig | None, mode: str) -> dict:
    return {
        "c": cfg.c,
        "T": cfg.T,
        "L": est_cfg.L if est_cfg else None,
        "R": est_cfg.R if est_cfg else None,
        "seed": cfg.seed,
        "mode": mode,
    }


def save_diagonal(path, D: DiagonalCorrection) -> None:
    p = D.params
    header = ("simrank-diag v1 n={n} c={c} T={T} L={L} R={R} "
              "mode={mode} seed={seed}").format(
        n=len(D.values), c=p.get("c"), T=p.get("T"), L=p.get("L"),
        R=p.get("R"), mode=p.get("mode"), seed=p.get("seed"))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for v in D.values:
            fh.write(f"{v:.17g}\n")


def load_diagonal(path) -> DiagonalCorrection:
    with open(path) as fh:
        header = fh.readline().strip()
        fields = header.split()
        if fields[:2] != ["simrank-diag", "v1"]:
            raise ValueError(f"not a diagonal file: header {header!r}")
        params = {}
        for item in fields[2:]:
            key, _, raw = item.partition("=")
            params[key] = raw
        n = int(params.pop("n"))
        values = np.array([float(fh.readline()) for _ in range(n)])
    typed = {}
    for key, raw in params.items():
        if raw == "None":
            typed[key] = None
        elif key in ("T", "L", "R", "seed"):
            typed[key] = int(raw)
        elif key == "c":
            typed[key] = float(raw)
        else:
            typed[key] = raw
    return DiagonalCorrection(values, params=typed)
