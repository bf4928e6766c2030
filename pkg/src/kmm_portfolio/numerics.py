"""Quadrature, Gaussian moment identities, root finding and path simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DivergentIntegralError,
    NotBracketedError,
    PathBlowUpError,
    QuadratureError,
    ValidationError,
)

DEFAULT_NODES = 128
DEFAULT_DOUBLING_TOL = 1e-10
MAX_NODES = 512


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Probabilists' Gauss-Hermite rule: sum(weights * f(nodes)) ~ E[f(Z)]."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def expect(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=None)
def _gh_rule(n: int) -> QuadratureGrid:
    if n <= 300:
        x, w = np.polynomial.hermite_e.hermegauss(n)
    else:
        # numpy's recurrence overflows past ~350 nodes; Golub-Welsch instead
        k = np.sqrt(np.arange(1.0, n))
        x, vecs = np.linalg.eigh(np.diag(k, 1) + np.diag(k, -1))
        w = vecs[0] ** 2
    # enforce exact symmetry about zero
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    w = w / math.fsum(w)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureGrid(x, w)


def gauss_hermite(n: int = DEFAULT_NODES) -> QuadratureGrid:
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= MAX_NODES):
        raise ValidationError(f"node count must be an integer in [1, {MAX_NODES}], got {n!r}")
    return _gh_rule(int(n))


def _apply(f, grid: QuadratureGrid):
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(f(grid.nodes), dtype=float)
    vals = np.broadcast_to(vals, grid.nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise DivergentIntegralError("integrand not finite on quadrature nodes")
    return vals


def expect_standard_normal(
    f: Callable[[np.ndarray], np.ndarray],
    n: int = DEFAULT_NODES,
    doubling_tol: float | None = DEFAULT_DOUBLING_TOL,
) -> float:
    """E[f(Z)] for Z ~ N(0,1); ``f`` is called once on the whole node array.

    With ``doubling_tol`` set, the sum is recomputed on 2n nodes and a
    relative change above the tolerance raises ``QuadratureError``. The scale
    of the change is measured against E|f(Z)| so odd integrands are handled.
    """
    grid = gauss_hermite(n)
    vals = _apply(f, grid)
    value = grid.expect(vals)
    if doubling_tol is None:
        return value
    fine = _gh_rule(2 * int(n))
    fvals = _apply(f, fine)
    fine_value = fine.expect(fvals)
    scale = max(fine.expect(np.abs(fvals)), np.finfo(float).tiny)
    change = abs(fine_value - value) / scale
    if not change <= doubling_tol:
        raise QuadratureError(
            f"quadrature not converged: relative change {change:.3e} between "
            f"{n} and {2 * n} nodes exceeds {doubling_tol:.1e}"
        )
    return value


def expect_normal(f, mean=0.0, var=1.0, n=DEFAULT_NODES, doubling_tol=DEFAULT_DOUBLING_TOL):
    """E[f(X)] for X ~ N(mean, var)."""
    s = math.sqrt(var)
    return expect_standard_normal(lambda z: f(mean + s * z), n, doubling_tol)


def log_gaussian_exp_quadratic(a, b, c0, m, s2):
    """log E[exp(a X^2 + b X + c0)] for X ~ N(m, s2)."""
    a, b, c0, m, s2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c0, m, s2)))
    k = 1.0 - 2.0 * a * s2
    if np.any(~(k > 0)):
        raise DivergentIntegralError("exp-quadratic moment divergent: 2*a*s2 >= 1")
    out = -0.5 * np.log(k) + c0 + a * m * m + b * m + s2 * (b + 2.0 * a * m) ** 2 / (2.0 * k)
    return float(out) if out.ndim == 0 else out


def gaussian_exp_quadratic(a, b, c0, m, s2):
    """E[exp(a X^2 + b X + c0)] for X ~ N(m, s2), in closed form."""
    return np.exp(log_gaussian_exp_quadratic(a, b, c0, m, s2))


def gaussian_quadratic_mean(a, b, c0, m, s2):
    """E[a X^2 + b X + c0] for X ~ N(m, s2)."""
    return a * (np.square(m) + s2) + b * np.asarray(m) + c0


def find_root_monotone(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bisection for a monotone ``f`` with a sign change on [lo, hi]."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if not (flo * fhi < 0):
        raise NotBracketedError(f"not bracketed: f({lo})={flo}, f({hi})={fhi}")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)):
            return mid
        fmid = f(mid)
        if fmid == 0:
            return mid
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expand_bracket(f, center=0.0, width=1.0, max_doublings=12):
    """Grow [center-width, center+width] until ``f`` changes sign."""
    for _ in range(max_doublings + 1):
        lo, hi = center - width, center + width
        if f(lo) * f(hi) <= 0:
            return lo, hi
        width *= 2.0
    raise NotBracketedError("kappa not bracketed after expansion")


# ---------------------------------------------------------------------------
# simulation

REFERENCE = "reference"
RISK_NEUTRAL = "risk_neutral"
PRIOR = "prior"


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 1000
    n_steps: int = 256
    seed: int = 20240611
    measure: str = REFERENCE
    mu: float | None = None  # prior drift, for measure == "prior"

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValidationError("n_paths must be >= 1")
        if self.n_steps < 1 or self.n_steps & (self.n_steps - 1):
            raise ValidationError("n_steps must be a power of two")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        if self.measure not in (REFERENCE, RISK_NEUTRAL, PRIOR):
            raise ValidationError(f"unknown measure {self.measure!r}")
        if self.measure == PRIOR and self.mu is None:
            raise ValidationError("prior measure needs mu")


def path_normals(seed: int, n_paths: int, count: int) -> np.ndarray:
    """First ``count`` standard normals of each per-path stream.

    Each path owns a Philox stream keyed by (seed, path index), so the draws
    of a path do not depend on how many other paths are simulated.
    """
    out = np.empty((n_paths, count))
    for i in range(n_paths):
        bitgen = np.random.Philox(key=np.array([seed, i], dtype=np.uint64))
        out[i] = np.random.Generator(bitgen).standard_normal(count)
    return out


def dyadic_brownian(normals: np.ndarray, T: float, n_steps: int) -> np.ndarray:
    """Standard Brownian paths on a grid of ``n_steps`` (power of two) intervals.

    Levy midpoint construction: the first 2^k normals of a row fix the path at
    resolution 2^k, so coarser grids are exact subsamples of finer ones.
    """
    n_paths = normals.shape[0]
    W = np.zeros((n_paths, n_steps + 1))
    W[:, n_steps] = math.sqrt(T) * normals[:, 0]
    used = 1
    h = n_steps
    level = 1
    while h > 1:
        half = h // 2
        mids = np.arange(half, n_steps, h)
        sd = math.sqrt(T / 2 ** (level + 1))
        W[:, mids] = 0.5 * (W[:, mids - half] + W[:, mids + half]) + sd * normals[:, used:used + len(mids)]
        used += len(mids)
        h = half
        level += 1
    return W


def reference_brownian(cfg: SimConfig, mp, n_steps: int | None = None) -> np.ndarray:
    """Paths of the reference Brownian motion under the measure named in ``cfg``.

    The same normals serve every measure; the measure only adds a drift.
    """
    n = cfg.n_steps if n_steps is None else n_steps
    B = dyadic_brownian(path_normals(cfg.seed, cfg.n_paths, n), mp.T, n)
    theta = _measure_drift(cfg, mp)
    if theta:
        B = B + theta * np.linspace(0.0, mp.T, n + 1)
    return B


def _measure_drift(cfg: SimConfig, mp) -> float:
    if cfg.measure == REFERENCE:
        return 0.0
    if cfg.measure == RISK_NEUTRAL:
        return -(mp.mu0 - mp.r) / mp.sigma
    return -(mp.mu0 - cfg.mu) / mp.sigma


def euler_terminal_wealth(sol, W: np.ndarray) -> np.ndarray:
    """Euler-Maruyama for the discounted wealth e^{-rt} X_t along paths ``W``.

    The risk-free part is integrated exactly, so a zero position grows to
    x e^{rT} without discretisation error.
    """
    mp = sol.mp
    n_paths, n1 = W.shape
    n = n1 - 1
    dt = mp.T / n
    Y = np.full(n_paths, mp.x0)
    excess = mp.mu0 - mp.r
    for k in range(n):
        t = k * dt
        disc = math.exp(-mp.r * t)
        X = Y / disc
        pi = sol.strategy_feedback(W[:, k], t, X)
        Y = Y + disc * pi * (excess * dt + mp.sigma * (W[:, k + 1] - W[:, k]))
    X_T = math.exp(mp.r * mp.T) * Y
    bad = np.flatnonzero(~np.isfinite(X_T))
    if bad.size:
        raise PathBlowUpError(f"path blow-up on path {bad[0]}", path_index=int(bad[0]))
    return X_T


@dataclass(frozen=True)
class ReplicationResult:
    max_pathwise_error: float
    mean_error: float
    slope_estimate: float
    max_error_refined: float
    mean_error_refined: float
    n_steps: int


def simulate_replication(sol, cfg: SimConfig) -> ReplicationResult:
    """Replicate ``sol.terminal_wealth(W_T)`` by trading ``sol.strategy_feedback``.

    Runs at ``cfg.n_steps`` and ``2 * cfg.n_steps`` on the same Brownian paths;
    ``slope_estimate`` is log2 of the ratio of the two mean absolute errors
    (the strong error); max errors are reported but are tail-noisy.
    """
    sol.check_feedback_regular()
    W = reference_brownian(cfg, sol.mp, 2 * cfg.n_steps)
    target = sol.terminal_wealth(W[:, -1])
    err_fine = np.abs(euler_terminal_wealth(sol, W) - target)
    err = np.abs(euler_terminal_wealth(sol, W[:, ::2]) - target)
    mn, mnf = float(err.mean()), float(err_fine.mean())
    slope = math.log2(mn / mnf) if mnf > 0 and mn > 0 else float("nan")
    return ReplicationResult(float(err.max()), mn, slope, float(err_fine.max()), mnf, cfg.n_steps)


@dataclass(frozen=True)
class ConvergenceStudy:
    step_counts: tuple
    max_errors: tuple
    mean_errors: tuple
    slope: float  # least-squares slope of -log2(mean error) on log2(steps)
    max_slope: float


def convergence_study(sol, cfg: SimConfig, step_counts: Sequence[int]) -> ConvergenceStudy:
    """Strong-error study over several power-of-two step counts on shared paths."""
    sol.check_feedback_regular()
    counts = sorted(int(n) for n in step_counts)
    finest = counts[-1]
    SimConfig(cfg.n_paths, finest, cfg.seed, cfg.measure, cfg.mu)  # validates
    W = reference_brownian(cfg, sol.mp, finest)
    target = sol.terminal_wealth(W[:, -1])
    mx, mn = [], []
    for n in counts:
        e = np.abs(euler_terminal_wealth(sol, W[:, :: finest // n]) - target)
        mx.append(float(e.max()))
        mn.append(float(e.mean()))
    x = np.log2(counts)
    slope = -float(np.polyfit(x, np.log2(mn), 1)[0]) if len(counts) > 1 else float("nan")
    max_slope = -float(np.polyfit(x, np.log2(mx), 1)[0]) if len(counts) > 1 else float("nan")
    return ConvergenceStudy(tuple(counts), tuple(mx), tuple(mn), slope, max_slope)


@dataclass(frozen=True)
class RiskFreeControl:
    """Zero risky position; terminal wealth x e^{rT} on every path."""

    mp: object

    def check_feedback_regular(self):
        return None

    def strategy_feedback(self, w, t, x_t):
        return np.zeros_like(np.asarray(x_t, dtype=float))

    def terminal_wealth(self, w):
        return np.full_like(np.asarray(w, dtype=float), self.mp.x0 * math.exp(self.mp.r * self.mp.T))
