"""Discrete-prior efficient frontier and the KMM weight fixed point.

For a weight vector lambda (lambda_i >= 0, sum lambda_i p_i = 1) the
scalarised problem max sum lambda_i p_i E^{Q^mu_i}[U(X_T)] is a classical
complete-market problem under the mixture density sum lambda_i p_i eta^mu_i.
Its solution is X_T = I(kappa eta_T / mixture) with kappa fixed by the budget.
All expectations are taken over w ~ N(0, T) by Gauss-Hermite quadrature.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ambiguity import DiscreteSOD, PowerAmbiguity
from .errors import FixedPointError, QuadratureError, ValidationError
from .market import MarketParams, log_girsanov_density
from .numerics import DEFAULT_NODES, _gh_rule, expand_bracket, find_root_monotone, gauss_hermite
from .utility import distortion

KAPPA_TOL = 1e-12
BUDGET_DOUBLING_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class WeightVector:
    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        if np.any(~(lam >= 0)):
            raise ValidationError("weights must be nonnegative")

    @classmethod
    def normalized(cls, lam, sod: DiscreteSOD) -> "WeightVector":
        lam = np.asarray(lam, dtype=float)
        total = float(np.dot(lam, sod.probs))
        if not total > 0:
            raise ValidationError("weights have zero mass")
        return cls(lam / total)

    @classmethod
    def from_shares(cls, shares, sod: DiscreteSOD) -> "WeightVector":
        """lambda_i = s_i / p_i for shares s on the unit simplex."""
        return cls.normalized(np.asarray(shares, dtype=float) / np.asarray(sod.probs), sod)

    def check(self, sod: DiscreteSOD, tol=1e-12):
        if len(self.lam) != sod.size:
            raise ValidationError("weight vector does not match the SOD")
        if abs(float(np.dot(self.lam, sod.probs)) - 1.0) > tol:
            raise ValidationError("weights must satisfy sum(lambda_i p_i) = 1")
        return self

    def __repr__(self):
        return f"WeightVector({np.array2string(self.lam, precision=6)})"


@dataclass(frozen=True, eq=False)
class FrontierPoint:
    weights: WeightVector
    b: np.ndarray  # E^{Q^mu_i}[U(X_T)] per prior
    J: float
    kappa: float
    budget: float  # E^Q[X_T], should equal x e^{rT}


def _log_mixture(lam, sod, mp, w, t):
    probs = np.asarray(sod.probs)
    active = lam > 0
    logs = np.log(lam[active] * probs[active])[:, None] + log_girsanov_density(
        sod.nus(mp)[active][:, None], w[None, :], t
    )
    top = logs.max(axis=0)
    return top + np.log(np.exp(logs - top).sum(axis=0))


def mixture_density(weights: WeightVector, sod: DiscreteSOD, mp: MarketParams, w, t):
    """sum_i lambda_i p_i eta^{mu_i}_t(w)."""
    weights.check(sod)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    out = np.exp(_log_mixture(weights.lam, sod, mp, w, t))
    return float(out[0]) if np.ndim(out) and out.size == 1 else out


class _Grid:
    def __init__(self, sod, mp, weights, n):
        grid = _gh_rule(n)
        self.weights = grid.weights
        self.w = math.sqrt(mp.T) * grid.nodes
        self.log_eta = log_girsanov_density(mp.nu, self.w, mp.T)
        self.eta = np.exp(self.log_eta)
        self.eta_i = np.exp(log_girsanov_density(sod.nus(mp)[:, None], self.w[None, :], mp.T))
        self.log_ratio = self.log_eta - _log_mixture(weights.lam, sod, mp, self.w, mp.T)

    def budget(self, utility, log_kappa):
        return float(self.weights @ (utility.I_from_log(log_kappa + self.log_ratio) * self.eta))


def solve_weighted_eut(
    weights: WeightVector,
    sod: DiscreteSOD,
    mp: MarketParams,
    utility,
    x: float | None = None,
    n: int = DEFAULT_NODES,
) -> FrontierPoint:
    """Frontier point for ``weights``: optimal X_T and its per-prior expected utilities."""
    weights.check(sod)
    gauss_hermite(n)
    x = mp.x0 if x is None else float(x)
    target = x * math.exp(mp.r * mp.T)
    grid = _Grid(sod, mp, weights, n)

    def excess(s):
        return grid.budget(utility, s) - target

    lo, hi = expand_bracket(excess, 0.0, 1.0, max_doublings=12)
    s = find_root_monotone(excess, lo, hi, KAPPA_TOL)

    fine = _Grid(sod, mp, weights, 2 * n)
    coarse_budget, fine_budget = grid.budget(utility, s), fine.budget(utility, s)
    if abs(fine_budget - coarse_budget) > BUDGET_DOUBLING_TOL * abs(fine_budget):
        raise QuadratureError(
            f"quadrature not converged for budget: {coarse_budget!r} vs {fine_budget!r}"
        )
    u = utility.U_of_I_from_log(s + grid.log_ratio)
    b = grid.eta_i @ (grid.weights * u)
    J = float(np.dot(weights.lam * np.asarray(sod.probs), b))
    return FrontierPoint(weights, b, J, math.exp(s), coarse_budget)


def simplex_shares(grid_size: int, k: int) -> list:
    """Uniform grid on the k-simplex with ``grid_size`` points per edge."""
    if grid_size < 2:
        raise ValidationError("grid_size must be >= 2")
    m = grid_size - 1
    out = []
    for combo in itertools.product(range(m + 1), repeat=k - 1):
        if sum(combo) <= m:
            out.append(tuple(c / m for c in combo) + ((m - sum(combo)) / m,))
    return out


def trace_frontier(grid_size: int, sod: DiscreteSOD, mp: MarketParams, utility, x=None, n=DEFAULT_NODES) -> list:
    points = [
        solve_weighted_eut(WeightVector.from_shares(s, sod), sod, mp, utility, x, n)
        for s in simplex_shares(grid_size, sod.size)
    ]
    points.sort(key=lambda pt: tuple(pt.weights.lam))
    return points


def undominated(points: Sequence[FrontierPoint], slack: float = 1e-6) -> list:
    """Indices of points that no other point beats in every coordinate by more than ``slack``."""
    keep = []
    for i, pi in enumerate(points):
        beaten = any(
            np.all(pj.b >= pi.b - slack) and np.any(pj.b > pi.b + slack)
            for j, pj in enumerate(points)
            if j != i
        )
        if not beaten:
            keep.append(i)
    return keep


def kmm_objective(pa: PowerAmbiguity, sod: DiscreteSOD, b) -> float:
    """Phi = sum_i p_i phi(b_i)."""
    return float(np.dot(sod.probs, pa.phi(np.asarray(b, dtype=float))))


def _target_weights(pa, sod, b):
    g = np.asarray(pa.phi_prime(b), dtype=float)
    return g / float(np.dot(g, sod.probs))


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    weights: WeightVector
    point: FrontierPoint
    phi_value: float
    residual: float
    iterations: int

    def __iter__(self):
        return iter((self.weights, self.point, self.phi_value))


def fixed_point_lambda(
    pa: PowerAmbiguity,
    sod: DiscreteSOD,
    mp: MarketParams,
    utility,
    x=None,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 500,
    start=None,
    n: int = DEFAULT_NODES,
) -> FixedPointResult:
    """Damped iteration lambda <- (1-d) lambda + d phi'(b(lambda)) / <phi'(b), 1>."""
    if not 0 < damping <= 1:
        raise ValidationError("damping must lie in (0, 1]")
    if pa.branch != utility.branch:
        raise ValidationError(f"ambiguity branch {pa.branch!r} does not match utility sign")
    lam = np.ones(sod.size) if start is None else np.asarray(start, dtype=float)
    weights = WeightVector.normalized(lam, sod)
    residual = math.inf
    for it in range(1, max_iter + 1):
        point = solve_weighted_eut(weights, sod, mp, utility, x, n)
        target = _target_weights(pa, sod, point.b)
        residual = float(np.max(np.abs(weights.lam - target)))
        if residual < tol:
            return FixedPointResult(weights, point, kmm_objective(pa, sod, point.b), residual, it)
        weights = WeightVector.normalized((1 - damping) * weights.lam + damping * target, sod)
    raise FixedPointError(
        f"fixed point not converged after {max_iter} iterations (residual {residual:.3e})",
        residual=residual,
        iterations=max_iter,
    )


def fixed_point_restarts(
    pa: PowerAmbiguity,
    sod: DiscreteSOD,
    mp: MarketParams,
    utility,
    n_starts: int,
    seed: int,
    distinct_tol: float = 1e-6,
    **kwargs,
) -> list:
    """Run the iteration from the uniform start plus ``n_starts`` random ones.

    Returns every distinct converged point; more than one means the fixed
    point is not unique for this instance. Starts that fail to converge are
    dropped.
    """
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    starts = [None] + [WeightVector.from_shares(rng.dirichlet(np.ones(sod.size)), sod).lam for _ in range(n_starts)]
    found = []
    for start in starts:
        try:
            res = fixed_point_lambda(pa, sod, mp, utility, start=start, **kwargs)
        except FixedPointError:
            continue
        if all(np.max(np.abs(res.weights.lam - f.weights.lam)) > distinct_tol for f in found):
            found.append(res)
    return found


@dataclass(frozen=True, eq=False)
class SeparabilityReport:
    defect: float  # max rank-one cross-ratio defect of J(x, lambda)
    distortion_error: float  # max |J(x, lambda)/rho(lambda) - U(x e^{rT})|
    J: np.ndarray  # shape (len(xs), len(lambdas))
    rho: np.ndarray

    def __iter__(self):
        return iter((self.defect, self.distortion_error))


def rho_hat(weights: WeightVector, sod, mp, utility, n=DEFAULT_NODES) -> float:
    """J(1, lambda) / U(e^{rT})."""
    J1 = solve_weighted_eut(weights, sod, mp, utility, 1.0, n).J
    return J1 / float(distortion(utility, 1.0, mp))


def separability_check(utility, mp, sod, xs, lambdas, n=DEFAULT_NODES) -> SeparabilityReport:
    """Check J(x, lambda) = h(x) rho(lambda) with h(x) = U(x e^{rT})."""
    xs = [float(v) for v in xs]
    J = np.array([[solve_weighted_eut(lam, sod, mp, utility, x, n).J for lam in lambdas] for x in xs])
    defect = 0.0
    for i, k in itertools.combinations(range(len(xs)), 2):
        for j, l in itertools.combinations(range(len(lambdas)), 2):
            num = abs(J[i, j] * J[k, l] - J[i, l] * J[k, j])
            defect = max(defect, num / abs(J[i, j] * J[k, l]))
    rho = np.array([rho_hat(lam, sod, mp, utility, n) for lam in lambdas])
    h = np.asarray(distortion(utility, np.array(xs), mp))
    err = float(np.max(np.abs(J / rho[None, :] - h[:, None])))
    return SeparabilityReport(defect, err, J, rho)
