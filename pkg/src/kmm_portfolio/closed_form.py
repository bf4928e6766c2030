"""Closed-form KMM solutions under a Gaussian second-order distribution.

Optimal terminal wealth is quadratic in the terminal reference Brownian value
``w`` (CARA) or log-quadratic (CRRA/HARA):

    CARA:  X_T = (p w^2 / (2T) + q w + c) / alpha
    HARA:  X_T = exp((p w^2 / (2T) + q w + c) / beta) - a

The coefficients come from matching the first-order condition of the KMM
criterion (p, q) and from the budget constraint E^Q[X_T] = x e^{rT} (c).
Interim wealth is the risk-neutral conditional expectation, evaluated with
the Gaussian exp-quadratic identity; the trading strategy is its derivative
in ``w`` divided by sigma.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .ambiguity import GaussianSOD, PowerAmbiguity, sigma0_sq
from .errors import (
    AdmissibilityWarning,
    DivergentIntegralError,
    InvalidSolutionError,
    NoRealRootError,
    QuadratureError,
    SingularFeedbackError,
    ValidationError,
)
from .market import MarketParams, log_girsanov_density
from .numerics import (
    DEFAULT_DOUBLING_TOL,
    DEFAULT_NODES,
    expect_standard_normal,
    gauss_hermite,
    gaussian_quadratic_mean,
    log_gaussian_exp_quadratic,
)
from .utility import CARA, HARA, distortion

VALUE_DOUBLING_TOL = 1e-8


def crra_quadratic(p, s0sq, beta, gamma):
    return (gamma + s0sq) * p * p - (s0sq + 1.0 / (1.0 - beta)) * p + beta / (1.0 - beta)


def cara_quadratic(p, s0sq, gamma):
    return (gamma + s0sq) * p * p + s0sq * p - 1.0


def crra_p(s0sq: float, beta: float, gamma: float) -> float:
    """Smaller root of the CRRA/HARA quadratic, in cancellation-free form."""
    A = gamma + s0sq
    B = s0sq + 1.0 / (1.0 - beta)
    C = beta / (1.0 - beta)
    disc = B * B - 4.0 * A * C
    if disc < 0:
        raise NoRealRootError(f"no real root: discriminant {disc:.3e} < 0")
    return 2.0 * C / (B + math.sqrt(disc))


def cara_p(s0sq: float, gamma: float) -> float:
    if gamma + s0sq <= 0:
        raise ValidationError("CARA needs gamma + sigma0^2 > 0")
    disc = s0sq * s0sq + 4.0 * s0sq + 4.0 * gamma
    if disc < 0:
        raise NoRealRootError(f"no real root: discriminant {disc:.3e} < 0")
    return 2.0 / (s0sq + math.sqrt(disc))


@dataclass(frozen=True)
class ClosedFormSolution:
    family: object  # CARA or HARA
    gamma: float
    p: float
    q: float
    c: float
    mp: MarketParams
    sod: GaussianSOD
    neutral: bool = False  # True for the ambiguity-neutral (Merton) strategy

    @property
    def is_cara(self) -> bool:
        return isinstance(self.family, CARA)

    @property
    def scale(self) -> float:
        """alpha (CARA) or beta (CRRA/HARA): divides the quadratic form."""
        return self.family.alpha if self.is_cara else self.family.beta

    @property
    def shift(self) -> float:
        return 0.0 if self.is_cara else self.family.a

    @property
    def ambiguity(self) -> PowerAmbiguity:
        return PowerAmbiguity(self.gamma, self.family.branch)

    @property
    def w2_coefficient(self) -> float:
        """Coefficient of w^2 in X_T (CARA) or log(X_T + a) (HARA)."""
        return self.p / (2.0 * self.mp.T * self.scale)

    @property
    def w_coefficient(self) -> float:
        return self.q / self.scale

    @property
    def s0sq(self) -> float:
        return math.inf if self.sod.degenerate else sigma0_sq(self.sod, self.mp)

    def quadratic_residual(self) -> float:
        if self.neutral:
            return 0.0
        if self.is_cara:
            return cara_quadratic(self.p, self.s0sq, self.gamma)
        return crra_quadratic(self.p, self.s0sq, self.family.beta, self.gamma)

    def distortion(self, x):
        """h(x) = U(x e^{rT})."""
        return distortion(self.family, x, self.mp)

    # --- terminal and interim wealth -------------------------------------

    def _form(self, w):
        w = np.asarray(w, dtype=float)
        return self.p / (2.0 * self.mp.T) * w * w + self.q * w + self.c

    def terminal_wealth(self, w):
        if self.is_cara:
            out = self._form(w) / self.scale
        else:
            out = np.exp(self._form(w) / self.scale) - self.shift
        return _scalar(out)

    def check_feedback_regular(self):
        if not self.is_cara and self.p / self.family.beta >= 1.0:
            raise SingularFeedbackError(
                f"feedback map singular: p={self.p:.6g} >= beta={self.family.beta:.6g}"
            )

    def wealth_feedback(self, w, t):
        """X_t = E^Q[e^{-r(T-t)} X_T | W_t = w]; under Q, W_T | w ~ N(w - nu tau, tau)."""
        mp = self.mp
        if not 0.0 <= t <= mp.T:
            raise ValidationError("t must lie in [0, T]")
        tau = mp.T - t
        m = np.asarray(w, dtype=float) - mp.nu * tau
        disc = math.exp(-mp.r * tau)
        a2 = self.p / (2.0 * mp.T * self.scale)
        b1 = self.q / self.scale
        c0 = self.c / self.scale
        if self.is_cara:
            return _scalar(disc * gaussian_quadratic_mean(a2, b1, c0, m, tau))
        self.check_feedback_regular()
        log_mean = log_gaussian_exp_quadratic(a2, b1, c0, m, tau)
        return _scalar(disc * (np.exp(log_mean) - self.shift))

    def strategy_feedback(self, w, t, x_t):
        """Money held in the risky asset at state (w, t) with current wealth x_t."""
        mp = self.mp
        tau = mp.T - t
        w = np.asarray(w, dtype=float)
        x_t = np.asarray(x_t, dtype=float)
        if self.is_cara:
            disc = math.exp(-mp.r * tau)
            direct = disc * (self.p * (w - mp.nu * tau) / mp.T + self.q) / (self.scale * mp.sigma)
            # off the optimal path, the surplus x_t - X_t is held at the Merton fraction
            return _scalar(direct + mp.nu / mp.sigma * (x_t - self.wealth_feedback(w, t)))
        self.check_feedback_regular()
        beta = self.family.beta
        slope = (self.p * w + mp.T * self.q - tau * self.p * mp.nu) / (beta * mp.T - tau * self.p)
        cushion = x_t + self.shift * math.exp(-mp.r * tau)
        return _scalar(slope * cushion / mp.sigma)

    def initial_position(self) -> float:
        """pi_0 at w = 0 with the initial wealth."""
        return float(self.strategy_feedback(0.0, 0.0, self.mp.x0))

    # --- expected utilities ---------------------------------------------

    def expected_utility_given_mu(self, nu_mu):
        """E^{Q^mu}[U(X_T)] for the prior with deviation nu_mu = (mu0 - mu)/sigma."""
        T, p, q, c = self.mp.T, self.p, self.q, self.c
        nm = np.asarray(nu_mu, dtype=float)
        if self.is_cara:
            if not p > -1:
                raise InvalidSolutionError("CARA expected utility needs p > -1")
            e = -p * T / (2 * (p + 1)) * nm**2 + q * T / (p + 1) * nm + q * q * T / (2 * (p + 1)) - c
            return _scalar(-np.exp(e) / (self.scale * math.sqrt(1 + p)))
        if not p < 1:
            raise InvalidSolutionError("solution invalid: p >= 1")
        e = p * T / (2 * (1 - p)) * nm**2 - q * T / (1 - p) * nm + q * q * T / (2 * (1 - p)) + c
        return _scalar(np.exp(e) / (self.scale * math.sqrt(1 - p)))

    def expected_utility_at_mu(self, mu):
        return self.expected_utility_given_mu((self.mp.mu0 - np.asarray(mu, dtype=float)) / self.mp.sigma)

    def value_function(self, sod: GaussianSOD | None = None, n: int = DEFAULT_NODES) -> float:
        """Integral of phi(E^{Q^mu}[U]) over mu ~ sod (defaults to the solution's own)."""
        sod = self.sod if sod is None else sod
        pa = self.ambiguity
        if sod.degenerate:
            return float(pa.phi(self.expected_utility_given_mu(0.0)))
        scale = sod.sigma_mu / self.mp.sigma
        shift = (self.mp.mu0 - sod.center) / self.mp.sigma

        def integrand(z):
            return pa.phi(self.expected_utility_given_mu(shift + scale * z))

        try:
            return expect_standard_normal(integrand, n, VALUE_DOUBLING_TOL)
        except QuadratureError as exc:
            raise DivergentIntegralError(f"SOD integral divergent ({exc})") from exc

    def foc_ratio(self, w, n: int = DEFAULT_NODES):
        """U'(X_T(w)) * int phi'(E^{Q^mu}[U]) eta^mu_T(w) dF(mu) / eta_T(w).

        Constant in w exactly when X_T satisfies the first-order condition.
        """
        mp = self.mp
        w = np.atleast_1d(np.asarray(w, dtype=float))
        pa = self.ambiguity
        scale = self.sod.sigma_mu / mp.sigma

        def inner(z):
            nm = scale * z[:, None]
            dens = np.exp(log_girsanov_density(nm, w[None, :], mp.T))
            return pa.phi_prime(self.expected_utility_given_mu(nm)) * dens

        grid = gauss_hermite(n)
        # far-tail priors can overflow E[U]; phi' -> 0 there, the right limit
        with np.errstate(over="ignore"):
            mix = grid.weights @ inner(grid.nodes)
        up = self.family.U_prime(self.terminal_wealth(w))
        return up * mix / np.exp(log_girsanov_density(mp.nu, w, mp.T))


def _gaussian_inputs(mp, sod, x):
    if x is not None:
        mp = replace(mp, x0=float(x))
    if not math.isclose(sod.center, mp.mu0, rel_tol=0, abs_tol=1e-15):
        raise ValidationError("Gaussian SOD must be centred at mu0")
    return mp


def solve_cara(mp: MarketParams, sod: GaussianSOD, gamma: float, alpha: float, x=None) -> ClosedFormSolution:
    mp = _gaussian_inputs(mp, sod, x)
    family = CARA(alpha)
    PowerAmbiguity(gamma, family.branch)
    if sod.degenerate:
        return merton_solution(mp, family, gamma, sod)
    s0 = sigma0_sq(sod, mp)
    p = cara_p(s0, gamma)
    nu, T = mp.nu, mp.T
    if 1 + gamma * p <= 0:
        raise InvalidSolutionError("solution invalid: 1 + gamma p <= 0")
    q = (1 + p) / (1 + gamma * p) * nu
    c = alpha * mp.x0 * math.exp(mp.r * T) - p / 2 + (1 + p / 2 - gamma * p * p / 2) / (1 + gamma * p) * nu * nu * T
    sol = ClosedFormSolution(family, gamma, p, q, c, mp, sod)
    if p > 0:
        floor = c - q * q * T / (2 * p)
        if floor < 0:
            warnings.warn(
                f"admissibility: nonnegativity may fail (min terminal wealth {floor / alpha:.4g})",
                AdmissibilityWarning,
                stacklevel=2,
            )
    return sol


def _hara_c(mp, beta, a, p, q):
    nu, T = mp.nu, mp.T
    k = p / beta
    effective = mp.x0 + a * math.exp(-mp.r * T)
    if not effective > 0:
        raise ValidationError("effective wealth x + a e^{-rT} must be positive")
    drift = (nu * nu - (nu - q / beta) ** 2 / (1 - k)) * T / 2
    return beta * (math.log(effective) + mp.r * T + drift + 0.5 * math.log(1 - k))


def solve_hara(mp: MarketParams, sod: GaussianSOD, gamma: float, beta: float, a: float = 0.0, x=None) -> ClosedFormSolution:
    mp = _gaussian_inputs(mp, sod, x)
    family = HARA(beta, a)
    PowerAmbiguity(gamma, family.branch)
    if sod.degenerate:
        return merton_solution(mp, family, gamma, sod)
    s0 = sigma0_sq(sod, mp)
    p = crra_p(s0, beta, gamma)
    if p >= 1:
        raise InvalidSolutionError(f"solution invalid: p={p:.6g} >= 1")
    if p / beta >= 1:
        raise SingularFeedbackError(f"feedback map singular: p={p:.6g} >= beta={beta:.6g}")
    if 1 - gamma * p <= 0:
        raise InvalidSolutionError("solution invalid: 1 - gamma p <= 0")
    q = beta * (1 - p) / ((1 - beta) * (1 - gamma * p)) * mp.nu
    c = _hara_c(mp, beta, a, p, q)
    return ClosedFormSolution(family, gamma, p, q, c, mp, sod)


def solve_crra(mp: MarketParams, sod: GaussianSOD, gamma: float, beta: float, x=None) -> ClosedFormSolution:
    return solve_hara(mp, sod, gamma, beta, 0.0, x)


def solve(mp, sod, gamma, family) -> ClosedFormSolution:
    if isinstance(family, CARA):
        return solve_cara(mp, sod, gamma, family.alpha)
    return solve_hara(mp, sod, gamma, family.beta, family.a)


@dataclass(frozen=True)
class MertonBaseline:
    """Ambiguity-neutral optimum: terminal wealth (CARA) or log-cushion (HARA)
    affine in w with the given slope and constant."""

    family: object
    slope: float
    constant: float
    fraction: float | None  # of the cushion X_t + a e^{-r(T-t)}; None for CARA
    initial_position: float


def merton_baseline(mp: MarketParams, family, x=None) -> MertonBaseline:
    if x is not None:
        mp = replace(mp, x0=float(x))
    nu, T, r = mp.nu, mp.T, mp.r
    if isinstance(family, CARA):
        slope = nu / family.alpha
        const = mp.x0 * math.exp(r * T) + nu * nu * T / family.alpha
        pi0 = math.exp(-r * T) * nu / (family.alpha * mp.sigma)
        return MertonBaseline(family, slope, const, None, pi0)
    k = nu / (1 - family.beta)
    cushion = mp.x0 + family.a * math.exp(-r * T)
    const = math.log(cushion) + r * T + k * nu * T - k * k * T / 2
    frac = nu / (mp.sigma * (1 - family.beta))
    return MertonBaseline(family, k, const, frac, frac * cushion)


def merton_solution(mp: MarketParams, family, gamma: float, sod: GaussianSOD) -> ClosedFormSolution:
    """The Merton strategy in (p, q, c) form (p = 0), carrying the DM's phi and SOD
    so it can be scored under the KMM criterion."""
    nu, T, r = mp.nu, mp.T, mp.r
    if isinstance(family, CARA):
        q = nu
        c = family.alpha * mp.x0 * math.exp(r * T) + nu * nu * T
    else:
        beta = family.beta
        q = beta * nu / (1 - beta)
        c = _hara_c(mp, beta, family.a, 0.0, q)
    return ClosedFormSolution(family, gamma, 0.0, q, c, mp, sod, neutral=True)


# functional aliases

def terminal_wealth(sol: ClosedFormSolution, w):
    return sol.terminal_wealth(w)


def expected_utility_given_mu(sol: ClosedFormSolution, nu_mu):
    return sol.expected_utility_given_mu(nu_mu)


def wealth_feedback(sol: ClosedFormSolution, w, t):
    return sol.wealth_feedback(w, t)


def strategy_feedback(sol: ClosedFormSolution, w, t, x_t):
    return sol.strategy_feedback(w, t, x_t)


def value_function(sol: ClosedFormSolution, sod: GaussianSOD | None = None, n: int = DEFAULT_NODES) -> float:
    return sol.value_function(sod, n)


def budget_value(sol: ClosedFormSolution, n: int = DEFAULT_NODES, doubling_tol=DEFAULT_DOUBLING_TOL) -> float:
    """E^Q[X_T] by Gauss-Hermite; should equal x e^{rT}.

    The rule is centred and scaled on the Gaussian that the exponential part
    of the integrand is proportional to, variance T/(1 - p/beta). On N(0, T)
    itself the rule loses accuracy as p/beta -> 1.
    """
    mp = sol.mp
    T, nu = mp.T, mp.nu
    k = 0.0 if sol.is_cara else sol.p / sol.family.beta
    if k >= 1:
        raise SingularFeedbackError(f"feedback map singular: p={sol.p:.6g} >= beta={sol.family.beta:.6g}")
    s2 = T / (1.0 - k)
    m = -nu * T if sol.is_cara else (sol.q / sol.scale - nu) * s2

    def f(z):
        w = m + math.sqrt(s2) * z
        # log of eta_T(w) * N(0,T)-density / N(m,s2)-density
        log_ratio = -nu * w - nu * nu * T / 2 - w * w / (2 * T) + z * z / 2 + 0.5 * math.log(s2 / T)
        if sol.is_cara:
            return sol.terminal_wealth(w) * np.exp(log_ratio)
        return np.exp(sol._form(w) / sol.scale + log_ratio) - sol.shift * np.exp(log_ratio)

    return expect_standard_normal(f, n, doubling_tol)


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a
