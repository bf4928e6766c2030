"""Ambiguity attitude (power family) and second-order distributions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NoAmbiguityLimit, PhiDomainError, ValidationError
from .market import MarketParams

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class PowerAmbiguity:
    """phi(x) = x^g/g on x > 0 or -(-x)^g/g on x < 0; g == 0 means log.

    The negative branch is the one paired with CARA utility, which takes
    negative values. Note it is convex in x for every g < 1; only the positive
    branch is concave.
    """

    gamma: float
    branch: str = POSITIVE

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma < 1):
            raise ValidationError("gamma must be finite and < 1")
        if self.branch not in (POSITIVE, NEGATIVE):
            raise ValidationError(f"unknown branch {self.branch!r}")

    @property
    def is_log(self) -> bool:
        return self.gamma == 0.0

    def _magnitude(self, x):
        x = np.asarray(x, dtype=float)
        if self.branch == POSITIVE:
            if np.any(~(x > 0)):
                raise PhiDomainError("phi domain: positive branch needs x > 0")
            return x
        if np.any(~(x < 0)):
            raise PhiDomainError("phi domain: negative branch needs x < 0")
        return -x

    def _sign(self) -> float:
        return 1.0 if self.branch == POSITIVE else -1.0

    def phi(self, x):
        m = self._magnitude(x)
        g = self.gamma
        core = np.log(m) if g == 0.0 else m**g / g
        return _scalar(self._sign() * core)

    def phi_prime(self, x):
        m = self._magnitude(x)
        return _scalar(m ** (self.gamma - 1.0))

    def phi_prime_inv(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(~(y > 0)):
            raise PhiDomainError("phi' takes positive values only")
        return _scalar(self._sign() * y ** (1.0 / (self.gamma - 1.0)))

    def psi(self, y):
        """Convex conjugate sup_{x>0} [phi(x) - x y]; positive branch only."""
        if self.branch != POSITIVE:
            raise PhiDomainError("conjugate is unbounded on the negative branch")
        y = np.asarray(y, dtype=float)
        if np.any(~(y > 0)):
            raise PhiDomainError("psi needs y > 0")
        g = self.gamma
        if g == 0.0:
            return _scalar(-np.log(y) - 1.0)
        return _scalar((1.0 - g) / g * y ** (g / (g - 1.0)))


def phi_eval(pa: PowerAmbiguity, x):
    return pa.phi(x)


def phi_prime(pa: PowerAmbiguity, x):
    return pa.phi_prime(x)


def phi_prime_inv(pa: PowerAmbiguity, y):
    return pa.phi_prime_inv(y)


def psi_eval(pa: PowerAmbiguity, y):
    return pa.psi(y)


@dataclass(frozen=True)
class GaussianSOD:
    """Ambiguous drift mu ~ N(center, sigma_mu^2)."""

    center: float
    sigma_mu: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma_mu) and self.sigma_mu >= 0):
            raise ValidationError("sigma_mu must be finite and >= 0")

    @property
    def degenerate(self) -> bool:
        return self.sigma_mu == 0.0

    @classmethod
    def from_sigma0(cls, mp: MarketParams, sigma0: float) -> "GaussianSOD":
        """Build from sigma0 = sigma / (sigma_mu sqrt(T))."""
        return cls(center=mp.mu0, sigma_mu=mp.sigma / (sigma0 * math.sqrt(mp.T)))


@dataclass(frozen=True)
class DiscreteSOD:
    mus: tuple
    probs: tuple

    def __post_init__(self):
        mus = tuple(float(m) for m in self.mus)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "probs", probs)
        if len(mus) == 0 or len(mus) != len(probs):
            raise ValidationError("mus and probs must be non-empty and aligned")
        if len(set(mus)) != len(mus):
            raise ValidationError("prior drifts must be distinct")
        if any(not p > 0 for p in probs):
            raise ValidationError("prior probabilities must be positive")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValidationError("prior probabilities must sum to 1")

    @classmethod
    def from_points(cls, points: Sequence[tuple]) -> "DiscreteSOD":
        mus, probs = zip(*points)
        return cls(mus, probs)

    @property
    def size(self) -> int:
        return len(self.mus)

    def nus(self, mp: MarketParams) -> np.ndarray:
        return (mp.mu0 - np.asarray(self.mus)) / mp.sigma


def sigma0_sq(sod: GaussianSOD, mp: MarketParams) -> float:
    """sigma^2 / (sigma_mu^2 T): precision of the drift relative to the horizon."""
    if sod.sigma_mu == 0.0:
        raise NoAmbiguityLimit("sigma_mu == 0: use the Merton baseline")
    if math.isinf(sod.sigma_mu):
        return 0.0
    return mp.sigma**2 / (sod.sigma_mu**2 * mp.T)


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a
