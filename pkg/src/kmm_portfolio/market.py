"""Black-Scholes market primitives.

All quantities are annualized. ``w`` always denotes the value of the Brownian
motion under the reference measure (the one whose drift is ``mu0``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class MarketParams:
    mu0: float = 0.1
    r: float = 0.05
    sigma: float = 0.2
    T: float = 4.0
    x0: float = 1.0

    def __post_init__(self):
        for name in ("mu0", "r", "sigma", "T", "x0"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.sigma <= 0:
            raise ValidationError("sigma must be positive")
        if self.T <= 0:
            raise ValidationError("T must be positive")
        if self.x0 <= 0:
            raise ValidationError("x0 must be positive")

    @property
    def nu(self) -> float:
        return market_price_of_risk(self)


def market_price_of_risk(mp: MarketParams) -> float:
    return (mp.mu0 - mp.r) / mp.sigma


def nu_of_mu(mp: MarketParams, mu):
    """Drift deviation of prior ``mu`` from the reference drift, in sigma units."""
    return (mp.mu0 - mu) / mp.sigma


def girsanov_density(theta, w, t):
    """exp(-theta*w - theta^2 t / 2); broadcasts over numpy arrays."""
    return np.exp(-np.multiply(theta, w) - 0.5 * np.square(theta) * t)


def log_girsanov_density(theta, w, t):
    return -np.multiply(theta, w) - 0.5 * np.square(theta) * t
