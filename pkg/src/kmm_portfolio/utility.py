"""Risk-attitude utilities U with their marginal inverses I = (U')^{-1}."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ambiguity import NEGATIVE, POSITIVE
from .errors import ValidationError


@dataclass(frozen=True)
class CARA:
    alpha: float

    name = "cara"

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError("alpha must be positive")

    @property
    def branch(self) -> str:
        return NEGATIVE

    def U(self, x):
        return -np.exp(-self.alpha * np.asarray(x, dtype=float)) / self.alpha

    def U_prime(self, x):
        return np.exp(-self.alpha * np.asarray(x, dtype=float))

    def I_from_log(self, log_y):
        return -np.asarray(log_y, dtype=float) / self.alpha

    def U_of_I_from_log(self, log_y):
        return -np.exp(log_y) / self.alpha


@dataclass(frozen=True)
class HARA:
    """U(x) = (x + a)^beta / beta; a == 0 is CRRA."""

    beta: float
    a: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta < 1 and self.beta != 0):
            raise ValidationError("beta must be < 1 and nonzero")
        if not (math.isfinite(self.a) and self.a >= 0):
            raise ValidationError("HARA shift a must be >= 0")

    @property
    def name(self) -> str:
        return "crra" if self.a == 0 else "hara"

    @property
    def branch(self) -> str:
        return POSITIVE if self.beta > 0 else NEGATIVE

    def U(self, x):
        return (np.asarray(x, dtype=float) + self.a) ** self.beta / self.beta

    def U_prime(self, x):
        return (np.asarray(x, dtype=float) + self.a) ** (self.beta - 1.0)

    def I_from_log(self, log_y):
        return np.exp(np.asarray(log_y, dtype=float) / (self.beta - 1.0)) - self.a

    def U_of_I_from_log(self, log_y):
        return np.exp(np.asarray(log_y, dtype=float) * self.beta / (self.beta - 1.0)) / self.beta


def CRRA(beta: float) -> HARA:
    return HARA(beta, 0.0)


def distortion(utility, x, mp):
    """h(x) = U(x e^{rT}), the utility of holding only the risk-free asset."""
    return utility.U(np.asarray(x, dtype=float) * math.exp(mp.r * mp.T))
