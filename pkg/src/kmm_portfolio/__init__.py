"""Portfolio choice under smooth (KMM) ambiguity aversion in a Black-Scholes market."""
from .ambiguity import DiscreteSOD, GaussianSOD, PowerAmbiguity
from .closed_form import (
    ClosedFormSolution,
    merton_baseline,
    merton_solution,
    solve_cara,
    solve_crra,
    solve_hara,
)
from .frontier import WeightVector, fixed_point_lambda, separability_check, solve_weighted_eut, trace_frontier
from .market import MarketParams
from .numerics import SimConfig, convergence_study, simulate_replication
from .utility import CARA, CRRA, HARA

__all__ = [
    "CARA",
    "CRRA",
    "HARA",
    "ClosedFormSolution",
    "DiscreteSOD",
    "GaussianSOD",
    "MarketParams",
    "PowerAmbiguity",
    "SimConfig",
    "WeightVector",
    "convergence_study",
    "fixed_point_lambda",
    "merton_baseline",
    "merton_solution",
    "separability_check",
    "simulate_replication",
    "solve_cara",
    "solve_crra",
    "solve_hara",
    "solve_weighted_eut",
    "trace_frontier",
]
