"""Experiment configuration: strict JSON ingestion into frozen dataclasses.

Every section is optional; anything omitted takes the base-case value
(mu0=0.1, r=0.05, sigma=0.2, T=4, x=1, sigma0=2, beta=1/3, gamma=-0.5).
Unknown keys anywhere are a validation error.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .ambiguity import DiscreteSOD, GaussianSOD, PowerAmbiguity
from .errors import ValidationError
from .market import MarketParams
from .numerics import DEFAULT_NODES, MAX_NODES, SimConfig
from .utility import CARA, HARA

EXPERIMENTS = ("solve", "frontier", "fixed-point", "compare", "sweep", "verify")
SWEEP_PARAMS = ("gamma", "beta", "sigma_mu")

# two-prior example used when no discrete SOD is configured
DEFAULT_PRIORS = ((0.15, 2.0 / 3.0), (0.09, 1.0 / 3.0))


@dataclass(frozen=True)
class UtilityConfig:
    family: str = "crra"
    beta: float | None = 1.0 / 3.0
    alpha: float | None = None
    a: float = 0.0

    def build(self):
        if self.family == "cara":
            if self.alpha is None:
                raise ValidationError("cara utility needs alpha")
            return CARA(float(self.alpha))
        if self.family in ("crra", "hara"):
            if self.beta is None:
                raise ValidationError(f"{self.family} utility needs beta")
            if self.family == "crra" and self.a != 0:
                raise ValidationError("crra utility has a = 0; use family 'hara'")
            return HARA(float(self.beta), float(self.a))
        raise ValidationError(f"unknown utility family {self.family!r}")


@dataclass(frozen=True)
class AmbiguityConfig:
    gamma: float = -0.5
    kind: str = "gaussian"
    sigma_mu: float | None = None
    sigma0: float | None = 2.0
    points: tuple = ()  # ((mu, prob), ...) for kind == "discrete"


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    num: int
    include_stop: bool = True

    def values(self) -> list:
        if self.num < 1:
            raise ValidationError("grid needs num >= 1")
        # rounded so grid values print as typed (0.6, not 0.6000000000000001)
        pts = np.linspace(self.start, self.stop, self.num, endpoint=self.include_stop)
        return [round(float(v), 12) for v in pts]


DEFAULT_SWEEP_GRIDS = {
    "gamma": Grid(-3.0, 1.0, 40, include_stop=False),
    "beta": Grid(0.05, 0.9, 18),
    "sigma_mu": Grid(0.0, 0.1, 21),
}


@dataclass(frozen=True)
class SweepConfig:
    parameter: str = "gamma"
    grid: tuple | None = None
    series_gamma: tuple = (-0.5, 0.0, 0.5)

    def values(self) -> list:
        if self.grid is not None:
            return [float(v) for v in self.grid]
        return DEFAULT_SWEEP_GRIDS[self.parameter].values()


@dataclass(frozen=True)
class FrontierConfig:
    grid_size: int = 21
    damping: float = 0.5
    tol: float = 1e-10
    max_iter: int = 500
    restarts: int = 4  # extra random starts for the fixed point


@dataclass(frozen=True)
class CompareConfig:
    mu_grid: tuple = tuple(Grid(0.02, 0.18, 33).values())
    sigma_mu_grid: tuple = tuple(Grid(0.0, 0.1, 21).values())
    w_grid: tuple = tuple(Grid(-2.0, 2.0, 41).values())
    t: float = 2.0


@dataclass(frozen=True)
class NumericsConfig:
    gh_nodes: int = DEFAULT_NODES
    seed: int = 20240611
    mc_paths: int = 1000
    mc_steps: int = 256


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    format: str = "csv"


@dataclass(frozen=True)
class ExperimentConfig:
    market: MarketParams = field(default_factory=MarketParams)
    ambiguity: AmbiguityConfig = field(default_factory=AmbiguityConfig)
    utility: UtilityConfig = field(default_factory=UtilityConfig)
    experiment: str | None = None
    sweep: SweepConfig = field(default_factory=SweepConfig)
    frontier: FrontierConfig = field(default_factory=FrontierConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    # --- derived objects -------------------------------------------------

    def utility_model(self):
        return self.utility.build()

    def ambiguity_model(self) -> PowerAmbiguity:
        return PowerAmbiguity(self.ambiguity.gamma, self.utility_model().branch)

    def gaussian_sod(self) -> GaussianSOD:
        amb = self.ambiguity
        if amb.kind != "gaussian":
            raise ValidationError("this experiment needs a gaussian SOD")
        if amb.sigma_mu is not None:
            return GaussianSOD(self.market.mu0, amb.sigma_mu)
        return GaussianSOD.from_sigma0(self.market, amb.sigma0)

    def discrete_sod(self) -> DiscreteSOD:
        amb = self.ambiguity
        if amb.kind == "discrete":
            return DiscreteSOD.from_points(amb.points)
        return DiscreteSOD.from_points(DEFAULT_PRIORS)

    def sim_config(self, n_steps: int | None = None) -> SimConfig:
        num = self.numerics
        return SimConfig(num.mc_paths, num.mc_steps if n_steps is None else n_steps, num.seed)

    def validate(self) -> "ExperimentConfig":
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}")
        self.utility_model()
        self.ambiguity_model()
        amb = self.ambiguity
        if amb.kind == "gaussian":
            if (amb.sigma_mu is None) == (amb.sigma0 is None):
                raise ValidationError("gaussian SOD needs exactly one of sigma_mu, sigma0")
            if amb.sigma0 is not None and not (math.isfinite(amb.sigma0) and amb.sigma0 > 0):
                raise ValidationError("sigma0 must be positive and finite")
            self.gaussian_sod()
        elif amb.kind == "discrete":
            self.discrete_sod()
        else:
            raise ValidationError(f"unknown SOD kind {amb.kind!r}")
        sw = self.sweep
        if sw.parameter not in SWEEP_PARAMS:
            raise ValidationError(f"sweep parameter must be one of {SWEEP_PARAMS}")
        vals = sw.values()
        if not vals or not all(math.isfinite(v) for v in vals):
            raise ValidationError("sweep grid must be finite and non-empty")
        for g in sw.series_gamma:
            PowerAmbiguity(g)
        fr = self.frontier
        if fr.grid_size < 2:
            raise ValidationError("frontier grid_size must be >= 2")
        if not 0 < fr.damping <= 1:
            raise ValidationError("damping must lie in (0, 1]")
        if fr.restarts < 0:
            raise ValidationError("restarts must be >= 0")
        if not fr.tol > 0 or fr.max_iter < 1:
            raise ValidationError("fixed-point tol must be > 0 and max_iter >= 1")
        if not 0 <= self.compare.t <= self.market.T:
            raise ValidationError("compare.t must lie in [0, T]")
        num = self.numerics
        if not 1 <= num.gh_nodes <= MAX_NODES // 2:
            raise ValidationError(f"gh_nodes must lie in [1, {MAX_NODES // 2}]")
        self.sim_config()
        if self.output.format != "csv":
            raise ValidationError("only csv output is supported")
        return self

    def with_overrides(self, seed=None, gh_nodes=None, out=None) -> "ExperimentConfig":
        num, outc = self.numerics, self.output
        if seed is not None:
            num = replace(num, seed=int(seed))
        if gh_nodes is not None:
            num = replace(num, gh_nodes=int(gh_nodes))
        if out is not None:
            outc = replace(outc, directory=str(out))
        return replace(self, numerics=num, output=outc).validate()


# --- JSON ingestion -------------------------------------------------------

def _section(cls, data, where, convert=None):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ValidationError(f"{where} must be an object")
    kwargs = dict(data)
    if convert:
        kwargs = convert(kwargs)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(kwargs) - known)
    if unknown:
        raise ValidationError(f"unknown keys in {where}: {', '.join(unknown)}")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"bad {where}: {exc}") from exc


def _grid(value, where):
    if isinstance(value, dict):
        return tuple(_section(Grid, value, where).values())
    if isinstance(value, list):
        return tuple(float(v) for v in value)
    raise ValidationError(f"{where} must be a list or a start/stop/num object")


def _ambiguity(d):
    sod = d.pop("sod", None)
    if sod is not None:
        if not isinstance(sod, dict):
            raise ValidationError("ambiguity.sod must be an object")
        known = {"kind", "sigma_mu", "sigma0", "points"}
        unknown = sorted(set(sod) - known)
        if unknown:
            raise ValidationError(f"unknown keys in ambiguity.sod: {', '.join(unknown)}")
        kind = sod.get("kind", "gaussian")
        d["kind"] = kind
        if kind == "gaussian":
            d["sigma_mu"] = sod.get("sigma_mu")
            d["sigma0"] = sod.get("sigma0", None if "sigma_mu" in sod else 2.0)
        else:
            d["sigma0"] = None
            d["points"] = tuple(tuple(float(v) for v in pt) for pt in sod.get("points", ()))
    return d


def _sweep(d):
    if "grid" in d and d["grid"] is not None:
        d["grid"] = _grid(d["grid"], "sweep.grid")
    if "series_gamma" in d:
        d["series_gamma"] = tuple(float(g) for g in d["series_gamma"])
    return d


def _compare(d):
    for key in ("mu_grid", "sigma_mu_grid", "w_grid"):
        if key in d:
            d[key] = _grid(d[key], f"compare.{key}")
    return d


def _strict_numbers(d):
    for key, value in d.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"market.{key} must be a number")
    return d


SECTIONS = {
    "market": (MarketParams, _strict_numbers),
    "ambiguity": (AmbiguityConfig, _ambiguity),
    "utility": (UtilityConfig, None),
    "sweep": (SweepConfig, _sweep),
    "frontier": (FrontierConfig, None),
    "compare": (CompareConfig, _compare),
    "numerics": (NumericsConfig, None),
    "output": (OutputConfig, None),
}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    unknown = sorted(set(data) - set(SECTIONS) - {"experiment"})
    if unknown:
        raise ValidationError(f"unknown top-level keys: {', '.join(unknown)}")
    parts = {name: _section(cls, data.get(name), name, conv) for name, (cls, conv) in SECTIONS.items()}
    return ExperimentConfig(experiment=data.get("experiment"), **parts).validate()


def load_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)
