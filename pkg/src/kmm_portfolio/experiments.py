"""Experiment runners behind the CLI. Each returns the list of files written.

Floats are written with ``repr`` so every file round-trips exactly and reruns
are byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import closed_form as cf
from .ambiguity import GaussianSOD
from .config import ExperimentConfig
from .errors import FixedPointError, NumericalError, ValidationError
from .frontier import WeightVector, fixed_point_restarts, separability_check, trace_frontier
from .numerics import RiskFreeControl, convergence_study, simulate_replication
from .utility import CARA

THRESHOLDS = {
    "quadratic_residual": 1e-12,
    "budget_relative_error": 1e-8,
    "foc_flatness": 1e-6,
    "no_ambiguity_limit": 1e-3,
    "separability_defect": 1e-7,
    "separability_distortion": 1e-7,
    "replication_slope": 0.15,
    "zero_control": 1e-15,
}
LIMIT_SIGMA0 = 1e4  # sigma0^2 = 1e8


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n")
    return path


def _out(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output.directory)


def _gaussian_solution(cfg, sod=None, gamma=None, utility=None):
    utility = cfg.utility_model() if utility is None else utility
    sod = cfg.gaussian_sod() if sod is None else sod
    gamma = cfg.ambiguity.gamma if gamma is None else gamma
    return cf.solve(cfg.market, sod, gamma, utility)


# --- solve ----------------------------------------------------------------

def solve_report(cfg: ExperimentConfig) -> dict:
    mp, utility, n = cfg.market, cfg.utility_model(), cfg.numerics.gh_nodes
    sod = cfg.gaussian_sod()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sol = _gaussian_solution(cfg, sod)
    baseline = cf.merton_baseline(mp, utility)
    neutral = cf.merton_solution(mp, utility, cfg.ambiguity.gamma, sod)
    merton = {
        "slope": baseline.slope,
        "constant": baseline.constant,
        "fraction": baseline.fraction,
        "initial_position": baseline.initial_position,
        "value_function": neutral.value_function(sod, n),
    }
    report = {
        "family": utility.name,
        "gamma": cfg.ambiguity.gamma,
        "sigma_mu": sod.sigma_mu,
        "nu": mp.nu,
        "merton_only": sod.degenerate,
        "merton": merton,
    }
    if not sod.degenerate:
        target = mp.x0 * math.exp(mp.r * mp.T)
        report.update(
            {
                "sigma0_sq": sol.s0sq,
                "p": sol.p,
                "q": sol.q,
                "c": sol.c,
                "w2_coefficient": sol.w2_coefficient,
                "w_coefficient": sol.w_coefficient,
                "pi0": sol.initial_position(),
                "budget_residual": cf.budget_value(sol, n) / target - 1.0,
                "value_function": sol.value_function(sod, n),
                "warnings": [str(w.message) for w in caught],
            }
        )
    return report


def run_solve(cfg: ExperimentConfig) -> list:
    report = solve_report(cfg)
    return [write_json(_out(cfg) / "solve.json", _clean(report))]


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# --- frontier and fixed point --------------------------------------------

def run_frontier(cfg: ExperimentConfig) -> list:
    sod = cfg.discrete_sod()
    if sod.size != 2:
        raise ValidationError("frontier.csv needs a two-prior SOD")
    points = trace_frontier(cfg.frontier.grid_size, sod, cfg.market, cfg.utility_model(), n=cfg.numerics.gh_nodes)
    rows = [(*pt.weights.lam, *pt.b, pt.kappa) for pt in points]
    return [write_csv(_out(cfg) / "frontier.csv", ["lambda1", "lambda2", "m1", "m2", "kappa"], rows)]


def fixed_point_report(cfg: ExperimentConfig) -> dict:
    sod = cfg.discrete_sod()
    fr = cfg.frontier
    found = fixed_point_restarts(
        cfg.ambiguity_model(),
        sod,
        cfg.market,
        cfg.utility_model(),
        fr.restarts,
        cfg.numerics.seed,
        damping=fr.damping,
        tol=fr.tol,
        max_iter=fr.max_iter,
        n=cfg.numerics.gh_nodes,
    )
    if not found:
        raise FixedPointError(
            f"fixed point not converged from any of {fr.restarts + 1} starts", residual=math.inf, iterations=fr.max_iter
        )
    res = found[0]
    return {
        "mus": list(sod.mus),
        "probs": list(sod.probs),
        "lambda": list(res.weights.lam),
        "expected_utilities": list(res.point.b),
        "weighted_utility": res.point.J,
        "kappa": res.point.kappa,
        "phi_value": res.phi_value,
        "residual": res.residual,
        "iterations": res.iterations,
        "starts": fr.restarts + 1,
        # distinct converged points are listed, not reconciled
        "distinct_fixed_points": [
            {"lambda": list(r.weights.lam), "phi_value": r.phi_value} for r in found
        ],
    }


def run_fixed_point(cfg: ExperimentConfig) -> list:
    return [write_json(_out(cfg) / "fixed_point.json", _clean(fixed_point_report(cfg)))]


# --- figure data -----------------------------------------------------------

def run_compare(cfg: ExperimentConfig) -> list:
    mp, utility, n = cfg.market, cfg.utility_model(), cfg.numerics.gh_nodes
    gamma, sod = cfg.ambiguity.gamma, cfg.gaussian_sod()
    sol = _gaussian_solution(cfg, sod)
    neutral = cf.merton_solution(mp, utility, gamma, sod)
    out = _out(cfg)
    comp = cfg.compare

    mu = np.array(comp.mu_grid)
    eu = zip(mu, sol.expected_utility_at_mu(mu), neutral.expected_utility_at_mu(mu))
    files = [write_csv(out / "utility_vs_mu.csv", ["mu", "eu_ambiguity", "eu_neutral"], eu)]

    rows = []
    for s in comp.sigma_mu_grid:
        g = GaussianSOD(mp.mu0, s)
        amb = _gaussian_solution(cfg, g)
        rows.append((s, amb.value_function(g, n), cf.merton_solution(mp, utility, gamma, g).value_function(g, n)))
    files.append(write_csv(out / "value_vs_sigma_mu.csv", ["sigma_mu", "u_ambiguity", "u_neutral"], rows))

    w = np.array(comp.w_grid)
    t = comp.t
    frac = []
    for s in (sol, neutral):
        x_t = s.wealth_feedback(w, t)
        frac.append(s.strategy_feedback(w, t, x_t) / x_t)
    files.append(write_csv(out / "feedback_vs_w.csv", ["w", "fraction_ambiguity", "fraction_neutral"], zip(w, *frac)))
    return files


def sweep_pi0(cfg: ExperimentConfig, parameter: str, values, gamma=None) -> list:
    """Initial position pi_0 as one parameter varies, the rest held at ``cfg``."""
    gamma = cfg.ambiguity.gamma if gamma is None else gamma
    out = []
    for v in values:
        utility, sod, g = cfg.utility_model(), cfg.gaussian_sod(), gamma
        if parameter == "gamma":
            g = v
        elif parameter == "beta":
            if isinstance(utility, CARA):
                raise ValidationError("beta sweep needs a crra/hara utility")
            utility = replace(utility, beta=v)
        elif parameter == "sigma_mu":
            sod = GaussianSOD(cfg.market.mu0, v)
        else:
            raise ValidationError(f"unknown sweep parameter {parameter!r}")
        out.append(cf.solve(cfg.market, sod, g, utility).initial_position())
    return out


def run_sweep(cfg: ExperimentConfig) -> list:
    param = cfg.sweep.parameter
    values = cfg.sweep.values()
    out = _out(cfg)
    files = [write_csv(out / f"sweep_{param}.csv", ["param", "pi0"], zip(values, sweep_pi0(cfg, param, values)))]
    if param == "sigma_mu":
        for g in cfg.sweep.series_gamma:
            rows = zip(values, sweep_pi0(cfg, param, values, gamma=g))
            files.append(write_csv(out / f"sweep_{param}_gamma_{g!r}.csv", ["param", "pi0"], rows))
    return files


# --- verification ------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float | None
    threshold: float
    passed: bool
    error: str | None = None

    def as_dict(self):
        return {
            "name": self.name,
            "value": _num(self.value) if self.value is not None else None,
            "threshold": self.threshold,
            "passed": self.passed,
            "error": self.error,
        }


def _check(name, fn) -> Check:
    limit = THRESHOLDS[name]
    try:
        value = float(fn())
    except (NumericalError, ValidationError, ArithmeticError) as exc:
        return Check(name, None, limit, False, str(exc))
    return Check(name, value, limit, bool(value <= limit))


def _foc_spread(sol, n):
    w = np.array([-4.0, -2.0, 0.0, 2.0, 4.0]) * math.sqrt(sol.mp.T) * 0.5
    ratio = np.asarray(sol.foc_ratio(w, n))
    return float(np.max(np.abs(ratio / ratio[2] - 1.0)))


def _limit_gap(cfg):
    mp, utility = cfg.market, cfg.utility_model()
    with warnings.catch_warnings():
        # CARA wealth is unbounded below in this limit; the warning is expected
        warnings.simplefilter("ignore")
        sol = _gaussian_solution(cfg, GaussianSOD.from_sigma0(mp, LIMIT_SIGMA0))
    base = cf.merton_baseline(mp, utility)
    return max(abs(sol.w2_coefficient), abs(sol.w_coefficient - base.slope))


def _separability(cfg):
    sod = cfg.discrete_sod()
    lams = [WeightVector.from_shares(s, sod) for s in _share_grid(sod.size)]
    return separability_check(cfg.utility_model(), cfg.market, sod, [0.5, 1.0, 2.0], lams, cfg.numerics.gh_nodes)


def _share_grid(k):
    eye = np.eye(k)
    return [eye[0], eye[-1], np.full(k, 1.0 / k)]


def verify_checks(cfg: ExperimentConfig) -> list:
    n = cfg.numerics.gh_nodes
    mp = cfg.market
    cache = {}

    # closed-form checks need a gaussian SOD; discrete configs use the base one
    gauss = cfg.gaussian_sod() if cfg.ambiguity.kind == "gaussian" else GaussianSOD.from_sigma0(mp, 2.0)

    def sol():
        if "sol" not in cache:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                cache["sol"] = _gaussian_solution(cfg, gauss)
        return cache["sol"]

    def sep():
        if "sep" not in cache:
            cache["sep"] = _separability(cfg)
        return cache["sep"]

    def replication():
        steps = cfg.numerics.mc_steps
        study = convergence_study(sol(), cfg.sim_config(), [steps, 2 * steps, 4 * steps])
        return abs(study.slope - 0.5)

    def zero_control():
        res = simulate_replication(RiskFreeControl(mp), cfg.sim_config())
        return res.max_pathwise_error / (mp.x0 * math.exp(mp.r * mp.T))

    return [
        _check("quadratic_residual", lambda: abs(sol().quadratic_residual())),
        _check(
            "budget_relative_error",
            lambda: abs(cf.budget_value(sol(), n) / (mp.x0 * math.exp(mp.r * mp.T)) - 1.0),
        ),
        _check("foc_flatness", lambda: _foc_spread(sol(), n)),
        _check("no_ambiguity_limit", lambda: _limit_gap(cfg)),
        _check("separability_defect", lambda: sep().defect),
        _check("separability_distortion", lambda: sep().distortion_error),
        _check("replication_slope", replication),
        _check("zero_control", zero_control),
    ]


def run_verify(cfg: ExperimentConfig):
    checks = verify_checks(cfg)
    report = {"passed": all(c.passed for c in checks), "checks": [c.as_dict() for c in checks]}
    path = write_json(_out(cfg) / "verify.json", report)
    return [path], checks


RUNNERS = {
    "solve": run_solve,
    "frontier": run_frontier,
    "fixed-point": run_fixed_point,
    "compare": run_compare,
    "sweep": run_sweep,
}
