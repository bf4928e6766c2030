"""Acceptance criteria, one test each, at the stated tolerances."""
import csv
import filecmp
import math
import time
import warnings

import numpy as np

from kmm_portfolio.ambiguity import GaussianSOD, PowerAmbiguity
from kmm_portfolio.cli import EXIT_OK, main
from kmm_portfolio.closed_form import (
    budget_value,
    cara_quadratic,
    crra_p,
    crra_quadratic,
    merton_baseline,
    solve_cara,
    solve_crra,
    solve_hara,
)
from kmm_portfolio.errors import AdmissibilityWarning
from kmm_portfolio.frontier import (
    WeightVector,
    fixed_point_lambda,
    kmm_objective,
    separability_check,
    solve_weighted_eut,
    trace_frontier,
)
from kmm_portfolio.market import MarketParams
from kmm_portfolio.numerics import RiskFreeControl, SimConfig, convergence_study, simulate_replication
from kmm_portfolio.utility import CARA, CRRA

BETA, GAMMA = 1.0 / 3.0, -0.5
SEED = 20240611


def random_market(rng):
    return MarketParams(
        mu0=rng.uniform(0.03, 0.2),
        r=rng.uniform(0.0, 0.05),
        sigma=rng.uniform(0.1, 0.4),
        T=rng.uniform(0.5, 8.0),
        x0=rng.uniform(0.5, 3.0),
    )


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_c01_headline_coefficients(mp, sod, criterion):
    start = time.perf_counter()
    sol = solve_crra(mp, sod, GAMMA, BETA)
    merton = merton_baseline(mp, CRRA(BETA))
    elapsed = time.perf_counter() - start
    a, b = sol.w2_coefficient, sol.w_coefficient
    ok = abs(a - 0.0363) <= 5e-4 and abs(b - 0.3230) <= 5e-4 and abs(merton.slope - 0.375) <= 1e-6 and elapsed < 1
    criterion("criterion 1 headline", ok, f"w^2 coef {a:.6f}, w coef {b:.6f}, Merton {merton.slope:.7f}, {elapsed:.3f}s")
    assert ok


def test_c02_quadratic_residuals(criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        mp = random_market(rng)
        sod = GaussianSOD.from_sigma0(mp, rng.uniform(0.5, 10.0))
        s0 = mp.sigma**2 / (sod.sigma_mu**2 * mp.T)
        # admissible: gamma + sigma0^2 > 0 keeps the CARA quadratic well posed
        beta, gamma = rng.uniform(0.05, 0.95), rng.uniform(max(-3.0, -0.99 * s0), 0.95)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AdmissibilityWarning)
            sc = solve_cara(mp, sod, gamma, rng.uniform(0.2, 3.0))
        worst = max(worst, abs(cara_quadratic(sc.p, s0, gamma)))
        # the p >= beta regime has no feedback map but the root is still defined
        worst = max(worst, abs(crra_quadratic(crra_p(s0, beta, gamma), s0, beta, gamma)))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 1
    criterion("criterion 2 quadratic residuals", ok, f"max residual {worst:.2e} over 200 draws, {elapsed:.3f}s")
    assert ok


def _budget_error(sol):
    mp = sol.mp
    return abs(budget_value(sol) / (mp.x0 * math.exp(mp.r * mp.T)) - 1.0)


def test_c03_budget_constraint(mp, sod, criterion):
    rng = np.random.default_rng(SEED + 3)
    worst = {}
    instances = [(mp, sod, GAMMA, BETA, 1.0, 1.0)]
    while len(instances) < 21:
        m = random_market(rng)
        s = GaussianSOD.from_sigma0(m, rng.uniform(0.8, 6.0))
        g, beta = rng.uniform(-3.0, 0.9), rng.uniform(0.05, 0.9)
        # keep draws in the regular regime (p < beta) so the CRRA family is defined
        if crra_p(m.sigma**2 / (s.sigma_mu**2 * m.T), beta, g) >= 0.95 * beta:
            continue
        instances.append((m, s, g, beta, rng.uniform(0.2, 3.0), rng.uniform(0.0, 2.0)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdmissibilityWarning)
        for m, s, g, beta, alpha, a in instances:
            for name, sol in (
                ("cara", solve_cara(m, s, g, alpha)),
                ("crra", solve_crra(m, s, g, beta)),
                ("hara", solve_hara(m, s, g, beta, a)),
            ):
                worst[name] = max(worst.get(name, 0.0), _budget_error(sol))
    ok = all(v < 1e-8 for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    criterion("criterion 3 budget", ok, f"max relative error {detail} (base + 20 draws)")
    assert ok


def test_c04_foc_flatness(crra, criterion):
    w = np.array([-4.0, -2.0, 0.0, 2.0, 4.0]) * math.sqrt(crra.mp.T) * 0.5
    ratio = np.asarray(crra.foc_ratio(w))
    spread = float(np.max(np.abs(ratio / ratio[2] - 1.0)))
    ok = spread < 1e-6
    criterion("criterion 4 FOC flatness", ok, f"ratio {ratio[2]:.8f}, max relative spread {spread:.2e}")
    assert ok


def test_c05_no_ambiguity_limit(mp, criterion):
    sod = GaussianSOD.from_sigma0(mp, 1e4)  # sigma0^2 = 1e8
    gaps = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdmissibilityWarning)
        for family, sol in (("crra", solve_crra(mp, sod, GAMMA, BETA)), ("cara", solve_cara(mp, sod, GAMMA, 1.0))):
            base = merton_baseline(mp, sol.family)
            const = sol.c / sol.scale
            gaps[family] = max(
                abs(sol.w2_coefficient),
                abs(sol.w_coefficient - base.slope),
                abs(const - base.constant),
                abs(sol.initial_position() - base.initial_position),
            )
    ok = all(g < 1e-3 for g in gaps.values())
    criterion("criterion 5 no-ambiguity limit", ok, ", ".join(f"{k} gap {v:.1e}" for k, v in gaps.items()))
    assert ok


def test_c06_separability(mp, two_priors, criterion):
    lams = [WeightVector.from_shares(s, two_priors) for s in ([1.0, 0.0], [0.5, 0.5], [0.0, 1.0])]
    results = {}
    for name, u in (("crra", CRRA(BETA)), ("cara", CARA(1.0))):
        rep = separability_check(u, mp, two_priors, [0.5, 1.0, 2.0], lams)
        results[name] = (rep.defect, rep.distortion_error)
    ok = all(d < 1e-7 and e < 1e-7 for d, e in results.values())
    detail = ", ".join(f"{k} defect {d:.1e} distortion {e:.1e}" for k, (d, e) in results.items())
    criterion("criterion 6 separability", ok, detail)
    assert ok


def test_c07_frontier_and_fixed_point(mp, two_priors, criterion):
    start = time.perf_counter()
    u, pa = CRRA(BETA), PowerAmbiguity(GAMMA)
    pts = sorted(trace_frontier(21, two_priors, mp, u), key=lambda p: p.b[0])
    b1 = np.array([p.b[0] for p in pts])
    b2 = np.array([p.b[1] for p in pts])
    trade_off = bool(np.all(np.diff(b2) <= 1e-6) and np.all(np.diff(b1) > 0))

    res = fixed_point_lambda(pa, two_priors, mp, u)
    rng = np.random.default_rng(SEED + 7)
    worst_gain = -np.inf
    for _ in range(100):
        lam = WeightVector.normalized(res.weights.lam * np.exp(rng.normal(0.0, 0.3, 2)), two_priors)
        phi = kmm_objective(pa, two_priors, solve_weighted_eut(lam, two_priors, mp, u).b)
        worst_gain = max(worst_gain, phi - res.phi_value)
    elapsed = time.perf_counter() - start
    ok = trade_off and worst_gain <= 0.0 and elapsed < 30
    criterion(
        "criterion 7 frontier",
        ok,
        f"trade-off {trade_off}, lambda {np.round(res.weights.lam, 6).tolist()}, "
        f"best perturbation gain {worst_gain:.2e}, {elapsed:.2f}s",
    )
    assert ok


def test_c08_replication(crra, cara, mp, criterion):
    cfg = SimConfig(n_paths=1000, n_steps=1024, seed=SEED)
    slopes = {name: convergence_study(sol, cfg, [2**8, 2**9, 2**10]).slope for name, sol in (("crra", crra), ("cara", cara))}
    zero = simulate_replication(RiskFreeControl(mp), SimConfig(1000, 256, SEED)).max_pathwise_error
    ok = all(abs(s - 0.5) <= 0.15 for s in slopes.values()) and zero <= np.finfo(float).eps
    detail = ", ".join(f"{k} slope {v:.3f}" for k, v in slopes.items())
    criterion("criterion 8 replication", ok, f"{detail}, zero-strategy error {zero:.1e}")
    assert ok


def test_c09_figure_properties(tmp_path, criterion):
    out = str(tmp_path)
    assert main(["compare", "--out", out]) == EXIT_OK
    for param in ("gamma", "beta", "sigma_mu"):
        cfg = tmp_path / f"{param}.json"
        cfg.write_text(f'{{"sweep": {{"parameter": "{param}", "series_gamma": [-0.5, 0.0, 0.5]}}}}')
        assert main(["sweep", "--config", str(cfg), "--out", out]) == EXIT_OK

    _, eu = read_csv(tmp_path / "utility_vs_mu.csv")
    diff = eu[:, 1] - eu[:, 2]
    at_mu0 = diff[np.argmin(np.abs(eu[:, 0] - 0.1))]
    crossings = int(np.sum(np.diff(np.sign(diff)) != 0))
    eu_ok = at_mu0 < 0 and diff[0] > 0 and diff[-1] > 0 and crossings == 2

    _, val = read_csv(tmp_path / "value_vs_sigma_mu.csv")
    val_ok = val[0, 0] == 0.0 and val[0, 1] == val[0, 2] and bool(np.all(val[1:, 1] >= val[1:, 2]))

    _, fb = read_csv(tmp_path / "feedback_vs_w.csv")
    fb_ok = bool(np.allclose(fb[:, 2], 1.875, rtol=1e-12))

    _, g = read_csv(tmp_path / "sweep_gamma.csv")
    _, b = read_csv(tmp_path / "sweep_beta.csv")
    mono_ok = bool(np.all(np.diff(g[:, 1]) > 0) and np.all(np.diff(b[:, 1]) > 0))

    _, s0 = read_csv(tmp_path / "sweep_sigma_mu_gamma_0.0.csv")
    _, sneg = read_csv(tmp_path / "sweep_sigma_mu_gamma_-0.5.csv")
    _, spos = read_csv(tmp_path / "sweep_sigma_mu_gamma_0.5.csv")
    log_ok = bool(np.allclose(s0[:, 1], 0.25 / (0.2 * (1 - BETA)), rtol=1e-12))
    sign_ok = bool(np.all(np.diff(sneg[:, 1]) < 0) and np.all(np.diff(spos[:, 1]) > 0))

    parts = dict(eu=eu_ok, value=val_ok, neutral_fraction=fb_ok, monotone=mono_ok, log_constant=log_ok, sign=sign_ok)
    ok = all(parts.values())
    criterion("criterion 9 figure properties", ok, ", ".join(f"{k} {v}" for k, v in parts.items()))
    assert ok


COMMANDS = [
    ["solve"],
    ["frontier"],
    ["fixed-point"],
    ["compare"],
    ["sweep"],
    ["verify", "--seed", "7"],
]


def test_c10_determinism(tmp_path, criterion):
    mismatched, compared = [], 0
    for cmd in COMMANDS:
        runs = []
        for k in range(2):
            out = tmp_path / f"{cmd[0]}_{k}"
            assert main(cmd + ["--out", str(out)]) == EXIT_OK
            runs.append(out)
        names = sorted(p.name for p in runs[0].iterdir())
        assert names == sorted(p.name for p in runs[1].iterdir())
        for name in names:
            compared += 1
            if not filecmp.cmp(runs[0] / name, runs[1] / name, shallow=False):
                mismatched.append(name)
    ok = not mismatched
    criterion("criterion 10 determinism", ok, f"{compared} files compared, mismatches {mismatched}")
    assert ok
