import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kmm_portfolio.errors import (
    DivergentIntegralError,
    NotBracketedError,
    QuadratureError,
    ValidationError,
)
from kmm_portfolio.numerics import (
    RiskFreeControl,
    SimConfig,
    dyadic_brownian,
    expand_bracket,
    expect_normal,
    expect_standard_normal,
    find_root_monotone,
    gauss_hermite,
    gaussian_exp_quadratic,
    gaussian_quadratic_mean,
    path_normals,
    reference_brownian,
    simulate_replication,
)


def test_gh_weights_and_moments():
    g = gauss_hermite(64)
    assert math.fsum(g.weights) == pytest.approx(1.0, abs=1e-15)
    assert g.expect(g.nodes) == pytest.approx(0.0, abs=1e-14)
    assert g.expect(g.nodes**2) == pytest.approx(1.0, rel=1e-13)
    assert g.expect(g.nodes**4) == pytest.approx(3.0, rel=1e-13)


@pytest.mark.parametrize("n", [0, 513])
def test_gh_rejects_bad_size(n):
    with pytest.raises(ValidationError):
        gauss_hermite(n)


@given(st.floats(-1, 1), st.floats(0.1, 2))
def test_lognormal_moment(m, s2):
    got = expect_normal(np.exp, m, s2)
    assert got == pytest.approx(math.exp(m + s2 / 2), rel=1e-10)


@given(st.floats(-0.4, 0.4), st.floats(-2, 2), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 1.0))
def test_exp_quadratic_closed_form_vs_quadrature(a, b, c0, m, s2):
    exact = gaussian_exp_quadratic(a, b, c0, m, s2)
    quad = expect_normal(lambda x: np.exp(a * x * x + b * x + c0), m, s2, n=256, doubling_tol=None)
    assert exact == pytest.approx(quad, rel=1e-8)


def test_quadratic_mean():
    assert gaussian_quadratic_mean(2.0, 1.0, 0.5, 1.0, 3.0) == pytest.approx(2.0 * (1 + 3) + 1 + 0.5)


def test_exp_quadratic_divergent():
    with pytest.raises(DivergentIntegralError, match="divergent"):
        gaussian_exp_quadratic(1.0, 0.0, 0.0, 0.0, 1.0)


def test_quadrature_not_converged():
    # exp(0.45 z^2) has a finite but very heavy integrand; 8 nodes are far off 16
    with pytest.raises(QuadratureError):
        expect_standard_normal(lambda z: np.exp(0.45 * z * z), n=8)


def test_root_finder():
    assert find_root_monotone(lambda x: x**3 - 2, 0, 2) == pytest.approx(2 ** (1 / 3), abs=1e-12)
    with pytest.raises(NotBracketedError, match="not bracketed"):
        find_root_monotone(lambda x: x * x + 1, -1, 1)
    lo, hi = expand_bracket(lambda s: 50.0 - s, 0.0, 1.0)
    assert lo <= 50 <= hi
    with pytest.raises(NotBracketedError):
        expand_bracket(lambda s: 1.0, 0.0, 1.0, max_doublings=3)


@pytest.mark.parametrize("kwargs", [dict(n_paths=0), dict(n_steps=0), dict(n_steps=300), dict(measure="x"), dict(measure="prior")])
def test_simconfig_validation(kwargs):
    with pytest.raises(ValidationError):
        SimConfig(**kwargs)


def test_streams_independent_of_path_count():
    a = path_normals(7, 3, 16)
    b = path_normals(7, 10, 16)
    assert np.array_equal(a, b[:3])


def test_dyadic_paths_nest():
    z = path_normals(1, 5, 64)
    fine = dyadic_brownian(z, 4.0, 64)
    coarse = dyadic_brownian(z[:, :16], 4.0, 16)
    assert np.array_equal(fine[:, ::4], coarse)


def test_brownian_increment_statistics():
    W = dyadic_brownian(path_normals(3, 4000, 8), 4.0, 8)
    inc = np.diff(W, axis=1)
    assert np.mean(inc) == pytest.approx(0.0, abs=0.02)
    assert np.var(inc) == pytest.approx(0.5, rel=0.05)
    assert np.corrcoef(inc[:, 0], inc[:, 5])[0, 1] == pytest.approx(0.0, abs=0.05)


def test_measure_drift(mp):
    ref = reference_brownian(SimConfig(50, 8, 1), mp)
    rn = reference_brownian(SimConfig(50, 8, 1, measure="risk_neutral"), mp)
    assert np.allclose(rn[:, -1] - ref[:, -1], -mp.nu * mp.T)


def test_zero_strategy_exact(mp):
    res = simulate_replication(RiskFreeControl(mp), SimConfig(200, 16, 5))
    assert res.max_pathwise_error == 0.0


def test_replication_bitwise_reproducible(crra):
    cfg = SimConfig(100, 64, 11)
    assert simulate_replication(crra, cfg) == simulate_replication(crra, cfg)
