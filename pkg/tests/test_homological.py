import numpy as np
import pytest
from hypothesis import given, strategies as st

from singkam.homological import (DivisorSeries, Resonance, exact_formal_solve, formal_inverse, hadamard, quasi_inverse,
                                 residual, rho, solve_b, star_g)
from singkam.series import Derivation, Series, hamiltonian_h0, mu, random_series
from singkam.splitting import pi_g, g_min_degree

from conftest import ALPHA, PHI, vars2


def test_hadamard_examples(S2, rng):
    v = vars2(S2)
    f = random_series(rng, S2, 10)
    ones = Series(2, {e: 1.0 for e in f.to_dict()}, 16, 2)
    assert hadamard(f, ones) == f
    assert hadamard(f, S2.zero()).is_zero()
    assert hadamard(v["q1"].scale(2), v["q1"].scale(3)) == v["q1"].scale(6)


def test_solve_b_examples(S2):
    v = vars2(S2)
    f = v["q1"] * v["p2"]
    out = solve_b(f, ALPHA, 1)
    assert out.coeff([0, 0, 0, 0, 1, 0, 0, 1]) == pytest.approx(-1 / (1 - PHI), rel=1e-15)
    assert solve_b(S2.zero(), ALPHA, 1).is_zero()


def test_solve_b_window_and_type(S2):
    v = vars2(S2)
    with pytest.raises(ValueError):
        solve_b(v["q1"] ** 3, ALPHA, 1)
    with pytest.raises(ValueError):
        solve_b(v["q1"] * v["p1"], ALPHA, 1)


def test_resonance_reported(S2):
    v = vars2(S2)
    with pytest.raises(Resonance) as err:
        solve_b(v["q1"] * v["p2"], (1.0, 1.0), 1)
    assert err.value.vector == (1, -1)


def test_divisor_table():
    table = DivisorSeries.build(ALPHA, 2)
    assert table.min_divisor() == pytest.approx(2 * PHI - 3)
    assert table.to_csv().splitlines()[0] == "m1,m2,re,im"


def test_rho_examples(S2):
    v = vars2(S2)
    H0 = hamiltonian_h0(S2, ALPHA)
    F = v["q1"] * v["p2"]
    a, b, c = rho(H0, Derivation.hamiltonian(F))
    # {F, H0} = -{H0, F} = (alpha + t, i - j) F with i - j = (1, -1)
    expected = (F.scale(ALPHA[0] - ALPHA[1]) + (v["t1"] - v["t2"]) * F)
    assert (b - expected).max_abs() <= 1e-15
    a, b, c = rho(H0, Derivation.zero(S2))
    assert b.is_zero() and all(x.is_zero() for x in a + c)
    a, _, _ = rho(H0, Derivation((S2.const(1.0), S2.zero()), S2.zero()))
    assert a[0] == S2.const(1.0) and a[1].is_zero()


def test_quasi_inverse_examples(S2):
    v = vars2(S2)
    z = S2.zero()
    H0a = hamiltonian_h0(Series(2, deg_cap=16, t_cap=0), ALPHA)
    g = ([H0a.zero()] * 2, H0a.var(4) * H0a.var(7), [H0a.zero()] * 2)
    res, orders = residual(H0a, g, ALPHA, 1)
    assert res[1].is_zero()
    H0 = hamiltonian_h0(S2, ALPHA)
    ga = ([v["l1"], v["l2"] * v["t1"]], z, [z, z])
    u = quasi_inverse(H0, ga, ALPHA, 1)
    assert u.generator.is_zero()
    res, _ = residual(H0, ga, ALPHA, 1)
    assert all(x.is_zero() for x in res[0])


def test_closed_formula_with_t_active(S2):
    v = vars2(S2)
    H0 = hamiltonian_h0(S2, ALPHA)
    b = v["q1"] * v["p2"]
    res, _ = residual(H0, ([S2.zero()] * 2, b, [S2.zero()] * 2), ALPHA, 1)
    expected = (v["t1"] - v["t2"]) * b * (1 / (1 - PHI))
    assert (res[1] - expected).max_abs() <= 1e-12 * expected.max_abs()


def test_triangular_block(S2, rng):
    # C input never produces a B-type generator
    v = vars2(S2)
    H0 = hamiltonian_h0(S2, ALPHA)
    c = [v["q1"] * v["p2"] * v["l1"], v["q2"] ** 2]
    u = quasi_inverse(H0, ([S2.zero()] * 2, S2.zero(), c), ALPHA, 2)
    _, b_part, _ = pi_g(u.generator)
    assert b_part.is_zero()


def test_exact_formal_solve_examples(S2):
    v = vars2(S2)
    f = v["q1"] * v["p2"] * v["l1"]
    S0 = Series(2, deg_cap=16, t_cap=0)
    f0 = S0.var(4) * S0.var(7)
    assert exact_formal_solve(f0, ALPHA) == -solve_b(f0, ALPHA, 1)
    S1 = Series(2, deg_cap=16, t_cap=1)
    m = S1.var(4) * S1.var(7)
    out = exact_formal_solve(m, ALPHA)
    d = ALPHA[0] - ALPHA[1]
    assert out.coeff([0, 0, 0, 0, 1, 0, 0, 1]) == pytest.approx(1 / d, rel=1e-15)
    assert out.coeff([1, 0, 0, 0, 1, 0, 0, 1]) == pytest.approx(-1 / d ** 2, rel=1e-15)
    assert out.coeff([0, 1, 0, 0, 1, 0, 0, 1]) == pytest.approx(1 / d ** 2, rel=1e-15)
    back = star_g(exact_formal_solve(f, ALPHA), ALPHA)
    assert (back - f).max_abs() <= 1e-14


@given(st.integers(0, 2 ** 31))
def test_exact_formal_solve_is_right_inverse(seed):
    rng = np.random.default_rng(seed)
    S = Series(2, deg_cap=12, t_cap=3)
    f = random_series(rng, S, 12, vars_mask=range(0, 8))
    a, b, c = pi_g(f)
    if b.is_zero():
        return
    back = star_g(exact_formal_solve(b, ALPHA), ALPHA)
    assert (back - b).max_abs() <= 1e-12 * b.max_abs()


@given(st.integers(0, 2 ** 31))
def test_formal_inverse_clears_h0_action(seed):
    rng = np.random.default_rng(seed)
    S = Series(2, deg_cap=12, t_cap=2)
    H0 = hamiltonian_h0(S, ALPHA)
    f = random_series(rng, S, 12, min_deg=3)
    g = pi_g(f)
    u = formal_inverse(g, ALPHA)
    ra, rb, rc = rho(H0, u)
    scale = max(x.max_abs() for x in [g[1], *g[0], *g[2]] + [S.const(1.0)])
    assert (rb - g[1]).max_abs() <= 1e-12 * scale
    for x, y in zip(ra + rc, g[0] + g[2]):
        assert (x - y).max_abs() <= 1e-12 * scale


@given(st.integers(0, 2 ** 31))
def test_small_divisor_bound(seed):
    from singkam.arithmetic import sigma
    from singkam.checks import _random_b, ULP_SLACK
    from singkam.norms import coeff_sup_norm, l1_majorant, l2_norm
    rng = np.random.default_rng(seed)
    S = Series(2, deg_cap=16, t_cap=0)
    k = int(rng.integers(1, 5))
    f = _random_b(rng, S, k, 5)
    u = solve_b(f, ALPHA, k)
    for nf in (coeff_sup_norm, l2_norm, l1_majorant):
        assert nf(u, 0.3) <= nf(f, 0.3) / sigma(ALPHA, k) * ULP_SLACK


def test_mu_is_in_kernel(S2):
    H0 = hamiltonian_h0(S2, ALPHA)
    a, b, c = rho(H0, Derivation.hamiltonian(mu(S2, 0)))
    assert b.is_zero() and all(x.is_zero() for x in a + c)
