import json
import math

import numpy as np
import pytest

from singkam.arithmetic import geometric_sequence
from singkam.kam import (CapOverflow, ClassMembershipError, decay_slopes, formal_normalize, g_residual,
                         ideal_remainder, involutivity_check, kam_iterate, norm_csv, radius_schedule,
                         relative_difference, residual_min_degree, run_report, t_reliable_degree, transformed_integrals,
                         window)
from singkam.homological import exact_formal_solve
from singkam.series import Series, hamiltonian_h0, mu, poisson
from singkam.splitting import pi_f

from conftest import ALPHA, vars2

LOWER = geometric_sequence(0.1, 1 / 3, 6)


def _small(deg_cap=8, t_cap=1, eps=0.01):
    S = Series(2, deg_cap=deg_cap, t_cap=t_cap)
    v = vars2(S)
    cubic = v["q1"] ** 2 * v["q2"] + v["p1"] * v["p2"] ** 2
    quartic = v["q1"] ** 2 * v["p1"] ** 2 + v["q1"] * v["p1"] * v["q2"] * v["p2"]
    return hamiltonian_h0(S, ALPHA) + (cubic + quartic).scale(eps)


def test_window_and_radii():
    assert [window(k) for k in range(1, 4)] == [(3, 4), (5, 8), (9, 16)]
    s = radius_schedule(0.25, 3)
    assert s[0] == 0.25 and all(b < a for a, b in zip(s, s[1:]))


def test_h0_is_already_normal(S2):
    H0 = hamiltonian_h0(S2, ALPHA)
    chain, cert, records = formal_normalize(H0, ALPHA, 3)
    assert all(u.is_zero() for u in chain.steps)
    assert cert.residual_report == 0.0 and cert.passed
    assert (cert.final_normal_form - pi_f(H0)).is_zero()


def test_one_degree_of_freedom():
    S = Series(1, deg_cap=16, t_cap=2)
    L = S.layout
    q, p = S.var(L.q(0)), S.var(L.p(0))
    H = hamiltonian_h0(S, [1.0]) + (q ** 3).scale(0.1)
    chain, cert, records = formal_normalize(H, [1.0], 1)
    assert cert.passed and records[1].min_residual_degree >= 4
    # the generator solves the cubic term against H0 at every t-order
    F = chain.steps[0].generator
    expected = exact_formal_solve(q ** 3, [1.0]).scale(-0.1)
    assert (F + expected).max_abs() <= 1e-15 or (F - expected).max_abs() <= 1e-15
    H2 = H + (p ** 3).scale(0.1)
    _, cert2, records2 = formal_normalize(H2, [1.0], 3)
    assert cert2.passed
    assert [r.min_residual_degree for r in records2[1:]] == [5, 9, math.inf]


def test_input_validation(S2):
    v = vars2(S2)
    H0 = hamiltonian_h0(S2, ALPHA)
    with pytest.raises(CapOverflow):
        formal_normalize(H0, ALPHA, 4)
    with pytest.raises(ValueError):
        formal_normalize(H0 + v["q1"] * v["p2"].scale(0.1), ALPHA, 2)
    with pytest.raises(ClassMembershipError):
        kam_iterate(H0, ALPHA, [0.9] * 5, 3)
    with pytest.raises(ClassMembershipError):
        kam_iterate(H0, ALPHA, LOWER[:3], 3)


def test_formal_and_analytic_agree_on_resonant_input():
    H = _small()
    chain_f, cert_f, _ = formal_normalize(H, ALPHA, 2)
    chain_k, state, cert_k = kam_iterate(H, ALPHA, LOWER, 2)
    assert cert_f.passed and cert_k.passed
    nf = cert_f.final_normal_form
    assert nf.keys.size > 4
    diff = relative_difference(nf, cert_k.final_normal_form)
    assert diff["relative"] <= 1e-9 and diff["unshared_max_relative"] <= 1e-9
    assert not state.divergent


def test_order_doubling_on_resonant_input():
    H = _small()
    _, _, records = formal_normalize(H, ALPHA, 2)
    assert [r.min_residual_degree for r in records] == [3, 5, math.inf]


def test_normal_form_commutes_with_mu_modulo_ideal():
    H = _small(t_cap=0)
    _, cert, _ = formal_normalize(H, ALPHA, 2)
    gens = [mu(H, 0), mu(H, 1)]
    for m in range(2):
        assert ideal_remainder(poisson(cert.final_normal_form, gens[m]), gens).max_abs() <= 1e-14


def test_involutivity_of_mu(S2):
    rep = involutivity_check([mu(S2, 0), mu(S2, 1)])
    assert rep.max_relative == 0.0


def test_ideal_remainder_examples(S2):
    v = vars2(S2)
    gens = [mu(S2, 0), mu(S2, 1)]
    assert ideal_remainder(v["l1"], gens) == v["q1"] * v["p1"]
    assert ideal_remainder(mu(S2, 0) * v["q2"], gens).is_zero()


@pytest.mark.parametrize("t_cap", [0, 2, 3])
def test_transformed_integrals_are_in_involution(t_cap):
    H = _small(t_cap=t_cap)
    chain, _, _ = formal_normalize(H, ALPHA, 2)
    K = transformed_integrals(chain, H)
    rep = involutivity_check(K, extra={"H": H}, t_max=t_reliable_degree(t_cap, 2))
    assert rep.max_relative <= 1e-9


def test_top_t_degrees_carry_truncation_error():
    H = _small(t_cap=2)
    chain, _, _ = formal_normalize(H, ALPHA, 2)
    rep = involutivity_check(transformed_integrals(chain, H), extra={"H": H})
    assert rep.max_relative > 1e-6


def test_decay_slopes():
    assert decay_slopes([1e-2, 1e-4, 1e-8]) == pytest.approx([2.0, 2.0])
    assert decay_slopes([1e-2, 0.0, 1e-8]) == []


def test_reports_are_parsable():
    H = _small()
    _, state, cert = kam_iterate(H, ALPHA, LOWER, 2)
    text = norm_csv(state.norm_log)
    assert text.splitlines()[0] == "k,s_k,r_coeffsup,r_l1,u_norm"
    assert len(text.splitlines()) == 4
    body = json.loads(run_report({"K": 2}, state.norm_log, cert, state.fitted_b))
    assert body["certificate"]["passed"] is True
    assert body["fitted_B"] is not None and body["fitted_B"] > 0


def test_residual_starts_at_degree_three():
    H = _small()
    assert residual_min_degree(g_residual(H, hamiltonian_h0(H, ALPHA))) == 3
