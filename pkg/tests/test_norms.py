import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from singkam.norms import (cauchy_bound, check_decay_uv, check_order_decay, check_sup_from_l2, coeff_sup_norm,
                           l1_majorant, l2_norm, norm_report)
from singkam.series import Series, random_series

# n = 1 layout: t1, l1, q1, p1 -> indices 0..3
Q, P = 2, 3


@pytest.fixture
def S():
    return Series(1, deg_cap=16, t_cap=2)


def test_coeff_sup_examples(S):
    assert coeff_sup_norm(S.var(Q, 5), 0.3) == pytest.approx(0.3 ** 5, rel=1e-15)
    assert coeff_sup_norm(S.zero(), 0.3) == 0.0
    f = S.var(Q, coeff=2.0) + S.var(Q) * S.var(P) * 3.0
    assert coeff_sup_norm(f, 0.5) == 1.0


def test_l2_examples(S):
    s = 0.4
    assert l2_norm(S.const(1.0), s, active=[Q]) == pytest.approx(math.sqrt(math.pi * s ** 2), rel=1e-15)
    assert l2_norm(S.var(Q), s, active=[Q]) == pytest.approx(math.sqrt(math.pi * s ** 4 / 2), rel=1e-15)


def test_l2_orthogonality_monte_carlo(S):
    # independent oracle: Monte-Carlo integral of |z1 + z2|^2 over the bidisc
    s = 0.5
    rng = np.random.default_rng(7)
    N = 400_000
    r = s * np.sqrt(rng.uniform(0, 1, (N, 2)))
    th = rng.uniform(0, 2 * np.pi, (N, 2))
    z = r * np.exp(1j * th)
    vol = (math.pi * s ** 2) ** 2
    mc = vol * np.mean(np.abs(z[:, 0] + z[:, 1]) ** 2)
    f = S.var(Q) + S.var(P)
    exact = l2_norm(f, s, active=[Q, P]) ** 2
    assert exact == pytest.approx(l2_norm(S.var(Q), s, [Q, P]) ** 2 + l2_norm(S.var(P), s, [Q, P]) ** 2, rel=1e-14)
    assert mc == pytest.approx(exact, rel=0.01)


def test_l1_examples(S):
    m = S.var(Q, 3, coeff=2 - 1j)
    assert l1_majorant(m, 0.3) == coeff_sup_norm(m, 0.3)
    assert l1_majorant(S.var(Q) + S.var(P), 0.5) == 1.0


def test_l1_dominates_pointwise(S):
    rng = np.random.default_rng(11)
    f = random_series(rng, S, 20)
    s = 0.3
    bound = l1_majorant(f, s)
    for _ in range(1000):
        z = s * rng.uniform(0, 1, 4) * np.exp(2j * np.pi * rng.uniform(0, 1, 4))
        assert abs(f.evaluate(t=z[:1], lam=z[1:2], q=z[2:3], p=z[3:])) <= bound * (1 + 1e-12)


def test_radius_validation(S):
    with pytest.raises(ValueError):
        l1_majorant(S.var(Q), 0.6)
    with pytest.raises(ValueError):
        coeff_sup_norm(S.var(Q), 0.0)


@given(st.integers(0, 2 ** 31), st.floats(0.05, 0.5))
def test_norm_relations(seed, s):
    S = Series(1, deg_cap=10, t_cap=2)
    f = random_series(np.random.default_rng(seed), S, 12)
    rep = norm_report(f, s)
    assert rep.coeff_sup <= rep.l1
    assert coeff_sup_norm(f, s) <= coeff_sup_norm(f, s * 1.1)
    assert l2_norm(f, s) <= l2_norm(f, s * 1.1)
    assert l1_majorant(f, s) <= l1_majorant(f, s * 1.1)


def test_decay_uv_examples(S):
    rep = check_decay_uv(S.var(Q, 6), 0.2, 0.1)
    assert rep.holds and rep.lhs == pytest.approx(rep.rhs, rel=1e-14)
    const = check_decay_uv(S.const(2.0) + S.var(Q), 0.2, 0.1)
    assert const.holds and const.details["order"] == 0


def test_sup_from_l2_examples(S):
    c = S.const(3.0)
    rep = check_sup_from_l2(c, [0.1], 0.2, 0.1, active=[Q])
    assert rep.holds
    assert rep.rhs == pytest.approx(3.0 * math.sqrt(math.pi) * 0.3 / 0.1, rel=1e-14)
    assert check_sup_from_l2(S.var(Q), [0.0], 0.2, 0.1, active=[Q]).lhs == 0.0
    with pytest.raises(ValueError):
        check_sup_from_l2(c, [0.5], 0.2, 0.1, active=[Q])


def test_order_decay_examples(S):
    f = S.var(Q, 8)
    rep = check_order_decay(f, 0.2, 0.4)
    assert rep.lhs == pytest.approx(0.2 ** 8, rel=1e-14) and rep.holds
    assert check_order_decay(S.zero(), 0.2, 0.4).lhs == 0.0


def test_cauchy_examples(S):
    rep = cauchy_bound(S.var(Q), 0.2, 0.4, 1, active=[Q])
    assert rep.lhs == 1.0 and rep.rhs == pytest.approx(0.4 / 0.2)
    assert cauchy_bound(S.const(5.0), 0.2, 0.4, 1).lhs == 0.0


@pytest.mark.parametrize("check", ["decay", "l2", "order", "cauchy"])
def test_lemmas_on_random_series(check):
    rng = np.random.default_rng(hash(check) % 2 ** 32)
    S = Series(1, deg_cap=10, t_cap=2)
    for _ in range(100):
        f = random_series(rng, S, 10, min_deg=1)
        if check == "decay":
            rep = check_decay_uv(f, 0.2, 0.1)
        elif check == "l2":
            w = 0.2 * rng.uniform(0, 1, 4) * np.exp(2j * np.pi * rng.uniform(0, 1, 4))
            rep = check_sup_from_l2(f, w, 0.2, 0.2)
        elif check == "order":
            rep = check_order_decay(f, 0.15, 0.4)
        else:
            rep = cauchy_bound(f, 0.2, 0.4, 2)
        assert rep.holds, rep
