import numpy as np
import pytest
from hypothesis import given, strategies as st

from singkam.series import Series, hamiltonian_h0, mu, mul, random_series
from singkam.splitting import NormalFormSplit, pi_f, pi_g, recombine, recombine_g, split

from conftest import ALPHA, vars2


def _rel(a, b):
    return (a - b).max_abs() / max(b.max_abs(), 1e-300)


def test_split_pq(S2):
    v = vars2(S2)
    s = split(v["p1"] * v["q1"])
    assert s.r == v["l1"]
    assert s.a[0] == S2.const(1.0) and s.a[1].is_zero()
    assert s.b.is_zero() and all(c.is_zero() for c in s.c) and s.i2.is_zero()


def test_split_square(S2):
    v = vars2(S2)
    s = split(v["q1"] ** 2 * v["p1"] ** 2)
    assert s.r == v["l1"] ** 2
    assert s.a[0] == v["l1"].scale(2)
    assert s.i2 == mu(S2, 0) ** 2
    assert s.i2_cert == {(2, 0): S2.const(1.0)}


def test_split_pure_b(S2):
    v = vars2(S2)
    s = split(v["q1"] * v["p2"])
    assert s.b == v["q1"] * v["p2"]
    assert s.r.is_zero() and s.i2.is_zero()


def test_recombine_examples(S2):
    z = S2.zero()
    assert recombine(NormalFormSplit(z, [z, z], z, [z, z], z)).is_zero()
    assert recombine_g([S2.const(1.0), z], z, [z, z]) == mu(S2, 0)


def test_pi_examples(S2):
    v = vars2(S2)
    f = v["l1"] ** 2 + mu(S2, 0) ** 2
    assert pi_f(f) == f
    a, b, c = pi_g(v["q1"] * v["p2"])
    assert b == v["q1"] * v["p2"] and all(x.is_zero() for x in a + c)
    H0 = hamiltonian_h0(S2, ALPHA)
    a, b, c = pi_g(H0)
    assert a[0] == v["t1"] + S2.const(ALPHA[0]) and a[1] == v["t2"] + S2.const(ALPHA[1])
    assert b.is_zero() and all(x.is_zero() for x in c)
    assert _rel(pi_f(H0), mul(v["t1"] + S2.const(ALPHA[0]), v["l1"]) + mul(v["t2"] + S2.const(ALPHA[1]), v["l2"])) < 1e-15


@given(st.integers(0, 2 ** 31))
def test_round_trip_and_supports(seed):
    S = Series(2, deg_cap=12, t_cap=2)
    f = random_series(np.random.default_rng(seed), S, 30)
    s = split(f)
    assert _rel(recombine(s), f) <= 1e-12
    for part in [s.b, *s.c]:
        E = part.exps
        assert not (E[:, 4:6] == E[:, 6:8]).all(axis=1).any()
    for part in [s.r, *s.a]:
        assert not part.exps[:, 4:].any()
    # i2 is stable under re-splitting
    again = split(s.i2)
    assert again.r.max_abs() + again.b.max_abs() <= 1e-12 * max(1.0, s.i2.max_abs())
    assert all(x.max_abs() <= 1e-12 * max(1.0, s.i2.max_abs()) for x in again.a + again.c)


@given(st.integers(0, 2 ** 31))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    S = Series(2, deg_cap=10, t_cap=2)
    f, g = random_series(rng, S, 15), random_series(rng, S, 15)
    sf, sg, sfg = split(f), split(g), split(f + g)
    scale = max(f.max_abs(), g.max_abs())
    assert (sfg.b - sf.b - sg.b).max_abs() <= 1e-13 * scale
    assert (sfg.r - sf.r - sg.r).max_abs() <= 1e-13 * scale
    for i in range(2):
        assert (sfg.a[i] - sf.a[i] - sg.a[i]).max_abs() <= 1e-13 * scale
        assert (sfg.c[i] - sf.c[i] - sg.c[i]).max_abs() <= 1e-13 * scale


def test_idempotence(S2, rng):
    f = random_series(rng, S2, 40)
    s = split(f)
    s2 = split(recombine(s))
    scale = f.max_abs()
    for x, y in zip([s.r, s.b, *s.a, *s.c], [s2.r, s2.b, *s2.a, *s2.c]):
        assert (x - y).max_abs() <= 1e-12 * scale


def test_text_roundtrip(S2, rng):
    s = split(random_series(rng, S2, 25))
    back = NormalFormSplit.from_text(s.to_text(), S2)
    for x, y in zip([s.r, s.b, s.i2, *s.a, *s.c], [back.r, back.b, back.i2, *back.a, *back.c]):
        assert np.array_equal(x.keys, y.keys) and np.array_equal(x.coeffs, y.coeffs)
