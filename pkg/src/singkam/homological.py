"""Small-divisor operators: Hadamard products, divisor tables, quasi-inverse.

Sign convention (fixed here, used everywhere): derivations act as
v = sum_i a_i d/dt_i + {F, -}, so for a B-type monomial m = q^i p^j

    {m, H_0} = (alpha + t, i - j) m.

The literal solver ``solve_b`` divides by (alpha, i - j) and negates
(mu_k = -*h_k); the quasi-inverse therefore uses F_B = -solve_b(b).
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass

import numpy as np

from .series import Derivation, Series, mu, mul, poisson
from .splitting import pi_g, recombine_g

RESONANCE_TOL = 1e-13


class Resonance(ArithmeticError):
    def __init__(self, vector, value):
        self.vector = tuple(int(x) for x in vector)
        self.value = value
        super().__init__(f"resonant divisor (alpha, {self.vector}) = {value!r}")


def differences(f: Series) -> np.ndarray:
    """i - j (q exponents minus p exponents) for every stored monomial."""
    n = f.n
    E = f.exps
    return E[:, 2 * n:3 * n] - E[:, 3 * n:]


def divisors(f: Series, alpha, tol: float = RESONANCE_TOL) -> np.ndarray:
    m = differences(f)
    d = m @ np.asarray(alpha, dtype=np.complex128)
    bad = np.abs(d) < tol
    if bad.any():
        i = int(np.argmax(bad))
        raise Resonance(m[i], complex(d[i]))
    return d


@dataclass
class DivisorSeries:
    """Table of 1/(alpha, m) for 1 <= |m|_inf <= 2^k (one of each +-m pair)."""

    k: int
    alpha: tuple
    table: dict

    @classmethod
    def build(cls, alpha, k: int) -> "DivisorSeries":
        alpha = tuple(complex(a) for a in alpha)
        n = len(alpha)
        B = 2 ** k
        table = {}
        for m in itertools.product(range(-B, B + 1), repeat=n):
            if not any(m):
                continue
            first = next(x for x in m if x)
            if first < 0:
                continue
            d = sum(a * x for a, x in zip(alpha, m))
            table[m] = 1.0 / d if abs(d) >= RESONANCE_TOL else float("inf")
        return cls(k, alpha, table)

    def min_divisor(self) -> float:
        return min(1.0 / abs(v) for v in self.table.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow([f"m{i + 1}" for i in range(len(self.alpha))] + ["re", "im"])
        for m, v in sorted(self.table.items()):
            d = 1.0 / v if v != float("inf") else 0.0
            w.writerow(list(m) + [repr(complex(d).real), repr(complex(d).imag)])
        return buf.getvalue()


def hadamard(f: Series, g: Series) -> Series:
    """Coefficientwise product over the common support."""
    f._check(g)
    common, i, j = np.intersect1d(f.keys, g.keys, assume_unique=True, return_indices=True)
    return f._new(common, f.coeffs[i] * g.coeffs[j])


def _window_check(f: Series, k: int):
    if f.is_zero():
        return
    m = np.abs(differences(f)).max(axis=1)
    if (m == 0).any():
        raise ValueError("solve_b needs B-type monomials (i != j)")
    if (m > 2 ** k).any():
        raise ValueError(f"monomial with |i-j|_inf = {int(m.max())} outside level-{k} window 2^{k}")


def level_part(f: Series, k: int) -> Series:
    """Monomials of f with |i - j|_inf <= 2^k."""
    if f.is_zero():
        return f
    return f.select(np.abs(differences(f)).max(axis=1) <= 2 ** k)


def solve_b(f_b: Series, alpha, k: int) -> Series:
    """mu_k = -(* h_k): divide each coefficient by (alpha, i - j) and negate."""
    if f_b.is_zero():
        return f_b
    _window_check(f_b, k)
    d = divisors(f_b, alpha)
    return f_b._new(f_b.keys, -f_b.coeffs / d, aggregate=False)


def _t_multiplier(like: Series, m) -> Series:
    """(t, m) as a series."""
    out = like.zero()
    for i, x in enumerate(m):
        if x:
            out = out + like.var(like.layout.t(i), coeff=float(x))
    return out


def exact_formal_solve(f_b: Series, alpha, t_cap: int | None = None) -> Series:
    """Exact right inverse of *g modulo t^{T+1}.

    Each coefficient is multiplied by sum_r (-1)^r (t, m)^r / (alpha, m)^{r+1}.
    """
    if f_b.is_zero():
        return f_b
    T = f_b.t_cap if t_cap is None else min(t_cap, f_b.t_cap)
    diffs = differences(f_b)
    divisors(f_b, alpha)
    out_k, out_c = [], []
    patterns, inverse = np.unique(diffs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    for pi, m in enumerate(patterns):
        if not m.any():
            raise ValueError("exact_formal_solve needs B-type monomials (i != j)")
        d = complex(np.dot(m, np.asarray(alpha, np.complex128)))
        tm = _t_multiplier(f_b, m)
        inv = f_b.zero()
        power = f_b.const(1.0)
        for r in range(T + 1):
            inv = inv + power.scale((-1) ** r / d ** (r + 1))
            power = mul(power, tm)
        part = f_b.select(inverse == pi)
        prod = mul(part, inv)
        prod = prod.select(prod.tdegrees <= T)
        out_k.append(prod.keys)
        out_c.append(prod.coeffs)
    return f_b._new(np.concatenate(out_k), np.concatenate(out_c))


def star_g(f: Series, alpha, with_t: bool = True) -> Series:
    """g * f with g = sum (alpha + t, i - j) q^i p^j (coefficientwise)."""
    if f.is_zero():
        return f
    diffs = differences(f)
    d = diffs @ np.asarray(alpha, np.complex128)
    keys, coeffs = [f.keys], [f.coeffs * d]
    if with_t:
        lay = f.layout
        room = f.tdegrees < f.t_cap
        for i in range(f.n):
            sel = room & (diffs[:, i] != 0)
            keys.append(f.keys[sel] + lay.units[lay.t(i)])
            coeffs.append(f.coeffs[sel] * diffs[sel, i])
    return f._new(np.concatenate(keys), np.concatenate(coeffs))


def rho(f_ham: Series, v: Derivation):
    """pi_G(v(f_ham)): the infinitesimal action."""
    return pi_g(v(f_ham))


def _c_generator(c_parts, solver) -> Series:
    out = None
    for i, ci in enumerate(c_parts):
        if ci.is_zero():
            continue
        term = mul(mu(ci, i), solver(ci))
        out = term if out is None else out + term
    return out


def quasi_inverse(f_ham: Series, g, alpha, k: int) -> Derivation:
    """Right quasi-inverse j_k(f) of rho(f) in the triangular A/B/C block form.

    Rows: shift = A-part; F_B = -mu_k(B); F_C = -mu_k(C - pi_C {F_B, f}).
    The corrected C-part is solved on the level-k box only; monomials outside
    it come from the higher-order part of f and stay in the residual.
    """
    a, b, c = g
    F_b = -solve_b(b, alpha, k)
    correction = pi_g(_bracket(F_b, f_ham))[2] if not F_b.is_zero() else [x.zero() for x in c]
    c_adj = [level_part(ci - corr, k) for ci, corr in zip(c, correction)]
    F_c = _c_generator(c_adj, lambda s: -solve_b(s, alpha, k))
    F = F_b if F_c is None else F_b + F_c
    return Derivation(tuple(a), F)


def _bracket(F: Series, f: Series) -> Series:
    return poisson(F, f)


def formal_inverse(g, alpha, t_cap: int | None = None) -> Derivation:
    """Exact inverse of rho(H_0) on (A, B, C) modulo t^{T+1}."""
    a, b, c = g
    F = exact_formal_solve(b, alpha, t_cap)
    F_c = _c_generator(c, lambda s: exact_formal_solve(s, alpha, t_cap))
    if F_c is not None:
        F = F + F_c
    return Derivation(tuple(a), F)


def residual(f_ham: Series, g, alpha, k: int):
    """rho(f, j(g)) - g per component, with componentwise orders."""
    v = quasi_inverse(f_ham, g, alpha, k)
    ra, rb, rc = rho(f_ham, v)
    a, b, c = g
    res = ([x - y for x, y in zip(ra, a)], rb - b, [x - y for x, y in zip(rc, c)])
    orders = {
        "a": min(x.order() for x in res[0]),
        "b": res[1].order(),
        "c": min(x.order() for x in res[2]),
    }
    return res, orders


def g_as_series(g) -> Series:
    a, b, c = g
    return recombine_g(a, b, c)
