"""Polydisc norms of truncated series and checkers for the norm inequalities.

All norms use the plain degree (every variable weight 1). The true sup norm
over the polydisc is not computed; the l1 majorant sum |a_i| s^|i| is the
certified upper proxy. Every inequality check uses slack 1 + 1e-12.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .series import Series

SLACK = 1.0 + 1e-12
MAX_RADIUS = 1.0 / math.sqrt(math.pi)


def check_radius(s: float) -> float:
    if not 0.0 < s < MAX_RADIUS:
        raise ValueError(f"radius {s} outside ]0, 1/sqrt(pi)[")
    return float(s)


def _active(f: Series, active):
    if active is None:
        return np.arange(4 * f.n)
    return np.asarray(list(active), dtype=np.int64)


def _plain(f: Series, active) -> np.ndarray:
    return f.exps[:, _active(f, active)].sum(axis=1) if f.keys.size else np.empty(0, np.int64)


def coeff_sup_norm(f: Series, s: float, active=None) -> float:
    """max_i |a_i| s^|i|."""
    check_radius(s)
    if f.is_zero():
        return 0.0
    return float(np.max(np.abs(f.coeffs) * s ** _plain(f, active)))


def l1_majorant(f: Series, s: float, active=None) -> float:
    """sum_i |a_i| s^|i|, an upper bound for |f| on the closed polydisc."""
    check_radius(s)
    if f.is_zero():
        return 0.0
    return math.fsum(np.abs(f.coeffs) * s ** _plain(f, active))


def l2_norm(f: Series, s: float, active=None) -> float:
    """Exact L^2 norm on the polydisc of radius s in the active variables.

    Monomials are orthogonal, ||z^i||^2 = prod_k pi s^(2 i_k + 2) / (i_k + 1).
    """
    check_radius(s)
    if f.is_zero():
        return 0.0
    E = f.exps[:, _active(f, active)]
    w = np.prod(math.pi * s ** (2 * E + 2) / (E + 1), axis=1)
    return math.sqrt(math.fsum(np.abs(f.coeffs) ** 2 * w))


def plain_order(f: Series, active=None) -> int:
    return int(_plain(f, active).min()) if f.keys.size else 0


@dataclass
class NormReport:
    coeff_sup: float
    l2: float
    l1: float
    radius: float
    order: int

    def to_json(self) -> dict:
        return asdict(self)


def norm_report(f: Series, s: float, active=None) -> NormReport:
    return NormReport(coeff_sup_norm(f, s, active), l2_norm(f, s, active), l1_majorant(f, s, active),
                      float(s), plain_order(f, active))


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    holds: bool
    details: dict

    def to_json(self) -> dict:
        return asdict(self)


def _report(name, lhs, rhs, **details) -> InequalityReport:
    return InequalityReport(name, float(lhs), float(rhs), bool(lhs <= rhs * SLACK), details)


def check_decay_uv(f: Series, s: float, sigma: float, active=None) -> InequalityReport:
    """|f|^inf_s <= |f|^inf_{s+sigma} (s/(s+sigma))^N for f of plain order N."""
    if f.is_zero():
        raise ValueError("decay check needs a nonzero series")
    check_radius(s)
    check_radius(s + sigma)
    N = plain_order(f, active)
    lhs = coeff_sup_norm(f, s, active)
    rhs = coeff_sup_norm(f, s + sigma, active) * (s / (s + sigma)) ** N
    return _report("decay_uv", lhs, rhs, order=N, s=s, sigma=sigma)


def check_sup_from_l2(f: Series, w, s: float, sigma: float, active=None) -> InequalityReport:
    """|f(w)| <= sigma^-m l2(f, s + sigma) for w in the polydisc of radius s.

    ``w`` gives values for the active variables (all 4n by default).
    """
    idx = _active(f, active)
    w = np.asarray(w, np.complex128)
    if w.shape != (idx.size,):
        raise ValueError(f"point needs {idx.size} coordinates")
    if np.abs(w).max(initial=0.0) > s * SLACK:
        raise ValueError("evaluation point outside the polydisc D_s")
    check_radius(s + sigma)
    point = np.zeros(4 * f.n, np.complex128)
    point[idx] = w
    val = 0j
    if f.keys.size:
        val = complex(np.sum(f.coeffs * np.prod(point[None, :] ** f.exps, axis=1)))
    m = idx.size
    rhs = sigma ** (-m) * l2_norm(f, s + sigma, active)
    return _report("sup_from_l2", abs(val), rhs, m=m, s=s, sigma=sigma)


def check_order_decay(f: Series, s: float, t: float, active=None) -> InequalityReport:
    """l1(f, s) <= (t - s)^-m coeff_sup(f, t) (s/t)^N, N = plain order of f."""
    if not s < t:
        raise ValueError("order decay check needs s < t")
    check_radius(s)
    check_radius(t)
    m = _active(f, active).size
    N = plain_order(f, active)
    lhs = l1_majorant(f, s, active)
    sup_t = coeff_sup_norm(f, t, active)
    rhs = (t - s) ** (-m) * sup_t * (s / t) ** N
    return _report("order_decay", lhs, rhs, m=m, order=N, s=s, t=t, coeff_sup_t=sup_t)


def cauchy_bound(f: Series, s: float, t: float, l: int, active=None) -> InequalityReport:
    """Every l-th partial derivative: coeff_sup(d^b f, s) <= l! (t-s)^-l l1(f, t).

    The report holds the worst direction; ``details['directions']`` lists all.
    """
    if not s < t:
        raise ValueError("Cauchy bound needs s < t")
    check_radius(s)
    check_radius(t)
    idx = _active(f, active)
    rhs = math.factorial(l) * (t - s) ** (-l) * l1_majorant(f, t, active)
    worst, per_dir = 0.0, {}
    for combo in itertools.combinations_with_replacement(idx.tolist(), l):
        g = f
        for v in combo:
            g = g.diff(v)
        val = coeff_sup_norm(g, s, active)
        per_dir[combo] = val
        worst = max(worst, val)
    return _report("cauchy", worst, rhs, l=l, s=s, t=t, directions=len(per_dir))
