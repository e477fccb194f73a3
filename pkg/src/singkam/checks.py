"""The acceptance property suite, shared by ``singkam check`` and the tests.

Each check returns a CheckResult whose ``parts`` map sub-claims to booleans;
``passed`` is their conjunction. Relative errors are max |delta| / max |c|.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arithmetic import bruno_sum, geometric_sequence, sigma_cf, sigma_sequence, sigma_with_witness
from .flow import FlowConfig, drift_report, quadrature_drift
from .homological import quasi_inverse, solve_b
from .kam import formal_normalize, kam_iterate, relative_difference, transformed_integrals
from .norms import cauchy_bound, check_decay_uv, check_order_decay, check_sup_from_l2, coeff_sup_norm, l1_majorant, l2_norm
from .series import Series, hamiltonian_h0, mu, mul, poisson, random_series
from .splitting import g_min_degree, pi_g, recombine, split

GOLDEN = (1 + math.sqrt(5)) / 2
ALPHA = (1.0, GOLDEN)


@dataclass
class CheckResult:
    name: str
    parts: dict
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.parts.values())

    def line(self) -> str:
        failed = [k for k, v in self.parts.items() if not v]
        tail = "" if not failed else f" (failed: {', '.join(failed)})"
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} [{self.seconds:.2f}s]{tail}"

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "parts": self.parts, "details": self.details,
                "seconds": self.seconds}


def max_abs_difference(f: Series, g: Series) -> float:
    """max |f - g| over all monomials, without any zero pruning."""
    keys = np.concatenate([f.keys, g.keys])
    coeffs = np.concatenate([f.coeffs, -g.coeffs])
    if keys.size == 0:
        return 0.0
    _, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, coeffs.real)
    im = np.bincount(inv, coeffs.imag)
    return float(np.abs(re + 1j * im).max())


def relative_error(f: Series, ref: Series) -> float:
    scale = ref.max_abs()
    d = max_abs_difference(f, ref)
    return d / scale if scale else d


def benchmark_hamiltonian(deg_cap: int = 16, t_cap: int = 2, eps: float = 0.01) -> Series:
    S = Series(2, deg_cap=deg_cap, t_cap=t_cap)
    L = S.layout
    q1, q2, p1, p2 = (S.var(i) for i in (L.q(0), L.q(1), L.p(0), L.p(1)))
    return hamiltonian_h0(S, ALPHA) + (q1 * q1 * q2 + p1 * p2 * p2).scale(eps)


@lru_cache(maxsize=None)
def benchmark_runs(K: int = 3):
    H = benchmark_hamiltonian()
    formal = formal_normalize(H, ALPHA, K)
    kam = kam_iterate(H, ALPHA, geometric_sequence(0.1, 1 / 3, K + 1), K)
    return H, formal, kam


def _timed(fn):
    def wrapper(seed: int = 1234):
        t0 = time.perf_counter()
        res = fn(seed)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def poisson_laws(seed: int) -> CheckResult:
    """Antisymmetry, Jacobi and Leibniz on Gaussian-integer series (caps never hit)."""
    rng = np.random.default_rng(seed)
    S = Series(2, deg_cap=24, t_cap=4)
    worst = {"antisymmetry": 0.0, "jacobi": 0.0, "leibniz": 0.0}
    for _ in range(100):
        f, g, h = (random_series(rng, S, 5, max_deg=8, integer=True) for _ in range(3))
        worst["antisymmetry"] = max(worst["antisymmetry"], max_abs_difference(poisson(f, g), -poisson(g, f)))
        jac = [poisson(f, poisson(g, h)), poisson(g, poisson(h, f)), poisson(h, poisson(f, g))]
        worst["jacobi"] = max(worst["jacobi"], max_abs_difference(jac[0] + jac[1], -jac[2]))
        lhs = poisson(f, mul(g, h))
        rhs = mul(poisson(f, g), h) + mul(g, poisson(f, h))
        worst["leibniz"] = max(worst["leibniz"], max_abs_difference(lhs, rhs))
    return CheckResult("1 poisson algebra laws", {k: v == 0.0 for k, v in worst.items()}, worst)


@_timed
def eigen_relation(seed: int) -> CheckResult:
    """{H_0, q^i p^j} = (alpha + t, j - i) q^i p^j for all q, p monomials of degree <= 10."""
    S = Series(2, deg_cap=10, t_cap=1)
    L = S.layout
    H0 = hamiltonian_h0(S, ALPHA)
    terms, expected = {}, {}
    for d in range(11):
        for i1 in range(d + 1):
            for i2 in range(d + 1 - i1):
                for j1 in range(d + 1 - i1 - i2):
                    j2 = d - i1 - i2 - j1
                    e = [0] * 8
                    e[L.q(0)], e[L.q(1)], e[L.p(0)], e[L.p(1)] = i1, i2, j1, j2
                    terms[tuple(e)] = 1.0
                    m = (j1 - i1, j2 - i2)
                    val = ALPHA[0] * m[0] + ALPHA[1] * m[1]
                    if val:
                        expected[tuple(e)] = val
                    for k in range(2):
                        if m[k]:
                            et = list(e)
                            et[L.t(k)] += 1
                            expected[tuple(et)] = float(m[k])
    f = Series(2, terms, 10, 1)
    got = poisson(H0, f)
    ref = Series(2, expected, 10, 1)
    rel = relative_error(got, ref)
    return CheckResult("2 eigen-relation of H0", {"relative<=1e-14": rel <= 1e-14},
                       {"monomials": len(terms), "relative": rel})


@_timed
def split_roundtrip(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    S = Series(2, deg_cap=12, t_cap=2)
    n = 2
    worst, support = 0.0, True
    for _ in range(100):
        f = random_series(rng, S, 25)
        s = split(f)
        worst = max(worst, relative_error(recombine(s), f))
        for part in [s.b, *s.c]:
            E = part.exps
            if E.size and (E[:, 2 * n:3 * n] == E[:, 3 * n:]).all(axis=1).any():
                support = False
        for part in [s.r, *s.a]:
            if part.exps.size and part.exps[:, 2 * n:].any():
                support = False
    return CheckResult("3 split round trip", {"relative<=1e-12": worst <= 1e-12, "supports": support},
                       {"relative": worst})


def _random_b(rng, like: Series, k: int, nterms: int) -> Series:
    """Random series of B-type monomials (q^i p^j, min(i, j) = 0, i != j) with |i - j|_inf <= 2^k."""
    n = like.n
    L = like.layout
    B = min(2 ** k, like.deg_cap)
    terms = {}
    while len(terms) < nterms:
        m = rng.integers(-B, B + 1, size=n)
        if not m.any() or np.abs(m).sum() > like.deg_cap:
            continue
        e = [0] * (4 * n)
        for i, x in enumerate(m):
            e[L.q(i) if x > 0 else L.p(i)] = abs(int(x))
        room = like.deg_cap - int(np.abs(m).sum())
        if room >= 2 and rng.random() < 0.3:
            e[L.lam(int(rng.integers(n)))] += 1
        terms[tuple(e)] = complex(rng.normal(), rng.normal())
    return Series(n, terms, like.deg_cap, like.t_cap)


ULP_SLACK = 1.0 + 4 * np.finfo(float).eps


@_timed
def small_divisor_bound(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    S = Series(2, deg_cap=16, t_cap=0)
    s = 0.2
    norms = {"coeff_sup": coeff_sup_norm, "l2": l2_norm, "l1": l1_majorant}
    sig = sigma_sequence(ALPHA, 6)
    exact = {name: True for name in norms}
    ulp = {name: True for name in norms}
    worst_ratio = 0.0
    for _ in range(100):
        for k in range(1, 7):
            f = _random_b(rng, S, k, 6)
            u = solve_b(f, ALPHA, k)
            for name, nf in norms.items():
                lhs, rhs = nf(u, s), nf(f, s) / sig[k]
                exact[name] &= lhs <= rhs
                ulp[name] &= lhs <= rhs * ULP_SLACK
                worst_ratio = max(worst_ratio, lhs / rhs)
    saturation = 0.0
    W = Series(2, deg_cap=128, t_cap=0)
    for k in range(1, 7):
        v, w = sigma_with_witness(ALPHA, k)
        e = [0] * 8
        for i, x in enumerate(w):
            e[W.layout.q(i) if x > 0 else W.layout.p(i)] = abs(x)
        m = W.monomial(e)
        u = solve_b(m, ALPHA, k)
        for nf in norms.values():
            saturation = max(saturation, abs(nf(u, s) / (nf(m, s) / v) - 1.0))
    parts = {f"{name} bound": ulp[name] for name in norms}
    parts["witness saturates"] = saturation <= 1e-12
    return CheckResult("4 small-divisor bound", parts,
                       {"worst_ratio": worst_ratio, "saturation_error": saturation,
                        "bitwise_exact": all(exact.values())})


def _window_input(rng, like: Series, k: int, d: int, with_a: bool):
    """Random (A, B, C) of weighted degree d with |i - j|_inf <= 2^k."""
    n = like.n
    L = like.layout
    b = _random_b(rng, like, k, 4)
    b = b.select(b.degrees == d) if (b.degrees == d).any() else _fixed_degree_b(rng, like, k, d)
    c = [_fixed_degree_b(rng, like, k, d - 2) for _ in range(n)]
    a = [like.zero() for _ in range(n)]
    if with_a and d % 2 == 0:
        for i in range(n):
            e = [0] * (4 * n)
            e[L.lam(i)] = (d - 2) // 2
            e[L.t(0)] = 1
            a[i] = like.monomial(e, complex(rng.normal(), rng.normal()))
    return a, b, c


def _fixed_degree_b(rng, like: Series, k: int, d: int) -> Series:
    n = like.n
    L = like.layout
    terms = {}
    tries = 0
    while len(terms) < 3 and tries < 1000:
        tries += 1
        m = rng.integers(-min(2 ** k, d), min(2 ** k, d) + 1, size=n)
        deg = int(np.abs(m).sum())
        if not m.any() or deg > d or (d - deg) % 2:
            continue
        e = [0] * (4 * n)
        for i, x in enumerate(m):
            e[L.q(i) if x > 0 else L.p(i)] = abs(int(x))
        e[L.lam(int(rng.integers(n)))] += (d - deg) // 2
        terms[tuple(e)] = complex(rng.normal(), rng.normal())
    return Series(n, terms, like.deg_cap, like.t_cap)


def _residual(f, g, level):
    v = quasi_inverse(f, g, ALPHA, level)
    ra, rb, rc = pi_g(v(f))
    a, b, c = g
    return [x - y for x, y in zip(ra, a)], rb - b, [x - y for x, y in zip(rc, c)]


@_timed
def quasi_inverse_check(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    S = Series(2, deg_cap=16, t_cap=2)
    H0 = hamiltonian_h0(S, ALPHA)
    frozen_ab = 0.0
    formula = 0.0
    a_exact = 0.0
    for _ in range(20):
        g = _window_input(rng, S, 2, 6, with_a=True)
        ra, rb, _ = _residual(H0, g, 2)
        frozen_ab = max(frozen_ab, rb.substitute("t", [0, 0]).max_abs(), *[x.max_abs() for x in ra])
        a_exact = max(a_exact, *[x.max_abs() for x in ra])
        # t active: B-residual = (t, m)/(alpha, m) * b
        b = g[1]
        E = b.exps
        m = E[:, 4:6] - E[:, 6:8]
        d = m @ np.array(ALPHA)
        oracle = {}
        for row, c, mm, dd in zip(E, b.coeffs, m, d):
            for i in range(2):
                if mm[i]:
                    e = row.copy()
                    e[S.layout.t(i)] += 1
                    oracle[tuple(int(x) for x in e)] = oracle.get(tuple(int(x) for x in e), 0) + c * mm[i] / dd
        formula = max(formula, relative_error(rb, Series(2, oracle, 16, 2)))
    # general f with t frozen: order of the residual exceeds the order of g
    Ha = Series(2, {}, 16, 0)
    L = Ha.layout
    H0a = Ha.zero()
    for i, a in enumerate(ALPHA):
        H0a = H0a + mul(Ha.var(L.p(i)), Ha.var(L.q(i))).scale(a)
    order_ok, gaps = True, []
    for _ in range(50):
        f = H0a + random_series(rng, Ha, 6, max_deg=6, min_deg=3, vars_mask=[2, 3, 4, 5, 6, 7], scale=0.1)
        d = int(rng.integers(5, 9))
        a, b, c = _window_input(rng, Ha, 2, d, with_a=False)
        g = (a, b, c)
        res = _residual(f, g, 2)
        ro, go = g_min_degree(*res), g_min_degree(*g)
        gaps.append(ro - go)
        order_ok &= ro > go
    parts = {"A+B zero at t=0": frozen_ab == 0.0, "A block exact": a_exact == 0.0,
             "B closed formula 1e-12": formula <= 1e-12, "general order gain": bool(order_ok)}
    return CheckResult("5 quasi-inverse", parts,
                       {"frozen_ab": frozen_ab, "formula_rel": formula, "min_order_gain": min(gaps)})


@_timed
def certificate(seed: int) -> CheckResult:
    H, (chain, cert, records), _ = benchmark_runs()
    # independent re-splitting of the final Hamiltonian
    final = chain.forward(H)
    a, b, c = pi_g(final - hamiltonian_h0(final, ALPHA))
    resplit = max([b.max_abs()] + [x.max_abs() for x in a] + [x.max_abs() for x in c])
    return CheckResult("6 normalization certificate",
                       {"residual<=1e-10": cert.residual_report <= 1e-10, "re-split<=1e-10": resplit <= 1e-10},
                       {"residual_report": cert.residual_report, "resplit": resplit})


@_timed
def order_doubling(seed: int) -> CheckResult:
    _, (_, cert, records), _ = benchmark_runs()
    degs = [r.min_residual_degree for r in records[1:]]
    ok = all(d > 2 ** (k + 1) for k, d in enumerate(degs, start=1))
    slopes = cert.quadratic_slopes
    return CheckResult("7 order doubling", {"min degree > 2^(k+1)": ok,
                                            "decay exponent >= 1.5": bool(slopes) and min(slopes) >= 1.5},
                       {"min_degrees": [None if d == math.inf else d for d in degs], "slopes": slopes})


@_timed
def mode_agreement(seed: int) -> CheckResult:
    _, (_, cert_f, _), (_, state, cert_k) = benchmark_runs()
    diff = relative_difference(cert_f.final_normal_form, cert_k.final_normal_form)
    return CheckResult("8 mode agreement", {"relative<=1e-9": diff["relative"] <= 1e-9 and diff["unshared_max_relative"] <= 1e-9},
                       diff)


@_timed
def morphism_reality(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    H, (chain, cert, _), (chain_k, _, _) = benchmark_runs()
    worst = 0.0
    for _ in range(10):
        f = random_series(rng, H, 6, max_deg=3, min_deg=3, vars_mask=[2, 3, 4, 5, 6, 7])
        g = random_series(rng, H, 6, max_deg=3, min_deg=3, vars_mask=[2, 3, 4, 5, 6, 7])
        lhs = poisson(chain.forward(f), chain.forward(g))
        rhs = chain.forward(poisson(f, g))
        worst = max(worst, relative_error(lhs, rhs))
    imag = max(u.max_imag() for u in chain.steps + chain_k.steps)
    return CheckResult("9 poisson morphism and reality", {"brackets 1e-10": worst <= 1e-10, "imag<=1e-13": imag <= 1e-13},
                       {"relative": worst, "max_imag": imag})


def quadratic_irrationals(rng, count: int):
    out = []
    while len(out) < count:
        d = int(rng.integers(2, 60))
        if int(math.isqrt(d)) ** 2 == d:
            continue
        a, c = int(rng.integers(-6, 7)), int(rng.integers(1, 8))
        gamma = (a + math.sqrt(d)) / c
        if gamma != 0:
            out.append((1.0, gamma))
    return out


@_timed
def diophantine_oracle(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    alphas = [ALPHA] + quadratic_irrationals(rng, 20)
    mismatches = []
    for al in alphas:
        enum = sigma_sequence(al, 12)
        cf = [sigma_cf(al, k) for k in range(13)]
        if enum != cf:
            mismatches.append({"alpha": al, "enum": enum, "cf": cf})
    c, rho = 0.1, 0.5
    rep = bruno_sum(geometric_sequence(c, rho, 50), geometric=(c, rho))
    err = abs(rep.total - rep.closed_form)
    return CheckResult("10 diophantine oracle", {"enumeration == continued fraction": not mismatches,
                                                 "bruno closed form 1e-12": err <= 1e-12},
                       {"alphas": len(alphas), "mismatches": mismatches, "bruno_error": err})


@_timed
def norm_lemmas(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    S = Series(1, deg_cap=8, t_cap=2)
    ok = {"decay_uv": True, "sup_from_l2": True, "order_decay": True, "cauchy": True}
    for _ in range(100):
        f = random_series(rng, S, 8, min_deg=1)
        ok["decay_uv"] &= check_decay_uv(f, 0.2, 0.15).holds
        w = 0.2 * rng.uniform(0, 1, 4) * np.exp(2j * np.pi * rng.uniform(0, 1, 4))
        ok["sup_from_l2"] &= check_sup_from_l2(f, w, 0.2, 0.25).holds
        ok["order_decay"] &= check_order_decay(f, 0.2, 0.45).holds
        ok["cauchy"] &= cauchy_bound(f, 0.2, 0.45, 1).holds and cauchy_bound(f, 0.2, 0.45, 2).holds
    return CheckResult("11 norm lemma suite", {k: bool(v) for k, v in ok.items()})


@_timed
def flow_drift(seed: int) -> CheckResult:
    H, (chain, _, _), _ = benchmark_runs()
    cfg = FlowConfig(t_star=[0.0, 0.0], z0=[0.1] * 4, horizon=1.0, step=1e-3, scales=(1.0, 0.5))
    raw = drift_report(H, [mu(H, 0), mu(H, 1)], cfg)
    norm = drift_report(H, transformed_integrals(chain, H), cfg)
    k1 = drift_report(H, transformed_integrals(type(chain)(chain.steps[:1]), H), cfg)
    quad = quadrature_drift(H, transformed_integrals(chain, H), cfg)
    ratio = raw.max_drift(0) / max(norm.max_drift(0), 1e-300)
    slope_norm = min(s[0] for s in norm.slopes)
    slope_raw = [s[0] for s in raw.slopes]
    parts = {
        "drift ratio >= 1e3": ratio >= 1e3,
        "raw slope ~ 3": all(abs(s - 3) <= 0.3 for s in slope_raw),
        "K=3 slope >= 5": slope_norm >= 5,
    }
    return CheckResult("12 flow drift", parts,
                       {"raw_drift": raw.drift, "normalized_drift": norm.drift, "ratio": ratio,
                        "slope_K3": [s[0] for s in norm.slopes], "slope_raw": slope_raw,
                        "slope_K1": [s[0] for s in k1.slopes], "energy_drift": norm.energy_drift,
                        "quadrature_drift_K3": quad["drift"], "quadrature_slope_K3": [s[0] for s in quad["slopes"]]})


ALL = [poisson_laws, eigen_relation, split_roundtrip, small_divisor_bound, quasi_inverse_check, certificate,
       order_doubling, mode_agreement, morphism_reality, diophantine_oracle, norm_lemmas, flow_drift]
