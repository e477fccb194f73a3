"""Order-doubling normalisation drivers.

Both drivers remove the (A, B, C) part of H - H_0 window by window, where
step k handles weighted degrees 2^k < d <= 2^{k+1}. Step k produces one
derivation u_k and replaces H by e^{-u_k} H.

* ``formal_normalize`` solves the homological equation exactly in t
  (geometric series in (t, m)/(alpha, m)), degree by degree.
* ``kam_iterate`` uses the quasi-inverse with t-independent divisors and
  iterates inner corrections until the window is clean; the leftover
  t-dependent residual feeds the next correction. Norms of residuals and
  generators are logged on shrinking radii.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import in_class
from .homological import formal_inverse, quasi_inverse
from .norms import l1_majorant, coeff_sup_norm
from .series import (Derivation, Series, TransformChain, graded_component, hamiltonian_h0, is_real, mul,
                     order_window, poisson)
from .splitting import g_by_degree, pi_f, pi_g

REALITY_TOL = 1e-13
CERT_TOL = 1e-10
DEFAULT_S0 = 0.25


class CapOverflow(ValueError):
    pass


class ClassMembershipError(ValueError):
    pass


def window(k: int) -> tuple[int, int]:
    return 2 ** k + 1, 2 ** (k + 1)


def radius_schedule(s0: float, K: int) -> list[float]:
    """s_0 > s_1 > ... with s_{k+1} = s_k - s0 2^{-(k+2)}, limit s0/2."""
    radii = [float(s0)]
    for k in range(K):
        radii.append(radii[-1] - s0 * 2.0 ** (-(k + 2)))
    return radii


def check_input(H: Series, alpha, K: int) -> Series:
    """Validate H = H_0 + o(2) and the cap budget; return H_0."""
    if 2 ** (K + 1) > H.deg_cap:
        raise CapOverflow(f"K={K} needs degree 2^{K + 1} = {2 ** (K + 1)} > deg_cap={H.deg_cap}")
    if len(alpha) != H.n:
        raise ValueError("alpha needs one entry per degree of freedom")
    H0 = hamiltonian_h0(H, alpha)
    low = order_window(H - H0, 0, 2)
    if not low.is_zero():
        raise ValueError(f"H - H_0 has terms of weighted degree <= 2 (max |c| = {low.max_abs():.3g})")
    return H0


def g_residual(H: Series, H0: Series):
    """(A, B, C) components of H - H_0."""
    return pi_g(H - H0)


def _components(g):
    a, b, c = g
    return [b, *a, *c]


def residual_norms(g, s: float) -> tuple[float, float]:
    """(coeff sup, l1 majorant) of the G-residual at radius s."""
    parts = _components(g)
    return (max(coeff_sup_norm(x, s) for x in parts), math.fsum(l1_majorant(x, s) for x in parts))


def residual_min_degree(g) -> float:
    a, b, c = g
    return min([b.order()] + [x.order() + 2 for x in a] + [x.order() + 2 for x in c])


def residual_max_upto(g, d: int) -> float:
    """Largest |coefficient| among G-residual monomials of weighted degree <= d."""
    return max([0.0] + [v for deg, v in g_by_degree(*g).items() if deg <= d])


def derivation_norm(u: Derivation, s: float) -> float:
    """l1 majorant of the generator plus the shift coefficients: the u-norm proxy."""
    return l1_majorant(u.generator, s) + math.fsum(l1_majorant(a, s) for a in u.shift)


def _window_derivation(u: Derivation, lo: int, hi: int) -> Derivation:
    shift = tuple(order_window(a, lo - 2, hi - 2) for a in u.shift)
    return Derivation(shift, order_window(u.generator, lo, hi))


@dataclass
class StepRecord:
    k: int
    window: tuple
    radius: float
    r_coeffsup: float
    r_l1: float
    u_norm: float
    min_residual_degree: float
    inner_iterations: int = 1
    tameness: float | None = None
    window_norm: float | None = None
    b_ratio: float | None = None

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["window"] = list(self.window)
        for key in ("min_residual_degree",):
            if d[key] == math.inf:
                d[key] = None
        return d


@dataclass
class NormalizationCertificate:
    K: int
    residual_report: float
    final_normal_form: Series
    reality_preserved: bool
    quadratic_slopes: list
    input_real: bool = True
    tolerance: float = CERT_TOL
    min_degrees: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.residual_report <= self.tolerance

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "residual_report": self.residual_report,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "reality_preserved": self.reality_preserved,
            "input_real": self.input_real,
            "quadratic_slopes": self.quadratic_slopes,
            "min_degrees": [None if d == math.inf else d for d in self.min_degrees],
            "normal_form_terms": len(self.final_normal_form),
        }


@dataclass
class IterationState:
    k: int
    H_current: Series
    normal_accum: Series
    chain: TransformChain
    radii: list
    norm_log: list
    fitted_b: float | None = None
    divergent: bool = False
    inner_log: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "radii": self.radii,
            "steps": [r.to_json() for r in self.norm_log],
            "fitted_B": self.fitted_b,
            "divergent": self.divergent,
            "inner": self.inner_log,
        }


def decay_slopes(values) -> list[float]:
    """log r_{k+1} / log r_k while both are nonzero and below 1."""
    out = []
    for a, b in zip(values, values[1:]):
        if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
            break
        out.append(math.log(b) / math.log(a))
    return out


def _certificate(H: Series, H0: Series, chain: TransformChain, K: int, r_values, min_degrees, scale) -> NormalizationCertificate:
    g = g_residual(H, H0)
    real_in = bool(is_real(H0) and scale["real"])
    imag = max([0.0] + [u.max_imag() for u in chain.steps])
    return NormalizationCertificate(
        K=K,
        residual_report=residual_max_upto(g, 2 ** (K + 1)),
        final_normal_form=pi_f(H),
        reality_preserved=bool(real_in and imag <= REALITY_TOL),
        quadratic_slopes=decay_slopes(r_values),
        input_real=real_in,
        tolerance=CERT_TOL * max(scale["size"], 1e-300),
        min_degrees=min_degrees,
    )


def _step_formal(base: Series, alpha, lo: int, hi: int) -> Derivation:
    u = Derivation.zero(base)
    for d in range(lo, hi + 1):
        trial = base.truncate(d) if u.is_zero() else u.exp(base, -1.0, max_deg=d)
        g = pi_g(graded_component(trial, d))
        if all(x.is_zero() for x in (g[1], *g[0], *g[2])):
            continue
        u = u + formal_inverse(g, alpha)
    return u


def formal_normalize(H: Series, alpha, K: int, s0: float = DEFAULT_S0):
    """Exact order-doubling normalisation; returns (chain, certificate, records)."""
    H0 = check_input(H, alpha, K)
    scale = {"size": H.max_abs(), "real": is_real(H)}
    radii = radius_schedule(s0, K)
    cur = H
    chain = TransformChain([])
    g = g_residual(cur, H0)
    r0 = residual_norms(g, radii[0])
    records = [StepRecord(0, (0, 2), radii[0], r0[0], r0[1], 0.0, residual_min_degree(g))]
    for k in range(1, K + 1):
        lo, hi = window(k)
        u = _step_formal(cur, alpha, lo, hi)
        cur = u.exp(cur, -1.0)
        chain.steps.append(u)
        g = g_residual(cur, H0)
        rc, rl = residual_norms(g, radii[k])
        records.append(StepRecord(k, (lo, hi), radii[k], rc, rl, derivation_norm(u, radii[k]),
                                  residual_min_degree(g)))
    cert = _certificate(cur, H0, chain, K, [r.r_coeffsup for r in records],
                        [r.min_residual_degree for r in records[1:]], scale)
    return chain, cert, records


def _split_normal(trial: Series, H0: Series):
    """a_n = H_0 + pi_F(trial - H_0) and beta_n = trial - a_n."""
    drift = pi_f(trial - H0)
    a_n = H0 + drift
    return a_n, trial - a_n


def kam_iterate(H: Series, alpha, lower_seq, K: int, s0: float = DEFAULT_S0, max_inner: int | None = None,
                check_class: bool = True):
    """Analytic-mode normalisation with norm and tameness logging.

    Level k uses divisors of level k + 1, so the class condition is checked
    for sigma(alpha)_j >= a_j, j = 0..K+1. Inside level k the corrections
    delta_n = j(a_n)(pi_G beta_n restricted to the window) are summed into
    a single u_k; the normal part a_n is refreshed after each correction.
    """
    H0 = check_input(H, alpha, K)
    lower_seq = list(lower_seq)
    if len(lower_seq) < K + 2:
        raise ClassMembershipError(f"lower sequence needs {K + 2} entries, got {len(lower_seq)}")
    if check_class:
        ok, first = in_class(alpha, lower_seq, K + 1)
        if not ok:
            raise ClassMembershipError(f"sigma(alpha)_{first} < a_{first}")
    budget = max_inner if max_inner is not None else 4 * (H.t_cap + 2) + 4
    scale = {"size": H.max_abs(), "real": is_real(H)}
    radii = radius_schedule(s0, K)
    chain = TransformChain([])
    cur = H
    g = g_residual(cur, H0)
    r0 = residual_norms(g, radii[0])
    log = [StepRecord(0, (0, 2), radii[0], r0[0], r0[1], 0.0, residual_min_degree(g))]
    inner_log = []
    divergent = False
    a_n = H0
    for k in range(1, K + 1):
        lo, hi = window(k)
        level = k + 1
        u = Derivation.zero(cur)
        w0 = None
        n_inner = 0
        for n_inner in range(1, budget + 1):
            trial = cur if u.is_zero() else u.exp(cur, -1.0)
            a_n, beta = _split_normal(trial, H0)
            gw = pi_g(order_window(beta, lo, hi))
            wn = math.fsum(l1_majorant(x, radii[k - 1]) for x in _components(gw))
            if w0 is None:
                w0 = wn
            inner_log.append({"k": k, "n": n_inner, "window_l1": wn})
            if wn == 0.0:
                break
            delta = _window_derivation(quasi_inverse(a_n, gw, alpha, level), lo, hi)
            u = u + delta
        else:
            divergent = True
        cur = trial if u.is_zero() else u.exp(cur, -1.0)
        a_n, _ = _split_normal(cur, H0)
        chain.steps.append(u)
        g = g_residual(cur, H0)
        rc, rl = residual_norms(g, radii[k])
        un = derivation_norm(u, radii[k])
        p_k = lower_seq[level]
        b_ratio = un * p_k / w0 if w0 else None
        log.append(StepRecord(k, (lo, hi), radii[k], rc, rl, un, residual_min_degree(g), n_inner, p_k, w0, b_ratio))
        if rc > log[-2].r_coeffsup:
            divergent = True
    ratios = [r.b_ratio for r in log if r.b_ratio is not None]
    state = IterationState(K, cur, a_n, chain, radii, log, max(ratios) if ratios else None, divergent, inner_log)
    cert = _certificate(cur, H0, chain, K, [r.r_coeffsup for r in log],
                        [r.min_residual_degree for r in log[1:]], scale)
    return chain, state, cert


def relative_difference(f: Series, g: Series) -> dict:
    """Compare two series: max |delta| on shared monomials over the largest |c|."""
    f._check(g)
    common, i, j = np.intersect1d(f.keys, g.keys, assume_unique=True, return_indices=True)
    size = max(f.max_abs(), g.max_abs())
    shared = float(np.abs(f.coeffs[i] - g.coeffs[j]).max()) if common.size else 0.0
    only_f = np.setdiff1d(f.keys, common)
    only_g = np.setdiff1d(g.keys, common)
    lone = max([0.0] + [float(np.abs(f.coeffs[np.isin(f.keys, only_f)]).max(initial=0.0)),
                        float(np.abs(g.coeffs[np.isin(g.keys, only_g)]).max(initial=0.0))])
    return {
        "shared": int(common.size),
        "relative": shared / size if size else 0.0,
        "unshared": int(only_f.size + only_g.size),
        "unshared_max_relative": lone / size if size else 0.0,
    }


# ---------------------------------------------------------------------------
# involutivity


def _lambda_solution(generators) -> list[Series]:
    """Lambda_m(t, q, p) with K_m(t, Lambda, q, p) = 0, assuming K_m = -l_m + ..."""
    like = generators[0]
    lay = like.layout
    n = like.n
    lam = [like.var(lay.lam(m)) for m in range(n)]
    # K_m + l_m carries no bare l_m term
    rest = [K + lam[m] for m, K in enumerate(generators)]
    sol = [order_window(r, 0, like.deg_cap).select(~r.exps[:, n:2 * n].any(axis=1)) if r.keys.size else r
           for r in rest]
    budget = (like.deg_cap + 1) * (like.t_cap + 1) + 2
    for _ in range(budget):
        new = [eliminate_lambda(r, sol) for r in rest]
        if all((a - b).is_zero() for a, b in zip(new, sol)):
            return new
        sol = new
    raise ValueError("lambda elimination did not converge; generators are not of the form -l_m + ...")


def eliminate_lambda(f: Series, lam_values) -> Series:
    """f with every l_m replaced by the series lam_values[m]."""
    if f.is_zero():
        return f
    n = f.n
    lay = f.layout
    L = f.exps[:, n:2 * n]
    if not L.any():
        return f
    lunit = lay.units[n:2 * n]
    patterns, inverse = np.unique(L, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    powers: dict[tuple, Series] = {}

    def power(m, e):
        if (m, e) not in powers:
            powers[(m, e)] = f.const(1.0) if e == 0 else mul(power(m, e - 1), lam_values[m])
        return powers[(m, e)]

    out = f.zero()
    for pi, pat in enumerate(patterns):
        part = f.select(inverse == pi)
        stripped = part._new(part.keys - pat @ lunit, part.coeffs, aggregate=False)
        factor = f.const(1.0)
        for m, e in enumerate(pat):
            if e:
                factor = mul(factor, power(m, int(e)))
        out = out + mul(stripped, factor)
    return out


@dataclass
class InvolutivityReport:
    pairs: list
    max_relative: float

    def to_json(self) -> dict:
        return {"pairs": self.pairs, "max_relative": self.max_relative}


def ideal_remainder(f: Series, generators) -> Series:
    """Remainder of f modulo the ideal (K_1..K_n), computed by eliminating l."""
    return eliminate_lambda(f, _lambda_solution(list(generators)))


def t_reliable_degree(t_cap: int, K: int) -> int:
    """Highest t-degree left untouched by cap truncation after K levels.

    Each level applies a shift a(t, l) d/dt, which pulls dropped t^(T+1)
    content one t-degree down, so the top K t-degrees carry truncation error.
    """
    return t_cap - K


def involutivity_check(generators, extra=None, t_max: int | None = None) -> InvolutivityReport:
    """Reduce {K_a, K_b} (and {X, K_m} for X in ``extra``) modulo the ideal of the K_m.

    With ``t_max`` only remainder terms of total t-degree <= t_max are measured.
    """
    gens = list(generators)
    lam = _lambda_solution(gens)
    scale = max(K.max_abs() for K in gens)
    pairs = []
    todo = [(f"K{a + 1}", gens[a], b) for a in range(len(gens)) for b in range(a + 1, len(gens))]
    for name, X in (extra or {}).items():
        todo += [(name, X, b) for b in range(len(gens))]
    worst = 0.0
    for name, X, b in todo:
        br = poisson(X, gens[b])
        rem = eliminate_lambda(br, lam)
        if t_max is not None and not rem.is_zero():
            rem = rem.select(rem.exps[:, :rem.n].sum(axis=1) <= t_max)
        size = max(scale, X.max_abs())
        rel = rem.max_abs() / size if size else 0.0
        worst = max(worst, rel)
        pairs.append({"left": name, "right": f"K{b + 1}", "bracket_max": br.max_abs(),
                      "remainder_max": rem.max_abs(), "relative": rel,
                      "remainder_order": None if rem.order() == math.inf else float(rem.order())})
    return InvolutivityReport(pairs, worst)


def transformed_integrals(chain: TransformChain, like: Series) -> list[Series]:
    """K_m = chain applied backward to mu_m."""
    from .series import mu
    return [chain.backward(mu(like, m)) for m in range(like.n)]


# ---------------------------------------------------------------------------
# reports


def norm_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "s_k", "r_coeffsup", "r_l1", "u_norm"])
    for r in records:
        w.writerow([r.k, repr(r.radius), repr(r.r_coeffsup), repr(r.r_l1), repr(r.u_norm)])
    return buf.getvalue()


def run_report(config: dict, records, cert: NormalizationCertificate, fitted_b=None, extra=None) -> str:
    body = {
        "schema_version": 1,
        "config": config,
        "steps": [r.to_json() for r in records],
        "fitted_B": fitted_b,
        "certificate": cert.to_json(),
    }
    if extra:
        body.update(extra)
    return json.dumps(body, sort_keys=True, indent=1)
