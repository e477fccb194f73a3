"""Decomposition of a series into R + A + B + C + I^2 components.

With mu_i = p_i q_i - l_i, every monomial q^i p^j is rewritten as
prod_k (mu_k + l_k)^{m_k} q^{i-m} p^{j-m} with m = min(i, j). Expanding
the binomials sorts the pieces by the number of mu factors they carry:
none (R or B), exactly one (A or C), two or more (I^2).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .series import Series, mu, mul


@dataclass
class NormalFormSplit:
    r: Series
    a: list
    b: Series
    c: list
    i2: Series
    # mu-exponent vector -> coefficient series, for the I^2 part
    i2_cert: dict = field(default_factory=dict)

    def g_parts(self):
        return self.a, self.b, self.c

    def to_text(self) -> str:
        chunks = [("r", self.r)]
        chunks += [(f"a{i + 1}", s) for i, s in enumerate(self.a)]
        chunks.append(("b", self.b))
        chunks += [(f"c{i + 1}", s) for i, s in enumerate(self.c)]
        chunks.append(("i2", self.i2))
        return "".join(f"[{name}]\n{s.to_text()}" for name, s in chunks)

    @classmethod
    def from_text(cls, text: str, like: Series) -> "NormalFormSplit":
        blocks: dict[str, list[str]] = {}
        current = None
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                blocks[current] = []
            elif line and current is not None:
                blocks[current].append(line)

        def parse(name):
            return Series.from_text("\n".join(blocks.get(name, [])), like.n, like.deg_cap, like.t_cap, like.zero_tol)

        n = like.n
        return cls(parse("r"), [parse(f"a{i + 1}") for i in range(n)], parse("b"),
                   [parse(f"c{i + 1}") for i in range(n)], parse("i2"))


def _mu_power(like: Series, e) -> Series:
    out = like.const(1.0)
    for i, k in enumerate(e):
        for _ in range(k):
            out = mul(out, mu(like, i))
    return out


def split(f: Series, with_i2: bool = True) -> NormalFormSplit:
    n = f.n
    lay = f.layout
    zero = f.zero()
    if f.is_zero():
        return NormalFormSplit(zero, [zero] * n, zero, [zero] * n, zero, {})
    E = f.exps
    qs, ps, ls = E[:, 2 * n:3 * n], E[:, 3 * n:], E[:, n:2 * n]
    m = np.minimum(qs, ps)
    qunit = lay.units[2 * n:3 * n]
    punit = lay.units[3 * n:]
    lunit = lay.units[n:2 * n]
    base_keys = f.keys - m @ (qunit + punit)
    reduced_is_const = ((qs - m).sum(axis=1) + (ps - m).sum(axis=1)) == 0

    r_k, r_c, b_k, b_c = [], [], [], []
    a_k = [[] for _ in range(n)]
    a_c = [[] for _ in range(n)]
    c_k = [[] for _ in range(n)]
    c_c = [[] for _ in range(n)]
    cert: dict[tuple, tuple[list, list]] = {}

    patterns, inverse = np.unique(m, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    for pi, pat in enumerate(patterns):
        rows = np.nonzero(inverse == pi)[0]
        bk, cf, rc = base_keys[rows], f.coeffs[rows], reduced_is_const[rows]
        for e in itertools.product(*(range(int(x) + 1) for x in pat)):
            e = np.array(e, np.int64)
            binom = float(np.prod([comb(int(a), int(b)) for a, b in zip(pat, e)]))
            keys = bk + (pat - e) @ lunit
            coeffs = cf * binom
            ne = int(e.sum())
            if ne == 0:
                r_k.append(keys[rc]); r_c.append(coeffs[rc])
                b_k.append(keys[~rc]); b_c.append(coeffs[~rc])
            elif ne == 1:
                i = int(np.argmax(e))
                a_k[i].append(keys[rc]); a_c[i].append(coeffs[rc])
                c_k[i].append(keys[~rc]); c_c[i].append(coeffs[~rc])
            else:
                ks, cs = cert.setdefault(tuple(int(x) for x in e), ([], []))
                ks.append(keys); cs.append(coeffs)

    def build(ks, cs):
        if not ks:
            return zero
        return f._new(np.concatenate(ks), np.concatenate(cs))

    i2_cert = {e: build(*kc) for e, kc in sorted(cert.items())}
    i2_cert = {e: s for e, s in i2_cert.items() if not s.is_zero()}
    i2 = zero
    if with_i2:
        for e, s in i2_cert.items():
            i2 = i2 + mul(s, _mu_power(f, e))
    return NormalFormSplit(
        r=build(r_k, r_c),
        a=[build(a_k[i], a_c[i]) for i in range(n)],
        b=build(b_k, b_c),
        c=[build(c_k[i], c_c[i]) for i in range(n)],
        i2=i2,
        i2_cert=i2_cert,
    )


def recombine_g(a, b, c) -> Series:
    """sum_i a_i mu_i + b + sum_i mu_i c_i in original coordinates."""
    out = b
    for i, (ai, ci) in enumerate(zip(a, c)):
        m = mu(b, i)
        if not ai.is_zero():
            out = out + mul(ai, m)
        if not ci.is_zero():
            out = out + mul(m, ci)
    return out


def recombine(s: NormalFormSplit) -> Series:
    return s.r + recombine_g(s.a, s.b, s.c) + s.i2


def pi_g(f: Series):
    """(A, B, C) components of f."""
    s = split(f, with_i2=False)
    return s.a, s.b, s.c


def pi_f(f: Series) -> Series:
    """R + I^2 part of f: everything the G-components do not account for."""
    a, b, c = pi_g(f)
    return f - recombine_g(a, b, c)


def g_residual_size(a, b, c) -> float:
    """Largest coefficient modulus over the A, B, C components."""
    return max([b.max_abs()] + [x.max_abs() for x in a] + [x.max_abs() for x in c])


def g_min_degree(a, b, c) -> float:
    """Smallest weighted degree carried by a nonzero G-component (mu has degree 2)."""
    vals = [b.order()] + [x.order() + 2 for x in a] + [x.order() + 2 for x in c]
    return min(vals)


def g_by_degree(a, b, c) -> dict[int, float]:
    """Max coefficient modulus of the G-part, per weighted degree."""
    out: dict[int, float] = {}
    for s, shift in [(b, 0)] + [(x, 2) for x in a] + [(x, 2) for x in c]:
        for d, v in zip(s.degrees + shift, np.abs(s.coeffs)):
            out[int(d)] = max(out.get(int(d), 0.0), float(v))
    return dict(sorted(out.items()))
