"""Sparse truncated power series in the variables (t, lambda, q, p).

A series in dimension ``n`` lives in 4n variables ordered as
``t_1..t_n, l_1..l_n, q_1..q_n, p_1..p_n``. The weighted degree gives
q and p weight 1, lambda weight 2 and t weight 0; t-exponents are bounded
separately by ``t_cap``.

Monomials are packed into int64 keys (one bit field per variable) so that
products and brackets reduce to vectorised integer additions.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_ZERO_TOL = 1e-14
DEFAULT_T_CAP = 4
_CHUNK = 1 << 22


class CapMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    """Bit layout of packed monomial keys for given caps."""

    n: int
    deg_cap: int
    t_cap: int

    def __post_init__(self):
        caps = [self.t_cap] * self.n + [self.deg_cap // 2] * self.n + [self.deg_cap] * (2 * self.n)
        bits = [max(1, int(c).bit_length()) for c in caps]
        if sum(bits) > 63:
            raise ValueError(
                f"caps (n={self.n}, deg_cap={self.deg_cap}, t_cap={self.t_cap}) "
                "do not fit a 63-bit monomial key"
            )
        shifts = np.concatenate([[0], np.cumsum(bits)[:-1]]).astype(np.int64)
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "masks", np.array([(1 << b) - 1 for b in bits], dtype=np.int64))
        object.__setattr__(self, "caps", np.array(caps, dtype=np.int64))
        w = np.array([0] * self.n + [2] * self.n + [1] * (2 * self.n), dtype=np.int64)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "units", np.left_shift(np.int64(1), shifts))

    @property
    def nvars(self) -> int:
        return 4 * self.n

    def pack(self, exps: np.ndarray) -> np.ndarray:
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, self.nvars)
        return (exps << self.shifts).sum(axis=1).astype(np.int64)

    def unpack(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64)
        return (keys[:, None] >> self.shifts) & self.masks

    # variable index helpers
    def t(self, i: int) -> int:
        return i

    def lam(self, i: int) -> int:
        return self.n + i

    def q(self, i: int) -> int:
        return 2 * self.n + i

    def p(self, i: int) -> int:
        return 3 * self.n + i


@lru_cache(maxsize=None)
def layout_for(n: int, deg_cap: int, t_cap: int) -> Layout:
    return Layout(n, deg_cap, t_cap)


def _aggregate(keys: np.ndarray, coeffs: np.ndarray, tol: float):
    if keys.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.complex128)
    uk, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, weights=coeffs.real, minlength=uk.size)
    im = np.bincount(inv, weights=coeffs.imag, minlength=uk.size)
    c = re + 1j * im
    # relative to the largest raw contribution: cancellation to rounding level prunes
    keep = np.abs(c) > tol * np.abs(coeffs).max()
    return uk[keep], c[keep]


class Series:
    """Immutable sparse truncated series with complex coefficients.

    Build from a mapping ``{exponent tuple: coefficient}`` where each tuple
    has length 4n in the (t, l, q, p) order. Monomials beyond the caps are
    dropped. Every operation prunes coefficients whose modulus is at most
    ``zero_tol`` times the largest raw contribution entering that operation,
    so rounding-level cancellation disappears while small series keep their
    relative precision.
    """

    __slots__ = ("n", "deg_cap", "t_cap", "zero_tol", "layout", "keys", "coeffs", "_exps", "_deg", "_tdeg")

    def __init__(
        self,
        n: int,
        terms: Mapping[Sequence[int], complex] | None = None,
        deg_cap: int = 16,
        t_cap: int = DEFAULT_T_CAP,
        zero_tol: float = DEFAULT_ZERO_TOL,
    ):
        self.n = n
        self.deg_cap = deg_cap
        self.t_cap = t_cap
        self.zero_tol = zero_tol
        self.layout = layout_for(n, deg_cap, t_cap)
        if terms:
            exps = np.array([tuple(e) for e in terms.keys()], dtype=np.int64).reshape(-1, 4 * n)
            if (exps < 0).any():
                raise ValueError("negative exponent")
            coeffs = np.array(list(terms.values()), dtype=np.complex128)
            deg = exps @ self.layout.weights
            tdeg = exps[:, :n].sum(axis=1)
            ok = (deg <= deg_cap) & (tdeg <= t_cap)
            keys, coeffs = _aggregate(self.layout.pack(exps[ok]), coeffs[ok], zero_tol)
        else:
            keys, coeffs = np.empty(0, np.int64), np.empty(0, np.complex128)
        self._set(keys, coeffs)

    def _set(self, keys, coeffs):
        keys.flags.writeable = False
        coeffs.flags.writeable = False
        self.keys = keys
        self.coeffs = coeffs
        self._exps = None
        self._deg = None
        self._tdeg = None

    def _new(self, keys, coeffs, aggregate=True) -> "Series":
        out = object.__new__(Series)
        out.n, out.deg_cap, out.t_cap, out.zero_tol, out.layout = (
            self.n, self.deg_cap, self.t_cap, self.zero_tol, self.layout)
        if aggregate:
            keys, coeffs = _aggregate(np.asarray(keys, np.int64), np.asarray(coeffs, np.complex128), self.zero_tol)
        out._set(keys, coeffs)
        return out

    def zero(self) -> "Series":
        return self._new(np.empty(0, np.int64), np.empty(0, np.complex128), aggregate=False)

    def const(self, c: complex) -> "Series":
        return self._new(np.zeros(1, np.int64), np.array([c], np.complex128))

    def var(self, index: int, power: int = 1, coeff: complex = 1.0) -> "Series":
        e = np.zeros(4 * self.n, np.int64)
        e[index] = power
        if e @ self.layout.weights > self.deg_cap or e[: self.n].sum() > self.t_cap:
            return self.zero()
        return self._new(self.layout.pack(e), np.array([coeff], np.complex128))

    def monomial(self, exps: Sequence[int], coeff: complex = 1.0) -> "Series":
        return Series(self.n, {tuple(exps): coeff}, self.deg_cap, self.t_cap, self.zero_tol)

    # -- inspection -------------------------------------------------------
    @property
    def exps(self) -> np.ndarray:
        if self._exps is None:
            self._exps = self.layout.unpack(self.keys)
        return self._exps

    @property
    def degrees(self) -> np.ndarray:
        if self._deg is None:
            self._deg = self.exps @ self.layout.weights if self.keys.size else np.empty(0, np.int64)
        return self._deg

    @property
    def tdegrees(self) -> np.ndarray:
        if self._tdeg is None:
            self._tdeg = self.exps[:, : self.n].sum(axis=1) if self.keys.size else np.empty(0, np.int64)
        return self._tdeg

    @property
    def plain_degrees(self) -> np.ndarray:
        return self.exps.sum(axis=1) if self.keys.size else np.empty(0, np.int64)

    def __len__(self) -> int:
        return int(self.keys.size)

    def is_zero(self) -> bool:
        return self.keys.size == 0

    def order(self) -> float:
        """Minimal weighted degree, ``inf`` for the zero series."""
        return float(self.degrees.min()) if self.keys.size else float("inf")

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if self.keys.size else 0.0

    def to_dict(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(x) for x in e): complex(c) for e, c in zip(self.exps, self.coeffs)}

    def coeff(self, exps: Sequence[int]) -> complex:
        key = int(self.layout.pack(np.asarray(exps))[0])
        i = np.searchsorted(self.keys, key)
        if i < self.keys.size and self.keys[i] == key:
            return complex(self.coeffs[i])
        return 0j

    def canonical_order(self) -> np.ndarray:
        """Permutation sorting terms graded-lexicographically on (deg, t, l, q, p)."""
        if not self.keys.size:
            return np.empty(0, np.int64)
        cols = [self.exps[:, j] for j in range(4 * self.n - 1, -1, -1)]
        return np.lexsort(cols + [self.degrees])

    def items(self):
        for i in self.canonical_order():
            yield tuple(int(x) for x in self.exps[i]), complex(self.coeffs[i])

    def same_caps(self, other: "Series") -> bool:
        return (self.n, self.deg_cap, self.t_cap) == (other.n, other.deg_cap, other.t_cap)

    def _check(self, other: "Series"):
        if not self.same_caps(other):
            raise CapMismatch(
                f"series caps differ: {(self.n, self.deg_cap, self.t_cap)} vs "
                f"{(other.n, other.deg_cap, other.t_cap)}"
            )

    # -- linear structure -------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Series):
            return self + self.const(other)
        self._check(other)
        return self._new(np.concatenate([self.keys, other.keys]), np.concatenate([self.coeffs, other.coeffs]))

    __radd__ = __add__

    def __neg__(self):
        return self._new(self.keys, -self.coeffs, aggregate=False)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: complex) -> "Series":
        if c == 0:
            return self.zero()
        return self._new(self.keys, self.coeffs * c, aggregate=False)

    def __mul__(self, other):
        if isinstance(other, Series):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, c):
        return self.scale(1.0 / c)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = self.const(1.0)
        for _ in range(k):
            out = mul(out, self)
        return out

    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        return (self.same_caps(other) and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def __repr__(self):
        return f"Series(n={self.n}, terms={len(self)}, deg_cap={self.deg_cap}, t_cap={self.t_cap})"

    def select(self, mask: np.ndarray) -> "Series":
        return self._new(self.keys[mask], self.coeffs[mask], aggregate=False)

    def truncate(self, max_deg: int) -> "Series":
        return self.select(self.degrees <= max_deg)

    def conj(self) -> "Series":
        return self._new(self.keys, np.conj(self.coeffs), aggregate=False)

    def real_part(self) -> "Series":
        return self._new(self.keys, self.coeffs.real.astype(np.complex128))

    # -- calculus ---------------------------------------------------------
    def diff(self, var: int) -> "Series":
        e = self.exps[:, var] if self.keys.size else np.empty(0, np.int64)
        sel = e > 0
        return self._new(self.keys[sel] - self.layout.units[var], self.coeffs[sel] * e[sel])

    def evaluate(self, t=None, lam=None, q=None, p=None) -> complex:
        """Numerical value at a point; missing blocks are set to zero."""
        n = self.n
        point = np.zeros(4 * n, np.complex128)
        for j, block in enumerate((t, lam, q, p)):
            if block is not None:
                point[j * n:(j + 1) * n] = np.asarray(block, np.complex128)
        if not self.keys.size:
            return 0j
        vals = self.coeffs * np.prod(point[None, :] ** self.exps, axis=1)
        return complex(np.sum(vals))

    def substitute(self, var_block: str, values: Sequence[complex]) -> "Series":
        """Evaluate the t or l block at numbers, keeping the other variables."""
        start = {"t": 0, "l": self.n}[var_block]
        vals = np.asarray(values, np.complex128)
        e = self.exps
        if not self.keys.size:
            return self
        factor = np.prod(vals[None, :] ** e[:, start:start + self.n], axis=1)
        e2 = e.copy()
        e2[:, start:start + self.n] = 0
        return self._new(self.layout.pack(e2), self.coeffs * factor)

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        n = self.n
        lines = []
        for e, c in self.items():
            blocks = [" ".join(str(x) for x in e[j * n:(j + 1) * n]) for j in range(4)]
            lines.append(f"{c.real!r} {c.imag!r} : " + " | ".join(blocks))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, n: int, deg_cap: int = 16, t_cap: int = DEFAULT_T_CAP,
                  zero_tol: float = DEFAULT_ZERO_TOL) -> "Series":
        terms: dict[tuple[int, ...], complex] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                head, tail = line.split(":")
                re, im = (float(x) for x in head.split())
                blocks = [tuple(int(x) for x in b.split()) for b in tail.split("|")]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: malformed monomial line {line!r}") from exc
            if len(blocks) != 4 or any(len(b) != n for b in blocks):
                raise ValueError(f"line {lineno}: expected 4 blocks of {n} exponents")
            e = sum(blocks, ())
            terms[e] = terms.get(e, 0j) + complex(re, im)
        return cls(n, terms, deg_cap, t_cap, zero_tol)


# ---------------------------------------------------------------------------
# ring operations

def _convolve(f: Series, g: Series, cap: int, weights_f=None, weights_g=None):
    """Raw product terms of f and g limited to weighted degree <= cap."""
    if f.is_zero() or g.is_zero():
        return [], []
    cf = f.coeffs if weights_f is None else weights_f
    cg = g.coeffs if weights_g is None else weights_g
    order = np.argsort(g.degrees, kind="stable")
    gk, gc, gd, gt = g.keys[order], cg[order], g.degrees[order], g.tdegrees[order]
    tcap = f.t_cap
    out_k, out_c = [], []
    fd = f.degrees
    for deg in np.unique(fd):
        m = int(np.searchsorted(gd, cap - deg, side="right"))
        if m == 0:
            continue
        sel = np.nonzero(fd == deg)[0]
        rows = max(1, _CHUNK // m)
        bk, bc, bt = gk[:m], gc[:m], gt[:m]
        for start in range(0, sel.size, rows):
            s = sel[start:start + rows]
            tt = f.tdegrees[s][:, None] + bt[None, :]
            mask = tt <= tcap
            kk = (f.keys[s][:, None] + bk[None, :])[mask]
            cc = (cf[s][:, None] * bc[None, :])[mask]
            out_k.append(kk)
            out_c.append(cc)
    return out_k, out_c


def _finish(like: Series, ks, cs) -> Series:
    if not ks:
        return like.zero()
    return like._new(np.concatenate(ks), np.concatenate(cs))


def mul(f: Series, g: Series, max_deg: int | None = None) -> Series:
    """Truncated product; monomials above either cap are discarded."""
    f._check(g)
    cap = f.deg_cap if max_deg is None else min(max_deg, f.deg_cap)
    ks, cs = _convolve(f, g, cap)
    return _finish(f, ks, cs)


def poisson(f: Series, g: Series, max_deg: int | None = None) -> Series:
    """Symplectic bracket sum_i d_{q_i}f d_{p_i}g - d_{q_i}g d_{p_i}f.

    t and l are Casimirs. Homogeneous inputs of degrees d1, d2 give degree
    d1 + d2 - 2.
    """
    f._check(g)
    cap = f.deg_cap if max_deg is None else min(max_deg, f.deg_cap)
    lay = f.layout
    ks, cs = [], []
    for i in range(f.n):
        fq, fp = f.diff(lay.q(i)), f.diff(lay.p(i))
        gq, gp = g.diff(lay.q(i)), g.diff(lay.p(i))
        k1, c1 = _convolve(fq, gp, cap)
        k2, c2 = _convolve(gq, fp, cap)
        ks += k1 + k2
        cs += c1 + [-c for c in c2]
    return _finish(f, ks, cs)


def add(f: Series, g: Series) -> Series:
    return f + g


def graded_component(f: Series, d: int) -> Series:
    return f.select(f.degrees == d)


def order_window(f: Series, lo: int, hi: int) -> Series:
    return f.select((f.degrees >= lo) & (f.degrees <= hi))


def conjugate_real(f: Series) -> Series:
    return f.conj()


def is_real(f: Series, tol: float = 0.0) -> bool:
    return bool(np.all(np.abs(f.coeffs.imag) <= tol))


def hamiltonian_h0(like: Series, alpha: Sequence[complex]) -> Series:
    """sum_i (alpha_i + t_i) p_i q_i in the caps of ``like``."""
    lay = like.layout
    out = like.zero()
    for i, a in enumerate(alpha):
        pq = mul(like.var(lay.p(i)), like.var(lay.q(i)))
        out = out + pq.scale(a) + mul(like.var(lay.t(i)), pq)
    return out


def mu(like: Series, i: int) -> Series:
    """The ideal generator p_i q_i - l_i."""
    lay = like.layout
    return mul(like.var(lay.p(i)), like.var(lay.q(i))) - like.var(lay.lam(i))


# ---------------------------------------------------------------------------
# derivations

class NonTerminating(ValueError):
    pass


@dataclass(frozen=True)
class Derivation:
    """v = sum_i a_i d/dt_i + {F, -} with a_i functions of (t, l) only."""

    shift: tuple
    generator: Series

    def __post_init__(self):
        g = self.generator
        if len(self.shift) != g.n:
            raise ValueError("shift must have one entry per degree of freedom")
        for a in self.shift:
            g._check(a)
            if a.keys.size and a.exps[:, 2 * g.n:].any():
                raise ValueError("shift coefficients must depend on (t, l) only")
        object.__setattr__(self, "shift", tuple(self.shift))

    @classmethod
    def zero(cls, like: Series) -> "Derivation":
        return cls(tuple(like.zero() for _ in range(like.n)), like.zero())

    @classmethod
    def hamiltonian(cls, F: Series) -> "Derivation":
        return cls(tuple(F.zero() for _ in range(F.n)), F)

    def is_zero(self) -> bool:
        return self.generator.is_zero() and all(a.is_zero() for a in self.shift)

    @property
    def order(self) -> float:
        """Minimal weighted degree raise; ``inf`` for the zero derivation."""
        vals = [a.order() for a in self.shift] + [self.generator.order() - 2]
        return min(vals)

    def __call__(self, f: Series, max_deg: int | None = None) -> Series:
        out = poisson(self.generator, f, max_deg)
        lay = f.layout
        for i, a in enumerate(self.shift):
            if a.is_zero():
                continue
            dt = f.diff(lay.t(i))
            if not dt.is_zero():
                out = out + mul(a, dt, max_deg)
        return out

    def __add__(self, other: "Derivation") -> "Derivation":
        return Derivation(tuple(a + b for a, b in zip(self.shift, other.shift)), self.generator + other.generator)

    def __neg__(self) -> "Derivation":
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: complex) -> "Derivation":
        return Derivation(tuple(a.scale(c) for a in self.shift), self.generator.scale(c))

    def conj(self) -> "Derivation":
        return Derivation(tuple(a.conj() for a in self.shift), self.generator.conj())

    def max_imag(self) -> float:
        parts = [self.generator] + list(self.shift)
        return max((float(np.abs(s.coeffs.imag).max()) if s.keys.size else 0.0) for s in parts)

    def exp(self, f: Series, sign: float = 1.0, max_deg: int | None = None) -> Series:
        """Lie series sum_m (sign v)^m f / m!, terminating under the degree cap.

        Derivations of order >= 1 terminate after at most cap + 1 terms. Order-0
        derivations are accepted only when they act nilpotently on ``f``.
        """
        if self.is_zero() or f.is_zero():
            return f
        cap = f.deg_cap if max_deg is None else min(max_deg, f.deg_cap)
        budget = cap + 2 if self.order >= 1 else 4 * (cap + f.t_cap) + 8
        out = f.truncate(cap) if max_deg is not None else f
        term = out
        for m in range(1, budget + 1):
            term = self(term, cap).scale(sign / m)
            if term.is_zero():
                return out
            out = out + term
        raise NonTerminating(f"Lie series of an order-{self.order} derivation did not terminate")


def apply_derivation(v: Derivation, f: Series) -> Series:
    return v(f)


def exp_derivation(v: Derivation, f: Series, sign: float = 1.0) -> Series:
    return v.exp(f, sign)


@dataclass
class TransformChain:
    """Ordered derivations u_1..u_K; the normalising map is e^{-u_K}...e^{-u_1}."""

    steps: list

    def forward(self, f: Series) -> Series:
        for u in self.steps:
            f = u.exp(f, -1.0)
        return f

    def backward(self, f: Series) -> Series:
        for u in reversed(self.steps):
            f = u.exp(f, 1.0)
        return f

    def __len__(self):
        return len(self.steps)


def random_series(rng: np.random.Generator, like: Series, nterms: int, max_deg: int | None = None,
                  integer: bool = False, min_deg: int = 0, vars_mask: Iterable[int] | None = None,
                  scale: float = 1.0) -> Series:
    """Random sparse series used by the property suites."""
    n = like.n
    cap = like.deg_cap if max_deg is None else max_deg
    allowed = np.array(list(vars_mask) if vars_mask is not None else range(4 * n))
    lay = like.layout
    terms: dict[tuple[int, ...], complex] = {}
    tries = 0
    while len(terms) < nterms and tries < 50 * nterms:
        tries += 1
        e = np.zeros(4 * n, np.int64)
        target = rng.integers(min_deg, cap + 1)
        deg = 0
        while deg < target:
            v = rng.choice(allowed)
            if lay.weights[v] == 0:
                if e[:n].sum() >= like.t_cap:
                    continue
                e[v] += 1
                if rng.random() < 0.5:
                    continue
                break
            if deg + lay.weights[v] > cap:
                break
            e[v] += 1
            deg += lay.weights[v]
        if deg < min_deg:
            continue
        if integer:
            c = complex(rng.integers(-5, 6), rng.integers(-5, 6))
            if c == 0:
                continue
        else:
            c = complex(rng.normal(), rng.normal()) * scale
        terms[tuple(int(x) for x in e)] = c
    return Series(n, terms, like.deg_cap, like.t_cap, like.zero_tol)
