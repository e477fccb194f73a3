"""Small-divisor sequences sigma(alpha)_k, arithmetic classes and Bruno sums.

sigma(alpha)_k = min |(alpha, i)| over nonzero integer i with |i| <= 2^k,
computed by brute-force enumeration of the integer box (half of it, using
i <-> -i). For n = 2 an independent continued-fraction oracle recovers the
same minimum from the convergents of alpha_2 / alpha_1.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

K_MAX = {1: 20, 2: 14, 3: 8}
_ROWS = 1 << 22


def _kmax(n: int) -> int:
    return K_MAX.get(n, 4)


def _norm_ok(vecs: np.ndarray, bound: int, norm: str) -> np.ndarray:
    if norm == "sup":
        return np.ones(vecs.shape[0], bool)
    if norm == "l1":
        return np.abs(vecs).sum(axis=1) <= bound
    if norm == "l2":
        return (vecs.astype(np.float64) ** 2).sum(axis=1) <= float(bound) ** 2
    raise ValueError(f"unknown norm {norm!r}")


def _box_min(alpha: np.ndarray, B: int, norm: str):
    """(min value, witness) over the half box of nonzero vectors with |i|_inf <= B."""
    n = alpha.size
    best, witness = math.inf, None
    if n == 1:
        vals = np.abs(alpha[0] * np.arange(1, B + 1))
        vecs = np.arange(1, B + 1)[:, None]
        ok = _norm_ok(vecs, B, norm)
        i = int(np.argmin(np.where(ok, vals, np.inf)))
        return float(vals[i]), (i + 1,)
    last = np.arange(-B, B + 1)
    # the leading n-2 coordinates are enumerated; the last two are vectorised
    for prefix in itertools.product(range(-B, B + 1), repeat=n - 2):
        first_nz = next((x for x in prefix if x), 0)
        if first_nz < 0:
            continue
        base = sum(a * x for a, x in zip(alpha[:-2], prefix)) if prefix else 0.0
        rows = np.arange(0 if first_nz == 0 else -B, B + 1)
        for start in range(0, rows.size, max(1, _ROWS // last.size)):
            r = rows[start:start + max(1, _ROWS // last.size)]
            vals = np.abs(base + alpha[-2] * r[:, None] + alpha[-1] * last[None, :])
            if first_nz == 0:
                # half box: (i_{n-1} > 0) or (i_{n-1} == 0 and i_n > 0)
                mask = (r[:, None] > 0) | ((r[:, None] == 0) & (last[None, :] > 0))
                vals = np.where(mask, vals, np.inf)
            if norm != "sup":
                rr, ll = np.meshgrid(r, last, indexing="ij")
                full = np.column_stack([np.repeat(np.array(prefix, dtype=np.int64)[None, :], rr.size, axis=0),
                                        rr.ravel(), ll.ravel()]) if prefix else np.column_stack([rr.ravel(), ll.ravel()])
                vals = np.where(_norm_ok(full, B, norm).reshape(vals.shape), vals, np.inf)
            idx = int(np.argmin(vals))
            v = float(vals.flat[idx])
            if v < best:
                best = v
                a, b = divmod(idx, last.size)
                witness = tuple(prefix) + (int(r[a]), int(last[b]))
    return best, witness


def sigma(alpha: Sequence[complex], k: int, norm: str = "sup", k_max: int | None = None) -> float:
    """sigma(alpha)_k by exhaustive enumeration."""
    return sigma_with_witness(alpha, k, norm, k_max)[0]


def sigma_with_witness(alpha, k: int, norm: str = "sup", k_max: int | None = None):
    a = np.asarray(alpha)
    a = a.astype(np.complex128) if np.iscomplexobj(a) else a.astype(np.float64)
    if not np.any(a):
        raise ValueError("alpha must be nonzero")
    limit = _kmax(a.size) if k_max is None else k_max
    if k < 0 or k > limit:
        raise ValueError(f"k={k} exceeds the enumeration budget k_max={limit} for n={a.size}")
    return _box_min(a, 2 ** k, norm)


def sigma_sequence(alpha, K: int, norm: str = "sup", k_max: int | None = None) -> list[float]:
    a = np.asarray(alpha)
    if a.size == 2 and norm == "sup" and not np.iscomplexobj(a):
        limit = _kmax(2) if k_max is None else k_max
        if K > limit:
            raise ValueError(f"k={K} exceeds the enumeration budget k_max={limit} for n=2")
        return _nested_sup_2d(a.astype(np.float64), K)
    return [sigma(alpha, k, norm, k_max) for k in range(K + 1)]


def _nested_sup_2d(alpha: np.ndarray, K: int) -> list[float]:
    """All boxes 2^0..2^K in one sweep of the largest half box (n = 2, sup norm)."""
    B = 2 ** K
    cols = np.arange(-B, B + 1)
    best = [math.inf] * (K + 1)
    step = max(1, _ROWS // cols.size)
    for start in range(0, B + 1, step):
        r = np.arange(start, min(B, start + step - 1) + 1)
        vals = np.abs(alpha[0] * r[:, None] + alpha[1] * cols[None, :])
        if start == 0:
            vals[0, : B + 1] = np.inf  # i_1 = 0 needs i_2 > 0
        for k in range(K + 1):
            b = 2 ** k
            rows = r <= b
            if not rows.any():
                continue
            best[k] = min(best[k], float(vals[rows][:, B - b:B + b + 1].min()))
    return best


def convergents(x: Fraction):
    """Continued-fraction convergents p/q of a rational x, as (p, q) pairs."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    while True:
        a = math.floor(x)
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        yield p1, q1
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def sigma_cf(alpha2: Sequence[float], k: int) -> float:
    """sigma(alpha)_k for n = 2 from best rational approximations.

    With gamma = alpha_2 / alpha_1, the minimisers of |alpha_1 i_1 + alpha_2 i_2|
    in the box |i|_inf <= 2^k are among (p, -q) for convergents p/q of |gamma|
    (up to the sign of gamma) and the axis vectors. The convergents are those
    of the exact rational value of the float ratio.
    """
    a1, a2 = (float(x) for x in alpha2)
    if a1 == 0 or a2 == 0:
        raise ValueError("degenerate frequency vector")
    B = 2 ** k
    gamma = Fraction(a2) / Fraction(a1)
    sign = 1 if gamma > 0 else -1
    cands = [(1, 0), (0, 1)]
    for p, q in convergents(abs(gamma)):
        if q > B:
            break
        if p <= B:
            cands.append((p, -sign * q))
    # the same float expression as the enumeration
    return min(abs(a1 * i1 + a2 * i2) for i1, i2 in cands)


@dataclass
class BrunoReport:
    partials: list
    total: float
    divergent: bool
    closed_form: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


def bruno_sum(lower_seq: Sequence[float], K: int | None = None, geometric: tuple | None = None,
              tail_tol: float = 1e-6) -> BrunoReport:
    """Partial sums of sum_k log a_k / 2^k.

    The sum is flagged divergent when the last term is not below ``tail_tol``.
    ``geometric=(c, rho)`` adds the closed form 2 log c + 2 log rho.
    """
    seq = list(lower_seq)[: None if K is None else K + 1]
    if any(a <= 0 for a in seq):
        raise ValueError("lower sequence must be positive")
    if any(b > a for a, b in zip(seq, seq[1:])):
        raise ValueError("lower sequence must be nonincreasing")
    terms = [math.log(a) / 2.0 ** k for k, a in enumerate(seq)]
    partials = list(itertools.accumulate(terms))
    closed = None
    if geometric is not None:
        c, rho = geometric
        closed = 2 * math.log(c) + 2 * math.log(rho)
    return BrunoReport(partials, math.fsum(terms), bool(abs(terms[-1]) >= tail_tol), closed)


def geometric_sequence(c: float, rho: float, K: int) -> list[float]:
    return [c * rho ** k for k in range(K + 1)]


def in_class(alpha, lower_seq: Sequence[float], K: int, norm: str = "sup", sigmas=None):
    """(member, first failing k) for sigma(alpha)_k >= a_k, k = 0..K."""
    sig = sigmas if sigmas is not None else sigma_sequence(alpha, K, norm)
    for k in range(K + 1):
        if sig[k] < lower_seq[k]:
            return False, k
    return True, None


@dataclass
class DiophantineProfile:
    alpha: list
    sigma: list
    a: list
    bruno: list
    member: bool | None
    first_fail: int | None
    witnesses: list = field(default_factory=list)

    @classmethod
    def compute(cls, alpha, lower_seq, K: int, norm: str = "sup") -> "DiophantineProfile":
        sig, wit = [], []
        for k in range(K + 1):
            v, w = sigma_with_witness(alpha, k, norm)
            sig.append(v)
            wit.append(list(w))
        if lower_seq is None:
            return cls([_num(a) for a in alpha], sig, [], [], None, None, wit)
        seq = list(lower_seq)[: K + 1]
        if len(seq) < K + 1:
            raise ValueError(f"lower sequence needs {K + 1} entries")
        member, first = in_class(alpha, seq, K, norm, sigmas=sig)
        return cls([_num(a) for a in alpha], sig, seq, bruno_sum(seq).partials, member, first, wit)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("witnesses")
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _num(a):
    return a if isinstance(a, (int, float)) else [complex(a).real, complex(a).imag]
