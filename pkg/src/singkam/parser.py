"""Polynomial expressions <-> Series.

Grammar (whitespace is ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' INT)?
    atom   := NUMBER ['i'] | VAR | 'alpha' INT | '(' expr ')'

VAR is one of q<k>, p<k>, l<k>, t<k> with 1 <= k <= n. ``alpha<k>`` expands
to the configured frequency. Arithmetic is carried out on exact exponent
dictionaries and checked against the caps before building the Series, so
nothing is silently truncated.
"""
from __future__ import annotations

import re
from typing import Sequence

from .series import Series, layout_for

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_]+\d*")
_BLOCKS = {"t": 0, "l": 1, "q": 2, "p": 3}


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        self.pos = pos
        super().__init__(f"{message} at position {pos}")


class CapExceeded(ValueError):
    pass


def _strip(text: str):
    """Characters without whitespace, plus their positions in the original."""
    chars, pos = [], []
    for i, ch in enumerate(text):
        if not ch.isspace():
            chars.append(ch)
            pos.append(i)
    pos.append(len(text))
    return "".join(chars), pos


class _Parser:
    def __init__(self, text: str, n: int, alpha, deg_cap: int, t_cap: int):
        self.src, self.pos_map = _strip(text)
        self.i = 0
        self.n = n
        self.alpha = alpha
        self.weights = layout_for(n, deg_cap, t_cap).weights
        self.deg_cap = deg_cap
        self.t_cap = t_cap

    # -- polynomial dictionaries ----------------------------------------
    def _const(self, c):
        return {(0,) * (4 * self.n): complex(c)} if c != 0 else {}

    @staticmethod
    def _add(a, b, sign=1.0):
        out = dict(a)
        for e, c in b.items():
            out[e] = out.get(e, 0) + sign * c
        return {e: c for e, c in out.items() if c != 0}

    def _mul(self, a, b):
        out = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                self._check_caps(e)
                out[e] = out.get(e, 0) + ca * cb
        return {e: c for e, c in out.items() if c != 0}

    def _check_caps(self, e):
        deg = sum(w * x for w, x in zip(self.weights, e))
        if deg > self.deg_cap:
            raise CapExceeded(f"weighted degree {deg} exceeds deg_cap {self.deg_cap} at position {self._where()}")
        if sum(e[: self.n]) > self.t_cap:
            raise CapExceeded(f"t-degree {sum(e[:self.n])} exceeds t_cap {self.t_cap} at position {self._where()}")

    # -- scanning --------------------------------------------------------
    def _where(self) -> int:
        return self.pos_map[min(self.i, len(self.src))]

    def _peek(self) -> str:
        return self.src[self.i] if self.i < len(self.src) else ""

    def _error(self, msg):
        raise ParseError(msg, self._where())

    def parse(self):
        if not self.src:
            self._error("empty expression")
        out = self.expr()
        if self.i != len(self.src):
            self._error(f"unexpected {self._peek()!r}")
        return out

    def expr(self):
        out = self.term()
        while self._peek() in ("+", "-"):
            sign = 1.0 if self._peek() == "+" else -1.0
            self.i += 1
            out = self._add(out, self.term(), sign)
        return out

    def term(self):
        out = self.unary()
        while self._peek() == "*":
            self.i += 1
            out = self._mul(out, self.unary())
        return out

    def unary(self):
        if self._peek() in ("+", "-"):
            sign = self._peek()
            self.i += 1
            val = self.unary()
            return val if sign == "+" else {e: -c for e, c in val.items()}
        return self.power()

    def power(self):
        base = self.atom()
        if self._peek() == "^":
            self.i += 1
            m = re.match(r"\d+", self.src[self.i:])
            if not m:
                self._error("expected a nonnegative integer exponent")
            self.i += m.end()
            k = int(m.group())
            out = self._const(1.0)
            for _ in range(k):
                out = self._mul(out, base)
            return out
        return base

    def atom(self):
        ch = self._peek()
        if ch == "(":
            self.i += 1
            out = self.expr()
            if self._peek() != ")":
                self._error("expected ')'")
            self.i += 1
            return out
        m = _NUMBER.match(self.src, self.i)
        if m:
            self.i = m.end()
            val = float(m.group())
            if self._peek() == "i":
                self.i += 1
                return self._const(complex(0.0, val))
            return self._const(val)
        m = _NAME.match(self.src, self.i)
        if m:
            start = self.i
            name = m.group()
            self.i = m.end()
            return self._name(name, start)
        self._error(f"unexpected {ch!r}" if ch else "unexpected end of input")

    def _name(self, name: str, start: int):
        mm = re.fullmatch(r"(alpha|[tlqp])(\d+)", name)
        if not mm:
            raise ParseError(f"unknown variable {name!r}", self.pos_map[start])
        kind, idx = mm.group(1), int(mm.group(2))
        if not 1 <= idx <= self.n:
            raise ParseError(f"unknown variable {name!r} (n = {self.n})", self.pos_map[start])
        if kind == "alpha":
            if self.alpha is None:
                raise ParseError(f"{name} used but no frequencies configured", self.pos_map[start])
            return self._const(self.alpha[idx - 1])
        e = [0] * (4 * self.n)
        e[_BLOCKS[kind] * self.n + idx - 1] = 1
        self._check_caps(e)
        return {tuple(e): 1.0 + 0j}


def parse_poly(text: str, n: int, alpha: Sequence[complex] | None = None, deg_cap: int = 16, t_cap: int = 4,
               zero_tol: float = 1e-14) -> Series:
    terms = _Parser(text, n, alpha, deg_cap, t_cap).parse()
    return Series(n, terms, deg_cap, t_cap, zero_tol)


def _var_names(n: int):
    return [f"{b}{i + 1}" for b in "tlqp" for i in range(n)]


def print_poly(f: Series) -> str:
    """Exact text form: ``(re+imi)*q1^2*p1 + ...`` with round-trip floats."""
    if f.is_zero():
        return "0"
    names = _var_names(f.n)
    parts = []
    E = f.exps
    for idx in f.canonical_order():
        c = complex(f.coeffs[idx])
        s = f"({c.real!r}{'+' if c.imag >= 0 or c.imag != c.imag else '-'}{abs(c.imag)!r}i)"
        factors = [s]
        for name, k in zip(names, E[idx]):
            if k == 1:
                factors.append(name)
            elif k > 1:
                factors.append(f"{name}^{int(k)}")
        parts.append("*".join(factors))
    return " + ".join(parts)
