"""Sparse multivariate polynomials with exact rational coefficients.

A polynomial is a map from exponent tuples to nonzero :class:`Fraction`
coefficients. Iteration and text output use descending graded-lex order.
"""
from __future__ import annotations

import re
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb
from typing import Iterable, Mapping, Sequence

Monomial = tuple[int, ...]


def grlex_key(mono: Monomial) -> tuple:
    """Sort key so that ``sorted(..., key=grlex_key, reverse=True)`` is descending grlex."""
    return (sum(mono), mono)


def monomials_of_degree(n: int, degree: int) -> list[Monomial]:
    """All exponent vectors in ``n`` variables of total degree ``degree``, descending grlex."""
    out = []
    for combo in combinations_with_replacement(range(n), degree):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    out.sort(key=grlex_key, reverse=True)
    return out


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact coefficients")
    return Fraction(value)


class ExactPolynomial:
    """Immutable polynomial in ``n`` variables over the rationals."""

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Monomial, object] | None = None):
        if n < 0:
            raise ValueError("variable count must be nonnegative")
        clean: dict[Monomial, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != n:
                raise ValueError(f"exponent vector {mono} has length {len(mono)}, expected {n}")
            if any(e < 0 for e in mono):
                raise ValueError(f"negative exponent in {mono}")
            c = _as_fraction(coeff)
            if c:
                clean[mono] = clean.get(mono, Fraction(0)) + c
                if not clean[mono]:
                    del clean[mono]
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("ExactPolynomial is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> ExactPolynomial:
        return cls(n)

    @classmethod
    def constant(cls, n: int, c) -> ExactPolynomial:
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> ExactPolynomial:
        """The coordinate ``x_{i+1}`` (``i`` is 0-based)."""
        e = [0] * n
        e[i] = 1
        return cls(n, {tuple(e): 1})

    @classmethod
    def monomial(cls, exponents: Sequence[int], coeff=1) -> ExactPolynomial:
        return cls(len(exponents), {tuple(exponents): coeff})

    @classmethod
    def _raw(cls, n: int, terms: dict[Monomial, Fraction]) -> ExactPolynomial:
        # Caller guarantees canonical form (no zero coefficients).
        p = cls.__new__(cls)
        object.__setattr__(p, "n", n)
        object.__setattr__(p, "_terms", terms)
        object.__setattr__(p, "_hash", None)
        return p

    # -- inspection ---------------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in descending graded-lex order."""
        return sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]), reverse=True)

    def coeff(self, mono: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(m) for m in self._terms}) <= 1

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, ExactPolynomial):
            return self.n == other.n and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == ExactPolynomial.constant(self.n, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.n, frozenset(self._terms.items()))))
        return self._hash

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> ExactPolynomial:
        if isinstance(other, ExactPolynomial):
            if other.n != self.n:
                raise ValueError(f"variable count mismatch: {self.n} vs {other.n}")
            return other
        if isinstance(other, (int, Fraction)):
            return ExactPolynomial.constant(self.n, other)
        raise TypeError(f"cannot combine ExactPolynomial with {type(other).__name__}")

    def __add__(self, other) -> ExactPolynomial:
        other = self._coerce(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return ExactPolynomial._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> ExactPolynomial:
        return ExactPolynomial._raw(self.n, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> ExactPolynomial:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> ExactPolynomial:
        return self._coerce(other) - self

    def __mul__(self, other) -> ExactPolynomial:
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return ExactPolynomial.zero(self.n)
            return ExactPolynomial._raw(self.n, {m: v * c for m, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return ExactPolynomial._raw(self.n, {m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> ExactPolynomial:
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = ExactPolynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __call__(self, point: Sequence) -> Fraction:
        return evaluate(self, point)

    # -- text form ----------------------------------------------------------

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"ExactPolynomial({self.n}, {to_text(self)!r})"


def add(p: ExactPolynomial, q: ExactPolynomial) -> ExactPolynomial:
    return p + q


def mul(p: ExactPolynomial, q: ExactPolynomial) -> ExactPolynomial:
    return p * q


def power_sum_squares(n: int, r: int) -> ExactPolynomial:
    """Expand ``(x_1^2 + ... + x_n^2)^r`` via the multinomial theorem."""
    if n < 1 or r < 0:
        raise ValueError("need n >= 1 and r >= 0")
    terms = {}
    for half in monomials_of_degree(n, r):
        # multinomial coefficient r! / prod(k_i!)
        coeff, left = 1, r
        for k in half:
            coeff *= comb(left, k)
            left -= k
        terms[tuple(2 * k for k in half)] = Fraction(coeff)
    return ExactPolynomial._raw(n, terms)


def evaluate(p: ExactPolynomial, point: Sequence) -> Fraction:
    if len(point) != p.n:
        raise ValueError(f"point has length {len(point)}, polynomial has {p.n} variables")
    a = [_as_fraction(v) for v in point]
    total = Fraction(0)
    for mono, c in p._terms.items():
        term = c
        for ai, e in zip(a, mono):
            if e:
                term *= ai**e
        total += term
    return total


def is_even(p: ExactPolynomial) -> bool:
    return all(e % 2 == 0 for mono in p._terms for e in mono)


def scale_variables(p: ExactPolynomial, c: Sequence) -> ExactPolynomial:
    """Return ``p(sqrt(c_1) x_1, ..., sqrt(c_n) x_n)`` for an even polynomial ``p``.

    Every exponent is even, so the coefficient of ``x^e`` is multiplied by
    ``prod c_i^(e_i/2)`` and the result stays rational.
    """
    if len(c) != p.n:
        raise ValueError(f"scale vector has length {len(c)}, expected {p.n}")
    cs = [_as_fraction(v) for v in c]
    if any(v <= 0 for v in cs):
        raise ValueError("scale factors must be positive")
    if not is_even(p):
        raise ValueError("scale_variables needs an even polynomial (all exponents even)")
    out = {}
    for mono, coeff in p._terms.items():
        f = coeff
        for ci, e in zip(cs, mono):
            if e:
                f *= ci ** (e // 2)
        out[mono] = f
    return ExactPolynomial._raw(p.n, out)


def substitute_linear_scale(p: ExactPolynomial, s: Sequence) -> ExactPolynomial:
    """Return ``p(s_1 x_1, ..., s_n x_n)`` for rational ``s`` (any parity)."""
    ss = [_as_fraction(v) for v in s]
    out = {}
    for mono, coeff in p._terms.items():
        f = coeff
        for si, e in zip(ss, mono):
            if e:
                f *= si**e
        if f:
            out[mono] = f
    return ExactPolynomial._raw(p.n, out)


def embed(p: ExactPolynomial, n: int) -> ExactPolynomial:
    """View ``p`` as a polynomial in ``n >= p.n`` variables (new variables appended)."""
    if n < p.n:
        raise ValueError("cannot embed into fewer variables")
    pad = (0,) * (n - p.n)
    return ExactPolynomial._raw(n, {m + pad: c for m, c in p._terms.items()})


# -- text form -------------------------------------------------------------


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _fmt_mono(mono: Monomial) -> str:
    parts = []
    for i, e in enumerate(mono):
        if e == 1:
            parts.append(f"x{i + 1}")
        elif e > 1:
            parts.append(f"x{i + 1}^{e}")
    return "*".join(parts)


def to_text(p: ExactPolynomial) -> str:
    """Render as e.g. ``3/2*x1^2*x2^2 - x3^4``; the zero polynomial is ``0``."""
    if p.is_zero():
        return "0"
    pieces = []
    for k, (mono, c) in enumerate(p.items()):
        sign = "-" if c < 0 else "+"
        a = abs(c)
        m = _fmt_mono(mono)
        if not m:
            body = _fmt_coeff(a)
        elif a == 1:
            body = m
        else:
            body = f"{_fmt_coeff(a)}*{m}"
        if k == 0:
            pieces.append(body if sign == "+" else f"-{body}")
        else:
            pieces.append(f"{sign} {body}")
    return " ".join(pieces)


_TERM_RE = re.compile(r"([+-]?)\s*([^+-]+)")
_COEFF_RE = re.compile(r"^\d+(/\d+)?$")
_VAR_RE = re.compile(r"^x(\d+)(?:\^(\d+))?$")


def from_text(text: str, n: int) -> ExactPolynomial:
    """Parse the canonical text form produced by :func:`to_text`.

    Only that form is accepted: signed terms ``coeff*x1^a*x2^b`` with
    rational coefficients. Raises ``ValueError`` on anything else.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty polynomial text")
    if s == "0":
        return ExactPolynomial.zero(n)
    terms: dict[Monomial, Fraction] = {}
    pos = 0
    compact = s.replace(" ", "")
    for match in _TERM_RE.finditer(compact):
        if match.start() != pos:
            raise ValueError(f"cannot parse polynomial near {compact[pos:]!r}")
        pos = match.end()
        sign = -1 if match.group(1) == "-" else 1
        coeff = Fraction(sign)
        e = [0] * n
        for factor in match.group(2).split("*"):
            if _COEFF_RE.match(factor):
                coeff *= Fraction(factor)
                continue
            vm = _VAR_RE.match(factor)
            if not vm:
                raise ValueError(f"bad factor {factor!r} in polynomial text")
            idx = int(vm.group(1)) - 1
            if not 0 <= idx < n:
                raise ValueError(f"variable x{idx + 1} out of range for n={n}")
            e[idx] += int(vm.group(2) or 1)
        key = tuple(e)
        terms[key] = terms.get(key, Fraction(0)) + coeff
    if pos != len(compact):
        raise ValueError(f"trailing text in polynomial: {compact[pos:]!r}")
    return ExactPolynomial(n, terms)


def sum_polys(polys: Iterable[ExactPolynomial], n: int) -> ExactPolynomial:
    out: dict[Monomial, Fraction] = {}
    for p in polys:
        if p.n != n:
            raise ValueError("variable count mismatch")
        for m, c in p._terms.items():
            out[m] = out.get(m, 0) + c
    return ExactPolynomial._raw(n, {m: c for m, c in out.items() if c})
