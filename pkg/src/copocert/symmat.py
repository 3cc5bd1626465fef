"""Symmetric matrices (exact rational or float), exact PSD testing, quartic forms."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .exactpoly import ExactPolynomial


class SymmetricMatrix:
    """An ``n x n`` symmetric matrix storing only its upper triangle.

    ``exact=True`` keeps :class:`Fraction` entries; ``exact=False`` keeps floats.
    Converting exact to float is :meth:`to_float`; the reverse direction is a
    rounding operation and lives in :mod:`copocert.certify`.
    """

    __slots__ = ("n", "exact", "_upper")

    def __init__(self, n: int, upper: Sequence, exact: bool = True):
        if len(upper) != n * (n + 1) // 2:
            raise ValueError("upper-triangle storage has the wrong length")
        conv = Fraction if exact else float
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "exact", exact)
        object.__setattr__(self, "_upper", tuple(conv(v) for v in upper))

    def __setattr__(self, name, value):
        raise AttributeError("SymmetricMatrix is immutable")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], exact: bool = True, tol: float = 1e-12):
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        conv = Fraction if exact else float
        vals = [[conv(v) for v in r] for r in rows]
        for i in range(n):
            for j in range(i + 1, n):
                a, b = vals[i][j], vals[j][i]
                if (a != b) if exact else abs(a - b) > tol:
                    raise ValueError(f"matrix is not symmetric at ({i + 1},{j + 1})")
        return cls(n, [vals[i][j] for i in range(n) for j in range(i, n)], exact)

    @classmethod
    def from_function(cls, n: int, f, exact: bool = True):
        return cls(n, [f(i, j) for i in range(n) for j in range(i, n)], exact)

    @classmethod
    def identity(cls, n: int) -> SymmetricMatrix:
        return cls.from_function(n, lambda i, j: int(i == j))

    @classmethod
    def ones(cls, n: int) -> SymmetricMatrix:
        return cls.from_function(n, lambda i, j: 1)

    @classmethod
    def zeros(cls, n: int) -> SymmetricMatrix:
        return cls.from_function(n, lambda i, j: 0)

    def _index(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return i * self.n - i * (i - 1) // 2 + (j - i)

    def __getitem__(self, ij) -> Fraction | float:
        i, j = ij
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(ij)
        return self._upper[self._index(i, j)]

    def rows(self) -> list[list]:
        return [[self[i, j] for j in range(self.n)] for i in range(self.n)]

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.rows()], dtype=float)

    def to_float(self) -> SymmetricMatrix:
        return SymmetricMatrix(self.n, [float(v) for v in self._upper], exact=False)

    def __add__(self, other: SymmetricMatrix) -> SymmetricMatrix:
        if other.n != self.n:
            raise ValueError("size mismatch")
        return SymmetricMatrix(
            self.n, [a + b for a, b in zip(self._upper, other._upper)], self.exact and other.exact
        )

    def __sub__(self, other: SymmetricMatrix) -> SymmetricMatrix:
        return self + other.scaled(-1)

    def scaled(self, c) -> SymmetricMatrix:
        return SymmetricMatrix(self.n, [c * v for v in self._upper], self.exact)

    def padded(self, n: int) -> SymmetricMatrix:
        """Embed into an ``n x n`` matrix with zero rows/columns appended."""
        if n < self.n:
            raise ValueError("cannot pad to a smaller size")
        return SymmetricMatrix.from_function(
            n, lambda i, j: self[i, j] if i < self.n and j < self.n else 0, self.exact
        )

    def quadratic(self, a: Sequence) -> Fraction | float:
        """The value ``a^T M a``."""
        n = self.n
        if len(a) != n:
            raise ValueError("vector length mismatch")
        total = 0
        for i in range(n):
            if not a[i]:
                continue
            total += self[i, i] * a[i] * a[i]
            for j in range(i + 1, n):
                if a[j]:
                    total += 2 * self[i, j] * a[i] * a[j]
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return self.n == other.n and self._upper == other._upper

    def __hash__(self) -> int:
        return hash((self.n, self._upper))

    def __repr__(self) -> str:
        return f"SymmetricMatrix({self.rows()!r}, exact={self.exact})"


def quartic_form(M: SymmetricMatrix) -> ExactPolynomial:
    """The even quartic ``sum_{i,j} M_ij x_i^2 x_j^2``."""
    if not M.exact:
        raise TypeError("quartic_form needs an exact matrix")
    n = M.n
    terms = {}
    for i in range(n):
        for j in range(i, n):
            e = [0] * n
            e[i] += 2
            e[j] += 2
            terms[tuple(e)] = M[i, j] if i == j else 2 * M[i, j]
    return ExactPolynomial(n, terms)


@dataclass(frozen=True)
class PsdResult:
    """Outcome of :func:`psd_check_exact`.

    ``pivots`` lists the nonzero pivots of the pivoted LDL^T factorisation in
    elimination order (only meaningful when ``is_psd``); ``witness`` is a
    rational vector with ``a^T M a < 0`` when the matrix is not PSD.
    """

    is_psd: bool
    pivots: tuple[Fraction, ...] = ()
    order: tuple[int, ...] = ()
    witness: tuple[Fraction, ...] | None = None

    def __bool__(self) -> bool:
        return self.is_psd


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Solve a nonsingular rational system by Gaussian elimination."""
    n = len(b)
    aug = [list(A[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col] / p
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[i][n] / aug[i][i] for i in range(n)]


def _lift_witness(M: SymmetricMatrix, eliminated: list[int], v: dict[int, Fraction]) -> tuple:
    """Extend a Schur-complement direction ``v`` to a full witness vector.

    With ``E`` the eliminated (positive-pivot) indices, ``u_E = -M_EE^{-1} M_ER v``
    gives ``u^T M u = v^T S v`` where ``S`` is the Schur complement.
    """
    n = M.n
    u = [Fraction(0)] * n
    for k, val in v.items():
        u[k] = val
    if eliminated:
        A = [[M[i, j] for j in eliminated] for i in eliminated]
        rhs = [-sum(M[i, k] * val for k, val in v.items()) for i in eliminated]
        for i, val in zip(eliminated, _solve_exact(A, rhs)):
            u[i] = val
    return tuple(u)


def psd_check_exact(M: SymmetricMatrix) -> PsdResult:
    """Exact PSD test by LDL^T with symmetric (largest-diagonal) pivoting.

    A zero pivot is accepted only if its whole remaining row is zero.
    """
    if not M.exact:
        raise TypeError("psd_check_exact needs an exact matrix")
    n = M.n
    S = {(i, j): M[i, j] for i in range(n) for j in range(n)}
    remaining = list(range(n))
    eliminated: list[int] = []
    pivots: list[Fraction] = []
    while remaining:
        neg = [i for i in remaining if S[i, i] < 0]
        if neg:
            return PsdResult(False, witness=_lift_witness(M, eliminated, {neg[0]: Fraction(1)}))
        p = max(remaining, key=lambda i: (S[i, i], -i))
        if S[p, p] == 0:
            for i in remaining:
                for j in remaining:
                    if i < j and S[i, j] != 0:
                        # both diagonals are zero: (e_i - sign e_j) gives -2|S_ij|
                        sgn = 1 if S[i, j] > 0 else -1
                        w = _lift_witness(M, eliminated, {i: Fraction(1), j: Fraction(-sgn)})
                        return PsdResult(False, witness=w)
            break
        d = S[p, p]
        pivots.append(d)
        eliminated.append(p)
        remaining.remove(p)
        for i in remaining:
            lip = S[i, p]
            if lip:
                f = lip / d
                for j in remaining:
                    if S[p, j]:
                        S[i, j] -= f * S[p, j]
    return PsdResult(True, pivots=tuple(pivots), order=tuple(eliminated))


def ldl_exact(G: list[list[Fraction]]) -> list[tuple[Fraction, list[Fraction]]]:
    """Factor a rational PSD matrix as ``sum_k d_k l_k l_k^T`` with ``d_k > 0``.

    Raises ``ValueError`` if ``G`` is not PSD.
    """
    n = len(G)
    S = [list(map(Fraction, r)) for r in G]
    remaining = list(range(n))
    out = []
    while remaining:
        p = max(remaining, key=lambda i: (S[i][i], -i))
        d = S[p][p]
        if d < 0:
            raise ValueError("matrix is not PSD")
        if d == 0:
            if any(S[i][j] for i in remaining for j in remaining):
                raise ValueError("matrix is not PSD")
            break
        col = [Fraction(0)] * n
        for i in remaining:
            col[i] = S[i][p] / d
        out.append((d, col))
        remaining.remove(p)
        for i in remaining:
            if col[i]:
                for j in remaining:
                    S[i][j] -= d * col[i] * col[j]
    return out


def entrywise_nonneg(M: SymmetricMatrix) -> bool:
    return all(v >= 0 for v in M._upper)


def diag_scale(d: Sequence, M: SymmetricMatrix) -> SymmetricMatrix:
    """Return ``D M D`` with ``D = diag(d)``."""
    if len(d) != M.n:
        raise ValueError("scaling vector length mismatch")
    conv = Fraction if M.exact else float
    dd = [conv(v) for v in d]
    if any(v <= 0 for v in dd):
        raise ValueError("diagonal scaling entries must be positive")
    return SymmetricMatrix.from_function(M.n, lambda i, j: dd[i] * dd[j] * M[i, j], M.exact)


def float_min_eig(M: SymmetricMatrix) -> float:
    return float(np.linalg.eigvalsh(M.to_numpy())[0])


# -- file format -----------------------------------------------------------


def _parse_entry(tok: str, exact: bool):
    if exact:
        return Fraction(tok)
    if "/" in tok:
        return float(Fraction(tok))
    return float(tok)


def parse_matrix(text: str, exact: bool = True) -> SymmetricMatrix:
    """Parse: first line ``n``, then ``n`` rows of whitespace-separated entries."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty matrix file")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"line 1: expected integer size, got {lines[0]!r}") from None
    if n < 1:
        raise ValueError("line 1: matrix size must be positive")
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} matrix rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        toks = ln.replace("−", "-").split()
        if len(toks) != n:
            raise ValueError(f"line {k}: expected {n} entries, found {len(toks)}")
        try:
            rows.append([_parse_entry(t, exact) for t in toks])
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"line {k}: bad numeric entry in {ln!r}") from None
    return SymmetricMatrix.from_rows(rows, exact=exact, tol=1e-12)


def format_matrix(M: SymmetricMatrix) -> str:
    def fmt(v):
        if M.exact:
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return repr(float(v))

    body = "\n".join(" ".join(fmt(v) for v in row) for row in M.rows())
    return f"{M.n}\n{body}\n"


def read_matrix(path, exact: bool = True) -> SymmetricMatrix:
    return parse_matrix(Path(path).read_text(), exact=exact)


def write_matrix(path, M: SymmetricMatrix) -> None:
    Path(path).write_text(format_matrix(M))
