"""Exact sum-of-squares certificates: rounding, verification, text format."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
import numpy as np

from .exactpoly import ExactPolynomial, from_text, power_sum_squares, sum_polys, to_text
from .gram import FACE_TOL, GramEncoding
from .sdp import SdpSolution, Status
from .symmat import SymmetricMatrix, format_matrix, ldl_exact, parse_matrix, psd_check_exact, quartic_form

DEFAULT_DENOM = 2**10
MAX_DENOM = 2**20
KERNEL_SNAP_TOL = 1e-3


class CertificateError(ValueError):
    """Malformed certificate document or certificate data."""


@dataclass(frozen=True)
class SosCertificate:
    """``sum_k w_k q_k^2`` claimed equal to a target expression.

    ``kind == "reznick"``: target is ``(sum_i c_i x_i^2)^r q_M`` where ``c`` is
    ``multiplier`` (all ones when ``None``). ``kind == "sphere"``: target is
    ``f - lambda (sum x_i^2 - 1)``.
    """

    kind: str
    n: int
    squares: tuple[tuple[Fraction, ExactPolynomial], ...]
    r: int | None = None
    matrix: SymmetricMatrix | None = None
    multiplier: tuple[Fraction, ...] | None = None
    target_poly: ExactPolynomial | None = None
    lam: ExactPolynomial | None = None

    def __post_init__(self):
        object.__setattr__(self, "squares", tuple((Fraction(w), q) for w, q in self.squares))
        for k, (w, q) in enumerate(self.squares):
            if w <= 0:
                raise CertificateError(f"square {k + 1}: weight must be positive, got {w}")
            if q.n != self.n:
                raise CertificateError(f"square {k + 1}: polynomial has {q.n} variables, expected {self.n}")
        if self.kind == "reznick":
            if self.r is None or self.r < 0:
                raise CertificateError("reznick certificate needs r >= 0")
            if self.matrix is None or self.matrix.n != self.n or not self.matrix.exact:
                raise CertificateError("reznick certificate needs an exact n x n target matrix")
            if self.multiplier is not None:
                mult = tuple(Fraction(c) for c in self.multiplier)
                if len(mult) != self.n or any(c <= 0 for c in mult):
                    raise CertificateError("multiplier weights must be n positive rationals")
                object.__setattr__(self, "multiplier", mult)
        elif self.kind == "sphere":
            if self.target_poly is None or self.lam is None:
                raise CertificateError("sphere certificate needs target polynomial and lambda")
            if self.target_poly.n != self.n or self.lam.n != self.n:
                raise CertificateError("sphere certificate polynomials must have n variables")
        else:
            raise CertificateError(f"unknown certificate kind {self.kind!r}")

    def target_expression(self) -> ExactPolynomial:
        if self.kind == "reznick":
            q = quartic_form(self.matrix)
            if self.multiplier is None:
                return power_sum_squares(self.n, self.r) * q
            base = ExactPolynomial(
                self.n, {tuple(2 * (i == j) for j in range(self.n)): c for i, c in enumerate(self.multiplier)}
            )
            return base**self.r * q
        sphere = power_sum_squares(self.n, 1) - 1
        return self.target_poly - self.lam * sphere

    def sum_of_squares(self) -> ExactPolynomial:
        return sum_polys((q * q * w for w, q in self.squares), self.n)


def verify(cert: SosCertificate) -> bool:
    """Exact check that the weighted squares expand to the target expression."""
    return (cert.sum_of_squares() - cert.target_expression()).is_zero()


def to_standard_multiplier(cert: SosCertificate) -> SosCertificate:
    """Rewrite a weighted-multiplier certificate with the plain ``sum x_i^2`` multiplier.

    Substituting ``x_i -> x_i / sqrt(c_i)`` turns ``(sum c_i x_i^2)^r q_M`` into
    ``(sum x_i^2)^r q_{D M D}`` with ``D = diag(1/c)``. A square whose monomials
    share one exponent parity stays rational after the substitution.
    """
    if cert.kind != "reznick" or cert.multiplier is None:
        return cert
    c = cert.multiplier
    squares = []
    for w, q in cert.squares:
        parities = {tuple(e % 2 for e in m) for m in q.terms}
        if len(parities) != 1:
            raise CertificateError("square mixes exponent parities; substitution is irrational")
        (par,) = parities
        factor = Fraction(1)
        for ci, p in zip(c, par):
            if p:
                factor /= ci
        terms = {}
        for m, coeff in q.terms.items():
            t = coeff
            for ci, e, p in zip(c, m, par):
                t /= ci ** ((e - p) // 2)
            terms[m] = t
        squares.append((w * factor, ExactPolynomial(cert.n, terms)))
    inv = [1 / ci for ci in c]
    M = SymmetricMatrix.from_function(cert.n, lambda i, j: inv[i] * inv[j] * cert.matrix[i, j])
    return SosCertificate("reznick", cert.n, tuple(squares), r=cert.r, matrix=M)


# -- round and project ---------------------------------------------------------


@dataclass(frozen=True)
class ExactGram:
    """Exact PSD Gram blocks (in basis coordinates) plus exact free values."""

    blocks: tuple[tuple[tuple[Fraction, ...], ...], ...]
    free: tuple[Fraction, ...]
    denom_bound: int
    face_dims: tuple[int, ...]


class RoundingFailure(Exception):
    pass


def _rref_rational(B: np.ndarray, bound: int):
    """Row-reduce the rows of ``B`` numerically, then snap entries to rationals.

    Returns ``(rows, pivots)``: rational rows in reduced echelon form (pivot
    entries exactly 1, other rows exactly 0 in pivot columns).
    """
    A = np.array(B, dtype=float)
    k, s = A.shape
    pivots = []
    for r in range(k):
        sub = np.abs(A[r:, :])
        sub[:, pivots] = 0
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        i += r
        if sub[i - r, j] < 1e-8:
            raise RoundingFailure("kernel basis is numerically rank deficient")
        A[[r, i]] = A[[i, r]]
        A[r] /= A[r, j]
        for t in range(k):
            if t != r:
                A[t] -= A[t, j] * A[r]
        pivots.append(j)
    # The kernel of a boundary solution is only accurate to ~1e-4, so a large
    # bound overfits the noise; take the smallest bound that explains it.
    b = 1
    while True:
        rows = []
        dev = 0.0
        for r in range(k):
            row = [Fraction(float(v)).limit_denominator(b) for v in A[r]]
            for t, pj in enumerate(pivots):
                row[pj] = Fraction(int(t == r))
            dev = max(dev, max(abs(float(x) - v) for x, v in zip(row, A[r])))
            rows.append(row)
        if dev <= KERNEL_SNAP_TOL or b >= bound:
            return rows, pivots
        b = min(2 * b, bound)


def _rational_range(X: np.ndarray, bound: int, face_tol: float, scale: float):
    """Rational basis (columns) of the range of PSD ``X``, via a rationalised kernel."""
    s = X.shape[0]
    w, V = np.linalg.eigh((X + X.T) / 2)
    ker = V[:, w <= face_tol * scale]
    if ker.shape[1] == 0:
        return [[Fraction(int(i == j)) for j in range(s)] for i in range(s)]
    if ker.shape[1] == s:
        return [[] for _ in range(s)]
    rows, pivots = _rref_rational(ker.T, bound)
    for row in rows:
        v = np.array([float(x) for x in row])
        if np.linalg.norm(X @ v) > 1e-4 * scale * np.linalg.norm(v):
            raise RoundingFailure("rationalised kernel vector is not a numerical kernel vector")
    free_cols = [j for j in range(s) if j not in pivots]
    basis = []
    for fcol in free_cols:
        v = [Fraction(0)] * s
        v[fcol] = Fraction(1)
        for r, pj in enumerate(pivots):
            v[pj] = -rows[r][fcol]
        basis.append(v)
    # as an s x t matrix
    return [[basis[c][i] for c in range(len(basis))] for i in range(s)]


def _solve_sparse(rows: list[dict[int, Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Solve a consistent (possibly singular) square rational system; free unknowns are 0."""
    n = len(rows)
    R = [dict(r) for r in rows]
    b = list(rhs)
    pivot_of_row = {}
    used_rows = set()
    for col in range(n):
        piv = None
        for i in range(n):
            if i not in used_rows and R[i].get(col):
                piv = i
                break
        if piv is None:
            continue
        used_rows.add(piv)
        pivot_of_row[piv] = col
        prow = R[piv]
        pval = prow[col]
        for i in range(n):
            if i != piv and R[i].get(col):
                f = R[i][col] / pval
                row = R[i]
                for c, v in prow.items():
                    nv = row.get(c, 0) - f * v
                    if nv:
                        row[c] = nv
                    else:
                        row.pop(c, None)
                b[i] -= f * b[piv]
    for i in range(n):
        if i not in used_rows and b[i] != 0:
            raise RoundingFailure("projection system is inconsistent")
    x = [Fraction(0)] * n
    for i, col in pivot_of_row.items():
        x[col] = b[i] / R[i][col]
    return x


def round_and_project(
    enc: GramEncoding, sol: SdpSolution, denom_bound: int = DEFAULT_DENOM, face_tol: float = FACE_TOL
) -> ExactGram:
    """Round a numeric Gram solution to rationals and project it onto the constraints.

    The solution's numerical kernel is rationalised first, so boundary Gram
    matrices are handled on their face ``X_j = V_j Y_j V_j^T``. Each ``Y``
    entry is replaced by its best rational approximation with denominator at
    most ``denom_bound``, then projected exactly (Frobenius-orthogonally) onto
    the affine coefficient constraints. Raises :class:`RoundingFailure` unless
    every resulting block passes the exact PSD test.
    """
    if sol.status not in (Status.OPTIMAL, Status.INDETERMINATE) or not sol.blocks:
        raise RoundingFailure(f"no usable numeric solution (status {sol.status.value})")
    prob = enc.problem
    scale = max([1.0] + [float(np.linalg.eigvalsh(X)[-1]) for X in sol.blocks if X.size])
    faces = [_rational_range(X, denom_bound, face_tol, scale) for X in sol.blocks]
    dims = [len(V[0]) if V and V[0] else 0 for V in faces]

    # variable layout: upper triangle of each Y_j, then free variables
    offsets = [0]
    for t in dims:
        offsets.append(offsets[-1] + t * (t + 1) // 2)
    nfree = prob.free_vars
    nvar = offsets[-1] + nfree

    def var(j, p, q):
        t = dims[j]
        return offsets[j] + p * t - p * (p - 1) // 2 + (q - p)

    weights = [Fraction(1)] * nvar
    z0 = [Fraction(0)] * nvar
    for j, X in enumerate(sol.blocks):
        t = dims[j]
        if not t:
            continue
        Vf = np.array([[float(v) for v in row] for row in faces[j]])
        P = np.linalg.pinv(Vf)
        Y = P @ X @ P.T
        for p in range(t):
            for q in range(p, t):
                z0[var(j, p, q)] = Fraction(float(Y[p, q])).limit_denominator(denom_bound)
                if p != q:
                    weights[var(j, p, q)] = Fraction(2)
    for k in range(nfree):
        z0[offsets[-1] + k] = Fraction(float(sol.free[k])).limit_denominator(denom_bound)

    # exact constraint rows in the face coordinates
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    for con in prob.constraints:
        row: dict[int, Fraction] = {}
        for j, entries in con.blocks.items():
            t = dims[j]
            if not t:
                continue
            V = faces[j]
            for (a, b), v in entries.items():
                v = Fraction(v)
                for p in range(t):
                    vap, vbp = V[a][p], V[b][p]
                    if not (vap or vbp):
                        continue
                    for q in range(p, t):
                        # coefficient of Y_pq in <A, V Y V^T>
                        if a == b:
                            c = vap * V[a][q] * (1 if p == q else 2)
                        else:
                            c = (vap * V[b][q] + vbp * V[a][q]) * (1 if p == q else 2)
                        if c:
                            idx = var(j, p, q)
                            row[idx] = row.get(idx, 0) + v * c
        for k, v in con.free.items():
            idx = offsets[-1] + k
            row[idx] = row.get(idx, 0) + Fraction(v)
        rows.append({i: c for i, c in row.items() if c})
        rhs.append(Fraction(con.rhs))

    # z = z0 - W^{-1} R^T mu,  (R W^{-1} R^T) mu = R z0 - b
    resid = [sum(c * z0[i] for i, c in row.items()) - b for row, b in zip(rows, rhs)]
    by_var: dict[int, list[tuple[int, Fraction]]] = {}
    for ri, row in enumerate(rows):
        for i, c in row.items():
            by_var.setdefault(i, []).append((ri, c))
    K: list[dict[int, Fraction]] = [dict() for _ in rows]
    for i, entries in by_var.items():
        winv = 1 / weights[i]
        for r1, c1 in entries:
            for r2, c2 in entries:
                K[r1][r2] = K[r1].get(r2, 0) + c1 * c2 * winv
    for ri, row in enumerate(rows):
        if not row and resid[ri] != 0:
            raise RoundingFailure("a coefficient constraint cannot be met on this face")
    mu = _solve_sparse(K, resid)
    z = list(z0)
    for i, entries in by_var.items():
        z[i] -= sum(c * mu[r] for r, c in entries) / weights[i]

    out_blocks = []
    for j in range(len(sol.blocks)):
        s = prob.blocks[j]
        t = dims[j]
        Y = [[z[var(j, min(p, q), max(p, q))] for q in range(t)] for p in range(t)]
        if t and not psd_check_exact(SymmetricMatrix.from_rows(Y)):
            raise RoundingFailure(f"projected Gram block {j} is not PSD at denominator {denom_bound}")
        V = faces[j]
        X = [[sum((V[a][p] * Y[p][q] * V[b][q] for p in range(t) for q in range(t) if V[a][p] and V[b][q]), Fraction(0))
              for b in range(s)] for a in range(s)]
        out_blocks.append(tuple(tuple(r) for r in X))
    return ExactGram(tuple(out_blocks), tuple(z[offsets[-1] + k] for k in range(nfree)), denom_bound, tuple(dims))


def exact_residual_zero(enc: GramEncoding, gram: ExactGram) -> bool:
    """Check every coefficient constraint holds exactly for ``gram``."""
    for con in enc.problem.constraints:
        lhs = Fraction(0)
        for j, entries in con.blocks.items():
            X = gram.blocks[j]
            for (a, b), v in entries.items():
                lhs += Fraction(v) * X[a][b] * (1 if a == b else 2)
        for k, v in con.free.items():
            lhs += Fraction(v) * gram.free[k]
        if lhs != Fraction(con.rhs):
            return False
    return True


def certificate_from_gram(enc: GramEncoding, gram: ExactGram) -> SosCertificate:
    """Factor each exact Gram block into weighted squares of basis polynomials."""
    n = enc.basis.n
    squares = []
    for monos, X in zip(enc.basis.blocks, gram.blocks):
        for d, col in ldl_exact([list(r) for r in X]):
            q = ExactPolynomial(n, {m: c for m, c in zip(monos, col) if c})
            squares.append((d, q))
    if enc.kind == "reznick":
        return SosCertificate("reznick", n, tuple(squares), r=enc.r, matrix=enc.matrix)
    if enc.kind == "sphere":
        lam = ExactPolynomial(n, dict(zip(enc.free_monomials, gram.free)))
        return SosCertificate("sphere", n, tuple(squares), target_poly=enc.target, lam=lam)
    raise CertificateError(f"cannot build a certificate for encoding kind {enc.kind!r}")


def exactify(
    enc: GramEncoding,
    sol: SdpSolution,
    start: int = DEFAULT_DENOM,
    stop: int = MAX_DENOM,
) -> SosCertificate:
    """Round-and-project with doubling denominators; return a verified certificate."""
    bound = start
    last = None
    while bound <= stop:
        try:
            gram = round_and_project(enc, sol, bound)
        except RoundingFailure as exc:
            last = exc
            bound *= 2
            continue
        cert = certificate_from_gram(enc, gram)
        if not verify(cert):
            raise AssertionError("projected Gram matrix does not reproduce the target")
        return cert
    raise RoundingFailure(f"rounding failed up to denominator {stop}: {last}")


# -- text format -----------------------------------------------------------------


def _fmt_frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def serialize(cert: SosCertificate) -> bytes:
    """Render the certificate document.

    ::

        sos-certificate 1
        kind reznick | sphere
        n <n>
        r <r>                                   (reznick)
        multiplier <c_1> ... <c_n>              (reznick, optional)
        lambda <polynomial>                     (sphere)
        target matrix                           (reznick; matrix file follows)
        target polynomial <polynomial>          (sphere)
        squares <count>
        <weight> ; <polynomial>                 (one line per square)
    """
    lines = ["sos-certificate 1", f"kind {cert.kind}", f"n {cert.n}"]
    if cert.kind == "reznick":
        lines.append(f"r {cert.r}")
        if cert.multiplier is not None:
            lines.append("multiplier " + " ".join(_fmt_frac(c) for c in cert.multiplier))
        lines.append("target matrix")
        lines.extend(format_matrix(cert.matrix).rstrip("\n").split("\n"))
    else:
        lines.append(f"lambda {to_text(cert.lam)}")
        lines.append(f"target polynomial {to_text(cert.target_poly)}")
    lines.append(f"squares {len(cert.squares)}")
    for w, q in cert.squares:
        lines.append(f"{_fmt_frac(w)} ; {to_text(q)}")
    return ("\n".join(lines) + "\n").encode()


def deserialize(data: bytes | str) -> SosCertificate:
    text = data.decode() if isinstance(data, bytes) else data
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    pos = 0

    def take(expect: str | None = None):
        nonlocal pos
        if pos >= len(lines):
            raise CertificateError(f"unexpected end of document (expected {expect or 'more lines'})")
        lineno, ln = lines[pos]
        pos += 1
        if expect is not None:
            head = ln.split(None, 1)
            if not head or head[0] != expect:
                raise CertificateError(f"line {lineno}: expected field {expect!r}, got {ln!r}")
            return lineno, head[1] if len(head) > 1 else ""
        return lineno, ln

    def peek_field() -> str | None:
        return lines[pos][1].split(None, 1)[0] if pos < len(lines) else None

    lineno, header = take()
    if header != "sos-certificate 1":
        raise CertificateError(f"line {lineno}: expected header 'sos-certificate 1'")
    lineno, kind = take("kind")
    if kind not in ("reznick", "sphere"):
        raise CertificateError(f"line {lineno}: unknown kind {kind!r}")
    lineno, nval = take("n")
    try:
        n = int(nval)
    except ValueError:
        raise CertificateError(f"line {lineno}: field 'n' must be an integer") from None

    def poly(lineno, txt):
        try:
            return from_text(txt, n)
        except ValueError as exc:
            raise CertificateError(f"line {lineno}: {exc}") from None

    r = matrix = multiplier = lam = target_poly = None
    if kind == "reznick":
        if peek_field() != "r":
            raise CertificateError(f"line {lines[pos][0] if pos < len(lines) else '?'}: reznick certificate is missing field 'r'")
        lineno, rval = take("r")
        try:
            r = int(rval)
        except ValueError:
            raise CertificateError(f"line {lineno}: field 'r' must be an integer") from None
        if peek_field() == "multiplier":
            lineno, mval = take("multiplier")
            try:
                multiplier = tuple(Fraction(t) for t in mval.split())
            except (ValueError, ZeroDivisionError):
                raise CertificateError(f"line {lineno}: bad multiplier weights") from None
        lineno, tval = take("target")
        if tval != "matrix":
            raise CertificateError(f"line {lineno}: reznick target must be 'matrix'")
        block = [lines[pos + k][1] for k in range(min(n + 1, len(lines) - pos))]
        try:
            matrix = parse_matrix("\n".join(block))
        except ValueError as exc:
            raise CertificateError(f"line {lineno + 1}: embedded matrix: {exc}") from None
        pos += n + 1
    else:
        lineno, lval = take("lambda")
        lam = poly(lineno, lval)
        lineno, tval = take("target")
        if not tval.startswith("polynomial"):
            raise CertificateError(f"line {lineno}: sphere target must be 'polynomial <text>'")
        target_poly = poly(lineno, tval[len("polynomial"):])
    lineno, cval = take("squares")
    try:
        count = int(cval)
    except ValueError:
        raise CertificateError(f"line {lineno}: field 'squares' must be an integer") from None
    squares = []
    for _ in range(count):
        lineno, ln = take()
        if ";" not in ln:
            raise CertificateError(f"line {lineno}: expected '<weight> ; <polynomial>'")
        wtxt, ptxt = ln.split(";", 1)
        try:
            w = Fraction(wtxt.strip())
        except (ValueError, ZeroDivisionError):
            raise CertificateError(f"line {lineno}: bad weight {wtxt.strip()!r}") from None
        if w <= 0:
            raise CertificateError(f"line {lineno}: weight must be positive, got {w}")
        squares.append((w, poly(lineno, ptxt)))
    if pos != len(lines):
        raise CertificateError(f"line {lines[pos][0]}: unexpected trailing content")
    try:
        return SosCertificate(
            kind, n, tuple(squares), r=r, matrix=matrix, multiplier=multiplier,
            target_poly=target_poly, lam=lam,
        )
    except CertificateError as exc:
        raise CertificateError(f"invalid certificate: {exc}") from None


def write_certificate(cert: SosCertificate, path) -> None:
    """Verify, then write. Refusing to write an unverified certificate is deliberate."""
    if not verify(cert):
        raise CertificateError("refusing to write a certificate that does not verify")
    Path(path).write_bytes(serialize(cert))


def read_certificate(path) -> SosCertificate:
    return deserialize(Path(path).read_bytes())
