"""Gram-matrix encodings of sum-of-squares membership questions.

Two schemes are encoded, both for even targets:

* multiplier (Reznick) scheme: ``(x_1^2 + ... + x_n^2)^r q_M`` is a sum of
  squares, where ``q_M`` is the quartic form of ``M``;
* sphere scheme: ``f = sigma + lambda * (x_1^2 + ... + x_n^2 - 1)`` with
  ``sigma`` a sum of squares and ``lambda`` an even polynomial.

For an even target the Gram matrix can be averaged over the sign flips
``x_i -> -x_i``; that kills every entry pairing monomials of different
exponent parity, so one PSD block per parity class suffices.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np

from . import sdp
from .exactpoly import (
    ExactPolynomial,
    Monomial,
    grlex_key,
    is_even,
    monomials_of_degree,
    power_sum_squares,
)
from .sdp import Constraint, SdpProblem, SdpSolution, Status
from .symmat import SymmetricMatrix, quartic_form

MEMBER_THRESHOLD = 1e-6
FACE_TOL = 1e-5
REDUCED_RESIDUAL = 1e-6
# refined face points must meet the constraints to this multiple of the solver tolerance
FACE_RESIDUAL_FACTOR = 10.0


@dataclass(frozen=True)
class MonomialBasis:
    """Monomials partitioned into classes (one PSD block each)."""

    n: int
    degree: int
    classes: tuple[tuple[tuple[int, ...], tuple[Monomial, ...]], ...]
    homogeneous: bool = True

    @classmethod
    def build(cls, n: int, degree: int, homogeneous: bool = True, blocked: bool = True):
        """Monomials of degree exactly ``degree`` (or ``<= degree`` when not
        homogeneous), grouped by exponent parity unless ``blocked`` is False."""
        if homogeneous:
            monos = monomials_of_degree(n, degree)
        else:
            monos = [m for d in range(degree, -1, -1) for m in monomials_of_degree(n, d)]
        if not blocked:
            return cls(n, degree, (((-1,), tuple(monos)),), homogeneous)
        groups: dict[tuple[int, ...], list[Monomial]] = {}
        for m in monos:
            groups.setdefault(tuple(e % 2 for e in m), []).append(m)
        order = sorted(groups, key=lambda par: (sum(par), tuple(-x for x in par)))
        return cls(n, degree, tuple((par, tuple(groups[par])) for par in order), homogeneous)

    @property
    def blocks(self) -> list[tuple[Monomial, ...]]:
        return [monos for _, monos in self.classes]

    @property
    def size(self) -> int:
        return sum(len(m) for m in self.blocks)


@dataclass(frozen=True)
class GramEncoding:
    """An SDP whose feasible points are Gram certificates for ``target``.

    The encoded identity is ``target + sum_k f_k * free_polys[k] = b^T X b``
    where ``b`` runs over the basis blocks and ``f`` are the free variables.
    """

    basis: MonomialBasis
    problem: SdpProblem
    coefficient_index: dict[Monomial, int]
    target: ExactPolynomial
    free_polys: tuple[ExactPolynomial, ...] = ()
    kind: str = "reznick"
    r: int | None = None
    matrix: SymmetricMatrix | None = None
    free_monomials: tuple[Monomial, ...] = ()
    meta: dict = field(default_factory=dict)


def _encode(
    basis: MonomialBasis,
    target: ExactPolynomial,
    free_polys=(),
    objective_free=None,
) -> tuple[SdpProblem, dict[Monomial, int]]:
    pairs: dict[Monomial, dict[int, dict[tuple[int, int], Fraction]]] = {}
    for j, monos in enumerate(basis.blocks):
        for p, q in combinations_with_replacement(range(len(monos)), 2):
            m = tuple(a + b for a, b in zip(monos[p], monos[q]))
            pairs.setdefault(m, {}).setdefault(j, {})[p, q] = Fraction(1)
    all_monos = set(pairs) | set(target.terms)
    for P in free_polys:
        all_monos |= set(P.terms)
    order = sorted(all_monos, key=grlex_key, reverse=True)
    cons = []
    index = {}
    for i, m in enumerate(order):
        free = {k: -P.coeff(m) for k, P in enumerate(free_polys) if P.coeff(m)}
        cons.append(Constraint(pairs.get(m, {}), free, target.coeff(m)))
        index[m] = i
    sizes = tuple(len(b) for b in basis.blocks)
    problem = SdpProblem(sizes, len(free_polys), tuple(cons), {}, objective_free or {})
    return problem, index


def reznick_target(M: SymmetricMatrix, r: int) -> ExactPolynomial:
    return power_sum_squares(M.n, r) * quartic_form(M)


def build_reznick(M: SymmetricMatrix, r: int, blocked: bool = True) -> GramEncoding:
    """Encode ``(sum x_i^2)^r q_M`` in SOS, basis = monomials of degree ``r + 2``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    target = reznick_target(M, r)
    basis = MonomialBasis.build(M.n, r + 2, homogeneous=True, blocked=blocked)
    problem, index = _encode(basis, target)
    return GramEncoding(basis, problem, index, target, kind="reznick", r=r, matrix=M)


def build_reznick_parametric(
    const: SymmetricMatrix, slopes: list[SymmetricMatrix], r: int, objective: list | None = None
) -> GramEncoding:
    """Reznick encoding for ``const + sum_k t_k slopes[k]`` with free scalars ``t``.

    ``objective`` gives the cost of each ``t_k`` (minimisation).
    """
    mult = power_sum_squares(const.n, r)
    target = mult * quartic_form(const)
    # target + sum t_k * P_k must be the Gram expansion, so P_k = +slope part
    free_polys = tuple(mult * quartic_form(S) for S in slopes)
    basis = MonomialBasis.build(const.n, r + 2)
    obj = {k: float(c) for k, c in enumerate(objective or []) if c}
    problem, index = _encode(basis, target, free_polys, obj)
    return GramEncoding(basis, problem, index, target, free_polys, kind="reznick-parametric", r=r)


def build_sphere(f: ExactPolynomial, k: int, blocked: bool = True) -> GramEncoding:
    """Encode ``f = sigma + lambda (sum x_i^2 - 1)``, ``deg sigma <= 2k``, ``deg lambda <= 2k-2``.

    ``lambda`` is taken even; its coefficients are the free variables.
    """
    if not is_even(f):
        raise ValueError("sphere encoding needs an even polynomial")
    if f.degree % 2 or f.degree > 2 * k:
        raise ValueError(f"need deg f <= 2k = {2 * k} (got {f.degree})")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = f.n
    sphere = power_sum_squares(n, 1) - 1
    lam_monos = tuple(
        tuple(2 * e for e in half) for d in range(k - 1, -1, -1) for half in monomials_of_degree(n, d)
    )
    # sigma = f - sum_k f_k mu_k (s - 1)  =>  P_k = -mu_k (s - 1)
    free_polys = tuple(-(ExactPolynomial.monomial(mu) * sphere) for mu in lam_monos)
    basis = MonomialBasis.build(n, k, homogeneous=False, blocked=blocked)
    problem, index = _encode(basis, f, free_polys)
    return GramEncoding(
        basis, problem, index, f, free_polys, kind="sphere", r=None, free_monomials=lam_monos,
        meta={"k": k},
    )


def lambda_polynomial(enc: GramEncoding, values) -> dict[Monomial, float]:
    """The sphere multiplier ``lambda`` for numeric free-variable values."""
    return {mu: float(v) for mu, v in zip(enc.free_monomials, values) if v}


# -- extraction --------------------------------------------------------------


class ExtractionError(ValueError):
    pass


def extract_squares(enc: GramEncoding, sol: SdpSolution, shift: float = 1e-7):
    """Eigen-factor each Gram block into weighted squares.

    Returns ``[(weight, {monomial: coeff}), ...]``. Eigenvalues below
    ``-shift * scale`` make the block non-PSD and raise :class:`ExtractionError`;
    smaller ones are dropped.
    """
    if not (sol.status is Status.OPTIMAL or (
        sol.status is Status.INDETERMINATE and sol.primal_residual <= REDUCED_RESIDUAL
    )):
        raise ExtractionError(f"solution status is {sol.status.value}")
    scale = max([1.0] + [float(np.abs(X).max()) for X in sol.blocks if X.size])
    out = []
    for monos, X in zip(enc.basis.blocks, sol.blocks):
        w, V = np.linalg.eigh((X + X.T) / 2)
        if w.size and w[0] < -shift * scale:
            raise ExtractionError(f"Gram block not PSD (eigenvalue {w[0]:.3g})")
        for lam, v in zip(w, V.T):
            if lam > shift * scale:
                poly = {m: float(c) for m, c in zip(monos, v) if abs(c) > 1e-12}
                out.append((float(lam), poly))
    return out


def expand_squares(squares, n: int) -> dict[Monomial, float]:
    out: dict[Monomial, float] = {}
    for w, q in squares:
        items = list(q.items())
        for m1, c1 in items:
            for m2, c2 in items:
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0.0) + w * c1 * c2
    return out


def reconstruction_error(enc: GramEncoding, squares, free_values=None) -> float:
    """Max coefficient error of ``sum w q^2`` against the encoded identity."""
    expanded = expand_squares(squares, enc.basis.n)
    expected: dict[Monomial, float] = {m: float(c) for m, c in enc.target.terms.items()}
    if free_values is not None:
        for fk, P in zip(free_values, enc.free_polys):
            for m, c in P.terms.items():
                expected[m] = expected.get(m, 0.0) + float(fk) * float(c)
    keys = set(expanded) | set(expected)
    return max((abs(expanded.get(m, 0.0) - expected.get(m, 0.0)) for m in keys), default=0.0)


# -- membership policy -------------------------------------------------------


class Verdict(enum.Enum):
    MEMBER = "member"
    NONMEMBER = "nonmember"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Membership:
    """Verdict of the margin policy.

    ``raw_margin`` is the Gram margin of the full problem. Targets with real
    zeros force a Gram kernel, which pins ``raw_margin`` at 0; in that band the
    problem is restricted to the numerically detected face and ``margin`` is
    the margin there (``reduced`` is then True). ``solution`` holds the Gram
    blocks in the original coordinates.
    """

    verdict: Verdict
    margin: float
    raw_margin: float
    reduced: bool
    solution: SdpSolution
    threshold: float

    @property
    def is_member(self) -> bool:
        return self.verdict is Verdict.MEMBER


def decide(
    problem: SdpProblem,
    threshold: float = MEMBER_THRESHOLD,
    tol: float = 1e-9,
    face_tol: float = FACE_TOL,
) -> Membership:
    """Apply the margin policy to a feasibility problem.

    ``margin > threshold`` is a member, ``margin < -threshold`` a non-member,
    anything else indeterminate.
    """
    raw, sol = sdp.solve_margin(problem, tol=tol)
    if raw > threshold:
        return Membership(Verdict.MEMBER, raw, raw, False, sol, threshold)
    if raw < -threshold:
        return Membership(Verdict.NONMEMBER, raw, raw, False, sol, threshold)
    if math.isnan(raw) or not sol.blocks:
        return Membership(Verdict.INDETERMINATE, raw, raw, False, sol, threshold)
    faces = sdp.numerical_face(sol.blocks, face_tol)
    if all(V.shape[1] == V.shape[0] for V in faces):
        return Membership(Verdict.INDETERMINATE, raw, raw, False, sol, threshold)
    reduced, kept = sdp.restrict(problem, faces)
    red_margin, red_sol = sdp.solve_margin(reduced, tol=tol)
    # the face is only as accurate as the boundary solution (~sqrt(tol)), so the
    # reduced solve may stall short of tol; a small primal residual is enough
    usable = red_sol.status is Status.OPTIMAL or (
        red_sol.status is Status.INDETERMINATE and red_sol.primal_residual <= REDUCED_RESIDUAL
    )
    if red_margin > threshold and usable:
        lifted = SdpSolution(
            red_sol.status,
            sdp.lift(red_sol, faces, kept),
            red_sol.free,
            red_sol.duals,
            0.0,
            0.0,
            red_sol.primal_residual,
            red_sol.dual_residual,
            red_sol.gap,
            iterations=red_sol.iterations,
        )
        return Membership(Verdict.MEMBER, red_margin, raw, True, lifted, threshold)
    # an inexact face can make the restricted equalities slightly inconsistent,
    # which the solver reports as infeasible; alternating projection keeps the
    # face rank fixed and tells noise (residual stays tiny) from a missing face
    if problem.free_vars:
        return Membership(Verdict.INDETERMINATE, raw, raw, False, sol, threshold)
    ranks = [V.shape[1] for V in faces]
    try:
        X, resid = sdp.refine_on_face(problem, sol.blocks, ranks)
    except RuntimeError:
        return Membership(Verdict.INDETERMINATE, raw, raw, False, sol, threshold)
    face_margin = min(
        (float(np.linalg.eigvalsh(B)[-k]) for B, k in zip(X, ranks) if k), default=math.inf
    )
    if resid <= FACE_RESIDUAL_FACTOR * tol and face_margin > threshold:
        proj = SdpSolution(Status.INDETERMINATE, X, sol.free, sol.duals, 0.0, 0.0, resid, math.nan, math.nan)
        return Membership(Verdict.MEMBER, face_margin, raw, True, proj, threshold)
    return Membership(Verdict.INDETERMINATE, raw, raw, False, sol, threshold)


def reznick_membership(M: SymmetricMatrix, r: int, **kw) -> tuple[Membership, GramEncoding]:
    enc = build_reznick(M, r)
    return decide(enc.problem, **kw), enc
