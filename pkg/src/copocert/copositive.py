"""Copositivity oracles and the Horn-matrix family."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import gram
from .certify import SosCertificate
from .exactpoly import ExactPolynomial
from .gram import GramEncoding, Membership, Verdict
from .sdp import Constraint, SdpProblem
from .symmat import SymmetricMatrix, diag_scale

DEFAULT_MAX_DEPTH = 12

_HORN_ROWS = (
    (1, 1, -1, -1, 1),
    (1, 1, 1, -1, -1),
    (-1, 1, 1, 1, -1),
    (-1, -1, 1, 1, 1),
    (1, -1, -1, 1, 1),
)


def horn() -> SymmetricMatrix:
    return SymmetricMatrix.from_rows(_HORN_ROWS)


# -- simplicial copositivity test ------------------------------------------------


class CopStatus(enum.Enum):
    COPOSITIVE = "Copositive"
    NOT_COPOSITIVE = "NotCopositive"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class CopVerdict:
    status: CopStatus
    witness: tuple[Fraction, ...] | None = None
    depth: int = 0
    simplices: int = 0


def is_copositive(M: SymmetricMatrix, max_depth: int = DEFAULT_MAX_DEPTH) -> CopVerdict:
    """Decide copositivity by bisecting the standard simplex.

    A simplex with vertex matrix ``V`` is discharged when ``V^T M V >= 0``
    entrywise; a vertex with ``v^T M v < 0`` is an exact witness. Otherwise the
    longest edge is halved (ties: lowest vertex pair) until ``max_depth``.
    Works on ``Q = V^T M V`` and ``E = V^T V`` directly, which both update
    linearly under midpoint insertion.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    if not M.exact:
        raise TypeError("is_copositive needs an exact matrix")
    n = M.n
    Q0 = [[M[i, j] for j in range(n)] for i in range(n)]
    E0 = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    V0 = [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    stack = [(Q0, E0, V0, 0)]
    unknown = False
    count = 0
    deepest = 0
    while stack:
        Q, E, V, depth = stack.pop()
        count += 1
        deepest = max(deepest, depth)
        for i in range(n):
            if Q[i][i] < 0:
                return CopVerdict(CopStatus.NOT_COPOSITIVE, V[i], depth, count)
        if all(Q[i][j] >= 0 for i in range(n) for j in range(i + 1, n)):
            continue
        if depth >= max_depth:
            unknown = True
            continue
        best = None
        for i in range(n):
            for j in range(i + 1, n):
                length = E[i][i] - 2 * E[i][j] + E[j][j]
                if best is None or length > best[0]:
                    best = (length, i, j)
        _, a, b = best
        mid_q = [(Q[a][k] + Q[b][k]) / 2 for k in range(n)]
        mid_q_self = (Q[a][a] + 2 * Q[a][b] + Q[b][b]) / 4
        mid_e = [(E[a][k] + E[b][k]) / 2 for k in range(n)]
        mid_e_self = (E[a][a] + 2 * E[a][b] + E[b][b]) / 4
        mid_v = tuple((x + y) / 2 for x, y in zip(V[a], V[b]))
        children = []
        for replaced in (a, b):
            Qc = [row[:] for row in Q]
            Ec = [row[:] for row in E]
            for k in range(n):
                Qc[replaced][k] = Qc[k][replaced] = mid_q[k]
                Ec[replaced][k] = Ec[k][replaced] = mid_e[k]
            Qc[replaced][replaced] = mid_q_self
            Ec[replaced][replaced] = mid_e_self
            Vc = list(V)
            Vc[replaced] = mid_v
            children.append((Qc, Ec, Vc, depth + 1))
        # explore the child keeping vertex a first
        stack.append(children[0])
        stack.append(children[1])
    if unknown:
        return CopVerdict(CopStatus.UNKNOWN, None, deepest, count)
    return CopVerdict(CopStatus.COPOSITIVE, None, deepest, count)


# -- K^(0): PSD + nonnegative ----------------------------------------------------


@dataclass(frozen=True)
class K0Result:
    verdict: Verdict
    P: np.ndarray | None = None
    N: np.ndarray | None = None
    margin: float = float("nan")

    @property
    def answer(self) -> str:
        return {Verdict.MEMBER: "Yes", Verdict.NONMEMBER: "No", Verdict.INDETERMINATE: "Indeterminate"}[self.verdict]


def k0_problem(M: SymmetricMatrix) -> SdpProblem:
    """Feasibility of ``M = P + N`` with ``P`` PSD and ``N`` entrywise nonnegative.

    Block 0 is ``P``; each ``N_ij`` (``i <= j``) is its own size-1 block.
    """
    n = M.n
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    cons = []
    for k, (i, j) in enumerate(pairs):
        # <A, P> picks P_ij: an off-diagonal upper entry counts twice, hence 1/2
        coeff = Fraction(1) if i == j else Fraction(1, 2)
        cons.append(Constraint({0: {(i, j): coeff}, 1 + k: {(0, 0): Fraction(1)}}, {}, M[i, j]))
    return SdpProblem((n,) + (1,) * len(pairs), 0, tuple(cons))


def in_K0(M: SymmetricMatrix, **kw) -> K0Result:
    mem = gram.decide(k0_problem(M), **kw)
    n = M.n
    if mem.verdict is not Verdict.MEMBER:
        return K0Result(mem.verdict, margin=mem.margin)
    blocks = mem.solution.blocks
    P = blocks[0]
    N = np.zeros((n, n))
    k = 1
    for i in range(n):
        for j in range(i, n):
            N[i, j] = N[j, i] = blocks[k][0, 0]
            k += 1
    return K0Result(mem.verdict, P, N, mem.margin)


# -- Horn family -----------------------------------------------------------------


def _check_d(d: Sequence) -> tuple[Fraction, ...]:
    if len(d) != 5:
        raise ValueError(f"need exactly 5 scaling entries, got {len(d)}")
    dd = tuple(Fraction(v) for v in d)
    if any(v <= 0 for v in dd):
        raise ValueError("scaling entries must be positive")
    return dd


def cyclic_slacks(d: Sequence) -> tuple[Fraction, ...]:
    """``d_{i-1} + d_{i+1} - d_i`` for ``i = 1..5`` (indices mod 5)."""
    dd = _check_d(d)
    return tuple(dd[(i - 1) % 5] + dd[(i + 1) % 5] - dd[i] for i in range(5))


def lemma_dhd_condition(d: Sequence) -> bool:
    return all(s >= 0 for s in cyclic_slacks(d))


def horn_scaled_matrix(d: Sequence) -> SymmetricMatrix:
    """The scaling ``D^{-1} H D^{-1}`` (``D = diag(d)``).

    It lies in ``K^(1)`` exactly when ``(sum d_i x_i^2) q_H`` is a sum of
    squares, i.e. when :func:`lemma_dhd_condition` holds for ``d``.
    """
    dd = _check_d(d)
    return diag_scale([1 / v for v in dd], horn())


def horn_scaled_decomposition(d: Sequence) -> SosCertificate:
    """Explicit weighted-multiplier certificate for ``(sum d_i x_i^2) q_H``.

    Five squares ``d_i (x_i (H x^2)_i)^2`` plus ``4 s_i (x_{i-1} x_i x_{i+1})^2``
    with ``s_i`` the cyclic slacks; zero slacks drop out.
    """
    dd = _check_d(d)
    slacks = cyclic_slacks(dd)
    if any(s < 0 for s in slacks):
        bad = [i + 1 for i, s in enumerate(slacks) if s < 0]
        raise ValueError(f"cyclic condition fails at i = {bad}; a triple-product weight would be negative")
    n = 5
    squares = []
    for i in range(n):
        terms = {}
        for j in range(n):
            e = [0] * n
            e[i] += 1
            e[j] += 2
            terms[tuple(e)] = _HORN_ROWS[i][j]
        squares.append((dd[i], ExactPolynomial(n, terms)))
    for i in range(n):
        if slacks[i]:
            e = [0] * n
            for k in (i - 1, i, i + 1):
                e[k % n] = 1
            squares.append((4 * slacks[i], ExactPolynomial.monomial(e)))
    return SosCertificate("reznick", n, tuple(squares), r=1, matrix=horn(), multiplier=dd)


# -- level search ----------------------------------------------------------------


@dataclass
class LevelResult:
    """Outcome of :func:`min_level`.

    ``level`` is the first ``r`` judged a member, or ``None`` (NotFoundUpTo
    ``r_max``). ``NotFoundUpTo`` is not a proof of non-membership in any
    ``K^(r)``.
    """

    level: int | None
    r_max: int
    indeterminate: list[int] = field(default_factory=list)
    memberships: dict[int, Membership] = field(default_factory=dict)
    encodings: dict[int, GramEncoding] = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.level is not None

    def __str__(self) -> str:
        if self.found:
            return f"Level {self.level}"
        return f"NotFoundUpTo {self.r_max}"


def min_level(M: SymmetricMatrix, r_max: int, r_min: int = 0, **kw) -> LevelResult:
    if r_max < 0:
        raise ValueError("r_max must be >= 0")
    res = LevelResult(None, r_max)
    for r in range(r_min, r_max + 1):
        mem, enc = gram.reznick_membership(M, r, **kw)
        res.memberships[r] = mem
        res.encodings[r] = enc
        if mem.verdict is Verdict.MEMBER:
            res.level = r
            return res
        if mem.verdict is Verdict.INDETERMINATE:
            res.indeterminate.append(r)
    return res
