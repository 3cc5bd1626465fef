"""Dense block semidefinite programs.

Problems are posed in primal standard form::

    minimize    sum_j <C_j, X_j> + c^T f
    subject to  sum_j <A_ij, X_j> + a_i^T f = b_i      (i = 1..m)
                X_j PSD,  f free

Coefficient matrices are given by their upper triangle: an off-diagonal entry
``v`` at ``(p, q)`` stands for ``A_pq = A_qp = v``, so it contributes
``2 v X_pq`` to the inner product. Size-1 blocks are nonnegative scalars.

The interior-point iteration itself is cvxopt's ``conelp`` (primal-dual
path following on the homogeneous self-dual embedding, Mehrotra correction,
Nesterov-Todd scaling). cvxopt is handed the *dual* of the problem above, so
its cone multiplier is our ``X`` and its equality multiplier is our ``f``;
this keeps the KKT system at ``m x m``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

Entries = Mapping[tuple[int, int], object]


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Constraint:
    """One affine equality: ``sum_j <A_j, X_j> + a^T f = rhs``.

    ``blocks`` maps block index to upper-triangle entries ``{(p, q): value}``
    with ``p <= q``; ``free`` maps free-variable index to its coefficient.
    Values may be :class:`Fraction` (kept for exact post-processing) or float.
    """

    blocks: Mapping[int, Entries]
    free: Mapping[int, object] = field(default_factory=dict)
    rhs: object = 0


@dataclass(frozen=True)
class SdpProblem:
    blocks: tuple[int, ...]
    free_vars: int
    constraints: tuple[Constraint, ...]
    objective_blocks: Mapping[int, Entries] = field(default_factory=dict)
    objective_free: Mapping[int, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(s) for s in self.blocks))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if any(s < 1 for s in self.blocks):
            raise ValueError("block sizes must be >= 1")
        if self.free_vars < 0:
            raise ValueError("free variable count must be >= 0")
        for k, con in enumerate(self.constraints):
            self._check_entries(con.blocks, con.free, f"constraint {k}")
        self._check_entries(self.objective_blocks, self.objective_free, "objective")

    def _check_entries(self, blocks, free, where):
        for j, entries in blocks.items():
            if not 0 <= j < len(self.blocks):
                raise ValueError(f"{where} references undeclared block {j}")
            s = self.blocks[j]
            for p, q in entries:
                if not (0 <= p <= q < s):
                    raise ValueError(f"{where}: entry ({p},{q}) outside upper triangle of block {j}")
        for k in free:
            if not 0 <= k < self.free_vars:
                raise ValueError(f"{where} references undeclared free variable {k}")

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def is_feasibility(self) -> bool:
        return not any(
            float(v) for e in self.objective_blocks.values() for v in e.values()
        ) and not any(float(v) for v in self.objective_free.values())


@dataclass(frozen=True)
class SdpSolution:
    status: Status
    blocks: tuple[np.ndarray, ...]
    free: np.ndarray
    duals: np.ndarray
    objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int = 0
    ray: object = None
    ray_violation: float = math.nan

    @property
    def residuals(self) -> dict[str, float]:
        return {"primal": self.primal_residual, "dual": self.dual_residual, "gap": self.gap}


# -- dense helpers -----------------------------------------------------------


def sym_from_entries(size: int, entries: Entries) -> np.ndarray:
    A = np.zeros((size, size))
    for (p, q), v in entries.items():
        A[p, q] = float(v)
        A[q, p] = float(v)
    return A


def entries_from_sym(A: np.ndarray, tol: float = 0.0) -> dict[tuple[int, int], float]:
    s = A.shape[0]
    return {
        (p, q): float(A[p, q]) for p in range(s) for q in range(p, s) if abs(A[p, q]) > tol
    }


def inner(entries: Entries, X: np.ndarray) -> float:
    total = 0.0
    for (p, q), v in entries.items():
        total += float(v) * X[p, q] * (1.0 if p == q else 2.0)
    return total


def _row_vector(p: SdpProblem, con: Constraint, offsets: list[int], nvar: int) -> dict[int, float]:
    """Constraint as a linear functional on (upper-triangle X entries, f)."""
    row = {}
    for j, entries in con.blocks.items():
        s = p.blocks[j]
        for (a, b), v in entries.items():
            idx = offsets[j] + a * s - a * (a - 1) // 2 + (b - a)
            row[idx] = row.get(idx, 0.0) + float(v) * (1.0 if a == b else 2.0)
    base = offsets[-1]
    for k, v in con.free.items():
        row[base + k] = row.get(base + k, 0.0) + float(v)
    return row


def constraint_matrix(p: SdpProblem):
    """Sparse ``m x nvar`` matrix of the constraints and the rhs vector."""
    import scipy.sparse as sp

    offsets = [0]
    for s in p.blocks:
        offsets.append(offsets[-1] + s * (s + 1) // 2)
    nvar = offsets[-1] + p.free_vars
    rows, cols, vals = [], [], []
    for i, con in enumerate(p.constraints):
        for c, v in _row_vector(p, con, offsets, nvar).items():
            if v:
                rows.append(i)
                cols.append(c)
                vals.append(v)
    R = sp.csr_matrix((vals, (rows, cols)), shape=(len(p.constraints), nvar))
    b = np.array([float(c.rhs) for c in p.constraints])
    return R, b


def _independent_rows(R, b, tol: float):
    """Select a maximal independent subset of constraint rows.

    Returns ``(keep, farkas)`` where ``farkas`` is ``None`` when the dropped
    rows are consistent, else a vector ``y`` with ``R^T y = 0`` and
    ``b^T y > 0`` proving the affine system infeasible.
    """
    m = R.shape[0]
    K = (R @ R.T).toarray()
    if not m:
        return np.arange(0), None
    _, Rq, piv = scipy.linalg.qr(K, pivoting=True)
    diag = np.abs(np.diag(Rq))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    rank = int(np.sum(diag > tol * scale))
    keep = np.sort(piv[:rank])
    if rank == m:
        return keep, None
    dense = R.toarray()
    x, *_ = np.linalg.lstsq(dense, b, rcond=None)
    y = b - dense @ x
    if np.linalg.norm(y) > 1e-9 * max(1.0, np.linalg.norm(b)):
        return keep, y
    return keep, None


# -- solve -------------------------------------------------------------------


def solve(p: SdpProblem, tol: float = 1e-8, max_iter: int = 100) -> SdpSolution:
    """Solve ``p`` to relative accuracy ``tol``.

    Returns status Optimal (residuals <= tol), PrimalInfeasible or
    DualInfeasible (with an improving-ray certificate in ``ray``), or
    Indeterminate when the iteration limit is hit or progress stalls.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    import cvxopt
    from cvxopt import solvers

    R, b_all = constraint_matrix(p)
    keep, farkas = _independent_rows(R, b_all, 1e-11)
    nblk = len(p.blocks)
    if farkas is not None:
        y = np.asarray(farkas)
        return SdpSolution(
            Status.PRIMAL_INFEASIBLE,
            tuple(np.zeros((s, s)) for s in p.blocks),
            np.zeros(p.free_vars),
            np.zeros(p.num_constraints),
            math.nan,
            math.nan,
            math.inf,
            math.nan,
            math.nan,
            ray=y,
            ray_violation=0.0,
        )

    cons = [p.constraints[i] for i in keep]
    m = len(cons)
    C = [sym_from_entries(s, p.objective_blocks.get(j, {})) for j, s in enumerate(p.blocks)]
    cfree = np.array([float(p.objective_free.get(k, 0.0)) for k in range(p.free_vars)])

    # free-variable coefficient columns (rows of cvxopt's equality matrix)
    Afree = np.zeros((p.free_vars, m))
    for i, con in enumerate(cons):
        for k, v in con.free.items():
            Afree[k, i] += float(v)
    active_free = [k for k in range(p.free_vars) if np.any(Afree[k])]
    for k in range(p.free_vars):
        if k not in active_free and cfree[k] != 0:
            # objective is unbounded along f_k whenever the problem is feasible
            ray_f = np.zeros(p.free_vars)
            ray_f[k] = -np.sign(cfree[k])
            return SdpSolution(
                Status.DUAL_INFEASIBLE,
                tuple(np.zeros((s, s)) for s in p.blocks),
                np.zeros(p.free_vars),
                np.zeros(p.num_constraints),
                -math.inf,
                math.nan,
                math.nan,
                math.inf,
                math.nan,
                ray=(tuple(np.zeros((s, s)) for s in p.blocks), ray_f),
                ray_violation=0.0,
            )

    if m == 0:
        return _solve_unconstrained(p, C, cfree)
    if not p.blocks:
        return _solve_linear(p, cons, cfree)

    lin = [j for j, s in enumerate(p.blocks) if s == 1]
    mats = [j for j, s in enumerate(p.blocks) if s > 1]
    row_of = {}
    r0 = 0
    for j in lin:
        row_of[j] = r0
        r0 += 1
    for j in mats:
        row_of[j] = r0
        r0 += p.blocks[j] ** 2
    nrows = r0

    gi, gj, gv = [], [], []
    for i, con in enumerate(cons):
        for j, entries in con.blocks.items():
            s = p.blocks[j]
            base = row_of[j]
            for (a, bb), v in entries.items():
                v = float(v)
                if not v:
                    continue
                gi.append(base + a + bb * s)
                gj.append(i)
                gv.append(v)
                if a != bb:
                    gi.append(base + bb + a * s)
                    gj.append(i)
                    gv.append(v)
    G = cvxopt.spmatrix(gv, gi, gj, (nrows, m)) if gv else cvxopt.spmatrix([], [], [], (nrows, m))
    h = np.zeros(nrows)
    for j in lin + mats:
        s = p.blocks[j]
        h[row_of[j] : row_of[j] + s * s] = C[j].reshape(-1, order="F")
    b = np.array([float(c.rhs) for c in cons])
    dims = {"l": len(lin), "q": [], "s": [p.blocks[j] for j in mats]}

    opts = {
        "show_progress": False,
        "maxiters": int(max_iter),
        "abstol": tol,
        "reltol": tol,
        "feastol": tol,
        "refinement": 2,
    }
    kwargs = {}
    if active_free:
        kwargs["A"] = cvxopt.matrix(Afree[active_free, :])
        kwargs["b"] = cvxopt.matrix(cfree[active_free])
    res = None
    # Cholesky KKT is far cheaper than cvxopt's default dense QR; QR is the fallback
    for kkt in ("chol", "qr"):
        try:
            res = solvers.conelp(
                cvxopt.matrix(-b), G, cvxopt.matrix(h), dims, kktsolver=kkt, options=opts, **kwargs
            )
        except (ValueError, ArithmeticError):
            continue
        if res["status"] != "unknown" or kkt == "qr":
            break
    if res is None:
        # singular KKT system: report rather than raise
        return SdpSolution(
            Status.INDETERMINATE,
            tuple(np.zeros((s, s)) for s in p.blocks),
            np.zeros(p.free_vars),
            np.zeros(p.num_constraints),
            math.nan,
            math.nan,
            math.inf,
            math.inf,
            math.inf,
        )

    def unpack_z(zvec):
        z = np.array(zvec).ravel()
        X = [None] * nblk
        for j in lin:
            X[j] = np.array([[z[row_of[j]]]])
        for j in mats:
            s = p.blocks[j]
            Z = z[row_of[j] : row_of[j] + s * s].reshape((s, s), order="F")
            L = np.tril(Z)
            X[j] = L + L.T - np.diag(np.diag(Z))
        return tuple(X)

    def full_free(nu):
        f = np.zeros(p.free_vars)
        if nu is not None and active_free:
            f[active_free] = np.array(nu).ravel()
        return f

    def full_duals(xv):
        y = np.zeros(p.num_constraints)
        if xv is not None:
            y[keep] = np.array(xv).ravel()
        return y

    cv_status = res["status"]
    iters = int(res.get("iterations", 0) or 0)
    if cv_status == "dual infeasible":
        # Farkas ray for our primal: sum y_i A_i <= 0, a(y) = 0, b^T y = 1
        y = full_duals(res["x"])
        viol = _farkas_violation(p, y)
        return SdpSolution(
            Status.PRIMAL_INFEASIBLE,
            tuple(np.zeros((s, s)) for s in p.blocks),
            np.zeros(p.free_vars),
            y,
            math.nan,
            math.nan,
            math.inf,
            math.nan,
            math.nan,
            iterations=iters,
            ray=y,
            ray_violation=viol,
        )
    if cv_status == "primal infeasible":
        Z = unpack_z(res["z"])
        nu = full_free(res["y"])
        viol = _ray_violation(p, Z, nu)
        return SdpSolution(
            Status.DUAL_INFEASIBLE,
            tuple(np.zeros((s, s)) for s in p.blocks),
            np.zeros(p.free_vars),
            np.zeros(p.num_constraints),
            -math.inf,
            math.nan,
            math.nan,
            math.inf,
            math.nan,
            iterations=iters,
            ray=(Z, nu),
            ray_violation=viol,
        )

    X = unpack_z(res["z"]) if res["z"] is not None else tuple(np.zeros((s, s)) for s in p.blocks)
    f = full_free(res["y"])
    y = full_duals(res["x"])
    pobj = sum(float(np.sum(C[j] * X[j])) for j in range(nblk)) + float(cfree @ f)
    dobj = float(b_all @ y)
    pres = res.get("dual infeasibility")
    dres = res.get("primal infeasibility")
    gap_abs = res.get("gap")
    gap_rel = res.get("relative gap")
    gaps = [g for g in (gap_abs, gap_rel) if g is not None]
    gap = min(abs(g) for g in gaps) if gaps else math.inf
    status = Status.OPTIMAL if cv_status == "optimal" else Status.INDETERMINATE
    return SdpSolution(
        status,
        X,
        f,
        y,
        pobj,
        dobj,
        float(pres) if pres is not None else math.inf,
        float(dres) if dres is not None else math.inf,
        float(gap),
        iterations=iters,
    )


def _solve_unconstrained(p: SdpProblem, C, cfree) -> SdpSolution:
    # min <C,X> over X PSD (free vars already known to have zero cost): 0 iff every C_j PSD
    for j, Cj in enumerate(C):
        w, V = np.linalg.eigh(Cj)
        if w[0] < 0:
            Z = [np.zeros_like(c) for c in C]
            Z[j] = np.outer(V[:, 0], V[:, 0]) / abs(w[0])
            return SdpSolution(
                Status.DUAL_INFEASIBLE,
                tuple(np.zeros_like(c) for c in C),
                np.zeros(p.free_vars),
                np.zeros(0),
                -math.inf,
                math.nan,
                math.nan,
                math.inf,
                math.nan,
                ray=(tuple(Z), np.zeros(p.free_vars)),
                ray_violation=0.0,
            )
    return SdpSolution(
        Status.OPTIMAL,
        tuple(np.zeros_like(c) for c in C),
        np.zeros(p.free_vars),
        np.zeros(0),
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    )


def _solve_linear(p: SdpProblem, cons, cfree) -> SdpSolution:
    # no cone at all: a consistent linear system in the free variables
    Af = np.array([[float(c.free.get(k, 0)) for k in range(p.free_vars)] for c in cons])
    b = np.array([float(c.rhs) for c in cons])
    f, *_ = np.linalg.lstsq(Af, b, rcond=None)
    y, *_ = np.linalg.lstsq(Af.T, cfree, rcond=None)
    if np.linalg.norm(Af.T @ y - cfree) > 1e-9 * max(1.0, np.linalg.norm(cfree)):
        return SdpSolution(
            Status.DUAL_INFEASIBLE, (), np.zeros(p.free_vars), np.zeros(p.num_constraints),
            -math.inf, math.nan, math.nan, math.inf, math.nan,
        )
    obj = float(cfree @ f)
    res = float(np.linalg.norm(Af @ f - b)) / max(1.0, float(np.linalg.norm(b)))
    return SdpSolution(Status.OPTIMAL, (), f, np.zeros(p.num_constraints), obj, obj, res, 0.0, 0.0)


def _farkas_violation(p: SdpProblem, y: np.ndarray) -> float:
    """How badly ``y`` fails the infeasibility certificate, normalised by ``b^T y``."""
    by = sum(float(c.rhs) * yi for c, yi in zip(p.constraints, y))
    if by <= 0:
        return math.inf
    worst = 0.0
    for j, s in enumerate(p.blocks):
        S = np.zeros((s, s))
        for c, yi in zip(p.constraints, y):
            if j in c.blocks:
                S += yi * sym_from_entries(s, c.blocks[j])
        worst = max(worst, float(np.linalg.eigvalsh(S)[-1]))
    for k in range(p.free_vars):
        worst = max(worst, abs(sum(float(c.free.get(k, 0)) * yi for c, yi in zip(p.constraints, y))))
    return worst / by


def _ray_violation(p: SdpProblem, Z, nu) -> float:
    """Violation of an improving ray ``(Z, nu)``: A(Z) + a nu = 0, Z PSD, <C,Z> + c nu < 0."""
    cz = sum(inner(p.objective_blocks.get(j, {}), Z[j]) for j in range(len(p.blocks)))
    cz += sum(float(p.objective_free.get(k, 0)) * nu[k] for k in range(p.free_vars))
    if cz >= 0:
        return math.inf
    worst = 0.0
    for c in p.constraints:
        lhs = sum(inner(e, Z[j]) for j, e in c.blocks.items())
        lhs += sum(float(v) * nu[k] for k, v in c.free.items())
        worst = max(worst, abs(lhs))
    for Zj in Z:
        worst = max(worst, max(0.0, -float(np.linalg.eigvalsh(Zj)[0])))
    return worst / abs(cz)


# -- margin ------------------------------------------------------------------


def margin_problem(p: SdpProblem) -> SdpProblem:
    """``max lam`` s.t. the constraints hold with every block ``X_j = Y_j + lam I``."""
    lam = p.free_vars
    cons = []
    for c in p.constraints:
        trace = sum(
            (float(v) for ent in c.blocks.values() for (a, b), v in ent.items() if a == b), 0.0
        )
        free = dict(c.free)
        if trace:
            free[lam] = trace
        cons.append(Constraint(c.blocks, free, c.rhs))
    return SdpProblem(p.blocks, p.free_vars + 1, tuple(cons), {}, {lam: -1.0})


def solve_margin(p: SdpProblem, tol: float = 1e-8, max_iter: int = 100) -> tuple[float, SdpSolution]:
    """Largest ``lam`` with every block ``- lam I`` PSD and the constraints satisfied.

    ``lam > 0`` means strictly feasible; ``lam < 0`` means the strict problem is
    infeasible. Returns ``+inf`` when nothing bounds ``lam`` (e.g. no constraints)
    and ``-inf`` when the affine constraints alone are inconsistent. The returned
    solution is expressed in the original variables ``X_j = Y_j + lam I``.
    """
    if not p.is_feasibility():
        raise ValueError("solve_margin expects a pure feasibility problem")
    if not p.constraints:
        sol = _solve_unconstrained(p, [np.zeros((s, s)) for s in p.blocks], np.zeros(p.free_vars))
        return math.inf, sol
    if not p.blocks:
        # nothing left to be strictly positive: feasibility alone decides
        sol = solve(p, tol=tol, max_iter=max_iter)
        return (math.inf if sol.status is Status.OPTIMAL else -math.inf), sol
    mp = margin_problem(p)
    sol = solve(mp, tol=tol, max_iter=max_iter)
    if sol.status is Status.DUAL_INFEASIBLE:
        return math.inf, sol
    if sol.status is Status.PRIMAL_INFEASIBLE:
        return -math.inf, sol
    lam = float(sol.free[-1])
    X = tuple(Y + lam * np.eye(Y.shape[0]) for Y in sol.blocks)
    lifted = SdpSolution(
        sol.status,
        X,
        sol.free[:-1],
        sol.duals,
        0.0,
        0.0,
        sol.primal_residual,
        sol.dual_residual,
        sol.gap,
        iterations=sol.iterations,
    )
    return lam, lifted


# -- facial restriction --------------------------------------------------------


def numerical_face(blocks: Sequence[np.ndarray], rel_tol: float = 1e-5) -> list[np.ndarray]:
    """Orthonormal range bases of the numerically nonzero part of each block.

    An eigenvalue counts as zero when it is below ``rel_tol * max(1, largest
    eigenvalue over all blocks)``.
    """
    scale = max([1.0] + [float(np.linalg.eigvalsh(X)[-1]) for X in blocks if X.size])
    out = []
    for X in blocks:
        w, V = np.linalg.eigh((X + X.T) / 2)
        out.append(V[:, w > rel_tol * scale])
    return out


def restrict(p: SdpProblem, faces: Sequence[np.ndarray]) -> tuple[SdpProblem, list[int]]:
    """Substitute ``X_j = V_j Y_j V_j^T``; blocks with empty range are dropped.

    Returns the restricted problem and the map from its block index to the
    original one.
    """
    kept = [j for j, V in enumerate(faces) if V.shape[1] > 0]
    new_index = {j: k for k, j in enumerate(kept)}

    def project(ent_by_block):
        out = {}
        for j, ent in ent_by_block.items():
            if j not in new_index:
                continue
            V = faces[j]
            A = sym_from_entries(p.blocks[j], ent)
            out[new_index[j]] = entries_from_sym(V.T @ A @ V, tol=1e-14)
        return out

    cons = tuple(Constraint(project(c.blocks), dict(c.free), c.rhs) for c in p.constraints)
    sizes = tuple(faces[j].shape[1] for j in kept)
    return SdpProblem(sizes, p.free_vars, cons, project(p.objective_blocks), dict(p.objective_free)), kept


def lift(sol: SdpSolution, faces: Sequence[np.ndarray], kept: Sequence[int]) -> tuple[np.ndarray, ...]:
    blocks = [np.zeros((V.shape[0], V.shape[0])) for V in faces]
    for k, j in enumerate(kept):
        V = faces[j]
        blocks[j] = V @ sol.blocks[k] @ V.T
    return tuple(blocks)


def refine_on_face(
    p: SdpProblem, blocks: Sequence[np.ndarray], ranks: Sequence[int], iters: int = 200
) -> tuple[tuple[np.ndarray, ...], float]:
    """Alternate between the constraint subspace and rank-``ranks[j]`` PSD blocks.

    Only for problems without free variables. Returns the last rank-truncated
    point and its relative residual ``|A y - b|_inf / max(1, |b|_inf)``; a
    residual that stays small means a nearby feasible point on the face.
    """
    import scipy.sparse.linalg as spla

    if p.free_vars:
        raise ValueError("refine_on_face handles block variables only")
    R, b = constraint_matrix(p)
    R = R.tocsc()
    solve_normal = spla.factorized((R @ R.T).tocsc())
    iu = [np.triu_indices(s) for s in p.blocks]
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))

    def truncate(y):
        out, pos = [], 0
        for j, s in enumerate(p.blocks):
            k = s * (s + 1) // 2
            M = np.zeros((s, s))
            M[iu[j]] = y[pos:pos + k]
            M = M + np.triu(M, 1).T
            pos += k
            w, V = np.linalg.eigh(M)
            keep = slice(s - ranks[j], s)
            out.append((V[:, keep] * np.maximum(w[keep], 0.0)) @ V[:, keep].T)
        return out

    X = truncate(np.concatenate([np.asarray(B)[iu[j]] for j, B in enumerate(blocks)]))
    resid = math.inf
    for _ in range(iters):
        y = np.concatenate([B[iu[j]] for j, B in enumerate(X)])
        r = R @ y - b
        resid = float(np.max(np.abs(r), initial=0.0)) / scale
        if resid < 1e-13:
            break
        X = truncate(y - R.T @ solve_normal(r))
    return tuple(X), resid


# -- dump format -------------------------------------------------------------


def _fmt_num(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _parse_num(tok: str):
    if "/" in tok:
        return Fraction(tok)
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def _fmt_terms(blocks: Mapping[int, Entries], free: Mapping[int, object]) -> str:
    parts = []
    for j in sorted(blocks):
        for (a, b) in sorted(blocks[j]):
            parts.append(f"B{j}:{a}:{b}:{_fmt_num(blocks[j][a, b])}")
    for k in sorted(free):
        parts.append(f"F{k}:{_fmt_num(free[k])}")
    return " ".join(parts)


def dumps(p: SdpProblem) -> str:
    """Line-oriented text form of ``p``.

    ::

        sdp 1
        blocks <s_0> <s_1> ...
        free <count>
        objective <terms>
        constraint <rhs> <terms>        (one line per constraint)

    Terms are sparse triplets ``B<block>:<row>:<col>:<value>`` (upper
    triangle, 0-based) and ``F<index>:<value>``; values are integers, exact
    rationals ``p/q`` or floats.
    """
    lines = [
        "sdp 1",
        "blocks " + " ".join(str(s) for s in p.blocks),
        f"free {p.free_vars}",
        ("objective " + _fmt_terms(p.objective_blocks, p.objective_free)).rstrip(),
    ]
    for c in p.constraints:
        lines.append(f"constraint {_fmt_num(c.rhs)} {_fmt_terms(c.blocks, c.free)}".rstrip())
    return "\n".join(lines) + "\n"


def _parse_terms(tokens: list[str], lineno: int):
    blocks: dict[int, dict] = {}
    free: dict[int, object] = {}
    for tok in tokens:
        try:
            if tok.startswith("B"):
                j, a, b, v = tok[1:].split(":")
                blocks.setdefault(int(j), {})[int(a), int(b)] = _parse_num(v)
            elif tok.startswith("F"):
                k, v = tok[1:].split(":")
                free[int(k)] = _parse_num(v)
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {lineno}: bad term {tok!r}") from None
    return blocks, free


def loads(text: str) -> SdpProblem:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln and not ln.startswith("#")]
    if not lines or lines[0][1] != "sdp 1":
        raise ValueError("line 1: expected header 'sdp 1'")
    sizes = free_count = None
    objective = ({}, {})
    cons = []
    for lineno, ln in lines[1:]:
        head, *rest = ln.split()
        if head == "blocks":
            sizes = tuple(int(t) for t in rest)
        elif head == "free":
            free_count = int(rest[0])
        elif head == "objective":
            objective = _parse_terms(rest, lineno)
        elif head == "constraint":
            if not rest:
                raise ValueError(f"line {lineno}: constraint without right-hand side")
            blocks, free = _parse_terms(rest[1:], lineno)
            cons.append(Constraint(blocks, free, _parse_num(rest[0])))
        else:
            raise ValueError(f"line {lineno}: unknown record {head!r}")
    if sizes is None or free_count is None:
        raise ValueError("missing 'blocks' or 'free' record")
    return SdpProblem(sizes, free_count, tuple(cons), objective[0], objective[1])


def dump(p: SdpProblem, path) -> None:
    Path(path).write_text(dumps(p))


def load(path) -> SdpProblem:
    return loads(Path(path).read_text())
