from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import psd_plus_nonneg
from copocert import gram, sdp
from copocert.copositive import horn
from copocert.exactpoly import ExactPolynomial, power_sum_squares
from copocert.gram import (
    MonomialBasis,
    Verdict,
    build_reznick,
    build_sphere,
    decide,
    extract_squares,
    reconstruction_error,
)
from copocert.sdp import SdpSolution, Status
from copocert.symmat import SymmetricMatrix, quartic_form


def _fake_solution(blocks, free=()):
    return SdpSolution(Status.OPTIMAL, tuple(blocks), np.array(free, dtype=float), np.zeros(0), 0, 0, 0, 0, 0)


def test_basis_classes_partition():
    for n, d in [(2, 2), (3, 3), (5, 3), (4, 4)]:
        B = MonomialBasis.build(n, d)
        seen = [m for monos in B.blocks for m in monos]
        assert len(seen) == len(set(seen)) == B.size
        for parity, monos in B.classes:
            assert sum(parity) % 2 == d % 2
            assert all(tuple(e % 2 for e in m) == parity for m in monos)


def test_one_constraint_per_target_monomial():
    enc = build_reznick(horn(), 1)
    assert set(enc.target.terms) <= set(enc.coefficient_index)
    assert len(set(enc.coefficient_index.values())) == enc.problem.num_constraints
    assert enc.problem.blocks == tuple(len(b) for b in enc.basis.blocks)


def test_all_ones_gram_is_feasible():
    enc = build_reznick(SymmetricMatrix.ones(2), 0)
    # Gram of (x1^2 + x2^2)^2 in {x1^2, x1 x2, x2^2}: all-ones restricted to parity blocks
    blocks = []
    for monos in enc.basis.blocks:
        s = len(monos)
        blocks.append(np.ones((s, s)) if s == 2 else np.zeros((1, 1)))
    for con in enc.problem.constraints:
        lhs = sum(sdp.inner(ent, blocks[j]) for j, ent in con.blocks.items())
        assert abs(lhs - float(con.rhs)) < 1e-12
    assert decide(enc.problem).verdict is Verdict.MEMBER


def test_horn_levels():
    mem, _ = gram.reznick_membership(horn(), 1)
    assert mem.verdict is Verdict.MEMBER and mem.margin > 0
    mem0, _ = gram.reznick_membership(horn(), 0)
    assert mem0.verdict is Verdict.NONMEMBER and mem0.margin < -1e-4


def test_horn_raw_margin_is_pinned_at_zero():
    # the zeros of the Horn form force a Gram kernel; only the face-restricted margin is positive
    mem, _ = gram.reznick_membership(horn(), 1)
    assert abs(mem.raw_margin) < 1e-6 and mem.reduced


def test_sphere_univariate():
    x = ExactPolynomial.variable(1, 0)
    enc = build_sphere(x * x, 1)
    assert decide(enc.problem).verdict is Verdict.MEMBER
    # sigma = 1, lambda = 1 solves it exactly
    blocks = [np.zeros((len(m), len(m))) for m in enc.basis.blocks]
    for j, monos in enumerate(enc.basis.blocks):
        for p, m in enumerate(monos):
            if m == (0,):
                blocks[j][p, p] = 1.0
    free = [1.0 if mu == (0,) else 0.0 for mu in enc.free_monomials]
    squares = extract_squares(enc, _fake_solution(blocks, free))
    assert reconstruction_error(enc, squares, free) < 1e-12


def test_sphere_horn_and_padded():
    assert decide(build_sphere(quartic_form(horn()), 3).problem).verdict is Verdict.MEMBER
    padded = quartic_form(horn().padded(6))
    for k in (2, 3, 4):
        assert decide(build_sphere(padded, k).problem).verdict is Verdict.NONMEMBER


def test_sphere_rejects():
    x = ExactPolynomial.variable(2, 0)
    with pytest.raises(ValueError):
        build_sphere(x * ExactPolynomial.variable(2, 1), 2)
    with pytest.raises(ValueError):
        build_sphere(x**6, 2)


def test_extract_identity_gram():
    basis = MonomialBasis.build(2, 1, blocked=False)
    target = ExactPolynomial(2, {(2, 0): 1, (0, 2): 1})
    problem, index = gram._encode(basis, target)
    enc = gram.GramEncoding(basis, problem, index, target)
    squares = extract_squares(enc, _fake_solution([np.eye(2)]))
    assert sorted(w for w, _ in squares) == pytest.approx([1.0, 1.0])
    assert reconstruction_error(enc, squares) < 1e-12


def test_extract_rank_one():
    enc = build_reznick(SymmetricMatrix.ones(2), 0)
    blocks = [np.ones((2, 2)) if len(m) == 2 else np.zeros((1, 1)) for m in enc.basis.blocks]
    squares = extract_squares(enc, _fake_solution(blocks))
    assert len(squares) == 1
    w, q = squares[0]
    assert w * q[(2, 0)] ** 2 == pytest.approx(1.0)
    assert reconstruction_error(enc, squares) < 1e-12


def test_extract_rejects_indefinite():
    enc = build_reznick(SymmetricMatrix.ones(2), 0)
    blocks = [np.diag([1.0, -1.0]) if len(m) == 2 else np.zeros((1, 1)) for m in enc.basis.blocks]
    with pytest.raises(gram.ExtractionError):
        extract_squares(enc, _fake_solution(blocks))


def test_horn_extraction_has_ten_squares():
    mem, enc = gram.reznick_membership(horn(), 1)
    squares = extract_squares(enc, mem.solution)
    assert len(squares) == 10
    assert reconstruction_error(enc, squares) < 1e-6


def test_parity_block_completeness():
    rng = np.random.default_rng(3)
    for t in range(50):
        n = int(rng.integers(2, 6))
        r = int(rng.integers(0, 3)) if n <= 4 else int(rng.integers(0, 2))
        M = psd_plus_nonneg(rng, n)
        mem, enc = gram.reznick_membership(M, r)
        assert mem.verdict is Verdict.MEMBER
        squares = extract_squares(enc, mem.solution)
        assert reconstruction_error(enc, squares) < 1e-6


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(0, 1))
def test_blocked_and_unblocked_agree(seed, n, r):
    rng = np.random.default_rng(seed)
    up = {(i, j): Fraction(int(rng.integers(-4, 5)), 2) for i in range(n) for j in range(i, n)}
    M = SymmetricMatrix.from_function(n, lambda i, j: up[min(i, j), max(i, j)])
    a = decide(build_reznick(M, r, blocked=True).problem).verdict
    b = decide(build_reznick(M, r, blocked=False).problem).verdict
    if Verdict.INDETERMINATE not in (a, b):
        assert a is b


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_monotone_in_r(seed, n):
    rng = np.random.default_rng(seed)
    M = psd_plus_nonneg(rng, n, rank=int(rng.integers(1, n + 1)))
    for r in range(2):
        mem, _ = gram.reznick_membership(M, r)
        if mem.verdict is Verdict.MEMBER and mem.margin > 1e-4:
            assert gram.reznick_membership(M, r + 1)[0].verdict is Verdict.MEMBER


@settings(max_examples=8)
@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(0, 2))
def test_reznick_member_is_sphere_member(seed, n, r):
    rng = np.random.default_rng(seed)
    M = psd_plus_nonneg(rng, n)
    mem, _ = gram.reznick_membership(M, r)
    if mem.verdict is Verdict.MEMBER and mem.margin > 1e-4:
        assert decide(build_sphere(quartic_form(M), r + 2).problem).verdict is Verdict.MEMBER


def test_parametric_encoding_matches_plain():
    M = horn()
    enc = gram.build_reznick_parametric(M, [SymmetricMatrix.identity(5)], 1)
    assert enc.target == power_sum_squares(5, 1) * quartic_form(M)
    assert enc.problem.free_vars == 1


def test_boundary_nonmember_not_accepted():
    # cyclic condition fails by a small amount; the raw margin is only ~ -5e-9
    from copocert.copositive import horn_scaled_matrix

    d = (Fraction(40, 17), Fraction(39, 14), Fraction(34, 5), Fraction(4), Fraction(24, 7))
    mem, _ = gram.reznick_membership(horn_scaled_matrix(d), 1)
    assert mem.verdict is not Verdict.MEMBER


def test_boundary_member_found_by_face_refinement():
    from copocert.copositive import horn_scaled_matrix

    d = (Fraction(13, 15), Fraction(17, 19), Fraction(9, 14), Fraction(4, 3), Fraction(21, 10))
    mem, _ = gram.reznick_membership(horn_scaled_matrix(d), 1)
    assert mem.verdict is Verdict.MEMBER and mem.reduced and mem.margin > 1e-3
