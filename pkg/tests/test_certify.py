from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import polys, positive_fracs
from copocert import certify, gram
from copocert.certify import CertificateError, SosCertificate, deserialize, serialize, verify
from copocert.copositive import horn, horn_scaled_decomposition, horn_scaled_matrix
from copocert.exactpoly import ExactPolynomial
from copocert.graphs import complete, graph_matrix
from copocert.sdp import SdpSolution, Status
from copocert.symmat import SymmetricMatrix


def _horn_r1_cert():
    mem, enc = gram.reznick_membership(horn(), 1)
    return certify.exactify(enc, mem.solution)


def test_decomposition_verifies():
    assert verify(horn_scaled_decomposition([1] * 5))


def test_perturbed_weight_fails():
    cert = horn_scaled_decomposition([1] * 5)
    (w, q), rest = cert.squares[0], cert.squares[1:]
    bad = SosCertificate("reznick", 5, ((w + Fraction(1, 1000), q),) + rest, r=1, matrix=horn(), multiplier=cert.multiplier)
    assert not verify(bad)


def test_empty_squares_zero_target():
    M = graph_matrix(complete(4))
    assert M == SymmetricMatrix.zeros(4)
    assert verify(SosCertificate("reznick", 4, (), r=0, matrix=M))


def test_round_and_project_horn():
    mem, enc = gram.reznick_membership(horn(), 1)
    g = certify.round_and_project(enc, mem.solution, denom_bound=64)
    assert certify.exact_residual_zero(enc, g)
    cert = certify.certificate_from_gram(enc, g)
    assert verify(cert)


def test_rational_gram_is_a_fixed_point():
    cert = horn_scaled_decomposition([1] * 5)
    enc = gram.build_reznick(horn(), 1)
    # Gram blocks of the explicit certificate in the encoding's basis
    blocks = []
    for monos in enc.basis.blocks:
        pos = {m: i for i, m in enumerate(monos)}
        G = [[Fraction(0)] * len(monos) for _ in monos]
        for w, q in cert.squares:
            if not all(m in pos for m in q.terms):
                continue
            for m1, c1 in q.terms.items():
                for m2, c2 in q.terms.items():
                    G[pos[m1]][pos[m2]] += w * c1 * c2
        blocks.append(G)
    sol = SdpSolution(
        Status.OPTIMAL, tuple(np.array([[float(v) for v in row] for row in G]) for G in blocks),
        np.zeros(0), np.zeros(0), 0, 0, 0, 0, 0,
    )
    g = certify.round_and_project(enc, sol, denom_bound=64)
    assert [[list(r) for r in b] for b in g.blocks] == [[list(r) for r in b] for b in blocks]


def test_boundary_instance_explicit_route():
    d = (1, 2, 1, 1, 1)
    assert verify(horn_scaled_decomposition(d))
    mem, enc = gram.reznick_membership(horn_scaled_matrix(d), 1)
    try:
        cert = certify.exactify(enc, mem.solution, stop=2**12)
    except certify.RoundingFailure:
        return
    assert verify(cert)


def test_standard_multiplier_conversion():
    for d in [(1, 1, 1, 1, 1), (1, 2, 1, 1, 1), (Fraction(3, 2), 2, 2, Fraction(5, 3), 1)]:
        cert = horn_scaled_decomposition(d)
        std = certify.to_standard_multiplier(cert)
        assert std.multiplier is None and std.matrix == horn_scaled_matrix(d)
        assert verify(std)


def test_serialize_round_trip():
    cert = _horn_r1_cert()
    again = deserialize(serialize(cert))
    assert again == cert
    w = horn_scaled_decomposition((1, 2, 1, 1, 1))
    assert deserialize(serialize(w)) == w


def test_sphere_certificate_round_trip():
    x = ExactPolynomial.variable(1, 0)
    cert = SosCertificate(
        "sphere", 1, ((Fraction(1), ExactPolynomial.constant(1, 1)),), target_poly=x * x,
        lam=ExactPolynomial.constant(1, 1),
    )
    assert verify(cert)
    assert deserialize(serialize(cert)) == cert


def test_document_errors():
    good = serialize(horn_scaled_decomposition([1] * 5)).decode()
    neg = good.replace("\n1 ; ", "\n-1 ; ", 1)
    with pytest.raises(CertificateError, match="positive"):
        deserialize(neg)
    no_r = "\n".join(ln for ln in good.splitlines() if not ln.startswith("r "))
    with pytest.raises(CertificateError, match="'r'"):
        deserialize(no_r)
    with pytest.raises(CertificateError, match="line 1"):
        deserialize("not a certificate\n")
    with pytest.raises(CertificateError, match="line"):
        deserialize(good.replace("squares 10", "squares ten"))
    with pytest.raises(CertificateError):
        SosCertificate("reznick", 5, ((Fraction(-1), ExactPolynomial.zero(5)),), r=1, matrix=horn())


def test_write_refuses_unverified(tmp_path):
    cert = horn_scaled_decomposition([1] * 5)
    bad = SosCertificate("reznick", 5, cert.squares[1:], r=1, matrix=horn(), multiplier=cert.multiplier)
    with pytest.raises(CertificateError):
        certify.write_certificate(bad, tmp_path / "bad.cert")
    assert not (tmp_path / "bad.cert").exists()
    certify.write_certificate(cert, tmp_path / "ok.cert")
    assert verify(certify.read_certificate(tmp_path / "ok.cert"))


@st.composite
def certificates(draw):
    n = 3
    squares = tuple((draw(positive_fracs), draw(polys(n=n, max_deg=2))) for _ in range(draw(st.integers(0, 3))))
    sos = sum((q * q * w for w, q in squares), ExactPolynomial.zero(n))
    if draw(st.booleans()):
        lam = ExactPolynomial.zero(n)
        target = sos
    else:
        lam = draw(polys(n=n, max_deg=2))
        target = draw(polys(n=n, max_deg=2))
    return SosCertificate("sphere", n, squares, target_poly=target, lam=lam)


@settings(max_examples=40)
@given(certificates())
def test_round_trip_preserves_verdict(cert):
    again = deserialize(serialize(cert))
    assert again == cert
    assert verify(again) == verify(cert)


@settings(max_examples=5)
@given(st.integers(0, 1000))
def test_rounding_success_implies_verified(seed):
    from helpers import psd_plus_nonneg

    rng = np.random.default_rng(seed)
    M = psd_plus_nonneg(rng, int(rng.integers(2, 5)))
    mem, enc = gram.reznick_membership(M, int(rng.integers(0, 2)))
    try:
        g = certify.round_and_project(enc, mem.solution, 1024)
    except certify.RoundingFailure:
        return
    assert certify.exact_residual_zero(enc, g)
    assert verify(certify.certificate_from_gram(enc, g))
