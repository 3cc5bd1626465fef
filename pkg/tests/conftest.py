from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

from copocert.exactpoly import ExactPolynomial
from helpers import ACCEPTANCE

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

small_fracs = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4))


@st.composite
def polys(draw, n=3, max_deg=3, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        mono = tuple(draw(st.integers(0, max_deg)) for _ in range(n))
        terms[mono] = draw(small_fracs)
    return ExactPolynomial(n, terms)


@st.composite
def even_polys(draw, n=3, max_half=2, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        mono = tuple(2 * draw(st.integers(0, max_half)) for _ in range(n))
        terms[mono] = draw(small_fracs)
    return ExactPolynomial(n, terms)


positive_fracs = st.builds(Fraction, st.integers(1, 9), st.integers(1, 5))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
