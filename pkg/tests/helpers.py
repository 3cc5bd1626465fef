"""Random instance generators shared by the tests."""
from fractions import Fraction

import numpy as np

from copocert.symmat import SymmetricMatrix


def rational(x: float, den: int = 16) -> Fraction:
    return Fraction(round(x * den), den)


def psd_plus_nonneg(rng: np.random.Generator, n: int, rank: int | None = None) -> SymmetricMatrix:
    """Random exact ``B B^T + N`` with ``N >= 0``: an interior point of ``K^(0)`` when ``rank = n``."""
    rank = n if rank is None else rank
    B = [[Fraction(int(rng.integers(-3, 4))) for _ in range(rank)] for _ in range(n)]
    N = [[rational(abs(rng.normal()) / 2, 8) for _ in range(n)] for _ in range(n)]
    return SymmetricMatrix.from_function(
        n,
        lambda i, j: sum(B[i][k] * B[j][k] for k in range(rank)) + N[min(i, j)][max(i, j)] + (1 if i == j else 0),
    )


def random_symmetric(rng: np.random.Generator, n: int, den: int = 4, lo: int = -4, hi: int = 4) -> SymmetricMatrix:
    up = {(i, j): Fraction(int(rng.integers(lo, hi + 1)), den) for i in range(n) for j in range(i, n)}
    return SymmetricMatrix.from_function(n, lambda i, j: up[min(i, j), max(i, j)])


def random_d(rng: np.random.Generator, max_den: int = 20, lo: int = 1, hi: int = 40) -> tuple[Fraction, ...]:
    return tuple(Fraction(int(rng.integers(lo, hi + 1)), int(rng.integers(1, max_den + 1))) for _ in range(5))


# criterion number -> (passed, detail); filled by test_acceptance, printed at session end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
