"""Compare the cyclic condition on d with level-1 membership of the scaled Horn matrix.

Prints a CSV row per sample and a confusion table at the end.
"""
from __future__ import annotations

import argparse
import collections
import csv
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from copocert import gram
from copocert.copositive import cyclic_slacks, horn_scaled_matrix, lemma_dhd_condition


@dataclass
class Config:
    samples: int = 200
    seed: int = 0
    max_den: int = 20
    lo: int = 1
    hi: int = 40


def sample_d(rng: np.random.Generator, cfg: Config) -> tuple[Fraction, ...]:
    return tuple(
        Fraction(int(rng.integers(cfg.lo, cfg.hi + 1)), int(rng.integers(1, cfg.max_den + 1))) for _ in range(5)
    )


def run(cfg: Config, out=sys.stdout) -> collections.Counter:
    rng = np.random.default_rng(cfg.seed)
    table = collections.Counter()
    w = csv.writer(out)
    w.writerow(["d", "min_slack", "condition", "verdict", "margin", "raw_margin"])
    for _ in range(cfg.samples):
        d = sample_d(rng, cfg)
        cond = lemma_dhd_condition(d)
        mem, _ = gram.reznick_membership(horn_scaled_matrix(d), 1)
        table[(cond, mem.verdict.value)] += 1
        w.writerow([
            " ".join(str(v) for v in d), f"{float(min(cyclic_slacks(d))):.4f}", cond,
            mem.verdict.value, f"{mem.margin:.3e}", f"{mem.raw_margin:.3e}",
        ])
    return table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=Config.samples)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args()
    table = run(Config(samples=args.samples, seed=args.seed))
    print("\ncondition  verdict         count", file=sys.stderr)
    for (cond, verdict), c in sorted(table.items()):
        print(f"{str(cond):9}  {verdict:14}  {c}", file=sys.stderr)


if __name__ == "__main__":
    main()
