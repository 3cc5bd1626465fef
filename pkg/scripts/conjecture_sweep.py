"""theta^(alpha-1)(G) against alpha(G) over small graphs.

Covers every graph up to --max-n vertices plus --random graphs on --random-n
vertices. Graphs where the gap exceeds --agree-tol are printed as candidates.
"""
from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

from copocert.graphs import all_graphs, alpha, format_graph, random_graphs, theta_r_full
from copocert.sdp import Status


@dataclass
class Config:
    max_n: int = 5
    random_n: int = 6
    random_count: int = 100
    seed: int = 7
    agree_tol: float = 1e-3


def run(cfg: Config) -> list:
    graphs = list(all_graphs(cfg.max_n)) + random_graphs(cfg.random_n, cfg.random_count, cfg.seed)
    flagged = []
    worst = 0.0
    t0 = time.perf_counter()
    for G in graphs:
        a = alpha(G)
        res = theta_r_full(G, a - 1)
        if res.status is not Status.OPTIMAL:
            flagged.append((G, a, res.status.value))
            continue
        gap = abs(res.value - a)
        worst = max(worst, gap)
        if gap > cfg.agree_tol:
            flagged.append((G, a, res.value))
    print(f"{len(graphs)} graphs, worst gap {worst:.2e}, {len(flagged)} flagged, "
          f"{time.perf_counter() - t0:.1f}s")
    for G, a, v in flagged:
        print(f"alpha={a} theta={v}\n{format_graph(G)}")
    return flagged


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=Config.max_n)
    ap.add_argument("--random-n", type=int, default=Config.random_n)
    ap.add_argument("--random", type=int, default=Config.random_count, dest="random_count")
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--agree-tol", type=float, default=Config.agree_tol)
    args = ap.parse_args()
    flagged = run(Config(**vars(args)))
    raise SystemExit(1 if flagged else 0)


if __name__ == "__main__":
    main()
