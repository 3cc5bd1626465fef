"""Stability numbers, graph matrices and the theta^(r) hierarchy."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from . import sdp
from .exactpoly import ExactPolynomial, embed
from .gram import build_reznick_parametric
from .sdp import Status
from .symmat import SymmetricMatrix, quartic_form


@dataclass(frozen=True)
class Graph:
    """Simple graph on vertices ``1..n``; edges are stored as ``(i, j)`` with ``i < j``."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __init__(self, n: int, edges: Iterable = ()):
        if n < 0:
            raise ValueError("vertex count must be >= 0")
        norm = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"loop at vertex {i}")
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"edge ({i},{j}) outside vertices 1..{n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(norm))

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbours(self) -> list[set[int]]:
        """0-based adjacency sets."""
        adj = [set() for _ in range(self.n)]
        for i, j in self.edges:
            adj[i - 1].add(j - 1)
            adj[j - 1].add(i - 1)
        return adj

    def adjacency(self) -> SymmetricMatrix:
        E = self.edges
        return SymmetricMatrix.from_function(
            self.n, lambda i, j: Fraction(int((i + 1, j + 1) in E or (j + 1, i + 1) in E))
        )

    def complement(self) -> Graph:
        return Graph(self.n, [(i, j) for i in range(1, self.n + 1) for j in range(i + 1, self.n + 1)
                              if (i, j) not in self.edges])


def cycle(n: int) -> Graph:
    return Graph(n, [(i, i % n + 1) for i in range(1, n + 1)])


def complete(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def empty(n: int) -> Graph:
    return Graph(n)


def petersen() -> Graph:
    outer = [(i, i % 5 + 1) for i in range(1, 6)]
    spokes = [(i, i + 5) for i in range(1, 6)]
    inner = [(6 + i, 6 + (i + 2) % 5) for i in range(5)]
    return Graph(10, outer + spokes + inner)


# -- stability number ------------------------------------------------------------


def _clique_cover_bound(cands: list[int], adj: list[set[int]]) -> int:
    # greedy partition into cliques; a stable set meets each clique at most once
    cliques: list[list[int]] = []
    for v in cands:
        for c in cliques:
            if all(u in adj[v] for u in c):
                c.append(v)
                break
        else:
            cliques.append([v])
    return len(cliques)


def alpha(G: Graph) -> int:
    """Exact stability number by branch and bound.

    Vertices are ordered by ascending degree (ties by index); each node either
    takes the first candidate or drops it, pruned by a greedy clique cover.
    """
    if G.n == 0:
        return 0
    adj = G.neighbours()
    order = sorted(range(G.n), key=lambda v: (len(adj[v]), v))
    best = 0

    def branch(size: int, cands: list[int]):
        nonlocal best
        if not cands:
            best = max(best, size)
            return
        if size + _clique_cover_bound(cands, adj) <= best:
            return
        v, rest = cands[0], cands[1:]
        branch(size + 1, [u for u in rest if u not in adj[v]])
        branch(size, rest)

    branch(0, order)
    return best


# -- matrices and polynomials ----------------------------------------------------


def graph_matrix(G: Graph) -> SymmetricMatrix:
    """``alpha(G) (A + I) - J``."""
    if G.n == 0:
        raise ValueError("graph matrix needs at least one vertex")
    a = alpha(G)
    A = G.adjacency()
    return SymmetricMatrix.from_function(
        G.n, lambda i, j: a * (A[i, j] + (1 if i == j else 0)) - 1
    )


def graph_poly(G: Graph) -> ExactPolynomial:
    return quartic_form(graph_matrix(G))


@dataclass(frozen=True)
class ThetaResult:
    value: float
    status: Status
    solution: sdp.SdpSolution


def theta_r(G: Graph, r: int, tol: float = 1e-9) -> float:
    """Smallest ``t`` with ``t (A + I) - J`` in ``K^(r)``, as a float."""
    res = theta_r_full(G, r, tol)
    if res.status is not Status.OPTIMAL:
        raise RuntimeError(f"theta SDP ended with status {res.status.value}")
    return res.value


def theta_r_full(G: Graph, r: int, tol: float = 1e-9) -> ThetaResult:
    if G.n == 0:
        raise ValueError("theta is defined for non-empty graphs only")
    if r < 0:
        raise ValueError("r must be >= 0")
    n = G.n
    A = G.adjacency()
    slope = SymmetricMatrix.from_function(n, lambda i, j: A[i, j] + (1 if i == j else 0))
    enc = build_reznick_parametric(SymmetricMatrix.ones(n).scaled(-1), [slope], r, objective=[1])
    sol = sdp.solve(enc.problem, tol=tol)
    value = float(sol.free[0]) if sol.free.size else math.nan
    return ThetaResult(value, sol.status, sol)


# -- isolated vertex -------------------------------------------------------------


def add_isolated(G: Graph) -> Graph:
    return Graph(G.n + 1, G.edges)


def isolated_identity_residual(G: Graph) -> ExactPolynomial:
    """``a f_{G+v} - (a x_{n+1}^2 - sum x_i^2)^2 - (a+1) f_G`` with ``a = alpha(G)``."""
    if G.n == 0:
        raise ValueError("need at least one vertex")
    n = G.n
    a = alpha(G)
    big = graph_poly(add_isolated(G))
    g = ExactPolynomial.monomial([0] * n + [2]) * a - sum(
        (ExactPolynomial.monomial([2 if k == i else 0 for k in range(n + 1)]) for i in range(n)),
        ExactPolynomial.zero(n + 1),
    )
    small = embed(graph_poly(G), n + 1)
    return big * a - g * g - small * (a + 1)


def verify_isolated_identity(G: Graph) -> bool:
    return isolated_identity_residual(G).is_zero()


# -- generation and files --------------------------------------------------------


def all_graphs(max_n: int) -> Iterator[Graph]:
    """Every graph on 1..max_n vertices up to isomorphism (max_n <= 7)."""
    import networkx as nx

    if max_n > 7:
        raise ValueError("the graph atlas only covers up to 7 vertices")
    for H in nx.graph_atlas_g():
        k = H.number_of_nodes()
        if 1 <= k <= max_n:
            yield Graph(k, [(u + 1, v + 1) for u, v in H.edges()])


def random_graph(n: int, p: float, rng: random.Random) -> Graph:
    return Graph(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if rng.random() < p])


def random_graphs(n: int, count: int, seed: int, p: float = 0.5) -> list[Graph]:
    rng = random.Random(seed)
    return [random_graph(n, p, rng) for _ in range(count)]


class GraphFormatError(ValueError):
    pass


def parse_graph(text: str) -> Graph:
    """DIMACS-like text: ``p edge n m`` then ``e i j`` lines; ``c`` lines are comments."""
    n = m = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        try:
            if parts[0] == "p":
                if n is not None:
                    raise GraphFormatError(f"line {lineno}: second problem line")
                if len(parts) != 4 or parts[1] != "edge":
                    raise GraphFormatError(f"line {lineno}: expected 'p edge n m'")
                n, m = int(parts[2]), int(parts[3])
            elif parts[0] == "e":
                if n is None:
                    raise GraphFormatError(f"line {lineno}: edge before problem line")
                if len(parts) != 3:
                    raise GraphFormatError(f"line {lineno}: expected 'e i j'")
                edges.append((int(parts[1]), int(parts[2])))
            else:
                raise GraphFormatError(f"line {lineno}: unknown record {parts[0]!r}")
        except ValueError as exc:
            if isinstance(exc, GraphFormatError):
                raise
            raise GraphFormatError(f"line {lineno}: {exc}") from None
    if n is None:
        raise GraphFormatError("missing 'p edge n m' line")
    try:
        G = Graph(n, edges)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None
    if G.m != m or len(edges) != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(edges)} ({G.m} distinct)")
    return G


def format_graph(G: Graph) -> str:
    lines = [f"p edge {G.n} {G.m}"]
    lines += [f"e {i} {j}" for i, j in sorted(G.edges)]
    return "\n".join(lines) + "\n"


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_text())


def write_graph(G: Graph, path) -> None:
    Path(path).write_text(format_graph(G))
