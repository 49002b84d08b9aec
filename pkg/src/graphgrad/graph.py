"""Weighted digraphs, their Laplacian and incidence views, detailed balance.

Node indices are 0-based everywhere in the Python API.  The JSON form used
by scenario files is 1-based (``{"nodes": n, "edges": [{"from": j, "to": i,
"weight": w}, ...]}``) and is converted at the boundary.

A branch ``(j, i, w)`` is an edge from node ``j`` to node ``i`` and contributes
``w_ij = w`` to the dynamics of node ``i``.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidGraph, SingularStructure

DEFAULT_DB_TOL = 1e-9


@dataclass(frozen=True)
class WeightedDigraph:
    node_count: int
    branches: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 1:
            raise InvalidGraph(f"node_count must be a positive integer, got {self.node_count!r}")
        seen = set()
        clean = []
        for br in self.branches:
            j, i, w = br
            j, i, w = int(j), int(i), float(w)
            if not (0 <= j < self.node_count and 0 <= i < self.node_count):
                raise InvalidGraph(f"branch {j}->{i} references a node outside 0..{self.node_count - 1}")
            if j == i:
                raise InvalidGraph(f"self-loop at node {i}")
            if not (w > 0 and np.isfinite(w)):
                raise InvalidGraph(f"branch {j}->{i} has non-positive or non-finite weight {w}")
            if (j, i) in seen:
                raise InvalidGraph(f"duplicate branch {j}->{i}")
            seen.add((j, i))
            clean.append((j, i, w))
        object.__setattr__(self, "node_count", int(self.node_count))
        object.__setattr__(self, "branches", tuple(clean))

    @property
    def n(self) -> int:
        return self.node_count

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    def weight_matrix(self) -> np.ndarray:
        """Dense ``W`` with ``W[i, j] = w_ij`` (target row, source column)."""
        W = np.zeros((self.n, self.n))
        for j, i, w in self.branches:
            W[i, j] = w
        return W

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Branch sources, targets and weights as parallel arrays."""
        if not self.branches:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        src, dst, w = zip(*self.branches)
        return np.array(src, int), np.array(dst, int), np.array(w, float)

    def undirected_edges(self) -> list[tuple[int, int]]:
        """Unordered node pairs carrying at least one branch, as ``(lo, hi)``, sorted."""
        return sorted({(min(j, i), max(j, i)) for j, i, _ in self.branches})

    @classmethod
    def from_dict(cls, doc: dict) -> "WeightedDigraph":
        try:
            n = doc["nodes"]
            edges = doc.get("edges", [])
            branches = tuple((e["from"] - 1, e["to"] - 1, e["weight"]) for e in edges)
        except (KeyError, TypeError) as exc:
            raise InvalidGraph(f"malformed graph document: {exc}") from exc
        return cls(n, branches)

    def to_dict(self) -> dict:
        return {
            "nodes": self.n,
            "edges": [{"from": j + 1, "to": i + 1, "weight": w} for j, i, w in self.branches],
        }

    @classmethod
    def from_weight_matrix(cls, W) -> "WeightedDigraph":
        W = np.asarray(W, float)
        n = W.shape[0]
        branches = tuple((j, i, W[i, j]) for i in range(n) for j in range(n) if i != j and W[i, j] != 0)
        return cls(n, branches)


@dataclass(frozen=True)
class StationaryVector:
    """Positive left kernel vector of a Laplacian, normalized to unit sum."""

    c: np.ndarray
    residual: float = field(default=0.0, compare=False)

    @property
    def C(self) -> np.ndarray:
        return np.diag(self.c)

    def __len__(self):
        return len(self.c)


@dataclass
class DetailedBalanceReport:
    ok: bool
    max_residual: float
    violations: list[tuple[int, int, float, float]]

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "detailed balance holds"
        parts = [f"({i + 1},{j + 1}): c_i*w_ij={a:.6g} vs c_j*w_ji={b:.6g}" for i, j, a, b in self.violations]
        return "detailed balance violated at pairs " + "; ".join(parts)


def build_laplacian(g: WeightedDigraph) -> np.ndarray:
    """``L[i, j] = -w_ij`` off the diagonal, ``L[i, i] = sum_j w_ij``."""
    W = g.weight_matrix()
    return np.diag(W.sum(axis=1)) - W


def is_strongly_connected(g: WeightedDigraph) -> bool:
    n = g.n
    out_adj = [[] for _ in range(n)]
    in_adj = [[] for _ in range(n)]
    for j, i, _ in g.branches:
        out_adj[j].append(i)
        in_adj[i].append(j)

    def reaches_all(adj):
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == n

    return reaches_all(out_adj) and reaches_all(in_adj)


def stationary_vector(L) -> StationaryVector:
    """Solve ``c^T L = 0`` with ``c_0 = 1`` by LU, then normalize to unit sum.

    Raises
    ------
    SingularStructure
        If the reduced system is singular or the solution is not strictly
        positive, i.e. the zero eigenvalue is not simple.
    """
    L = np.asarray(L, float)
    n = L.shape[0]
    if n == 1:
        return StationaryVector(np.ones(1), 0.0)
    A = L.T[1:, 1:]
    rhs = -L.T[1:, 0]
    scale = max(np.abs(L).max(), 1e-300)
    with warnings.catch_warnings():
        # a zero pivot is handled just below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    if np.min(np.abs(np.diag(lu))) <= 1e-13 * scale:
        raise SingularStructure("zero eigenvalue of the Laplacian is not simple")
    rest = scipy.linalg.lu_solve((lu, piv), rhs)
    c = np.concatenate(([1.0], rest))
    if not np.all(np.isfinite(c)) or np.min(c) <= 1e-14 * np.max(np.abs(c)):
        raise SingularStructure("left kernel vector is not strictly positive")
    c = c / c.sum()
    residual = float(np.max(np.abs(c @ L)))
    if residual > 1e-8 * scale:
        raise SingularStructure(f"left kernel residual {residual:.3g} too large")
    return StationaryVector(c, residual)


def check_detailed_balance(g: WeightedDigraph, c, tol: float = DEFAULT_DB_TOL) -> DetailedBalanceReport:
    """Pairwise test of ``c_i w_ij = c_j w_ji`` with relative tolerance ``tol``.

    A branch without a reverse partner is always a violation.
    """
    c = np.asarray(getattr(c, "c", c), float)
    if c.shape != (g.n,):
        raise ValueError(f"stationary vector has length {c.shape}, graph has {g.n} nodes")
    W = g.weight_matrix()
    violations = []
    worst = 0.0
    for lo, hi in g.undirected_edges():
        a = c[lo] * W[lo, hi]
        b = c[hi] * W[hi, lo]
        resid = abs(a - b)
        worst = max(worst, resid)
        if resid > tol * max(1.0, abs(a), abs(b)):
            violations.append((lo, hi, a, b))
    return DetailedBalanceReport(not violations, worst, violations)


@dataclass(frozen=True)
class Incidence:
    """Node-by-edge incidence matrix with its edge list.

    ``edges[e] = (tail, head)``; column ``e`` has ``-1`` at ``tail`` and
    ``+1`` at ``head``.
    """

    matrix: np.ndarray
    edges: tuple[tuple[int, int], ...]


def incidence_matrix(g: WeightedDigraph) -> Incidence:
    """One column per undirected edge, ordered lexicographically by ``(lo, hi)``.

    Bidirected pairs are oriented low index -> high index; a pair carried by a
    single branch keeps that branch's orientation.
    """
    present = {(j, i) for j, i, _ in g.branches}
    edges = []
    for lo, hi in g.undirected_edges():
        if (lo, hi) in present:
            edges.append((lo, hi))
        else:
            edges.append((hi, lo))
    B = np.zeros((g.n, len(edges)))
    for e, (tail, head) in enumerate(edges):
        B[tail, e] = -1.0
        B[head, e] = 1.0
    return Incidence(B, tuple(edges))


# ---------------------------------------------------------------- builders

def reversible_graph(c, conductances: dict) -> WeightedDigraph:
    """Graph with ``w_ij = s_ij / c_i`` for symmetric edge rates ``s``.

    ``conductances`` maps unordered pairs ``(i, j)`` to ``s_ij > 0``; the
    result satisfies ``c_i w_ij = c_j w_ji`` by construction.
    """
    c = np.asarray(c, float)
    branches = []
    for (i, j), s in sorted(conductances.items()):
        branches.append((j, i, s / c[i]))
        branches.append((i, j, s / c[j]))
    return WeightedDigraph(len(c), tuple(branches))


def complete_graph(n: int, weight: float) -> WeightedDigraph:
    return WeightedDigraph(n, tuple((j, i, weight) for i in range(n) for j in range(n) if i != j))


def path_graph(n: int, weight: float = 1.0) -> WeightedDigraph:
    branches = []
    for k in range(n - 1):
        branches += [(k, k + 1, weight), (k + 1, k, weight)]
    return WeightedDigraph(n, tuple(branches))


def random_reversible_graph(rng: np.random.Generator, n: int, extra_edge_prob: float = 0.3,
                            c_range=(0.2, 1.0), rate_range=(0.2, 2.0)) -> tuple[WeightedDigraph, np.ndarray]:
    """Random connected detailed-balance graph and its normalized stationary vector."""
    c = rng.uniform(*c_range, size=n)
    c = c / c.sum()
    order = rng.permutation(n)
    pairs = set()
    for k in range(1, n):
        a, b = order[k], order[rng.integers(k)]
        pairs.add((min(a, b), max(a, b)))
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < extra_edge_prob:
                pairs.add((a, b))
    rates = {p: rng.uniform(*rate_range) for p in sorted(pairs)}
    return reversible_graph(c, rates), c


def random_strongly_connected_graph(rng: np.random.Generator, n: int, extra_edge_prob: float = 0.25) -> WeightedDigraph:
    """Random digraph containing a Hamiltonian cycle (hence strongly connected)."""
    order = rng.permutation(n)
    pairs = {(int(order[k]), int(order[(k + 1) % n])) for k in range(n)} if n > 1 else set()
    for j in range(n):
        for i in range(n):
            if i != j and rng.random() < extra_edge_prob:
                pairs.add((j, i))
    return WeightedDigraph(n, tuple((j, i, rng.uniform(0.1, 3.0)) for j, i in sorted(pairs)))
