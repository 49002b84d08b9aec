"""RC-circuit realization of a gradient system.

Each node carries a grounded capacitor ``c_i`` holding charge ``q_i``; each
undirected edge carries a (state dependent) resistor with conductance

    g_e = c_i w_ij phi(x_j, x_i) / (h(x_j) - h(x_i)),

so that ``K = B diag(g) B^T`` with ``B`` the node-by-edge incidence matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import grad_energy, ratio_array
from .errors import NonFiniteRatio, SparsityMismatch
from .gradient import GradientSystem, verify_psd
from .graph import Incidence, WeightedDigraph, incidence_matrix


@dataclass(frozen=True)
class ResistorEdge:
    """Resistor between ``tail`` and ``head`` (incidence orientation)."""

    tail: int
    head: int
    conductance: float

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.tail, self.head

    @property
    def resistance(self) -> float:
        if self.conductance == 0:
            return np.inf
        return 1.0 / self.conductance

    @property
    def strictly_passive(self) -> bool:
        return bool(np.isfinite(self.conductance) and self.conductance > 0)


def branch_conductance(sys: GradientSystem, j: int, i: int, x) -> float:
    """Conductance read off branch ``j -> i``: ``c_i w_ij phi(x_j, x_i) / (h(x_j) - h(x_i))``."""
    x = np.asarray(x, float)
    w = sys.graph.weight_matrix()[i, j]
    r = ratio_array(sys.coupling, sys.energy, x[j], x[i])[0]
    return float(sys.c[i] * w * r)


def _edge_conductance(sys: GradientSystem, W: np.ndarray, tail: int, head: int, x) -> float:
    # orientation picks whichever branch exists; detailed balance makes both agree
    i, j = (head, tail) if W[head, tail] > 0 else (tail, head)
    r = ratio_array(sys.coupling, sys.energy, x[j], x[i])[0]
    return float(sys.c[i] * W[i, j] * r)


def synthesize_conductances(sys: GradientSystem, x, incidence: Incidence | None = None) -> list[ResistorEdge]:
    """One resistor per undirected edge, in incidence-column order."""
    x = np.asarray(x, float)
    sys.energy.check_domain(x)
    inc = incidence or incidence_matrix(sys.graph)
    W = sys.graph.weight_matrix()
    return [ResistorEdge(t, h, _edge_conductance(sys, W, t, h, x)) for t, h in inc.edges]


def conductance_matrix(edges) -> np.ndarray:
    return np.diag([e.conductance for e in edges])


def kirchhoff_factorization(K, incidence: Incidence, rtol: float = 1e-14) -> np.ndarray:
    """Diagonal ``D_B`` with ``K = B D_B B^T`` for a symmetric Laplacian ``K``.

    Raises
    ------
    SparsityMismatch
        If ``K`` couples a node pair that is not an edge of ``incidence``.
    """
    K = np.asarray(getattr(K, "matrix", K), float)
    n = K.shape[0]
    allowed = np.eye(n, dtype=bool)
    for t, h in incidence.edges:
        allowed[t, h] = allowed[h, t] = True
    scale = max(np.max(np.abs(K), initial=0.0), 1.0)
    outside = (~allowed) & (np.abs(K) > rtol * scale)
    if np.any(outside):
        i, j = map(int, np.argwhere(outside)[0])
        raise SparsityMismatch(f"K[{i},{j}] = {K[i, j]:.3g} couples nodes that share no edge")
    return np.diag([-K[h, t] for t, h in incidence.edges]) if incidence.edges else np.zeros((0, 0))


def reconstruction_residual(K, incidence: Incidence, D) -> float:
    K = np.asarray(getattr(K, "matrix", K), float)
    B = incidence.matrix
    return float(np.max(np.abs(K - B @ D @ B.T), initial=0.0))


@dataclass(frozen=True)
class CapacitorBank:
    """Lossless storage part: ``dq/dt = u``, output voltages ``v = grad E(q)``."""

    c: np.ndarray
    energy: object

    def voltages(self, q) -> np.ndarray:
        return grad_energy(self.energy, self.c, q)

    def charge_rate(self, node_currents) -> np.ndarray:
        return np.asarray(node_currents, float)

    def stored_energy(self, q) -> float:
        return float(np.sum(self.c * self.energy.H(np.asarray(q, float) / self.c)))


def network_currents(incidence: Incidence, D, node_voltages):
    """KVL ``v_B = -B^T v_N``, Ohm ``i_B = D v_B``, KCL ``i_N = B i_B``."""
    B = incidence.matrix
    v_B = -B.T @ np.asarray(node_voltages, float)
    i_B = np.asarray(D) @ v_B
    return v_B, i_B, B @ i_B


@dataclass
class PassivityReport:
    edges: list[tuple[int, int]]
    conductances: np.ndarray
    resistances: np.ndarray
    passive: np.ndarray
    verdict: str
    min_eigenvalue: float

    @property
    def all_passive(self) -> bool:
        return bool(np.all(self.passive))


def passivity_report(sys: GradientSystem, x, tol: float = 1e-10) -> PassivityReport:
    """Per-edge strict passivity and a global dissipation verdict.

    An edge whose ``h`` is flat between its endpoints has zero resistance: it
    is reported with infinite conductance and flagged not strictly passive.
    The eigenvalue check then runs on the finite part of ``K``.
    """
    x = np.asarray(x, float)
    sys.energy.check_domain(x)
    inc = incidence_matrix(sys.graph)
    W = sys.graph.weight_matrix()
    g = np.empty(len(inc.edges))
    for e, (t, h) in enumerate(inc.edges):
        try:
            g[e] = _edge_conductance(sys, W, t, h, x)
        except NonFiniteRatio:
            g[e] = np.inf
    with np.errstate(divide="ignore"):
        r = np.where(np.isinf(g), 0.0, 1.0 / g)
    passive = np.isfinite(g) & (g > 0)
    finite = np.where(np.isfinite(g), g, 0.0)
    K = inc.matrix @ np.diag(finite) @ inc.matrix.T if len(g) else np.zeros((sys.n, sys.n))
    psd = verify_psd(K, tol)
    if np.all(passive):
        verdict = "all_passive"
    elif psd.ok:
        verdict = "locally_active_but_dissipative"
    else:
        verdict = "not_dissipative"
    return PassivityReport(list(inc.edges), g, r, passive, verdict, psd.min_eigenvalue)


# ------------------------------------------------------------------ netlists

def _resistance(g: float) -> float:
    # g = 0 is an open circuit, g = inf (flat h) a short
    return math.inf if g == 0 else 1.0 / g


def _finite_or_none(v: float):
    # JSON has no infinity; null marks the infinite value
    return v if math.isfinite(v) else None


@dataclass
class Netlist:
    """Frozen-state snapshot of the circuit at ``x_ref``.

    Node ids are 1-based; capacitors are grounded at node 0.
    """

    x_ref: list[float]
    capacitors: list[tuple[int, float]] = field(default_factory=list)
    resistors: list[tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "x_ref": list(self.x_ref),
            "capacitors": [{"node": n, "capacitance": c} for n, c in self.capacitors],
            "resistors": [
                {"nodes": [a, b], "conductance": _finite_or_none(g),
                 "resistance": _finite_or_none(_resistance(g))}
                for a, b, g in self.resistors
            ],
        }

    def to_spice(self) -> str:
        lines = ["* x_ref = " + " ".join(f"{v:.12g}" for v in self.x_ref)]
        for k, (node, cap) in enumerate(self.capacitors, start=1):
            lines.append(f"C{k} {node} 0 {cap:.12g}")
        for k, (a, b, g) in enumerate(self.resistors, start=1):
            lines.append(f"R{k} {a} {b} {_resistance(g):.12g}")
        return "\n".join(lines) + "\n"


def export_netlist(sys: GradientSystem, x_ref, fmt: str = "json"):
    """Netlist at ``x_ref``; ``fmt`` is ``"json"`` (returns a :class:`Netlist`),
    ``"json-text"`` or ``"spice"`` (return text)."""
    x_ref = np.asarray(x_ref, float)
    edges = synthesize_conductances(sys, x_ref)
    net = Netlist(
        [float(v) for v in x_ref],
        [(i + 1, float(ci)) for i, ci in enumerate(sys.c)],
        [(e.tail + 1, e.head + 1, e.conductance) for e in edges],
    )
    if fmt == "json":
        return net
    if fmt == "json-text":
        return json.dumps(net.to_dict(), indent=2)
    if fmt == "spice":
        return net.to_spice()
    raise ValueError(f"unknown netlist format {fmt!r}")


# ---------------------------------------------------------- RC consensus

def rc_weights(capacitances, resistances: dict) -> WeightedDigraph:
    """Weights ``w_kj = 1 / (c_k r_kj)`` of the averaging RC circuit.

    ``resistances`` maps unordered node pairs to ``r > 0``.
    """
    c = np.asarray(capacitances, float)
    branches = []
    for (a, b), r in sorted(resistances.items()):
        branches.append((b, a, 1.0 / (c[a] * r)))
        branches.append((a, b, 1.0 / (c[b] * r)))
    return WeightedDigraph(len(c), tuple(branches))


def recover_rc(sys: GradientSystem, x, total_capacitance: float = 1.0):
    """Capacitances and resistances of the synthesized circuit.

    The stationary vector fixes capacitances only up to scale; passing the
    physical ``total_capacitance`` restores absolute values (resistances scale
    inversely so time constants ``r c`` are unchanged).
    """
    edges = synthesize_conductances(sys, x)
    caps = total_capacitance * sys.c
    res = {(min(e.tail, e.head), max(e.tail, e.head)): 1.0 / (total_capacitance * e.conductance) for e in edges}
    return caps, res
