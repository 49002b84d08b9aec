"""Gradient form of the node dynamics.

With charges ``q = C x`` and ``E(q) = sum_i c_i H(q_i / c_i)``, the node
dynamics ``dx_i/dt = sum_j w_ij phi(x_j, x_i)`` read

    dq/dt = -K(x) grad E(q),   K_ij = -c_i w_ij phi(x_j, x_i) / (h(x_j) - h(x_i)),

with ``K`` a symmetric Laplacian whenever the weights satisfy detailed
balance with respect to ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coupling import (
    CouplingFunction,
    EnergyFunction,
    _check_domain,
    common_domain,
    eval_energy,
    grad_energy,
    ratio_array,
)
from .errors import DetailedBalanceViolation, NotStronglyConnected
from .graph import (
    DEFAULT_DB_TOL,
    DetailedBalanceReport,
    WeightedDigraph,
    build_laplacian,
    check_detailed_balance,
    is_strongly_connected,
    stationary_vector,
)


@dataclass(frozen=True)
class MetricMatrix:
    """``K`` evaluated at state ``x``.

    ``active`` lists the ordered pairs whose off-diagonal entry is positive,
    i.e. edges behaving as locally active resistors.
    """

    matrix: np.ndarray
    x: np.ndarray
    active: tuple[tuple[int, int], ...] = ()

    @property
    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T), initial=0.0))

    @property
    def row_sum_residual(self) -> float:
        return float(np.max(np.abs(self.matrix.sum(axis=1)), initial=0.0))


@dataclass(frozen=True)
class PSDReport:
    ok: bool
    min_eigenvalue: float

    def __bool__(self):
        return self.ok


@dataclass(frozen=True, eq=False)
class GradientSystem:
    """Graph, capacitances, coupling and energy bundled into one dynamical system.

    Build with :meth:`build`, which checks strong connectivity and detailed
    balance and computes the normalized stationary vector ``c``.
    """

    graph: WeightedDigraph
    coupling: CouplingFunction
    energy: EnergyFunction
    c: np.ndarray
    balance: DetailedBalanceReport | None = None
    _src: np.ndarray = field(default=None, repr=False)
    _dst: np.ndarray = field(default=None, repr=False)
    _w: np.ndarray = field(default=None, repr=False)

    @classmethod
    def build(cls, graph: WeightedDigraph, coupling: CouplingFunction, energy: EnergyFunction,
              tol: float = DEFAULT_DB_TOL) -> "GradientSystem":
        if not is_strongly_connected(graph):
            raise NotStronglyConnected("graph is not strongly connected")
        c = stationary_vector(build_laplacian(graph)).c
        report = check_detailed_balance(graph, c, tol)
        if not report.ok:
            raise DetailedBalanceViolation(report.describe(), [(i, j) for i, j, _, _ in report.violations])
        src, dst, w = graph.arrays()
        return cls(graph, coupling, energy, c, report, src, dst, w)

    def with_energy(self, energy: EnergyFunction) -> "GradientSystem":
        return GradientSystem(self.graph, self.coupling, energy, self.c, self.balance,
                              self._src, self._dst, self._w)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def C(self) -> np.ndarray:
        return np.diag(self.c)

    def charges(self, x) -> np.ndarray:
        return self.c * np.asarray(x, float)

    def state(self, q) -> np.ndarray:
        return np.asarray(q, float) / self.c

    def node_field(self, x) -> np.ndarray:
        """Right-hand side of the node dynamics in ``x`` variables."""
        x = np.asarray(x, float)
        _check_domain(x, self.coupling.domain, f"{self.coupling.kind} coupling")
        flows = self._w * self.coupling.raw(x[self._src], x[self._dst])
        return np.bincount(self._dst, weights=flows, minlength=self.n)

    def check_state(self, x):
        """Raise ``DomainViolation`` unless ``x`` lies in the coupling and energy domains."""
        _check_domain(x, common_domain(self.coupling, self.energy), "state")

    def edge_ratios(self, x) -> np.ndarray:
        """``phi(x_j, x_i) / (h(x_j) - h(x_i))`` for every branch ``j -> i``."""
        x = np.asarray(x, float)
        self.check_state(x)
        return ratio_array(self.coupling, self.energy, x[self._src], x[self._dst], check=False)

    def assemble_K(self, x) -> MetricMatrix:
        x = np.asarray(x, float)
        self.energy.check_domain(x)
        K = np.zeros((self.n, self.n))
        K[self._dst, self._src] = -self.c[self._dst] * self._w * self.edge_ratios(x)
        np.fill_diagonal(K, -K.sum(axis=1))
        off = K - np.diag(np.diag(K))
        active = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(off > 0)))
        return MetricMatrix(K, x.copy(), active)

    def energy_value(self, q) -> float:
        return eval_energy(self.energy, self.c, q)

    def grad(self, q) -> np.ndarray:
        return grad_energy(self.energy, self.c, q)

    def gradient_vector_field(self, q) -> np.ndarray:
        """``-K(x) grad E(q)``, contracted edge by edge.

        Row ``i`` of ``-K g`` equals ``sum_j (-K_ij)(g_j - g_i)`` because the
        diagonal of ``K`` completes zero row sums, so the dense matrix is never
        formed here; :meth:`assemble_K` gives the same numbers in matrix form.
        """
        q = np.asarray(q, float)
        x = q / self.c
        self.check_state(x)
        g = self.energy.h_raw(x)
        src, dst = self._src, self._dst
        ratios = ratio_array(self.coupling, self.energy, x[src], x[dst], check=False)
        flows = self.c[dst] * self._w * ratios * (g[src] - g[dst])
        return np.bincount(dst, weights=flows, minlength=self.n)

    def dissipation_rate(self, q) -> float:
        q = np.asarray(q, float)
        g = self.grad(q)
        K = self.assemble_K(self.state(q)).matrix
        return float(-g @ K @ g)


def assemble_K(sys: GradientSystem, x) -> MetricMatrix:
    return sys.assemble_K(x)


def gradient_vector_field(sys: GradientSystem, q) -> np.ndarray:
    return sys.gradient_vector_field(q)


def dissipation_rate(sys: GradientSystem, q) -> float:
    return sys.dissipation_rate(q)


def verify_psd(K, tol: float = 1e-10) -> PSDReport:
    """Smallest eigenvalue of the symmetric part of ``K`` against ``-tol``."""
    M = np.asarray(getattr(K, "matrix", K), float)
    if M.size == 0:
        return PSDReport(True, 0.0)
    lam = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    return PSDReport(lam >= -tol, lam)
