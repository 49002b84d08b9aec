"""Discrete Fisher information, logarithmic mean and the dissipation identity.

For an edge ``j -> i`` the Fisher term is ``c_i w_ij phi(x_j, x_i) (h(x_j) - h(x_i))``
and ``J(x)`` is half the sum over ordered pairs.  Along any trajectory of the
node dynamics ``dE/dt = -J(x)``; for ``h = ln`` (relative entropy) the edge
weight is the logarithmic mean of the endpoint densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import EPS_EQ, CouplingFunction, EnergyFunction, ratio_array
from .errors import DomainViolation
from .gradient import GradientSystem

_LN = EnergyFunction.relative_entropy()


@dataclass
class FisherReport:
    J: float
    contributions: np.ndarray
    branches: list
    edge_densities: np.ndarray | None = None


def fisher_information(sys: GradientSystem, x) -> FisherReport:
    """``J(x) = 1/2 sum_ij c_i w_ij phi(x_j, x_i) (h(x_j) - h(x_i))``.

    Edge densities are attached when the energy is the relative entropy.
    """
    x = np.asarray(x, float)
    sys.check_state(x)
    src, dst, w = sys.graph.arrays()
    h = sys.energy.h_raw(x)
    terms = sys.c[dst] * w * sys.coupling.raw(x[src], x[dst]) * (h[src] - h[dst])
    densities = None
    if sys.energy.kind == "relative_entropy":
        densities = edge_density(sys.coupling, x[src], x[dst])
    return FisherReport(float(0.5 * terms.sum()), terms, list(zip(src.tolist(), dst.tolist())), densities)


def log_mean(a, b, eps_eq: float = EPS_EQ):
    """Logarithmic mean ``(a - b) / (ln a - ln b)``; the midpoint when ``|ln a - ln b| < eps_eq``."""
    a_arr = np.asarray(a, float)
    b_arr = np.asarray(b, float)
    if np.any(a_arr <= 0) or np.any(b_arr <= 0):
        raise DomainViolation("logarithmic mean needs positive arguments")
    hi, lo = np.maximum(a_arr, b_arr), np.minimum(a_arr, b_arr)
    # log1p keeps ln(hi / lo) accurate when the arguments are close
    d = np.log1p((hi - lo) / lo)
    close = d < eps_eq
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(close, 0.5 * (hi + lo), (hi - lo) / np.where(close, 1.0, d))
    return float(out) if out.ndim == 0 else out


def edge_density(phi: CouplingFunction, a, b):
    """``phi(a, b) / (ln a - ln b)`` with the diagonal secant fallback.

    Linear coupling gives the logarithmic mean, sinusoidal coupling gives
    ``sinc(a - b) * lgm(a, b)``.
    """
    out = ratio_array(phi, _LN, a, b)
    return float(out[0]) if np.ndim(a) == 0 and np.ndim(b) == 0 else out


@dataclass
class DeBruijnReport:
    t: np.ndarray
    dEdt: np.ndarray
    J: np.ndarray
    residual: np.ndarray
    relative: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residual), initial=0.0))

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative, initial=0.0))


def debruijn_residual(rec, sys: GradientSystem, floor: float = 1e-6) -> DeBruijnReport:
    """Central-difference ``dE/dt + J(x)`` at interior samples of ``rec``.

    ``relative`` divides by ``max(J_k, floor * max_k J)`` so that the check
    stays meaningful once the run has relaxed and ``J`` is at rounding level.
    """
    t = rec.t
    E = np.array([sys.energy_value(q) for q in rec.q])
    J = np.array([fisher_information(sys, x).J for x in rec.x])
    if len(t) < 3:
        empty = np.zeros(0)
        return DeBruijnReport(empty, empty, empty, empty, empty)
    left, right = t[1:-1] - t[:-2], t[2:] - t[1:-1]
    even = np.abs(right - left) <= 1e-9 * left
    dEdt = ((E[2:] - E[:-2]) / (t[2:] - t[:-2]))[even]
    Ji = J[1:-1][even]
    res = dEdt + Ji
    scale = np.maximum(np.abs(Ji), floor * max(float(np.max(np.abs(J))), math.ulp(1.0)))
    return DeBruijnReport(t[1:-1][even], dEdt, Ji, res, np.abs(res) / scale)
