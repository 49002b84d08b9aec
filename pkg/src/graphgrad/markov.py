"""Markov-chain reading of the quadratic-energy gradient system.

For ``H(z) = z^2 / 2`` the gradient is ``grad E(q) = x = C^{-1} q`` and the
charge dynamics become the master equation ``dq/dt = -F(x)^T q`` with the
state-dependent generator ``F = C^{-1} K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import EnergyFunction, eval_energy
from .errors import DomainViolation, WrongEnergyKind
from .gradient import GradientSystem
from .graph import stationary_vector


@dataclass(frozen=True)
class GeneratorMatrix:
    matrix: np.ndarray
    x: np.ndarray
    c: np.ndarray

    def balance_residual(self) -> float:
        """``max |C F - F^T C|``."""
        CF = self.c[:, None] * self.matrix
        return float(np.max(np.abs(CF - CF.T), initial=0.0))

    def spectral_gap(self) -> float:
        """Second-smallest eigenvalue of the symmetrized generator ``C^{1/2} F C^{-1/2}``."""
        s = np.sqrt(self.c)
        S = s[:, None] * self.matrix / s[None, :]
        lam = np.linalg.eigvalsh(0.5 * (S + S.T))
        return float(lam[1]) if len(lam) > 1 else 0.0


def to_generator(sys: GradientSystem, x) -> GeneratorMatrix:
    if sys.energy.kind != "quadratic":
        raise WrongEnergyKind(f"generator form needs a quadratic energy, got {sys.energy.kind}")
    x = np.asarray(x, float)
    K = sys.assemble_K(x).matrix
    return GeneratorMatrix(K / sys.c[:, None], x.copy(), sys.c.copy())


def invariant_distribution(F) -> np.ndarray:
    """Normalized left kernel of ``F``, i.e. the stationary direction of ``dq/dt = -F^T q``."""
    M = np.asarray(getattr(F, "matrix", F), float)
    return stationary_vector(M).c


def divergence_to_equilibrium(energy: EnergyFunction, c, q, atol: float = 1e-12) -> float:
    """``sum_i c_i H(q_i / c_i)`` for a probability vector ``q``.

    Exact zeros in ``q`` are allowed for the relative entropy (``0 ln 0 = 0``).
    """
    c = np.asarray(getattr(c, "c", c), float)
    q = np.asarray(q, float)
    if np.any(q < 0) or abs(q.sum() - 1.0) > atol:
        raise DomainViolation("q is not a probability vector")
    return eval_energy(energy, c, q, boundary_ok=True)
