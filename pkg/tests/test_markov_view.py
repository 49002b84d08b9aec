import numpy as np
import pytest
from scipy.linalg import null_space
from scipy.special import rel_entr

from graphgrad.coupling import CouplingFunction, EnergyFunction
from graphgrad.errors import DomainViolation, WrongEnergyKind
from graphgrad.gradient import GradientSystem
from graphgrad.graph import random_reversible_graph
from graphgrad.integrator import IntegratorConfig, simulate
from graphgrad.markov import divergence_to_equilibrium, invariant_distribution, to_generator

from conftest import CATALOG_COUPLINGS, in_domain_state


def _quadratic_system(rng, n, coupling="tanh"):
    g, _ = random_reversible_graph(rng, n)
    return GradientSystem.build(g, CATALOG_COUPLINGS[coupling], EnergyFunction.quadratic())


def test_generator_is_reversible_and_conservative(rng):
    for name in sorted(CATALOG_COUPLINGS):
        sys = _quadratic_system(rng, 6, name)
        x = in_domain_state(rng, 6, sys.coupling, sys.energy)
        F = to_generator(sys, x)
        assert F.balance_residual() < 1e-10
        assert np.max(np.abs(F.matrix.sum(axis=1))) < 1e-10 * max(1.0, np.abs(F.matrix).max())


def test_invariant_distribution_is_c(rng):
    sys = _quadratic_system(rng, 7)
    F = to_generator(sys, rng.uniform(-1, 1, 7))
    np.testing.assert_allclose(invariant_distribution(F), sys.c, rtol=1e-9)
    # independent oracle: left null space by SVD
    v = null_space(F.matrix.T)[:, 0]
    np.testing.assert_allclose(v / v.sum(), sys.c, rtol=1e-8)


def test_master_equation_is_the_gradient_field(rng):
    sys = _quadratic_system(rng, 5)
    q = rng.dirichlet(np.ones(5))
    F = to_generator(sys, sys.state(q))
    np.testing.assert_allclose(-F.matrix.T @ q, sys.gradient_vector_field(q), atol=1e-14)


def test_generator_requires_quadratic_energy(rng):
    g, _ = random_reversible_graph(rng, 3)
    sys = GradientSystem.build(g, CouplingFunction.linear(), EnergyFunction.relative_entropy())
    with pytest.raises(WrongEnergyKind):
        to_generator(sys, [1.0, 2.0, 3.0])


def test_probability_flow_reaches_capacitances(rng):
    sys = _quadratic_system(rng, 4, "linear")
    q0 = np.array([0.7, 0.1, 0.2, 0.0])
    rec = simulate(sys, sys.state(q0), IntegratorConfig.default(sys, horizon=60.0, cadence=100), form="q")
    assert np.max(np.abs(rec.q.sum(axis=1) - 1.0)) < 1e-9
    assert rec.q.min() > -1e-9
    np.testing.assert_allclose(rec.q[-1], sys.c, atol=1e-6)


def test_divergence_matches_kl_oracle():
    c = np.array([0.2, 0.3, 0.5])
    q = np.array([0.5, 0.5, 0.0])
    kl = float(np.sum(rel_entr(q, c)))
    assert divergence_to_equilibrium(EnergyFunction.relative_entropy(), c, q) == pytest.approx(kl, rel=1e-14)
    chi = 0.5 * float(np.sum(q ** 2 / c))
    assert divergence_to_equilibrium(EnergyFunction.quadratic(), c, q) == pytest.approx(chi, rel=1e-14)
    assert divergence_to_equilibrium(EnergyFunction.relative_entropy(), c, c) == pytest.approx(0.0, abs=1e-16)


def test_divergence_rejects_non_probability():
    with pytest.raises(DomainViolation):
        divergence_to_equilibrium(EnergyFunction.relative_entropy(), [0.5, 0.5], [0.7, 0.7])
