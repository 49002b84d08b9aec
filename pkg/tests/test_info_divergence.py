import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from graphgrad.coupling import CouplingFunction, EnergyFunction
from graphgrad.errors import DomainViolation
from graphgrad.fisher import debruijn_residual, edge_density, fisher_information, log_mean
from graphgrad.gradient import GradientSystem
from graphgrad.graph import WeightedDigraph, random_reversible_graph
from graphgrad.integrator import IntegratorConfig, simulate

from conftest import CATALOG_COUPLINGS, CATALOG_ENERGIES, in_domain_state

TWO_NODE = WeightedDigraph(2, ((1, 0, 2.0), (0, 1, 1.0)))
POS = st.floats(0.01, 100.0)


@settings(max_examples=200, deadline=None)
@given(a=POS, b=POS)
def test_log_mean_between_geometric_and_arithmetic(a, b):
    L = log_mean(a, b)
    assert math.sqrt(a * b) * (1 - 1e-12) <= L <= 0.5 * (a + b) * (1 + 1e-12)
    assert L == log_mean(b, a) or math.isclose(L, log_mean(b, a), rel_tol=1e-15)


@pytest.mark.parametrize("a, b", [(1.0, 2.0), (0.1, 7.0), (3.0, 3.0000001), (50.0, 0.5)])
def test_log_mean_integral_oracles(a, b):
    # L(a, b) = int_0^1 a^t b^(1-t) dt  and  1/L(a, b) = int_0^inf dt / ((t + a)(t + b))
    direct = quad(lambda t: a ** t * b ** (1 - t), 0, 1, epsabs=0, epsrel=1e-13)[0]
    carlson = 1.0 / quad(lambda t: 1.0 / ((t + a) * (t + b)), 0, np.inf, epsabs=0, epsrel=1e-12)[0]
    assert log_mean(a, b) == pytest.approx(direct, rel=1e-9)
    assert log_mean(a, b) == pytest.approx(carlson, rel=1e-9)


def test_log_mean_rejects_non_positive():
    with pytest.raises(DomainViolation):
        log_mean(0.0, 1.0)


def test_edge_density_linear_is_log_mean():
    a, b = np.array([0.4, 2.0, 5.0]), np.array([1.1, 2.0, 0.3])
    np.testing.assert_allclose(edge_density(CouplingFunction.linear(), a, b), log_mean(a, b), rtol=1e-6)


def test_edge_density_sinusoidal_is_sinc_times_log_mean():
    a, b = 1.0 + math.pi / 2, 1.0
    expected = math.sin(a - b) / (math.log(a) - math.log(b))
    assert edge_density(CouplingFunction.sinusoidal(), a, b) == pytest.approx(expected, rel=1e-14)
    sinc = math.sin(a - b) / (a - b)
    assert expected == pytest.approx(sinc * log_mean(a, b), rel=1e-14)


def test_fisher_information_two_node():
    sys = GradientSystem.build(TWO_NODE, CouplingFunction.linear(), EnergyFunction.relative_entropy())
    x = np.array([0.5, 3.0])
    # both ordered pairs contribute c_i w_ij (x_j - x_i)(ln x_j - ln x_i); the pair is reversible
    expected = (1 / 3) * 2.0 * (3.0 - 0.5) * (math.log(3.0) - math.log(0.5))
    rep = fisher_information(sys, x)
    assert rep.J == pytest.approx(expected, rel=1e-14)
    np.testing.assert_allclose(rep.edge_densities, [log_mean(0.5, 3.0)] * 2, rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 31), cname=st.sampled_from(sorted(CATALOG_COUPLINGS)),
       ename=st.sampled_from(sorted(CATALOG_ENERGIES)))
def test_fisher_equals_dissipation(seed, cname, ename):
    rng = np.random.default_rng(seed)
    g, _ = random_reversible_graph(rng, 5)
    sys = GradientSystem.build(g, CATALOG_COUPLINGS[cname], CATALOG_ENERGIES[ename])
    x = in_domain_state(rng, 5, sys.coupling, sys.energy)
    J = fisher_information(sys, x).J
    assert J == pytest.approx(-sys.dissipation_rate(sys.charges(x)), rel=1e-10, abs=1e-12)


def test_debruijn_residual_shrinks_fourfold():
    sys = GradientSystem.build(TWO_NODE, CouplingFunction.linear(), EnergyFunction.relative_entropy())
    runs = []
    for dt in (5e-4, 2.5e-4):
        rec = simulate(sys, [0.5, 3.0], IntegratorConfig(dt, 2.0, cadence=2))
        runs.append(debruijn_residual(rec, sys))
    coarse, fine = runs
    common = np.intersect1d(np.round(coarse.t, 9), np.round(fine.t, 9))
    rc = coarse.residual[np.isin(np.round(coarse.t, 9), common)]
    rf = fine.residual[np.isin(np.round(fine.t, 9), common)]
    ratio = np.max(np.abs(rc)) / np.max(np.abs(rf))
    assert 3.5 < ratio < 4.5
    assert coarse.max_relative < 1e-4
