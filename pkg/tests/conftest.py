import numpy as np
import pytest

from graphgrad.coupling import CouplingFunction, EnergyFunction

CATALOG_COUPLINGS = {
    "linear": CouplingFunction.linear(),
    "tanh": CouplingFunction.odd("tanh"),
    "arctan": CouplingFunction.odd("arctan"),
    "sinh": CouplingFunction.odd("sinh"),
    "cubic": CouplingFunction.odd("cubic"),
    "gain": CouplingFunction.gain(2.0),
    "sep_identity": CouplingFunction.separable("identity"),
    "sep_ln": CouplingFunction.separable("ln"),
    "sep_exp": CouplingFunction.separable("exp"),
    "sep_power": CouplingFunction.separable("power", 2.0),
    "sinusoidal": CouplingFunction.sinusoidal(),
}

CATALOG_ENERGIES = {
    "quadratic": EnergyFunction.quadratic(),
    "relative_entropy": EnergyFunction.relative_entropy(),
    "power_law3": EnergyFunction.power_law(3.0),
}


def in_domain_state(rng, n, coupling, energy):
    """Random state inside the common domain; sinusoidal states keep spread below pi."""
    positive = coupling.domain[0] == 0.0 or energy.domain[0] == 0.0
    if coupling.kind == "sinusoidal":
        lo = 0.5 if positive else -1.0
        return rng.uniform(lo, lo + 2.5, n)
    if positive:
        return rng.uniform(0.2, 3.0, n)
    return rng.uniform(-2.0, 2.0, n)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture(scope="session")
def builtin_results():
    """Every built-in scenario run once per session, keyed by name."""
    from graphgrad.scenarios import builtin_scenarios
    from graphgrad.verification import run_scenario

    return {s.name: run_scenario(s) for s in builtin_scenarios()}
