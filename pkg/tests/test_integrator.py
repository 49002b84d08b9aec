import csv
import io
import math
import warnings

import numpy as np
import pytest

from graphgrad.coupling import CouplingFunction, EnergyFunction
from graphgrad.errors import StepDomainViolation, WrapHazard
from graphgrad.gradient import GradientSystem
from graphgrad.graph import WeightedDigraph, complete_graph, random_reversible_graph
from graphgrad.integrator import (
    IntegratorConfig,
    characteristic_time,
    convergence_report,
    simulate,
    step_rk4,
)

from conftest import CATALOG_COUPLINGS, CATALOG_ENERGIES, in_domain_state

TWO_NODE = WeightedDigraph(2, ((1, 0, 2.0), (0, 1, 1.0)))


@pytest.fixture
def linear2():
    return GradientSystem.build(TWO_NODE, CouplingFunction.linear(), EnergyFunction.quadratic())


def test_rk4_zero_field():
    y = np.array([1.0, -2.0])
    np.testing.assert_array_equal(step_rk4(lambda v: np.zeros_like(v), y, 0.1), y)


def test_rk4_linear_test_equation():
    assert step_rk4(lambda v: -v, np.array([1.0]), 0.1)[0] == pytest.approx(math.exp(-0.1), abs=1e-7)


def test_rk4_preserves_weighted_mean_per_step(linear2):
    x = np.array([0.0, 3.0])
    m0 = float(linear2.c @ x)
    for _ in range(100):
        x = step_rk4(linear2.node_field, x, 0.05)
        assert abs(float(linear2.c @ x) - m0) < 1e-14


def test_config_validation_and_defaults(linear2):
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0, horizon=1.0)
    cfg = IntegratorConfig.default(linear2)
    tau = characteristic_time(linear2)
    assert tau == pytest.approx(0.5)
    assert cfg.dt == pytest.approx(1e-3 * tau) and cfg.horizon == pytest.approx(20 * tau)
    assert cfg.cadence == 10 and cfg.steps == 20000


def test_two_node_converges_to_weighted_mean(linear2):
    rec = simulate(linear2, [0.0, 3.0], IntegratorConfig.default(linear2))
    rep = convergence_report(rec, linear2)
    assert rep.predicted == pytest.approx(2.0)
    assert rep.verdict and rep.error < 1e-6
    assert rep.conservation_residual < 1e-9 and rep.max_energy_increase <= 1e-9
    np.testing.assert_allclose(rec.q, rec.x * linear2.c, atol=1e-12)


def test_uniform_start_is_immediately_converged(linear2):
    rec = simulate(linear2, [1.5, 1.5], IntegratorConfig(0.01, 1.0))
    assert rec.converged and rec.convergence_time == 0.0
    assert np.ptp(rec.E) == 0.0


def test_record_cadence_and_final_sample(linear2):
    rec = simulate(linear2, [0.0, 3.0], IntegratorConfig(0.01, 1.05, cadence=10))
    assert len(rec.t) == 12
    assert rec.t[-1] == pytest.approx(1.05)


@pytest.mark.parametrize("cname", sorted(CATALOG_COUPLINGS))
def test_compiled_and_numpy_paths_agree(cname):
    rng = np.random.default_rng(7)
    g, _ = random_reversible_graph(rng, 5)
    E = CATALOG_ENERGIES["relative_entropy"] if cname != "cubic" else CATALOG_ENERGIES["quadratic"]
    sys = GradientSystem.build(g, CATALOG_COUPLINGS[cname], E)
    x0 = in_domain_state(rng, 5, sys.coupling, E)
    cfg = IntegratorConfig.default(sys, horizon=2.0 * characteristic_time(sys))
    for form in ("x", "q"):
        fast = simulate(sys, x0, cfg, form, monitor=False)
        slow = simulate(sys, x0, cfg, form, monitor=False, compiled=False)
        np.testing.assert_allclose(fast.x, slow.x, rtol=0, atol=1e-13)


def test_x_and_q_forms_agree(rng):
    g, _ = random_reversible_graph(rng, 4)
    sys = GradientSystem.build(g, CouplingFunction.odd("tanh"), EnergyFunction.power_law(3.0))
    x0 = rng.uniform(0.5, 2.5, 4)
    cfg = IntegratorConfig.default(sys)
    a = simulate(sys, x0, cfg, "x")
    b = simulate(sys, x0, cfg, "q")
    assert np.max(np.abs(a.x - b.x)) < 1e-8


def test_step_domain_violation_reports_time():
    sys = GradientSystem.build(TWO_NODE, CouplingFunction.separable("ln"), EnergyFunction.quadratic())
    with pytest.raises(StepDomainViolation) as err:
        simulate(sys, [0.01, 5.0], IntegratorConfig(dt=5.0, horizon=50.0))
    assert err.value.t >= 0.0


def test_driven_runs():
    sys = GradientSystem.build(complete_graph(3, 1.0), CouplingFunction.sinusoidal(), EnergyFunction.quadratic())
    cfg = IntegratorConfig.default(sys, horizon=20.0)
    rec = simulate(sys, [0.0, 0.5, 1.0], cfg, drive=np.full(3, 2.0))
    assert rec.frame_rate == pytest.approx(2.0)
    rep = convergence_report(rec, sys)
    assert rep.verdict and rep.predicted == pytest.approx(0.5)
    hetero = simulate(sys, [0.0, 0.5, 1.0], cfg, drive=np.array([1.0, 1.1, 1.2]))
    assert hetero.converged is None and convergence_report(hetero, sys).verdict is None


def test_wrap_hazard_warning():
    sys = GradientSystem.build(complete_graph(3, 1.0), CouplingFunction.sinusoidal(), EnergyFunction.quadratic())
    with warnings.catch_warnings(record=True) as log:
        warnings.simplefilter("always")
        rec = simulate(sys, [0.0, 1.0, 3.5], IntegratorConfig(0.01, 0.5))
    assert rec.wrap_hazard
    assert sum(issubclass(w.category, WrapHazard) for w in log) == 1


def test_csv_export(linear2):
    rec = simulate(linear2, [0.0, 3.0], IntegratorConfig(0.01, 0.1, cadence=5))
    rows = list(csv.reader(io.StringIO(rec.to_csv({"J": np.arange(len(rec.t), dtype=float)}))))
    assert rows[0] == ["t", "x1", "x2", "q1", "q2", "E", "dEdt", "wmean", "psd_ok", "J"]
    assert len(rows) == len(rec.t) + 1
    assert float(rows[-1][0]) == pytest.approx(0.1)
