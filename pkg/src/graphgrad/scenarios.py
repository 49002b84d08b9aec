"""Prepackaged experiments and the scenario JSON format.

A :class:`Scenario` bundles a graph, coupling, energy, initial state, an
optional drive and integrator overrides with the list of assertions the run
is expected to satisfy.  Scenarios serialize to the CLI scenario JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .circuit import rc_weights
from .coupling import CouplingFunction, EnergyFunction
from .errors import DetailedBalanceViolation, DomainViolation, InvalidGraph, ScenarioError
from .graph import (
    WeightedDigraph,
    build_laplacian,
    check_detailed_balance,
    complete_graph,
    is_strongly_connected,
    stationary_vector,
)

ASSERTIONS = (
    "converges_to_weighted_mean",
    "energy_monotone",
    "csiszar_family_decay",
    "k_psd",
    "passive",
    "positivity",
    "rc_roundtrip",
    "phase_sync",
    "debruijn",
    "dissipation_monotone",
    "stationary",
    "markov",
)

COUPLING_KINDS = ("Linear", "OddFunction", "Gain", "Separable", "Sinusoidal")
ENERGY_KINDS = ("Quadratic", "RelativeEntropy", "PowerLaw", "Custom")

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["graph", "coupling", "energy", "initial_state"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "tags": {"type": "array", "items": {"type": "string"}},
        "graph": {
            "type": "object",
            "required": ["nodes", "edges"],
            "additionalProperties": False,
            "properties": {
                "nodes": {"type": "integer", "minimum": 1},
                "edges": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["from", "to", "weight"],
                        "additionalProperties": False,
                        "properties": {
                            "from": {"type": "integer", "minimum": 1},
                            "to": {"type": "integer", "minimum": 1},
                            "weight": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                },
            },
        },
        "coupling": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {"kind": {"enum": list(COUPLING_KINDS)}, "params": {"type": "object"}},
        },
        "energy": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {"kind": {"enum": list(ENERGY_KINDS)}, "params": {"type": "object"}},
        },
        "initial_state": _NUMBER_LIST,
        "drive": {"anyOf": [_NUMBER_LIST, {"type": "null"}]},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "tol_conv": {"type": "number", "exclusiveMinimum": 0},
                "cadence": {"type": "integer", "minimum": 1},
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trace": {"type": "boolean"},
                "netlist": {"enum": [False, "json", "spice"]},
                "form": {"enum": ["x", "q", "both"]},
            },
        },
        "assertions": {"type": "array", "items": {"enum": list(ASSERTIONS)}, "uniqueItems": True},
        "rc": {
            "type": "object",
            "required": ["capacitances", "resistances"],
            "additionalProperties": False,
            "properties": {
                "capacitances": _NUMBER_LIST,
                "resistances": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["from", "to", "resistance"],
                        "additionalProperties": False,
                        "properties": {
                            "from": {"type": "integer", "minimum": 1},
                            "to": {"type": "integer", "minimum": 1},
                            "resistance": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                },
            },
        },
    },
}


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable description of one experiment."""

    name: str
    graph: WeightedDigraph
    coupling: CouplingFunction
    energy: EnergyFunction
    x0: np.ndarray
    drive: np.ndarray | None = None
    integrator: dict = field(default_factory=dict)
    assertions: tuple[str, ...] = ()
    outputs: dict = field(default_factory=dict)
    rc: dict | None = None
    description: str = ""
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        x0 = np.asarray(self.x0, float)
        if x0.shape != (self.graph.n,):
            raise ScenarioError(f"initial_state has {x0.size} entries, graph has {self.graph.n} nodes")
        object.__setattr__(self, "x0", x0)
        if self.drive is not None:
            drive = np.asarray(self.drive, float)
            if drive.shape != (self.graph.n,):
                raise ScenarioError(f"drive has {drive.size} entries, graph has {self.graph.n} nodes")
            object.__setattr__(self, "drive", drive)
        unknown = set(self.assertions) - set(ASSERTIONS)
        if unknown:
            raise ScenarioError(f"unknown assertions {sorted(unknown)}")

    @property
    def uniform_drive(self) -> bool:
        if self.drive is None:
            return True
        return bool(np.ptp(self.drive) <= 1e-12 * max(1.0, np.max(np.abs(self.drive))))

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "description": self.description,
            "tags": list(self.tags),
            "graph": self.graph.to_dict(),
            "coupling": self.coupling.to_dict(),
            "energy": self.energy.to_dict(),
            "initial_state": [float(v) for v in self.x0],
            "drive": None if self.drive is None else [float(v) for v in self.drive],
            "integrator": dict(self.integrator),
            "outputs": dict(self.outputs),
            "assertions": list(self.assertions),
        }
        if self.rc is not None:
            doc["rc"] = {
                "capacitances": [float(v) for v in self.rc["capacitances"]],
                "resistances": [{"from": a + 1, "to": b + 1, "resistance": float(r)}
                                for (a, b), r in sorted(self.rc["resistances"].items())],
            }
        return doc

    @classmethod
    def from_dict(cls, doc: dict, name: str | None = None) -> "Scenario":
        """Validate ``doc`` against :data:`SCENARIO_SCHEMA` and build the scenario.

        Raises
        ------
        ScenarioError
            On schema errors, unknown catalog entries or inconsistent sizes.
        """
        try:
            jsonschema.validate(doc, SCENARIO_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ScenarioError(f"schema error at {where}: {exc.message}") from exc
        try:
            graph = WeightedDigraph.from_dict(doc["graph"])
            coupling = CouplingFunction.from_dict(doc["coupling"])
            energy = EnergyFunction.from_dict(doc["energy"])
        except (InvalidGraph, ValueError, TypeError, SyntaxError) as exc:
            raise ScenarioError(str(exc)) from exc
        rc = None
        if "rc" in doc:
            rc = {
                "capacitances": list(doc["rc"]["capacitances"]),
                "resistances": {(min(e["from"], e["to"]) - 1, max(e["from"], e["to"]) - 1): e["resistance"]
                                for e in doc["rc"]["resistances"]},
            }
        return cls(
            name=doc.get("name") or name or "scenario",
            graph=graph,
            coupling=coupling,
            energy=energy,
            x0=doc["initial_state"],
            drive=doc.get("drive"),
            integrator=dict(doc.get("integrator") or {}),
            assertions=tuple(doc.get("assertions") or ()),
            outputs=dict(doc.get("outputs") or {}),
            rc=rc,
            description=doc.get("description", ""),
            tags=tuple(doc.get("tags") or ()),
        )


# ------------------------------------------------------------------ builders

def _require_balance(graph: WeightedDigraph):
    if not is_strongly_connected(graph):
        raise DetailedBalanceViolation("graph is not strongly connected", [])
    c = stationary_vector(build_laplacian(graph)).c
    report = check_detailed_balance(graph, c)
    if not report.ok:
        raise DetailedBalanceViolation(report.describe(), [(i, j) for i, j, _, _ in report.violations])
    return c


def kuramoto_scenario(graph: WeightedDigraph, omega, theta0, name: str = "kuramoto", **integrator) -> Scenario:
    """Sinusoidal coupling with quadratic energy and natural frequencies ``omega``.

    Phase synchronization is asserted only for a uniform drive and an initial
    spread below ``pi``; otherwise the run is recorded without a verdict.
    """
    _require_balance(graph)
    theta0 = np.asarray(theta0, float)
    omega = np.broadcast_to(np.asarray(omega, float), theta0.shape).copy()
    spread = float(np.ptp(theta0))
    uniform = bool(np.ptp(omega) <= 1e-12 * max(1.0, np.max(np.abs(omega))))
    assertions = []
    if uniform and spread < math.pi:
        assertions += ["phase_sync", "energy_monotone", "k_psd", "passive"]
    if uniform and spread == 0.0 and not np.any(omega):
        assertions = ["stationary", "energy_monotone"]
    return Scenario(name, graph, CouplingFunction.sinusoidal(), EnergyFunction.quadratic(), theta0,
                    drive=omega if np.any(omega) else None, integrator=integrator,
                    assertions=tuple(assertions), tags=("kuramoto",),
                    description=f"oscillators, initial spread {spread / math.pi:.3g} pi")


def rc_consensus_scenario(capacitances, resistances: dict, x0, name: str = "rc", **integrator) -> Scenario:
    """Averaging RC circuit: ``w_kj = 1 / (c_k r_kj)`` with linear coupling.

    ``resistances`` maps 0-based node pairs to resistances.
    """
    c = np.asarray(capacitances, float)
    if np.any(c <= 0):
        raise ScenarioError("capacitances must be positive")
    if any(r <= 0 for r in resistances.values()):
        raise ScenarioError("resistances must be positive")
    graph = rc_weights(c, resistances)
    rc = {"capacitances": c.tolist(),
          "resistances": {(min(a, b), max(a, b)): float(r) for (a, b), r in resistances.items()}}
    return Scenario(name, graph, CouplingFunction.linear(), EnergyFunction.quadratic(), x0,
                    integrator=integrator, rc=rc, tags=("rc", "linear"),
                    assertions=("converges_to_weighted_mean", "energy_monotone", "k_psd", "passive",
                                "rc_roundtrip", "markov", "dissipation_monotone"),
                    description="averaging RC circuit")


def porous_medium_scenario(graph: WeightedDigraph, p: float, x0, name: str = "porous", **integrator) -> Scenario:
    """Separable coupling ``x^p - y^p`` with the relative-entropy energy."""
    _require_balance(graph)
    x0 = np.asarray(x0, float)
    if np.any(x0 <= 0):
        raise DomainViolation("porous-medium runs need a positive initial state")
    coupling = CouplingFunction.linear() if p == 1 else CouplingFunction.separable("power", p)
    return Scenario(name, graph, coupling, EnergyFunction.relative_entropy(), x0, integrator=integrator,
                    assertions=("converges_to_weighted_mean", "positivity", "csiszar_family_decay",
                                "energy_monotone", "k_psd", "passive"),
                    tags=("porous",), description=f"porous-medium coupling, exponent {p:g}")


def opinion_scenario(graph: WeightedDigraph, p: float, x0, name: str = "opinion", **integrator) -> Scenario:
    """Gain coupling ``|tanh(p z)| z`` with quadratic energy."""
    _require_balance(graph)
    return Scenario(name, graph, CouplingFunction.gain(p), EnergyFunction.quadratic(), x0, integrator=integrator,
                    assertions=("converges_to_weighted_mean", "dissipation_monotone", "energy_monotone", "k_psd"),
                    tags=("opinion",), description=f"opinion dynamics, gain slope {p:g}")


def linear_entropy_scenario(name: str = "linear_ln_debruijn") -> Scenario:
    """Linear coupling with ``h = ln`` on the 2-node graph, sampled densely for the dissipation identity."""
    graph = WeightedDigraph(2, ((1, 0, 2.0), (0, 1, 1.0)))
    return Scenario(name, graph, CouplingFunction.linear(), EnergyFunction.relative_entropy(), [0.5, 3.0],
                    integrator={"cadence": 2, "horizon": 6.0},
                    assertions=("converges_to_weighted_mean", "debruijn", "energy_monotone",
                                "csiszar_family_decay", "positivity", "k_psd", "passive"),
                    tags=("entropy", "fisher"), description="relative entropy and discrete Fisher information")


def _builtin() -> list[Scenario]:
    two = WeightedDigraph(2, ((1, 0, 2.0), (0, 1, 1.0)))
    k4 = complete_graph(4, 0.5)
    pi = math.pi
    return [
        rc_consensus_scenario([1.0, 2.0], {(0, 1): 3.0}, [0.0, 3.0], name="rc_2node"),
        rc_consensus_scenario([1.0] * 4, {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0}, [0.0, 1.0, 2.0, 5.0],
                              name="rc_path_unit", horizon=40.0),
        linear_entropy_scenario(),
        porous_medium_scenario(two, 2.0, [1.0, 4.0], name="porous_p2"),
        opinion_scenario(complete_graph(3, 1.0), 10.0, [0.0, 1.0, 2.5], name="opinion_p10",
                         dt=0.2, horizon=5.0e4, cadence=1000),
        kuramoto_scenario(k4, 1.0, [0.0, 0.3 * pi, 0.6 * pi, 0.9 * pi], name="kuramoto_sync_0.9pi",
                          horizon=30.0),
        kuramoto_scenario(k4, 1.0, [0.0, 0.4 * pi, 0.8 * pi, 1.2 * pi], name="kuramoto_wide_1.2pi",
                          horizon=30.0),
        kuramoto_scenario(k4, [0.8, 0.9, 1.1, 1.2], [0.0, 0.2, 0.4, 0.6], name="kuramoto_heterogeneous"),
        kuramoto_scenario(k4, 0.0, [0.3] * 4, name="kuramoto_stationary"),
    ]


def builtin_scenarios(pattern: str | None = None) -> list[Scenario]:
    """Catalog of built-in scenarios, optionally filtered by a name or tag substring."""
    out = _builtin()
    if pattern:
        out = [s for s in out if pattern in s.name or any(pattern in t for t in s.tags)]
    return out


def get_scenario(name: str) -> Scenario:
    for s in _builtin():
        if s.name == name:
            return s
    raise KeyError(f"no built-in scenario named {name!r}")
