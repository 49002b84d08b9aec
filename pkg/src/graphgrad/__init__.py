"""Gradient-flow, passive-circuit and Markov-chain views of nonlinear graph dynamics.

The node dynamics ``dx_i/dt = sum_j w_ij phi(x_j, x_i)`` on a weighted digraph
satisfying detailed balance are rewritten as a gradient flow of a
sum-separable energy, synthesized as an RC network, and (for quadratic
energy) read as a master equation.  Every view is checked numerically
against the others.
"""

from .circuit import (
    CapacitorBank,
    Netlist,
    PassivityReport,
    ResistorEdge,
    export_netlist,
    kirchhoff_factorization,
    passivity_report,
    rc_weights,
    recover_rc,
    synthesize_conductances,
)
from .coupling import CouplingFunction, EnergyFunction, check_coupling_axioms, ratio_phi_over_dh
from .errors import (
    DetailedBalanceViolation,
    DomainViolation,
    GraphGradError,
    InvalidGraph,
    NonFiniteRatio,
    NotStronglyConnected,
    ScenarioError,
    SingularStructure,
    SparsityMismatch,
    StepDomainViolation,
    WrapHazard,
    WrongEnergyKind,
)
from .fisher import debruijn_residual, edge_density, fisher_information, log_mean
from .gradient import GradientSystem, assemble_K, dissipation_rate, gradient_vector_field, verify_psd
from .graph import (
    WeightedDigraph,
    build_laplacian,
    check_detailed_balance,
    incidence_matrix,
    is_strongly_connected,
    stationary_vector,
)
from .integrator import IntegratorConfig, TrajectoryRecord, convergence_report, simulate, step_rk4
from .markov import divergence_to_equilibrium, invariant_distribution, to_generator
from .scenarios import (
    Scenario,
    builtin_scenarios,
    get_scenario,
    kuramoto_scenario,
    opinion_scenario,
    porous_medium_scenario,
    rc_consensus_scenario,
)
from .verification import run_scenario

__version__ = "0.1.0"
