"""Run a scenario and cross-check every structural and dynamical claim.

The report has the same keys for every scenario.  Each verdict carries a
status (``pass``, ``fail`` or ``skip`` when the check does not apply), a
numeric residual, the tolerance it was compared with, and whether the
scenario requires it.  Structural checks are always required; the others are
required when the scenario lists the matching assertion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .circuit import export_netlist, passivity_report, recover_rc
from .coupling import EnergyFunction
from .errors import NonFiniteRatio, WrapHazard
from .fisher import debruijn_residual, fisher_information
from .gradient import GradientSystem
from .integrator import IntegratorConfig, TrajectoryRecord, convergence_report, simulate
from .markov import to_generator
from .scenarios import Scenario

VERDICTS = (
    "detailed_balance",
    "k_symmetry",
    "k_row_sums",
    "k_psd",
    "conservation",
    "lyapunov",
    "dissipation",
    "debruijn",
    "passivity",
    "convergence",
    "form_equivalence",
    "positivity",
    "stationary",
    "rc_roundtrip",
    "generator_balance",
)

TOL = {
    "detailed_balance": 1e-9,
    "k_symmetry": 1e-12,
    "k_row_sums": 1e-12,
    "k_psd": 1e-10,
    "conservation": 1e-9,
    "lyapunov": 1e-9,
    "dissipation": 1e-12,
    "debruijn": 1e-4,
    "passivity": 0.0,
    "form_equivalence": 1e-8,
    "positivity": 0.0,
    "stationary": 1e-12,
    "rc_roundtrip": 1e-12,
    "generator_balance": 1e-10,
}

# assertion name -> verdict it makes required
_REQUIRES = {
    "converges_to_weighted_mean": "convergence",
    "phase_sync": "convergence",
    "energy_monotone": "lyapunov",
    "csiszar_family_decay": "lyapunov",
    "k_psd": "k_psd",
    "passive": "passivity",
    "positivity": "positivity",
    "rc_roundtrip": "rc_roundtrip",
    "debruijn": "debruijn",
    "dissipation_monotone": "dissipation",
    "stationary": "stationary",
    "markov": "generator_balance",
}

_ALWAYS = ("detailed_balance", "k_symmetry", "k_row_sums", "conservation", "form_equivalence")

FAMILY = {
    "Quadratic": EnergyFunction.quadratic(),
    "RelativeEntropy": EnergyFunction.relative_entropy(),
    "PowerLaw(3)": EnergyFunction.power_law(3.0),
}

MAX_STRUCTURE_SAMPLES = 60


def _verdict(ok, residual, tol, detail="", required=False) -> dict:
    if ok is None:
        status = "skip"
    else:
        status = "pass" if ok else "fail"
    res = None if residual is None or not math.isfinite(float(residual)) else float(residual)
    return {"status": status, "residual": res, "tolerance": tol, "required": bool(required), "detail": detail}


@dataclass
class RunResult:
    """Everything a scenario run produced: report plus the raw records."""

    report: dict
    system: GradientSystem
    records: dict = field(default_factory=dict)
    primary: TrajectoryRecord | None = None
    debruijn: object = None

    @property
    def passed(self) -> bool:
        return self.report["status"] == "pass"


def integrator_config(scenario: Scenario, sys: GradientSystem, dt=None, horizon=None) -> IntegratorConfig:
    over = dict(scenario.integrator)
    if dt is not None:
        over["dt"] = dt
    if horizon is not None:
        over["horizon"] = horizon
    return IntegratorConfig.default(sys, **over)


def run_scenario(scenario: Scenario, form: str | None = None, dt=None, horizon=None) -> RunResult:
    """Simulate ``scenario`` and assemble its verification report.

    Raises
    ------
    NotStronglyConnected, DetailedBalanceViolation
        Precondition failures, before any integration.
    StepDomainViolation
        If a Runge-Kutta stage leaves the domain.
    """
    sys = GradientSystem.build(scenario.graph, scenario.coupling, scenario.energy)
    cfg = integrator_config(scenario, sys, dt, horizon)
    form = form or scenario.outputs.get("form", "both")
    forms = ("x", "q") if form == "both" else (form,)
    required = set(_ALWAYS) | {_REQUIRES[a] for a in scenario.assertions}

    records = {}
    caught = []
    with warnings.catch_warnings(record=True) as log:
        warnings.simplefilter("always", WrapHazard)
        for f in forms:
            records[f] = simulate(sys, scenario.x0, cfg, form=f, drive=scenario.drive)
        caught = list(dict.fromkeys(str(w.message) for w in log if issubclass(w.category, WrapHazard)))
    rec = records[forms[0]]

    v = {}
    db = sys.balance
    v["detailed_balance"] = _verdict(db.ok, db.max_residual, TOL["detailed_balance"],
                                     db.describe() if not db.ok else "c_i w_ij = c_j w_ji on every pair")
    v.update(_structure_verdicts(sys, rec))
    v["k_psd"] = _psd_verdict(rec)
    conv = convergence_report(rec, sys, tol_conv=cfg.tol_conv)
    v["conservation"] = _verdict(conv.conservation_residual < TOL["conservation"], conv.conservation_residual,
                                 TOL["conservation"], "max |sum c x(t) - sum c x(0)| in the rotating frame")
    lyap, per_energy = _lyapunov(scenario, sys, rec)
    v["lyapunov"] = lyap
    v["dissipation"] = _dissipation(rec)
    deb = None
    if "debruijn" in scenario.assertions:
        v["debruijn"], deb = _debruijn(sys, rec)
    else:
        v["debruijn"] = _verdict(None, None, TOL["debruijn"], "not requested")
    v["passivity"] = _passivity(sys, rec)
    if conv.verdict is None:
        v["convergence"] = _verdict(None, None, cfg.tol_conv, "no verdict for a non-uniform drive")
    else:
        detail = (f"predicted x_inf {conv.predicted:.12g}, converged={conv.converged}"
                  + (" (rotating frame)" if rec.driven else ""))
        v["convergence"] = _verdict(conv.verdict, conv.error, cfg.tol_conv, detail)
    if len(records) == 2:
        diff = float(np.max(np.abs(records["x"].x - records["q"].x)))
        v["form_equivalence"] = _verdict(diff < TOL["form_equivalence"], diff, TOL["form_equivalence"],
                                         "max |x_xform - x_qform| over samples")
    else:
        v["form_equivalence"] = _verdict(None, None, TOL["form_equivalence"], "single form run")
    for name, check in (("positivity", _positivity), ("stationary", lambda r: _stationary(scenario, r))):
        wanted = name in scenario.assertions
        v[name] = check(rec) if wanted else _verdict(None, None, TOL[name], "not requested")
    v["rc_roundtrip"] = _rc_roundtrip(scenario, sys)
    v["generator_balance"] = _generator(sys, rec)

    for name in VERDICTS:
        v[name]["required"] = name in required
    failed = [n for n in VERDICTS if v[n]["required"] and v[n]["status"] == "fail"]
    sign_changes = rec.edge_sign_changes()
    report = {
        "scenario": scenario.name,
        "status": "fail" if failed else "pass",
        "failed": failed,
        "forms": list(forms),
        "n": sys.n,
        "c": [float(ci) for ci in sys.c],
        "integrator": {"dt": cfg.dt, "horizon": cfg.horizon, "tol_conv": cfg.tol_conv, "cadence": cfg.cadence,
                       "steps": cfg.steps},
        "assertions": list(scenario.assertions),
        "verdicts": v,
        "convergence": conv.to_dict(),
        "lyapunov_per_energy": per_energy,
        "edge_sign_changes": [{"edge": [int(t) + 1, int(h) + 1], "changes": int(k)}
                              for (t, h), k in zip(rec.edges, sign_changes)],
        "warnings": caught,
    }
    return RunResult(report, sys, records, rec, deb)


def _sample_rows(m: int, limit: int = MAX_STRUCTURE_SAMPLES) -> np.ndarray:
    return np.unique(np.linspace(0, m - 1, min(m, limit)).astype(int))


def _structure_verdicts(sys, rec) -> dict:
    sym, rows = 0.0, 0.0
    skipped = 0
    for k in _sample_rows(len(rec.t)):
        try:
            K = sys.assemble_K(rec.x[k]).matrix
        except NonFiniteRatio:
            skipped += 1
            continue
        scale = max(1.0, float(np.max(np.abs(K))))
        sym = max(sym, float(np.max(np.abs(K - K.T))) / scale)
        rows = max(rows, float(np.max(np.abs(K.sum(axis=1)))) / scale)
    note = f" ({skipped} samples with flat h skipped)" if skipped else ""
    return {
        "k_symmetry": _verdict(sym < TOL["k_symmetry"], sym, TOL["k_symmetry"],
                               "max |K - K^T| / max(1, |K|)" + note),
        "k_row_sums": _verdict(rows < TOL["k_row_sums"], rows, TOL["k_row_sums"],
                               "max |K 1| / max(1, |K|)" + note),
    }


def _psd_verdict(rec) -> dict:
    eig = rec.min_eig[np.isfinite(rec.min_eig)]
    if len(eig) == 0:
        return _verdict(None, None, -TOL["k_psd"], "no finite K along the run")
    lam = float(eig.min())
    bad = int(np.sum(~rec.psd_ok))
    return _verdict(lam >= -TOL["k_psd"], lam, -TOL["k_psd"],
                    f"min eigenvalue of K over {len(rec.t)} samples; {bad} samples below tolerance")


def _lyapunov(scenario, sys, rec):
    """Largest sampled increase of each energy along the detrended trajectory."""
    if not rec.uniform_drive:
        return _verdict(None, None, TOL["lyapunov"], "no Lyapunov claim for a non-uniform drive"), {}
    xd = rec.detrended_x()
    energies = {"scenario": sys.energy}
    if "csiszar_family_decay" in scenario.assertions:
        energies.update(FAMILY)
    per = {}
    for label, energy in energies.items():
        lo, hi = energy.domain
        if not (np.all(xd > lo) and np.all(xd < hi)):
            per[label] = None
            continue
        E = np.sum(sys.c * np.asarray(energy.H(xd)), axis=1)
        per[label] = float(np.max(np.diff(E), initial=0.0))
    vals = [r for r in per.values() if r is not None]
    if not vals:
        return _verdict(None, None, TOL["lyapunov"], "trajectory outside every energy domain"), per
    worst = max(vals)
    detail = ", ".join(f"{k}: {'n/a' if r is None else f'{r:.3g}'}" for k, r in per.items())
    return _verdict(worst <= TOL["lyapunov"], worst, TOL["lyapunov"], "max sampled increase; " + detail), per


def _dissipation(rec) -> dict:
    if not rec.uniform_drive or rec.driven:
        return _verdict(None, None, TOL["dissipation"], "driven run")
    d = rec.dEdt[np.isfinite(rec.dEdt)]
    if len(d) == 0:
        return _verdict(None, None, TOL["dissipation"], "no finite dissipation samples")
    worst = float(d.max())
    tol = TOL["dissipation"] * max(1.0, float(np.max(np.abs(d))))
    return _verdict(worst <= tol, worst, tol, "max of -grad E^T K grad E over samples")


def _debruijn(sys, rec):
    rep = debruijn_residual(rec, sys)
    if len(rep.t) == 0:
        return _verdict(None, None, TOL["debruijn"], "too few samples"), rep
    J = np.array([fisher_information(sys, x).J for x in rec.x])
    agree = float(np.max(np.abs(J + rec.dEdt) / np.maximum(1.0, np.abs(J))))
    detail = f"central difference of E vs J; J + dE/dt (exact) max {agree:.3g}"
    ok = rep.max_relative < TOL["debruijn"] and agree < 1e-10
    return _verdict(ok, rep.max_relative, TOL["debruijn"], detail), rep


def _passivity(sys, rec) -> dict:
    worst = math.inf
    verdicts = set()
    for k in _sample_rows(len(rec.t), 20):
        rep = passivity_report(sys, rec.detrended_x()[k] if rec.driven else rec.x[k])
        verdicts.add(rep.verdict)
        finite = rep.conductances[np.isfinite(rep.conductances)]
        if len(finite) < len(rep.conductances):
            worst = min(worst, 0.0)
        if len(finite):
            worst = min(worst, float(finite.min()))
    ok = verdicts == {"all_passive"}
    detail = "all strictly passive" if ok else "not all strictly passive: " + ", ".join(sorted(verdicts))
    return _verdict(ok, worst, TOL["passivity"], detail + "; residual is the smallest conductance")


def _positivity(rec) -> dict:
    m = float(rec.x.min())
    return _verdict(m > 0, m, 0.0, "smallest state value along the run")


def _stationary(scenario, rec) -> dict:
    dev = float(np.max(np.abs(rec.detrended_x() - scenario.x0)))
    tol = TOL["stationary"] * max(1.0, float(np.max(np.abs(scenario.x0))))
    return _verdict(dev <= tol, dev, tol, "max |x(t) - x(0)| in the rotating frame")


def _rc_roundtrip(scenario, sys) -> dict:
    if scenario.rc is None:
        return _verdict(None, None, TOL["rc_roundtrip"], "no circuit data")
    c_in = np.asarray(scenario.rc["capacitances"], float)
    caps, res = recover_rc(sys, scenario.x0, total_capacitance=float(c_in.sum()))
    err = float(np.max(np.abs(caps - c_in) / c_in))
    for pair, r in scenario.rc["resistances"].items():
        err = max(err, abs(res[pair] - r) / r)
    return _verdict(err < TOL["rc_roundtrip"], err, TOL["rc_roundtrip"], "relative error of recovered (c, r)")


def _generator(sys, rec) -> dict:
    if sys.energy.kind != "quadratic":
        return _verdict(None, None, TOL["generator_balance"], "generator view needs a quadratic energy")
    worst = 0.0
    for k in _sample_rows(len(rec.t), 20):
        F = to_generator(sys, rec.x[k])
        worst = max(worst, F.balance_residual())
    return _verdict(worst < TOL["generator_balance"], worst, TOL["generator_balance"], "max |C F - F^T C|")


def netlist_text(result: RunResult, x_ref=None, fmt: str = "json") -> str:
    """Netlist of the run at ``x_ref`` (the initial state by default)."""
    x_ref = result.primary.x[0] if x_ref is None else x_ref
    return export_netlist(result.system, x_ref, "spice" if fmt == "spice" else "json-text")


def trace_columns(result: RunResult) -> dict:
    """Extra CSV columns: Fisher information and the De Bruijn residual when computed."""
    rec = result.primary
    if result.debruijn is None:
        return {}
    J = np.array([fisher_information(result.system, x).J for x in rec.x])
    res = np.full(len(rec.t), np.nan)
    idx = np.searchsorted(rec.t, result.debruijn.t)
    res[idx] = result.debruijn.residual
    return {"J": J, "debruijn_res": res}


__all__ = ["RunResult", "run_scenario", "netlist_text", "trace_columns", "VERDICTS", "integrator_config"]
