"""Fixed-step RK4 integration of the node form and the charge (gradient) form.

Both forms are integrated with the same step, so their trajectories differ
only by rounding: ``q = C x`` is a linear change of variables and RK4 is
equivariant under it.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainViolation, NonFiniteRatio, StepDomainViolation, WrapHazard
from .gradient import GradientSystem
from .graph import build_laplacian, incidence_matrix

PSD_TOL = 1e-10


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    horizon: float
    tol_conv: float = 1e-6
    cadence: int = 10

    def __post_init__(self):
        if not (self.dt > 0 and self.horizon > 0 and self.tol_conv > 0):
            raise ValueError("dt, horizon and tol_conv must be positive")
        if int(self.cadence) < 1:
            raise ValueError("cadence must be a positive integer")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @classmethod
    def default(cls, sys: GradientSystem, **overrides) -> "IntegratorConfig":
        """``dt = 1e-3 tau`` and ``horizon = 20 tau`` with ``tau = 1 / max_i L_ii``."""
        tau = characteristic_time(sys)
        cfg = cls(dt=1e-3 * tau, horizon=20 * tau)
        return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def characteristic_time(sys: GradientSystem) -> float:
    return 1.0 / float(np.max(np.diag(build_laplacian(sys.graph))))


def step_rk4(field, state, dt: float):
    """One classical Runge-Kutta step of ``dy/dt = field(y)``."""
    y = np.asarray(state, float)
    k1 = field(y)
    k2 = field(y + 0.5 * dt * k1)
    k3 = field(y + 0.5 * dt * k2)
    k4 = field(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class TrajectoryRecord:
    """Samples of one run, taken every ``cadence`` steps plus the final step."""

    form: str
    dt: float
    cadence: int
    t: np.ndarray
    x: np.ndarray
    q: np.ndarray
    E: np.ndarray
    dEdt: np.ndarray
    wmean: np.ndarray
    psd_ok: np.ndarray
    min_eig: np.ndarray
    edges: list = field(default_factory=list)
    edge_signs: np.ndarray | None = None
    drive: np.ndarray | None = None
    frame_rate: float = 0.0
    uniform_drive: bool = True
    converged: bool | None = None
    convergence_time: float | None = None
    wrap_hazard: bool = False

    @property
    def driven(self) -> bool:
        return self.drive is not None and bool(np.any(self.drive != 0))

    def detrended_x(self) -> np.ndarray:
        """States in the frame rotating at the mean drive speed."""
        return self.x - self.frame_rate * self.t[:, None]

    def spread(self) -> np.ndarray:
        return self.x.max(axis=1) - self.x.min(axis=1)

    def edge_sign_changes(self) -> np.ndarray:
        if self.edge_signs is None or len(self.edge_signs) < 2:
            return np.zeros(len(self.edges), int)
        return np.sum(self.edge_signs[1:] != self.edge_signs[:-1], axis=0)

    def to_csv(self, extra: dict | None = None) -> str:
        """CSV text: ``t,x1..xn,q1..qn,E,dEdt,wmean,psd_ok`` plus optional columns."""
        n = self.x.shape[1]
        extra = extra or {}
        header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"q{i + 1}" for i in range(n)]
                  + ["E", "dEdt", "wmean", "psd_ok"] + list(extra))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        fmt = "{:.12g}".format
        for k in range(len(self.t)):
            row = [fmt(self.t[k])] + [fmt(v) for v in self.x[k]] + [fmt(v) for v in self.q[k]]
            row += [fmt(self.E[k]), fmt(self.dEdt[k]), fmt(self.wmean[k]), str(int(self.psd_ok[k]))]
            row += [fmt(col[k]) for col in extra.values()]
            writer.writerow(row)
        return buf.getvalue()


def _is_uniform(v, rtol=1e-12) -> bool:
    v = np.asarray(v, float)
    return bool(np.ptp(v) <= rtol * max(1.0, np.max(np.abs(v))))


def make_field(sys: GradientSystem, form: str, drive=None):
    """Right-hand side for ``form`` ``"x"`` (node dynamics) or ``"q"`` (gradient form)."""
    omega = None if drive is None else np.asarray(drive, float)
    if form == "x":
        if omega is None:
            return sys.node_field
        return lambda x: sys.node_field(x) + omega
    if form == "q":
        if omega is None:
            return sys.gradient_vector_field
        omega_c = sys.c * omega
        return lambda q: sys.gradient_vector_field(q) + omega_c
    raise ValueError(f"form must be 'x' or 'q', got {form!r}")


def _fast_stepper(sys: GradientSystem, form: str, omega):
    """Compiled stepper ``(y, n, t0) -> y`` for catalog models, else ``None``."""
    from . import _fast
    from .coupling import common_domain

    ccode = _fast.coupling_code(sys.coupling)
    ecode = _fast.energy_code(sys.energy)
    if ccode is None or (form == "q" and ecode is None):
        return None
    lo, hi = sys.coupling.domain if form == "x" else common_domain(sys.coupling, sys.energy)
    args = (sys._src.astype(np.int64), sys._dst.astype(np.int64), np.asarray(sys._w, float),
            np.asarray(sys.c, float), ccode, float(sys.coupling.params.get("p", 1.0)),
            -1 if ecode is None else ecode, float(sys.energy.params.get("p", 2.0)), float(lo), float(hi),
            np.zeros(sys.n) if omega is None else np.asarray(omega, float))
    code = 0 if form == "x" else 1

    def run(y, nsteps, dt, k0):
        y = y.copy()
        status, done = _fast.advance(code, y, nsteps, dt, *args)
        if status != _fast.OK:
            t = (k0 + done) * dt
            raise StepDomainViolation(f"integration left the domain near t={t:.6g}", t)
        return y

    return run


def simulate(sys: GradientSystem, x0, cfg: IntegratorConfig, form: str = "x", drive=None,
             monitor: bool = True, compiled: bool = True) -> TrajectoryRecord:
    """Integrate from ``x0`` over ``cfg.horizon`` and sample every ``cfg.cadence`` steps.

    ``drive`` adds natural frequencies ``omega`` to the node dynamics (``C omega``
    in charge variables).  Convergence is judged on the spread ``max x - min x``;
    it is left undecided (``None``) for non-uniform drives.

    Raises
    ------
    StepDomainViolation
        If a Runge-Kutta stage leaves the coupling or energy domain.

    With ``compiled`` set, catalog couplings and energies are stepped by the
    compiled kernels; the numpy field functions are used otherwise.
    """
    x0 = np.asarray(x0, float)
    if x0.shape != (sys.n,):
        raise ValueError(f"initial state has shape {x0.shape}, expected ({sys.n},)")
    omega = None if drive is None else np.asarray(drive, float)
    uniform = omega is None or _is_uniform(omega)
    frame_rate = 0.0 if omega is None else float(np.sum(sys.c * omega) / np.sum(sys.c))

    rhs = make_field(sys, form, omega)
    y = x0.copy() if form == "x" else sys.charges(x0)
    inc = incidence_matrix(sys.graph)
    edges = list(inc.edges)
    edge_t = np.array([e[0] for e in edges], int)
    edge_h = np.array([e[1] for e in edges], int)

    samples = {k: [] for k in ("t", "x", "q", "E", "dEdt", "wmean", "psd", "eig", "sign")}
    wrap = False

    def record(t, y):
        nonlocal wrap
        x = y if form == "x" else sys.state(y)
        q = sys.charges(x) if form == "x" else y
        samples["t"].append(t)
        samples["x"].append(x.copy())
        samples["q"].append(q.copy())
        samples["wmean"].append(float(np.sum(sys.c * x) / np.sum(sys.c)))
        if sys.coupling.kind == "sinusoidal" and np.ptp(x) > math.pi and not wrap:
            wrap = True
            warnings.warn(f"oscillator spread {np.ptp(x):.4g} exceeds pi at t={t:.4g}", WrapHazard, stacklevel=3)
        if not monitor:
            return
        samples["E"].append(sys.energy_value(q))
        try:
            K = sys.assemble_K(x).matrix
            g = sys.grad(q)
            rate = float(-g @ K @ g)
            if omega is not None:
                rate += float(g @ (sys.c * omega))
            lam = float(np.linalg.eigvalsh(K)[0])
            signs = np.sign(-K[edge_h, edge_t])
        except NonFiniteRatio:
            rate, lam, signs = math.nan, math.nan, np.zeros(len(edges))
        samples["dEdt"].append(rate)
        samples["eig"].append(lam)
        samples["psd"].append(bool(lam >= -PSD_TOL))
        samples["sign"].append(signs)

    steps = cfg.steps
    t = 0.0
    fast = _fast_stepper(sys, form, omega) if compiled else None
    try:
        record(t, y)
        k = 0
        while fast is not None and k < steps:
            n = min(cfg.cadence, steps - k)
            y = fast(y, n, cfg.dt, k)
            k += n
            t = k * cfg.dt
            record(t, y)
        for k in range(1, steps + 1 if fast is None else 0):
            y = step_rk4(rhs, y, cfg.dt)
            t = k * cfg.dt
            if not np.all(np.isfinite(y)):
                raise DomainViolation("state became non-finite")
            if k % cfg.cadence == 0 or k == steps:
                record(t, y)
    except (DomainViolation, NonFiniteRatio) as exc:
        raise StepDomainViolation(f"integration left the domain near t={t:.6g}: {exc}", t) from exc

    arr = {k: np.asarray(v) for k, v in samples.items()}
    m = len(arr["t"])
    nan = np.full(m, np.nan)
    rec = TrajectoryRecord(
        form=form, dt=cfg.dt, cadence=cfg.cadence, t=arr["t"], x=arr["x"], q=arr["q"],
        E=arr["E"] if monitor else nan, dEdt=arr["dEdt"] if monitor else nan,
        wmean=arr["wmean"], psd_ok=arr["psd"] if monitor else np.ones(m, bool),
        min_eig=arr["eig"] if monitor else nan, edges=edges,
        edge_signs=arr["sign"] if monitor else None, drive=omega, frame_rate=frame_rate,
        uniform_drive=uniform, wrap_hazard=wrap,
    )
    if uniform:
        spread = rec.spread()
        hit = np.nonzero(spread < cfg.tol_conv)[0]
        rec.converged = bool(spread[-1] < cfg.tol_conv)
        rec.convergence_time = float(rec.t[hit[0]]) if len(hit) and rec.converged else None
    return rec


@dataclass
class ConvergenceReport:
    predicted: float | None
    attained: np.ndarray
    error: float | None
    max_energy_increase: float
    conservation_residual: float
    rate_estimate: float | None
    converged: bool | None
    verdict: bool | None

    def to_dict(self) -> dict:
        return {
            "predicted_x_inf": self.predicted,
            "attained": [float(v) for v in self.attained],
            "x_inf_error": self.error,
            "max_energy_increase": self.max_energy_increase,
            "conservation_residual": self.conservation_residual,
            "rate_estimate": self.rate_estimate,
            "converged": self.converged,
            "verdict": self.verdict,
        }


def convergence_report(rec: TrajectoryRecord, sys: GradientSystem, tol_conv: float = 1e-6,
                       energy_slack: float = 1e-9, conservation_tol: float = 1e-9) -> ConvergenceReport:
    """Compare the run with the weighted-mean prediction.

    For driven runs the comparison happens in the rotating frame; for
    non-uniform drives no verdict is issued.
    """
    xd = rec.detrended_x()
    wmean = np.sum(sys.c * xd, axis=1) / np.sum(sys.c)
    conservation = float(np.max(np.abs(wmean - wmean[0])))
    dE = np.diff(rec.E) if not rec.driven else np.zeros(1)
    max_inc = float(np.max(dE, initial=0.0)) if np.all(np.isfinite(dE)) else math.nan
    attained = xd[-1]
    rate = _fit_rate(rec.t, rec.spread())
    if not rec.uniform_drive:
        return ConvergenceReport(None, attained, None, max_inc, conservation, rate, None, None)
    predicted = float(wmean[0])
    error = float(np.max(np.abs(attained - predicted)))
    ok = bool(rec.converged and error < tol_conv and conservation < conservation_tol
              and (rec.driven or max_inc <= energy_slack))
    return ConvergenceReport(predicted, attained, error, max_inc, conservation, rate, rec.converged, ok)


def _fit_rate(t, spread):
    """Least-squares exponential decay rate of the spread (diagnostic only)."""
    if len(spread) < 3 or spread[0] <= 0:
        return None
    keep = spread > 1e-10 * spread[0]
    if keep.sum() < 3:
        return None
    slope = np.polyfit(t[keep], np.log(spread[keep]), 1)[0]
    return float(-slope)
