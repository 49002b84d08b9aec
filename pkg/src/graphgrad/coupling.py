"""Coupling functions phi(a, b) and sum-separable energy densities H.

Couplings follow the sign class used by the node dynamics
``dx_i/dt = sum_j w_ij phi(x_j, x_i)``: ``phi(a, b)`` has the sign of ``a - b``
and its magnitude grows with ``|a - b|``.  Every catalog coupling is
antisymmetric, ``phi(b, a) = -phi(a, b)``.

Energies are scalar densities ``H`` with derivative ``h``; the network energy
is ``E(q) = sum_i c_i H(q_i / c_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .errors import DomainViolation, NonFiniteRatio

EPS_EQ = 1e-8
FALLBACK_STEP = 1e-6

REAL = (-math.inf, math.inf)
POSITIVE = (0.0, math.inf)

_ODD = {
    "tanh": np.tanh,
    "arctan": np.arctan,
    "sinh": np.sinh,
    "cubic": lambda z: z ** 3,
}

_SEPARABLE = {
    "identity": (lambda x, p: x, REAL),
    "ln": (lambda x, p: np.log(x), POSITIVE),
    "exp": (lambda x, p: np.exp(x), REAL),
    "power": (lambda x, p: np.power(x, p), POSITIVE),
}

_GAIN = {
    "abs_tanh": lambda z, p: np.abs(np.tanh(p * z)),
}

_KIND_ALIASES = {
    "linear": "linear",
    "oddfunction": "odd",
    "odd": "odd",
    "gain": "gain",
    "separable": "separable",
    "sinusoidal": "sinusoidal",
    "sin": "sinusoidal",
}


def _check_domain(values, domain, what: str):
    lo, hi = domain
    v = np.asarray(values, float)
    if lo == -math.inf and hi == math.inf:
        bad = ~np.isfinite(v)
    else:
        bad = ~np.isfinite(v) | (v <= lo) | (v >= hi)
    if bad.any():
        first = v[bad].flat[0] if v.ndim else float(v)
        raise DomainViolation(f"{what}: value {first!r} outside domain ({lo}, {hi})")


@dataclass(frozen=True, eq=False)
class CouplingFunction:
    """Pairwise interaction ``phi(a, b)``.

    Use the classmethod constructors (``linear``, ``odd``, ``gain``,
    ``separable``, ``sinusoidal``) or ``from_dict``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    fn: Callable | None = None
    domain: tuple[float, float] = REAL

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def odd(cls, psi="tanh"):
        if callable(psi):
            return cls("odd", {"psi": getattr(psi, "__name__", "custom")}, psi)
        if psi not in _ODD:
            raise ValueError(f"unknown odd function {psi!r}; choose from {sorted(_ODD)}")
        return cls("odd", {"psi": psi}, _ODD[psi])

    @classmethod
    def gain(cls, p: float = 1.0, f="abs_tanh"):
        if p <= 0:
            raise ValueError("gain slope p must be positive")
        if callable(f):
            return cls("gain", {"f": getattr(f, "__name__", "custom"), "p": p}, lambda z, _p: f(z))
        if f not in _GAIN:
            raise ValueError(f"unknown gain {f!r}; choose from {sorted(_GAIN)}")
        return cls("gain", {"f": f, "p": float(p)}, _GAIN[f])

    @classmethod
    def separable(cls, g="identity", p: float = 1.0, domain=None):
        if callable(g):
            return cls("separable", {"g": getattr(g, "__name__", "custom")}, lambda x, _p: g(x),
                       domain or REAL)
        if g not in _SEPARABLE:
            raise ValueError(f"unknown separable function {g!r}; choose from {sorted(_SEPARABLE)}")
        if g == "power" and p <= 0:
            raise ValueError("power exponent must be positive")
        fn, dom = _SEPARABLE[g]
        params = {"g": g, "p": float(p)} if g == "power" else {"g": g}
        return cls("separable", params, fn, dom)

    @classmethod
    def sinusoidal(cls):
        return cls("sinusoidal")

    @classmethod
    def from_dict(cls, doc: dict) -> "CouplingFunction":
        kind = _KIND_ALIASES.get(str(doc.get("kind", "")).lower())
        params = dict(doc.get("params") or {})
        if kind is None:
            raise ValueError(f"unknown coupling kind {doc.get('kind')!r}")
        if kind == "linear":
            return cls.linear()
        if kind == "sinusoidal":
            return cls.sinusoidal()
        if kind == "odd":
            return cls.odd(params.get("psi", "tanh"))
        if kind == "gain":
            return cls.gain(params.get("p", 1.0), params.get("f", "abs_tanh"))
        return cls.separable(params.get("g", "identity"), params.get("p", 1.0))

    def to_dict(self) -> dict:
        names = {"linear": "Linear", "odd": "OddFunction", "gain": "Gain",
                 "separable": "Separable", "sinusoidal": "Sinusoidal"}
        return {"kind": names[self.kind], "params": dict(self.params)}

    def __call__(self, a, b):
        _check_domain(a, self.domain, f"{self.kind} coupling")
        _check_domain(b, self.domain, f"{self.kind} coupling")
        out = self.raw(np.asarray(a, float), np.asarray(b, float))
        return out if out.ndim else float(out)

    def raw(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Formula without domain checks; arrays in, array out."""
        if self.kind == "linear":
            out = a - b
        elif self.kind == "sinusoidal":
            out = np.sin(a - b)
        elif self.kind == "odd":
            out = self.fn(a - b)
        elif self.kind == "gain":
            z = a - b
            out = self.fn(z, self.params.get("p", 1.0)) * z
        else:
            p = self.params.get("p", 1.0)
            out = self.fn(a, p) - self.fn(b, p)
        return out

    def __repr__(self):
        return f"CouplingFunction({self.kind}, {self.params})"


def eval_phi(phi: CouplingFunction, a, b):
    return phi(a, b)


@dataclass
class AxiomReport:
    """Sampled violations of the coupling sign class.

    ``violations`` holds ``(axiom, a, b, detail)`` tuples where axiom is one of
    ``"zero"``, ``"sign"`` or ``"monotone"``.
    """

    violations: list = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def by_axiom(self, axiom: str) -> list:
        return [v for v in self.violations if v[0] == axiom]


def sample_grid(lo: float, hi: float, m: int = 50) -> np.ndarray:
    """All ``m * m`` pairs of an even grid over ``[lo, hi]``, shape ``(m*m, 2)``."""
    t = np.linspace(lo, hi, m)
    A, B = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([A.ravel(), B.ravel()])


def check_coupling_axioms(phi: CouplingFunction, pairs, slack: float = 1e-12) -> AxiomReport:
    pairs = np.asarray(pairs, float)
    a, b = pairs[:, 0], pairs[:, 1]
    vals = np.asarray(phi(a, b), float)
    report = AxiomReport(checked=len(pairs))
    scale = slack * np.maximum(1.0, np.abs(vals))
    for k in range(len(pairs)):
        ak, bk, v = a[k], b[k], vals[k]
        if ak == bk:
            if abs(v) > scale[k]:
                report.violations.append(("zero", ak, bk, v))
        elif np.sign(v) != np.sign(ak - bk):
            report.violations.append(("sign", ak, bk, v))
    # |phi(a, b)| along rays a -> b +/- t for fixed b
    for bk in np.unique(b):
        on_ray = b == bk
        for side in (1.0, -1.0):
            sel = on_ray & (side * (a - bk) > 0)
            if sel.sum() < 2:
                continue
            order = np.argsort(side * a[sel])
            aa = a[sel][order]
            mags = np.abs(vals[sel][order])
            drops = np.nonzero(mags[1:] < mags[:-1] - slack * np.maximum(1.0, mags[:-1]))[0]
            for d in drops:
                report.violations.append(("monotone", aa[d + 1], bk, (aa[d], mags[d], mags[d + 1])))
    return report


# ------------------------------------------------------------------ energies

@dataclass(frozen=True, eq=False)
class EnergyFunction:
    """Scalar energy density ``H`` and its derivative ``h`` on an open domain."""

    kind: str
    params: dict = field(default_factory=dict)
    domain: tuple[float, float] = REAL
    H_fn: Callable | None = None
    h_fn: Callable | None = None

    @classmethod
    def quadratic(cls):
        return cls("quadratic")

    @classmethod
    def relative_entropy(cls):
        return cls("relative_entropy", domain=POSITIVE)

    @classmethod
    def power_law(cls, p: float):
        if not p > 1:
            raise ValueError("power-law energy needs p > 1")
        return cls("power_law", {"p": float(p)}, POSITIVE)

    @classmethod
    def custom(cls, H: Callable, h: Callable, domain=REAL, params=None, check: bool = True,
               rtol: float = 1e-5):
        """Register a user energy; ``h`` is checked against central differences of ``H``."""
        energy = cls("custom", dict(params or {}), tuple(domain), H, h)
        if check:
            energy.check_derivative(rtol)
        return energy

    @classmethod
    def from_dict(cls, doc: dict) -> "EnergyFunction":
        kind = str(doc.get("kind", "")).lower().replace("_", "")
        params = dict(doc.get("params") or {})
        if kind == "quadratic":
            return cls.quadratic()
        if kind == "relativeentropy":
            return cls.relative_entropy()
        if kind == "powerlaw":
            return cls.power_law(params.get("p", 2.0))
        if kind == "custom":
            return _custom_from_expressions(params)
        raise ValueError(f"unknown energy kind {doc.get('kind')!r}")

    def to_dict(self) -> dict:
        names = {"quadratic": "Quadratic", "relative_entropy": "RelativeEntropy",
                 "power_law": "PowerLaw", "custom": "Custom"}
        return {"kind": names[self.kind], "params": dict(self.params)}

    def check_domain(self, z, what: str = "energy"):
        _check_domain(z, self.domain, f"{self.kind} {what}")

    def H(self, z, boundary_ok: bool = False):
        z = np.asarray(z, float)
        if not (boundary_ok and self.kind == "relative_entropy"):
            self.check_domain(z)
        if self.kind == "quadratic":
            out = 0.5 * z * z
        elif self.kind == "relative_entropy":
            if np.any(z < 0):
                raise DomainViolation("relative entropy density needs z >= 0")
            out = xlogy(z, z)
        elif self.kind == "power_law":
            p = self.params["p"]
            out = np.power(z, p) / (p * (p - 1.0))
        else:
            out = np.asarray(self.H_fn(z), float)
        return out if out.ndim else float(out)

    def h(self, z):
        z = np.asarray(z, float)
        self.check_domain(z)
        out = self.h_raw(z)
        return out if out.ndim else float(out)

    def h_raw(self, z: np.ndarray) -> np.ndarray:
        """Derivative without domain checks."""
        if self.kind == "quadratic":
            out = z.copy()
        elif self.kind == "relative_entropy":
            out = np.log(z) + 1.0
        elif self.kind == "power_law":
            p = self.params["p"]
            out = np.power(z, p - 1.0) / (p - 1.0)
        else:
            out = np.asarray(self.h_fn(z), float) * np.ones_like(z)
        return out

    def sample_points(self, m: int = 64, window=(-10.0, 10.0)) -> np.ndarray:
        lo = max(self.domain[0], window[0])
        hi = min(self.domain[1], window[1])
        if self.domain[0] == 0.0:
            lo = max(lo, 1e-3)
        pad = 1e-3 * (hi - lo)
        return np.linspace(lo + pad, hi - pad, m)

    def check_derivative(self, rtol: float = 1e-5):
        z = self.sample_points()
        eta = 1e-5 * np.maximum(1.0, np.abs(z))
        inside = (z - eta > self.domain[0]) & (z + eta < self.domain[1])
        z, eta = z[inside], eta[inside]
        fd = (np.asarray(self.H(z + eta)) - np.asarray(self.H(z - eta))) / (2 * eta)
        hz = np.asarray(self.h(z))
        err = np.abs(fd - hz) / np.maximum(1.0, np.abs(hz))
        if np.any(err > rtol):
            k = int(np.argmax(err))
            raise ValueError(f"h does not match dH/dz at z={z[k]:.6g}: relative error {err[k]:.3g}")

    def is_strictly_increasing_on(self, samples) -> bool:
        """Sampled strict-convexity test: ``h`` increases across sorted samples."""
        z = np.unique(np.asarray(samples, float))
        if len(z) < 2:
            return True
        return bool(np.all(np.diff(np.asarray(self.h(z))) > 0))

    def __repr__(self):
        return f"EnergyFunction({self.kind}, {self.params})"


def _custom_from_expressions(params: dict) -> EnergyFunction:
    """Build a custom energy from ``H``/``h`` expression strings in ``z``."""
    import sympy

    try:
        H_src, h_src = params["H"], params["h"]
    except KeyError as exc:
        raise ValueError("custom energy needs both 'H' and 'h' expressions") from exc
    z = sympy.Symbol("z", real=True)
    local = {"z": z}
    H_fn = sympy.lambdify(z, sympy.sympify(H_src, locals=local), "numpy")
    h_fn = sympy.lambdify(z, sympy.sympify(h_src, locals=local), "numpy")
    dom = params.get("domain") or [-math.inf, math.inf]
    domain = (float(dom[0]), float(dom[1]))
    return EnergyFunction.custom(lambda v: np.asarray(H_fn(v), float) * np.ones_like(v),
                                 h_fn, domain,
                                 params={"H": H_src, "h": h_src, "domain": list(dom)})


# --------------------------------------------------------- ratio and energy

def common_domain(phi: CouplingFunction, energy: EnergyFunction) -> tuple[float, float]:
    return max(phi.domain[0], energy.domain[0]), min(phi.domain[1], energy.domain[1])


def ratio_array(phi: CouplingFunction, energy: EnergyFunction, a, b, eps_eq: float = EPS_EQ,
                check: bool = True) -> np.ndarray:
    """Vectorized ``phi(a, b) / (h(a) - h(b))`` with a secant fallback near the diagonal.

    The arguments are put in canonical order ``(max, min)`` first, so the result
    is exactly symmetric in ``a`` and ``b``.  Where ``|h(a) - h(b)| <= eps_eq``
    the value is replaced by ``phi(m + d, m) / (h(m + d) - h(m))`` with
    ``m = min(a, b)`` and ``d = 1e-6 * max(1, |m|)``.  For a non-monotone ``h``
    with ``h(a) == h(b)`` at distant points this local quotient is not the true
    ratio; such coincidences have measure zero.
    """
    a = np.atleast_1d(np.asarray(a, float))
    b = np.atleast_1d(np.asarray(b, float))
    if a.shape != b.shape:
        a, b = np.broadcast_arrays(a, b)
    if check:
        dom = common_domain(phi, energy)
        _check_domain(a, dom, "ratio argument")
        _check_domain(b, dom, "ratio argument")
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    num = phi.raw(hi, lo)
    den = energy.h_raw(hi) - energy.h_raw(lo)
    small = np.abs(den) <= eps_eq
    any_small = small.any()
    if not any_small:
        out = num / den
    else:
        out = np.empty_like(num)
        big = ~small
        with np.errstate(divide="ignore", invalid="ignore"):
            out[big] = num[big] / den[big]
    if any_small:
        m = lo[small]
        step = FALLBACK_STEP * np.maximum(1.0, np.abs(m))
        up = m + step
        outside = up >= min(phi.domain[1], energy.domain[1])
        base = np.where(outside, m - step, m)
        up = np.where(outside, m, up)
        num_f = phi.raw(up, base)
        den_f = energy.h_raw(up) - energy.h_raw(base)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[small] = num_f / den_f
    if not np.isfinite(out).all():
        bad = np.nonzero(~np.isfinite(out))[0][0]
        raise NonFiniteRatio(
            f"phi/(h(a)-h(b)) is not finite at a={a.flat[bad]!r}, b={b.flat[bad]!r}; "
            "h is locally flat (H not strictly convex there)")
    return out


def ratio_phi_over_dh(phi: CouplingFunction, energy: EnergyFunction, a: float, b: float,
                      eps_eq: float = EPS_EQ) -> float:
    return float(ratio_array(phi, energy, a, b, eps_eq)[0])


def eval_energy(energy: EnergyFunction, c, q, boundary_ok: bool = False) -> float:
    """``E(q) = sum_i c_i H(q_i / c_i)``."""
    c = np.asarray(getattr(c, "c", c), float)
    q = np.asarray(q, float)
    return float(np.sum(c * np.asarray(energy.H(q / c, boundary_ok=boundary_ok))))


def grad_energy(energy: EnergyFunction, c, q) -> np.ndarray:
    """Gradient of ``E`` in charge variables: ``h(q_i / c_i)``."""
    c = np.asarray(getattr(c, "c", c), float)
    return np.asarray(energy.h(np.asarray(q, float) / c), float)
