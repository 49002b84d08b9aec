"""Compiled RK4 kernels for catalog couplings and energies.

The kernels mirror ``CouplingFunction.raw``, ``EnergyFunction.h_raw`` and
``ratio_array`` branch by branch.  ``simulate`` uses them when both the
coupling and the energy come from the built-in catalog; user callables go
through the numpy path.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .coupling import _GAIN, _ODD, _SEPARABLE, EPS_EQ, FALLBACK_STEP, CouplingFunction, EnergyFunction

OK, DOMAIN, NONFINITE = 0, 1, 2

_ODD_CODES = {"tanh": 2, "arctan": 3, "sinh": 4, "cubic": 5}
_SEP_CODES = {"identity": 7, "ln": 8, "exp": 9, "power": 10}
_ENERGY_CODES = {"quadratic": 0, "relative_entropy": 1, "power_law": 2}


def coupling_code(phi: CouplingFunction) -> int | None:
    """Kernel code for a catalog coupling, ``None`` for user callables."""
    if phi.kind == "linear":
        return 0
    if phi.kind == "sinusoidal":
        return 1
    if phi.kind == "odd":
        name = phi.params.get("psi")
        return _ODD_CODES[name] if _ODD.get(name) is phi.fn else None
    if phi.kind == "gain":
        return 6 if _GAIN.get(phi.params.get("f")) is phi.fn else None
    if phi.kind == "separable":
        name = phi.params.get("g")
        entry = _SEPARABLE.get(name)
        return _SEP_CODES[name] if entry is not None and entry[0] is phi.fn else None
    return None


def energy_code(energy: EnergyFunction) -> int | None:
    return _ENERGY_CODES.get(energy.kind)


@njit(cache=True)
def _phi(code, p, a, b):
    z = a - b
    if code == 0:
        return z
    if code == 1:
        return math.sin(z)
    if code == 2:
        return math.tanh(z)
    if code == 3:
        return math.atan(z)
    if code == 4:
        return math.sinh(z)
    if code == 5:
        return z ** 3
    if code == 6:
        return abs(math.tanh(p * z)) * z
    if code == 7:
        return a - b
    if code == 8:
        return math.log(a) - math.log(b)
    if code == 9:
        return math.exp(a) - math.exp(b)
    return a ** p - b ** p


@njit(cache=True)
def _h(code, p, z):
    if code == 0:
        return z
    if code == 1:
        return math.log(z) + 1.0
    return z ** (p - 1.0) / (p - 1.0)


@njit(cache=True)
def _ratio(ccode, cp, ecode, ep, a, b, dom_hi):
    hi = max(a, b)
    lo = min(a, b)
    den = _h(ecode, ep, hi) - _h(ecode, ep, lo)
    if abs(den) > EPS_EQ:
        return _phi(ccode, cp, hi, lo) / den
    step = FALLBACK_STEP * max(1.0, abs(lo))
    up = lo + step
    base = lo
    if up >= dom_hi:
        base = lo - step
        up = lo
    den = _h(ecode, ep, up) - _h(ecode, ep, base)
    if den == 0.0:
        return math.nan
    return _phi(ccode, cp, up, base) / den


@njit(cache=True)
def _field(form, y, src, dst, w, c, ccode, cp, ecode, ep, lo, hi, omega, out):
    """Fill ``out`` with the right-hand side at ``y``; return a status code."""
    n = y.shape[0]
    for i in range(n):
        x = y[i] if form == 0 else y[i] / c[i]
        if not (x > lo and x < hi):
            return DOMAIN
        out[i] = omega[i] if form == 0 else c[i] * omega[i]
    for k in range(src.shape[0]):
        j = src[k]
        i = dst[k]
        if form == 0:
            out[i] += w[k] * _phi(ccode, cp, y[j], y[i])
        else:
            a = y[j] / c[j]
            b = y[i] / c[i]
            r = _ratio(ccode, cp, ecode, ep, a, b, hi)
            if not math.isfinite(r):
                return NONFINITE
            out[i] += c[i] * w[k] * r * (_h(ecode, ep, a) - _h(ecode, ep, b))
    return OK


@njit(cache=True)
def advance(form, y, nsteps, dt, src, dst, w, c, ccode, cp, ecode, ep, lo, hi, omega):
    """Take ``nsteps`` RK4 steps in place.

    Returns ``(status, steps_done)``; on failure ``y`` holds the last good state.
    """
    n = y.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for s in range(nsteps):
        st = _field(form, y, src, dst, w, c, ccode, cp, ecode, ep, lo, hi, omega, k1)
        if st != OK:
            return st, s
        for i in range(n):
            tmp[i] = y[i] + 0.5 * dt * k1[i]
        st = _field(form, tmp, src, dst, w, c, ccode, cp, ecode, ep, lo, hi, omega, k2)
        if st != OK:
            return st, s
        for i in range(n):
            tmp[i] = y[i] + 0.5 * dt * k2[i]
        st = _field(form, tmp, src, dst, w, c, ccode, cp, ecode, ep, lo, hi, omega, k3)
        if st != OK:
            return st, s
        for i in range(n):
            tmp[i] = y[i] + dt * k3[i]
        st = _field(form, tmp, src, dst, w, c, ccode, cp, ecode, ep, lo, hi, omega, k4)
        if st != OK:
            return st, s
        for i in range(n):
            v = y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not math.isfinite(v):
                return DOMAIN, s
            tmp[i] = v
        for i in range(n):
            y[i] = tmp[i]
    return OK, nsteps
