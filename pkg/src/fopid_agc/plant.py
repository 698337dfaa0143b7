"""Hybrid power system: first-order generation/storage blocks, rate limiters, swing equation.

The composite block state is advanced with the fixed-step Bogacki-Shampine scheme
(:data:`BS3_A`, :data:`BS3_B`). Inputs are held constant across the stages of a step.
Rate limiters act on the FESS, BESS and DEG block outputs after each step, and the
limited outputs are what the swing equation sees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numba
import numpy as np

from .errors import ConfigurationError

# Bogacki-Shampine 3(2) tableau, third-order solution weights only.
BS3_C = (0.0, 0.5, 0.75)
BS3_A21 = 0.5
BS3_A32 = 0.75
BS3_B = (2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0)

_B1, _B2, _B3 = BS3_B


def bs3_step(f, t, y, dt):
    """One explicit Bogacki-Shampine step of ``y' = f(t, y)``."""
    k1 = f(t, y)
    k2 = f(t + BS3_C[1] * dt, y + BS3_A21 * dt * k1)
    k3 = f(t + BS3_C[2] * dt, y + BS3_A32 * dt * k2)
    return y + dt * (_B1 * k1 + _B2 * k2 + _B3 * k3)


@dataclass(frozen=True)
class PlantConfig:
    """Nominal gains and time constants of the hybrid system plus swing constants.

    Renewable inputs enter in per-unit of ``wind_base_kw`` (per turbine) and
    ``pv_base_kw``. ``swing_sign = +1`` integrates ``(P_S - P_L - D df) / M``.
    """

    k_wtg: float = 1.0
    t_wtg: float = 1.5
    k_pv: float = 1.0
    t_pv: float = 1.8
    k_ae: float = 0.002
    t_ae: float = 0.5
    k_fc: float = 0.01
    t_fc: float = 4.0
    k_fess: float = -0.01
    t_fess: float = 0.1
    k_bess: float = -0.003
    t_bess: float = 0.1
    k_deg: float = 0.003
    t_deg: float = 2.0
    m: float = 0.4
    d: float = 0.03
    k_split: float = 0.6
    n_wtg: int = 3
    n_fc: int = 2
    rate_fess: float = 0.9
    rate_bess: float = 0.2
    rate_deg: float = 0.01
    wind_base_kw: float = 1000.0
    pv_base_kw: float = 1000.0
    swing_sign: int = 1

    def validate(self, path="plant"):
        for f in fields(self):
            if f.name.startswith("t_") and getattr(self, f.name) <= 0:
                raise ConfigurationError("time constant must be positive", f"{path}.{f.name}")
        if self.m <= 0:
            raise ConfigurationError("inertia M must be positive", f"{path}.m")
        if self.d <= 0:
            raise ConfigurationError("damping D must be positive", f"{path}.d")
        if not 0.0 <= self.k_split <= 1.0:
            raise ConfigurationError("must lie in [0, 1]", f"{path}.k_split")
        if self.n_wtg < 1 or self.n_fc < 1:
            raise ConfigurationError("unit counts must be >= 1", path)
        for name in ("rate_fess", "rate_bess", "rate_deg"):
            if not getattr(self, name) > 0:
                raise ConfigurationError("rate bound must be positive", f"{path}.{name}")
        if self.wind_base_kw <= 0 or self.pv_base_kw <= 0:
            raise ConfigurationError("per-unit bases must be positive", path)
        if self.swing_sign not in (1, -1):
            raise ConfigurationError("must be +1 or -1", f"{path}.swing_sign")
        return self

    def replace(self, **changes):
        return replace(self, **changes)

    def kernel_params(self):
        return np.array([
            self.k_wtg, self.t_wtg, self.k_pv, self.t_pv, self.k_ae, self.t_ae,
            self.k_fc, self.t_fc, self.k_deg, self.t_deg, self.k_fess, self.t_fess,
            self.k_bess, self.t_bess, self.m, self.d, self.k_split,
            self.rate_deg, self.rate_fess, self.rate_bess, float(self.swing_sign),
        ])

    @property
    def n_states(self):
        return self.n_wtg + self.n_fc + 6


@dataclass
class FirstOrderBlock:
    gain: float
    time_constant: float
    y: float = 0.0

    def step(self, u, dt):
        return first_order_step(self, u, dt)


def first_order_step(block: FirstOrderBlock, u, dt):
    """Exact zero-order-hold update of ``K / (1 + sT)``; returns the new output."""
    block.y += (1.0 - math.exp(-dt / block.time_constant)) * (block.gain * u - block.y)
    return block.y


@dataclass
class RateLimiter:
    max_rate: float
    last_output: float = 0.0

    def apply(self, candidate, dt):
        return rate_limit(self, candidate, dt)


def rate_limit(lim: RateLimiter, candidate, dt):
    """Move toward ``candidate`` by at most ``max_rate * dt``."""
    out = _slew(lim.last_output, candidate, lim.max_rate * dt)
    lim.last_output = out
    return out


@numba.njit(cache=True)
def _slew(last, candidate, bound):
    delta = candidate - last
    if delta > bound:
        delta = bound
    elif delta < -bound:
        delta = -bound
    return last + delta


# -- kernels ---------------------------------------------------------------
# state layout: [wtg_0..wtg_{nw-1}, pv, ae, fc_0..fc_{nf-1}, deg, fess, bess, df]
# limiter layout: [deg, fess, bess]


@numba.njit(cache=True)
def _derivs(x, z, pw, ppv, pl, ut, P, nw, nf, out):
    renew = 0.0
    for i in range(nw):
        out[i] = (P[0] * pw - x[i]) / P[1]
        renew += x[i]
    ipv = nw
    out[ipv] = (P[2] * ppv - x[ipv]) / P[3]
    renew += x[ipv]
    iae = nw + 1
    out[iae] = (P[4] * (1.0 - P[16]) * renew - x[iae]) / P[5]
    fc = 0.0
    for j in range(nf):
        i = nw + 2 + j
        out[i] = (P[6] * x[iae] - x[i]) / P[7]
        fc += x[i]
    ideg = nw + 2 + nf
    out[ideg] = (P[8] * ut - x[ideg]) / P[9]
    out[ideg + 1] = (P[10] * ut - x[ideg + 1]) / P[11]
    out[ideg + 2] = (P[12] * ut - x[ideg + 2]) / P[13]
    p_s = P[16] * renew + fc + z[0] + z[1] + z[2]
    idf = ideg + 3
    out[idf] = (P[20] * (p_s - pl) - P[15] * x[idf]) / P[14]


@numba.njit(cache=True)
def _plant_step(x, z, pw, ppv, pl, ut, P, nw, nf, dt, work):
    n = x.shape[0]
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    tmp = work[3]
    _derivs(x, z, pw, ppv, pl, ut, P, nw, nf, k1)
    for i in range(n):
        tmp[i] = x[i] + BS3_A21 * dt * k1[i]
    _derivs(tmp, z, pw, ppv, pl, ut, P, nw, nf, k2)
    for i in range(n):
        tmp[i] = x[i] + BS3_A32 * dt * k2[i]
    _derivs(tmp, z, pw, ppv, pl, ut, P, nw, nf, k3)
    for i in range(n):
        x[i] += dt * (_B1 * k1[i] + _B2 * k2[i] + _B3 * k3[i])
    ideg = nw + 2 + nf
    z[0] = _slew(z[0], x[ideg], P[17] * dt)
    z[1] = _slew(z[1], x[ideg + 1], P[18] * dt)
    z[2] = _slew(z[2], x[ideg + 2], P[19] * dt)
    return x[n - 1]


@numba.njit(cache=True)
def _component_powers(x, z, P, nw, nf, out):
    """Fill ``out`` with [wtg, pv, ae, fc, deg, fess, bess, p_s]."""
    wtg = 0.0
    for i in range(nw):
        wtg += x[i]
    fc = 0.0
    for j in range(nf):
        fc += x[nw + 2 + j]
    out[0] = wtg
    out[1] = x[nw]
    out[2] = x[nw + 1]
    out[3] = fc
    out[4] = z[0]
    out[5] = z[1]
    out[6] = z[2]
    out[7] = P[16] * (wtg + x[nw]) + fc + z[0] + z[1] + z[2]


POWER_NAMES = ("p_wtg", "p_pv", "p_ae", "p_fc", "p_deg", "p_fess", "p_bess", "p_s")


class PlantState:
    """Mutable block states of one simulation."""

    def __init__(self, cfg: PlantConfig):
        self.cfg = cfg
        self.x = np.zeros(cfg.n_states)
        self.z = np.zeros(3)
        self._work = np.zeros((4, cfg.n_states))
        self._params = cfg.kernel_params()

    @property
    def delta_f(self):
        return float(self.x[-1])

    def block_outputs(self):
        """Unlimited outputs of every unit keyed by block name."""
        nw, nf = self.cfg.n_wtg, self.cfg.n_fc
        out = {f"wtg_{i}": self.x[i] for i in range(nw)}
        out["pv"] = self.x[nw]
        out["ae"] = self.x[nw + 1]
        out.update({f"fc_{j}": self.x[nw + 2 + j] for j in range(nf)})
        for offset, name in enumerate(("deg", "fess", "bess")):
            out[name] = self.x[nw + 2 + nf + offset]
        return {k: float(v) for k, v in out.items()}

    def powers(self):
        buf = np.empty(len(POWER_NAMES))
        _component_powers(self.x, self.z, self._params, self.cfg.n_wtg, self.cfg.n_fc, buf)
        return dict(zip(POWER_NAMES, buf.tolist()))


def plant_step(state: PlantState, cfg: PlantConfig, u_delayed, p_wind, p_pv, p_load, dt):
    """Advance the plant one step with inputs held over the step.

    ``p_wind`` is per-turbine wind power and ``p_pv`` PV power, both per-unit;
    ``u_delayed`` is the control signal after the actuator-side network delay.
    Returns ``(delta_f, component_powers)``.
    """
    if state.cfg is not cfg:
        state.cfg = cfg
        state._params = cfg.kernel_params()
    df = _plant_step(state.x, state.z, float(p_wind), float(p_pv), float(p_load),
                     float(u_delayed), state._params, cfg.n_wtg, cfg.n_fc, float(dt),
                     state._work)
    if not np.all(np.isfinite(state.x)):
        raise FloatingPointError("plant state became non-finite")
    powers = state.powers()
    powers["p_load"] = float(p_load)
    return float(df), powers
