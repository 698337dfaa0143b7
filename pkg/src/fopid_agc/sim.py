"""Closed-loop simulation of the delayed stochastic system and the ISE/ISDCO objective.

Per sample ``k`` the loop is: read ``df`` delayed by ``tau_sc[k]`` samples, run the
controller, read ``u`` delayed by ``tau_ca[k]`` samples, then advance the plant one
Bogacki-Shampine step with every input held at its sample-``k`` value. Signals read
before the start of the run are zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigurationError, InfeasibleGenomeError
from .exo import ExoTrace
from .foctrl import Controller, ControllerConfig, FoGenome, _controller_step
from .plant import POWER_NAMES, PlantConfig, _component_powers, _plant_step


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    t_max: float = 300.0
    w: float = 0.5
    k_norm: float = 1e5
    penalty: float = 1e4
    divergence_limit: float = 100.0
    # "value": the control signal itself; "difference": its per-sample first difference
    objective_mode: str = "value"

    def validate(self, path="sim"):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive", f"{path}.dt")
        if not self.t_max > 0:
            raise ConfigurationError("t_max must be positive", f"{path}.t_max")
        steps = self.t_max / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigurationError("t_max must be a multiple of dt", f"{path}.t_max")
        if not 0.0 <= self.w <= 1.0:
            raise ConfigurationError("w must lie in [0, 1]", f"{path}.w")
        if not self.k_norm > 0:
            raise ConfigurationError("k_norm must be positive", f"{path}.k_norm")
        if not self.divergence_limit > 0:
            raise ConfigurationError("divergence_limit must be positive", f"{path}.divergence_limit")
        if self.objective_mode not in ("value", "difference"):
            raise ConfigurationError("must be 'value' or 'difference'", f"{path}.objective_mode")
        return self

    @property
    def n_steps(self):
        return int(round(self.t_max / self.dt))


class DelayBuffer:
    """Ring buffer of past samples; ``read(k)`` returns the sample pushed ``k`` pushes ago."""

    def __init__(self, max_delay, dt):
        self.size = math.ceil(max_delay / dt - 1e-9) + 1
        self._ring = np.zeros(self.size)
        self._cursor = -1
        self._count = 0

    def push(self, value):
        self._cursor = (self._cursor + 1) % self.size
        self._ring[self._cursor] = value
        self._count += 1

    def read(self, k_steps):
        if not 0 <= k_steps < self.size:
            raise IndexError(f"delay of {k_steps} samples exceeds buffer size {self.size}")
        if k_steps >= self._count:
            return 0.0
        return float(self._ring[(self._cursor - k_steps) % self.size])


@dataclass
class SimResult:
    t: np.ndarray
    delta_f: np.ndarray
    u: np.ndarray
    u_delayed: np.ndarray
    powers: dict
    J: float
    ise: float
    isdco: float
    stable: bool
    steps_run: int
    info: dict = field(default_factory=dict)


@numba.njit(cache=True, nogil=True)
def _simulate(pw, ppv, pl, tau_sc, tau_ca, n_steps, dt, P, nw, nf,
              gains, sec_i, sec_d, df_limit, powers_out):
    n = n_steps + 1
    nx = nw + nf + 6
    df = np.zeros(n)
    u = np.zeros(n)
    ut = np.zeros(n)
    x = np.zeros(nx)
    z = np.zeros(3)
    work = np.zeros((4, nx))
    st_i = np.zeros((sec_i.shape[0], 2))
    st_d = np.zeros((sec_d.shape[0], 2))
    integ = np.zeros(2)
    record = powers_out.shape[0] == n
    steps_run = 0
    status = 0
    for k in range(n):
        df[k] = x[nx - 1]
        j = k - tau_sc[k]
        e = df[j] if j >= 0 else 0.0
        u[k] = _controller_step(gains, sec_i, st_i, integ, sec_d, st_d, dt, e)
        j = k - tau_ca[k]
        ut[k] = u[j] if j >= 0 else 0.0
        if record:
            _component_powers(x, z, P, nw, nf, powers_out[k])
        if not np.isfinite(u[k]):
            status = 2
            break
        if k == n - 1:
            break
        d = _plant_step(x, z, pw[k], ppv[k], pl[k], ut[k], P, nw, nf, dt, work)
        steps_run = k + 1
        if not abs(d) <= df_limit:
            status = 1
            break
    return df, u, ut, steps_run, status


def objective(delta_f, delta_u, cfg: SimConfig):
    """Weighted ISE/ISDCO by trapezoidal quadrature at ``cfg.dt``; returns ``(J, ise, isdco)``."""
    delta_f = np.asarray(delta_f, dtype=float)
    delta_u = np.asarray(delta_u, dtype=float)
    if delta_f.shape != delta_u.shape:
        raise ValueError("traces must have equal length")
    ise = float(np.trapezoid(delta_f**2, dx=cfg.dt))
    isdco = float(np.trapezoid(delta_u**2, dx=cfg.dt))
    return cfg.w * ise + (1.0 - cfg.w) * isdco / cfg.k_norm, ise, isdco


def control_deviation(u, cfg: SimConfig):
    if cfg.objective_mode == "difference":
        return np.diff(u, prepend=0.0)
    return u


def plant_inputs(trace: ExoTrace, plant_cfg: PlantConfig):
    """Per-unit wind (per turbine), PV and load arrays."""
    pw = trace.p_wind_w / (1e3 * plant_cfg.wind_base_kw)
    ppv = trace.p_pv_kw / plant_cfg.pv_base_kw
    return pw, ppv, np.asarray(trace.p_load_pu, dtype=float)


def _penalty_result(sim_cfg, reason):
    empty = np.zeros(0)
    return SimResult(t=empty, delta_f=empty, u=empty, u_delayed=empty, powers={},
                     J=sim_cfg.penalty, ise=math.nan, isdco=math.nan, stable=False,
                     steps_run=0, info={"reason": reason})


def integrate(genome: FoGenome, trace: ExoTrace, plant_cfg: PlantConfig, sim_cfg: SimConfig,
              ctrl_cfg: ControllerConfig | None = None, record=True) -> SimResult:
    """Simulate the closed loop over ``sim_cfg.t_max`` and score it.

    Infeasible genomes, non-finite states and ``|df|`` beyond the divergence limit
    all yield ``stable=False`` and ``J = sim_cfg.penalty``.
    """
    ctrl_cfg = ctrl_cfg or ControllerConfig()
    n_steps = sim_cfg.n_steps
    if abs(trace.dt - sim_cfg.dt) > 1e-12:
        raise ConfigurationError("trace dt differs from sim dt", "sim.dt")
    if trace.n_samples < n_steps + 1:
        raise ConfigurationError("trace shorter than t_max", "sim.t_max")
    try:
        controller = Controller(genome, dt=sim_cfg.dt, band=ctrl_cfg.band, n=ctrl_cfg.n)
    except (InfeasibleGenomeError, ValueError) as exc:
        return _penalty_result(sim_cfg, f"infeasible: {exc}")

    pw, ppv, pl = plant_inputs(trace, plant_cfg)
    gains, sec_i, sec_d = controller.kernel_args()
    powers_out = np.empty((n_steps + 1 if record else 0, len(POWER_NAMES)))
    df, u, ut, steps_run, status = _simulate(
        pw, ppv, pl, trace.tau_sc_steps, trace.tau_ca_steps, n_steps, sim_cfg.dt,
        plant_cfg.kernel_params(), plant_cfg.n_wtg, plant_cfg.n_fc,
        gains, sec_i, sec_d, sim_cfg.divergence_limit, powers_out)
    t = trace.t[: n_steps + 1]
    if status != 0:
        result = _penalty_result(sim_cfg, "diverged" if status == 1 else "non-finite control")
        result.steps_run = int(steps_run)
        return result
    J, ise, isdco = objective(df, control_deviation(u, sim_cfg), sim_cfg)
    powers = {}
    if record:
        powers = {name: powers_out[:, i] for i, name in enumerate(POWER_NAMES)}
        powers["p_load"] = pl[: n_steps + 1]
    return SimResult(t=t, delta_f=df, u=u, u_delayed=ut, powers=powers, J=J, ise=ise,
                     isdco=isdco, stable=True, steps_run=int(steps_run))


def fitness(genome, trace, plant_cfg, sim_cfg, ctrl_cfg=None):
    """Objective value of ``genome``; never raises for bad genomes."""
    try:
        return integrate(genome, trace, plant_cfg, sim_cfg, ctrl_cfg, record=False).J
    except (FloatingPointError, InfeasibleGenomeError):
        return sim_cfg.penalty


@dataclass
class ClosedLoopFitness:
    """Fitness over raw parameter vectors, as consumed by the optimizers."""

    trace: ExoTrace
    plant: PlantConfig
    sim: SimConfig
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    structure: str = "fopid"

    def __call__(self, x):
        return fitness(FoGenome.from_vector(x, self.structure), self.trace, self.plant,
                       self.sim, self.controller)
