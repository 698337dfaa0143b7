"""Exogenous stochastic signals: wind, solar irradiation, load demand, network delays.

Every signal is generated once per seed and frozen into an :class:`ExoTrace`
so that all controllers are compared against the same realization.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

# Independent sub-streams of the exo seed; toggling one source leaves the others intact.
_STREAM_WIND, _STREAM_PV, _STREAM_LOAD, _STREAM_DELAY = range(4)


def heaviside(t):
    """Unit step with H(0) = 1."""
    return np.where(np.asarray(t) >= 0.0, 1.0, 0.0)


def step_profile(t, steps):
    """Sum of ``amplitude * H(t - onset)`` over ``steps = [(onset, amplitude), ...]``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for onset, amplitude in steps:
        out = out + amplitude * heaviside(t - onset)
    return out


@dataclass(frozen=True)
class WindParams:
    base_steps: tuple = ((0.0, 7.5), (200.0, -3.0), (250.0, 10.5))
    sigma_sq: float = 200.0
    k_drag: float = 0.004
    turbulence_scale: float = 2000.0
    mean_speed: float = 7.5
    n_freq: int = 50
    d_omega: float = 0.5
    r_blade: float = 23.5
    omega_blade: float = 3.14
    beta_pitch: float = 0.1745
    rho: float = 1.25
    swept_area: float = 1735.0
    # "shinozuka": sqrt(2 S_V dw) amplitudes; "variance_scaled": 2 sigma^2 sqrt(S_V) dw
    noise_form: str = "shinozuka"

    def validate(self, path="exo.wind"):
        for name in ("sigma_sq", "k_drag", "turbulence_scale", "mean_speed", "d_omega",
                     "r_blade", "omega_blade", "rho", "swept_area"):
            if getattr(self, name) < 0 or (name != "sigma_sq" and getattr(self, name) == 0):
                raise ConfigurationError("must be positive", f"{path}.{name}")
        if self.n_freq < 1:
            raise ConfigurationError("must be >= 1", f"{path}.n_freq")
        if self.noise_form not in ("shinozuka", "variance_scaled"):
            raise ConfigurationError("must be 'shinozuka' or 'variance_scaled'",
                                     f"{path}.noise_form")


@dataclass(frozen=True)
class PvLoadParams:
    eta: float = 0.10
    area: float = 4084.0
    ambient_temp: float = 25.0
    phi_steps: tuple = ((0.0, 0.5), (25.0, -0.3), (75.0, 0.3), (150.0, -0.3))
    phi_noise: float = 0.1
    load_steps: tuple = ((0.0, 1.0), (50.0, -0.4), (100.0, -0.1), (175.0, 0.2), (225.0, 0.2))
    load_noise: float = 0.05

    def validate(self, path="exo.pv_load"):
        if not 0.0 < self.eta < 1.0:
            raise ConfigurationError("must lie in (0, 1)", f"{path}.eta")
        if self.area <= 0:
            raise ConfigurationError("must be positive", f"{path}.area")
        if self.phi_noise < 0 or self.load_noise < 0:
            raise ConfigurationError("noise half-widths must be non-negative", path)


@dataclass(frozen=True)
class DelayParams:
    low: float = 0.05
    high: float = 0.15

    def validate(self, path="exo.delay"):
        if not 0.0 <= self.low < self.high:
            raise ConfigurationError("requires 0 <= low < high", path)

    def scaled(self, factor):
        return DelayParams(self.low * factor, self.high * factor)


def spectral_density(omega, params: WindParams):
    """Wind-noise power spectral density S_V(omega)."""
    omega = np.asarray(omega, dtype=float)
    p = params
    ratio = p.turbulence_scale * omega / (p.mean_speed * np.pi)
    return (2.0 * p.k_drag * p.turbulence_scale**2 * np.abs(omega)
            / (np.pi**2 * (1.0 + ratio**2) ** (4.0 / 3.0)))


def harmonic_frequencies(params: WindParams):
    return (np.arange(1, params.n_freq + 1) - 0.5) * params.d_omega


def noise_amplitudes(params: WindParams):
    omega = harmonic_frequencies(params)
    s = spectral_density(omega, params)
    if params.noise_form == "variance_scaled":
        return 2.0 * params.sigma_sq * np.sqrt(s) * params.d_omega
    return np.sqrt(2.0 * s * params.d_omega)


def draw_wind_phases(params: WindParams, rng):
    return rng.uniform(0.0, 2.0 * np.pi, size=params.n_freq)


def base_wind_speed(t, params: WindParams):
    return step_profile(t, params.base_steps)


def wind_speed(t, params: WindParams, rng=None, phases=None):
    """Base step profile plus harmonic-sum turbulence, in m/s.

    Pass either ``phases`` (drawn once per trace) or an ``rng`` to draw them.
    """
    if phases is None:
        phases = draw_wind_phases(params, rng)
    t = np.asarray(t, dtype=float)
    omega = harmonic_frequencies(params)
    amp = noise_amplitudes(params)
    noise = np.cos(np.multiply.outer(t, omega) + phases) @ amp
    return base_wind_speed(t, params) + noise


def tip_speed_ratio(v, params: WindParams):
    return params.r_blade * params.omega_blade / v


def power_coefficient(tsr, params: WindParams):
    """C_p(tip-speed ratio, pitch), clamped at zero from below."""
    beta = params.beta_pitch
    cp = ((0.44 - 0.0167 * beta) * np.sin(np.pi * (tsr - 3.0) / (15.0 - 0.3 * beta))
          - 0.0184 * (tsr - 3.0) * beta)
    return np.maximum(cp, 0.0)


def wind_power(v, params: WindParams):
    """Mechanical turbine power in W; non-positive wind speed yields 0 W."""
    v = np.asarray(v, dtype=float)
    positive = v > 0.0
    safe_v = np.where(positive, v, 1.0)
    cp = power_coefficient(tip_speed_ratio(safe_v, params), params)
    power = 0.5 * params.rho * params.swept_area * cp * safe_v**3
    return np.where(positive, power, 0.0)


def irradiation(t, params: PvLoadParams, rng=None):
    """Solar irradiation in kW/m^2; noise-free when ``rng`` is None."""
    phi = step_profile(t, params.phi_steps)
    if rng is not None:
        phi = phi + rng.uniform(-params.phi_noise, params.phi_noise, size=np.shape(phi))
    return phi


def pv_power_from_irradiation(phi, params: PvLoadParams):
    """PV output in kW for irradiation ``phi`` in kW/m^2."""
    temp_factor = 1.0 - 0.005 * (params.ambient_temp + 25.0)
    return params.eta * params.area * np.asarray(phi) * temp_factor


def pv_power(t, params: PvLoadParams, rng=None):
    return pv_power_from_irradiation(irradiation(t, params, rng), params)


def load_demand(t, params: PvLoadParams, rng=None):
    """Per-unit load demand; noise-free when ``rng`` is None."""
    load = step_profile(t, params.load_steps)
    if rng is not None:
        load = load + rng.uniform(-params.load_noise, params.load_noise, size=np.shape(load))
    return load


def delay_steps(n, dt, params: DelayParams, rng):
    """Per-sample delays drawn from U(low, high), rounded to whole samples."""
    tau = rng.uniform(params.low, params.high, size=n)
    return np.rint(tau / dt).astype(np.int64)


@dataclass(frozen=True)
class ExoTrace:
    """One frozen realization of every exogenous signal, sampled at ``t = k * dt``."""

    seed: int
    dt: float
    duration: float
    t: np.ndarray
    wind_speed: np.ndarray
    p_wind_w: np.ndarray
    phi: np.ndarray
    p_pv_kw: np.ndarray
    p_load_pu: np.ndarray
    tau_sc_steps: np.ndarray
    tau_ca_steps: np.ndarray
    params: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_samples(self):
        return len(self.t)

    def max_delay_steps(self):
        return int(max(self.tau_sc_steps.max(), self.tau_ca_steps.max()))


def _substream(seed, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def build_trace(seed, dt=0.01, duration=300.0, wind=None, pv_load=None, delay=None,
                noise=True) -> ExoTrace:
    """Generate the exogenous realization for ``seed``.

    Arrays hold ``round(duration / dt) + 1`` samples. ``noise=False`` suppresses the
    wind, irradiation and load noise but keeps the random delays.
    """
    wind = wind or WindParams()
    pv_load = pv_load or PvLoadParams()
    delay = delay or DelayParams()
    if dt <= 0 or duration <= 0:
        raise ConfigurationError("dt and duration must be positive")
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt

    if noise:
        phases = draw_wind_phases(wind, _substream(seed, _STREAM_WIND))
        v = wind_speed(t, wind, phases=phases)
        phi = irradiation(t, pv_load, _substream(seed, _STREAM_PV))
        load = load_demand(t, pv_load, _substream(seed, _STREAM_LOAD))
    else:
        v = base_wind_speed(t, wind)
        phi = irradiation(t, pv_load)
        load = load_demand(t, pv_load)
    delay_rng = _substream(seed, _STREAM_DELAY)
    tau_sc = delay_steps(n, dt, delay, delay_rng)
    tau_ca = delay_steps(n, dt, delay, delay_rng)
    return ExoTrace(
        seed=seed, dt=dt, duration=duration, t=t, wind_speed=v,
        p_wind_w=wind_power(v, wind), phi=phi,
        p_pv_kw=pv_power_from_irradiation(phi, pv_load), p_load_pu=load,
        tau_sc_steps=tau_sc, tau_ca_steps=tau_ca,
        params={"wind": wind, "pv_load": pv_load, "delay": delay, "noise": noise},
    )


def zero_trace(dt=0.01, duration=300.0, delay_steps_value=0):
    """A trace with every exogenous input identically zero and constant delays."""
    n = int(round(duration / dt)) + 1
    zeros = np.zeros(n)
    tau = np.full(n, delay_steps_value, dtype=np.int64)
    return ExoTrace(seed=0, dt=dt, duration=duration, t=np.arange(n) * dt,
                    wind_speed=zeros.copy(), p_wind_w=zeros.copy(), phi=zeros.copy(),
                    p_pv_kw=zeros.copy(), p_load_pu=zeros.copy(),
                    tau_sc_steps=tau, tau_ca_steps=tau.copy())


def with_delays(trace: ExoTrace, delay: DelayParams) -> ExoTrace:
    """Same realization with delays redrawn from the same stream under new bounds.

    The underlying uniform draws are shared, so scaling both bounds scales every
    delay sample (before rounding) by the same factor.
    """
    delay.validate()
    rng = _substream(trace.seed, _STREAM_DELAY)
    n = trace.n_samples
    params = dict(trace.params, delay=delay)
    return replace(trace, tau_sc_steps=delay_steps(n, trace.dt, delay, rng),
                   tau_ca_steps=delay_steps(n, trace.dt, delay, rng), params=params)
