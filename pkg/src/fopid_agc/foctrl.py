"""Band-limited fractional operators (Oustaloup) and discrete FOPID / PID controllers.

The fractional integral ``Ki / s^lam`` is realized as a trapezoidal integrator in
series with an Oustaloup filter for ``s^(1 - lam)``, which keeps true integral
action for every ``lam``. The derivative term is an Oustaloup filter for ``s^mu``.
Each filter is a cascade of first-order sections discretized with the bilinear map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigurationError, InfeasibleGenomeError

DEFAULT_BAND = (0.01, 100.0)


@dataclass(frozen=True)
class OraSpec:
    """Order ``gamma`` of ``s^gamma``, fitting band ``(omega_b, omega_h)`` and half-order ``n``."""

    gamma: float
    omega_b: float = DEFAULT_BAND[0]
    omega_h: float = DEFAULT_BAND[1]
    n: int = 2

    def __post_init__(self):
        if not self.omega_b > 0:
            raise ConfigurationError("omega_b must be positive")
        if not self.omega_h > self.omega_b:
            raise ConfigurationError("omega_h must exceed omega_b")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if not abs(self.gamma) <= 1.0:
            raise ValueError(f"order {self.gamma} outside [-1, 1]")


class RationalFilter:
    """``gain * prod (s + zeros[k]) / (s + poles[k])`` with an optional discrete realization.

    After :func:`discretize` the filter carries per-section coefficients
    ``[b0, b1, a1]`` for ``y[k] = b0 x[k] + b1 x[k-1] - a1 y[k-1]`` and a state
    ``[x_prev, y_prev]`` per section.
    """

    def __init__(self, zeros, poles, gain, dt=None):
        self.zeros = np.asarray(zeros, dtype=float)
        self.poles = np.asarray(poles, dtype=float)
        self.gain = float(gain)
        self.dt = dt
        self.sections = None
        self.state = None
        if dt is not None:
            self.sections = _bilinear_sections(self.zeros, self.poles, dt)
            self.state = np.zeros((len(self.poles), 2))

    @property
    def order(self):
        return len(self.poles)

    def frequency_response(self, omega):
        """Continuous-time response ``G(j omega)``."""
        s = 1j * np.asarray(omega, dtype=float)
        h = np.full(np.shape(s), self.gain, dtype=complex)
        for z, p in zip(self.zeros, self.poles):
            h = h * (s + z) / (s + p)
        return h

    def discrete_response(self, omega):
        """Response of the discrete realization at ``exp(j omega dt)``."""
        if self.sections is None:
            raise ValueError("filter has not been discretized")
        q_inv = np.exp(-1j * np.asarray(omega, dtype=float) * self.dt)
        h = np.full(np.shape(q_inv), self.gain, dtype=complex)
        for b0, b1, a1 in self.sections:
            h = h * (b0 + b1 * q_inv) / (1.0 + a1 * q_inv)
        return h

    def dc_gain(self):
        return self.gain * float(np.prod(self.zeros / self.poles))

    def discrete_poles(self):
        return -self.sections[:, 2]

    def reset(self):
        if self.state is not None:
            self.state[:] = 0.0

    def step(self, x):
        return self.gain * _sections_step(self.sections, self.state, float(x))

    def filter(self, xs):
        return np.array([self.step(x) for x in xs])


def oustaloup_realize(spec: OraSpec) -> RationalFilter:
    """Oustaloup zeros, poles and gain approximating ``s^gamma`` over the band."""
    n, g = spec.n, spec.gamma
    k = np.arange(-n, n + 1)
    ratio = spec.omega_h / spec.omega_b
    poles = spec.omega_b * ratio ** ((k + n + 0.5 * (1.0 + g)) / (2 * n + 1))
    zeros = spec.omega_b * ratio ** ((k + n + 0.5 * (1.0 - g)) / (2 * n + 1))
    return RationalFilter(zeros, poles, spec.omega_h**g)


def _bilinear_sections(zeros, poles, dt):
    c = 2.0 / dt
    denom = c + poles
    if np.any(np.abs(denom) < 1e-12 * c) or np.any(poles <= 0):
        raise FloatingPointError("pole incompatible with the bilinear map at this dt")
    sec = np.empty((len(poles), 3))
    sec[:, 0] = (c + zeros) / denom
    sec[:, 1] = (zeros - c) / denom
    sec[:, 2] = (poles - c) / denom
    return sec


def discretize(filt: RationalFilter, dt) -> RationalFilter:
    """Bilinear (Tustin) realization of ``filt`` at sample period ``dt``."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    out = RationalFilter(filt.zeros, filt.poles, filt.gain, dt)
    if np.any(np.abs(out.discrete_poles()) >= 1.0):
        raise FloatingPointError("discrete realization is unstable")
    return out


@numba.njit(cache=True)
def _sections_step(sec, state, x):
    for i in range(sec.shape[0]):
        y = sec[i, 0] * x + sec[i, 1] * state[i, 0] - sec[i, 2] * state[i, 1]
        state[i, 0] = x
        state[i, 1] = y
        x = y
    return x


@numba.njit(cache=True)
def _controller_step(gains, sec_i, st_i, integ, sec_d, st_d, dt, e):
    """One controller sample. ``gains = [kp, ki, kd, gain_i, gain_d]``, ``integ = [x_prev, y_prev]``."""
    xi = gains[3] * _sections_step(sec_i, st_i, e)
    yi = integ[1] + 0.5 * dt * (xi + integ[0])
    integ[0] = xi
    integ[1] = yi
    yd = gains[4] * _sections_step(sec_d, st_d, e)
    return gains[0] * e + gains[1] * yi + gains[2] * yd


@dataclass(frozen=True)
class FoGenome:
    kp: float
    ki: float
    kd: float
    lam: float = 1.0
    mu: float = 1.0

    FIELDS = ("kp", "ki", "kd", "lam", "mu")

    @classmethod
    def from_vector(cls, x, structure="fopid"):
        x = [float(v) for v in x]
        if structure == "pid":
            return cls(x[0], x[1], x[2], 1.0, 1.0)
        return cls(*x[:5])

    def as_vector(self, structure="fopid"):
        full = np.array([self.kp, self.ki, self.kd, self.lam, self.mu])
        return full[:3] if structure == "pid" else full

    def as_dict(self):
        return {name: getattr(self, name) for name in self.FIELDS}

    @property
    def feasible(self):
        return all(v >= 0.0 for v in (self.kp, self.ki, self.kd, self.lam, self.mu))


class Controller:
    """Discrete parallel FOPID acting on the (delayed) frequency deviation."""

    def __init__(self, genome: FoGenome, dt=0.01, band=DEFAULT_BAND, n=2):
        if not genome.feasible:
            raise InfeasibleGenomeError(f"negative gain or order in {genome}")
        if genome.lam > 2.0 or genome.mu > 1.0:
            raise InfeasibleGenomeError(f"order outside realizable range in {genome}")
        self.genome = genome
        self.dt = dt
        self.integral_filter = discretize(oustaloup_realize(OraSpec(1.0 - genome.lam, *band, n)), dt)
        self.derivative_filter = discretize(oustaloup_realize(OraSpec(genome.mu, *band, n)), dt)
        self.gains = np.array([genome.kp, genome.ki, genome.kd,
                               self.integral_filter.gain, self.derivative_filter.gain])
        self.integrator = np.zeros(2)

    def reset(self):
        self.integral_filter.reset()
        self.derivative_filter.reset()
        self.integrator[:] = 0.0

    def step(self, e):
        return controller_step(self, e)

    def run(self, errors):
        return np.array([self.step(e) for e in errors])

    def kernel_args(self):
        """Coefficient arrays consumed by the simulation kernel."""
        return (self.gains, self.integral_filter.sections, self.derivative_filter.sections)


def build_controller(genome: FoGenome, ora_band=DEFAULT_BAND, n=2, dt=0.01) -> Controller:
    return Controller(genome, dt=dt, band=tuple(ora_band), n=n)


def controller_step(c: Controller, e):
    """Advance the controller one sample on error ``e``; returns the control sample."""
    if not np.isfinite(e):
        raise FloatingPointError("non-finite controller input")
    return float(_controller_step(c.gains, c.integral_filter.sections, c.integral_filter.state,
                                  c.integrator, c.derivative_filter.sections,
                                  c.derivative_filter.state, c.dt, float(e)))


@dataclass(frozen=True)
class ControllerConfig:
    """Oustaloup band and half-order used for every fractional operator."""

    omega_b: float = DEFAULT_BAND[0]
    omega_h: float = DEFAULT_BAND[1]
    n: int = 2

    def validate(self, path="controller"):
        if not self.omega_b > 0:
            raise ConfigurationError("omega_b must be positive", f"{path}.omega_b")
        if not self.omega_h > self.omega_b:
            raise ConfigurationError("omega_b must be below omega_h", f"{path}.omega_h")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1", f"{path}.n")
        return self

    @property
    def band(self):
        return (self.omega_b, self.omega_h)
