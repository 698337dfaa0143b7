"""Robustness assessment of tuned controllers.

Monte-Carlo perturbation of the controller knobs, plant-parameter sweeps and the
two extreme corners of the perturbation box, all scored with the closed-loop
objective on a fixed exogenous trace.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .exo import ExoTrace, with_delays
from .foctrl import ControllerConfig, FoGenome
from .plant import PlantConfig
from .pso import DEFAULT_DELTA
from .sim import SimConfig, fitness


@dataclass(frozen=True)
class McConfig:
    n_runs: int = 100
    distribution: str = "uniform"
    delta: tuple = DEFAULT_DELTA
    # gaussian sigma = sigma_fraction * delta
    sigma_fraction: float = 1.0 / 3.0
    seed: int = 0

    def validate(self, path="eval"):
        if self.n_runs < 1:
            raise ConfigurationError("n_runs must be >= 1", f"{path}.n_runs")
        if self.distribution not in ("uniform", "gaussian"):
            raise ConfigurationError("must be 'uniform' or 'gaussian'", f"{path}.distribution")
        if any(d < 0 for d in self.delta):
            raise ConfigurationError("delta must be non-negative", f"{path}.delta")
        if self.distribution == "gaussian" and not self.sigma_fraction > 0:
            raise ConfigurationError("sigma must be positive", f"{path}.sigma_fraction")
        return self


@dataclass
class McResult:
    mean: float
    std: float
    genomes: np.ndarray
    values: np.ndarray
    penalized: np.ndarray
    distribution: str

    def rows(self):
        for i, (g, j, p) in enumerate(zip(self.genomes, self.values, self.penalized)):
            yield (i, *g, j, p)


def structure_of(genome: FoGenome):
    return "pid" if genome.lam == 1.0 and genome.mu == 1.0 else "fopid"


def perturbation_draws(genome: FoGenome, mc: McConfig, structure=None, rng=None):
    """``mc.n_runs`` perturbed knob vectors (5 columns; PID keeps lam = mu = 1)."""
    structure = structure or structure_of(genome)
    rng = np.random.default_rng(mc.seed) if rng is None else rng
    dims = 3 if structure == "pid" else 5
    nominal = genome.as_vector("fopid")
    delta = np.asarray(mc.delta[:dims], dtype=float)
    if mc.distribution == "uniform":
        noise = rng.uniform(-1.0, 1.0, size=(mc.n_runs, dims)) * delta
    else:
        noise = rng.standard_normal(size=(mc.n_runs, dims)) * (mc.sigma_fraction * delta)
    draws = np.repeat(nominal[None, :], mc.n_runs, axis=0)
    draws[:, :dims] += noise
    return draws


def monte_carlo(genome: FoGenome, trace: ExoTrace, plant: PlantConfig, sim: SimConfig,
                mc: McConfig, ctrl: ControllerConfig | None = None, structure=None,
                map_fn=map, trace_factory=None) -> McResult:
    """Objective statistics over random perturbations of the controller knobs.

    Unstable and infeasible draws score ``sim.penalty``. With ``trace_factory``
    each draw ``i`` is scored on ``trace_factory(i)`` instead of the fixed trace.
    """
    mc.validate()
    draws = perturbation_draws(genome, mc, structure)
    if trace_factory is None:
        job = lambda x: fitness(FoGenome(*x), trace, plant, sim, ctrl)  # noqa: E731
        values = np.array(list(map_fn(job, list(draws))), dtype=float)
    else:
        values = np.array([fitness(FoGenome(*x), trace_factory(i), plant, sim, ctrl)
                           for i, x in enumerate(draws)])
    penalized = values == sim.penalty
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return McResult(mean=float(np.mean(values)), std=std, genomes=draws, values=values,
                    penalized=penalized, distribution=mc.distribution)


SWEEP_PARAMS = {
    "m": ("plant", ("m",)),
    "d": ("plant", ("d",)),
    "k_deg": ("plant", ("k_deg",)),
    "t_deg": ("plant", ("t_deg",)),
    "k_fess": ("plant", ("k_fess",)),
    "t_fess": ("plant", ("t_fess", "t_bess")),
    "k_bess": ("plant", ("k_bess",)),
    "tau": ("delay", ("low", "high")),
}
_ALIASES = {"t_fess=t_bess": "t_fess", "t_bess": "t_fess", "tau_sc=tau_ca": "tau",
            "tau_sc": "tau", "tau_ca": "tau", "delay": "tau"}


def canonical_param(name):
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in SWEEP_PARAMS:
        raise ConfigurationError(f"unknown sweep parameter {name!r}", "sweep.param")
    return key


@dataclass(frozen=True)
class SweepSpec:
    """Scale ``param`` by ``1 + change/100``; with ``reciprocal`` divide by ``1 + change/100``.

    Tied rows (``t_fess`` = T_FESS and T_BESS, ``tau`` = both delay bounds) move jointly.
    """

    param: str
    change: float
    reciprocal: bool = False

    @property
    def factor(self):
        f = 1.0 + self.change / 100.0
        return 1.0 / f if self.reciprocal else f

    @property
    def label(self):
        if self.reciprocal:
            return f"{abs(self.change):g}% decrease (1/{1 + self.change / 100:g})"
        return f"{abs(self.change):g}% {'increase' if self.change >= 0 else 'decrease'}"


def apply_sweep(spec: SweepSpec, plant: PlantConfig, trace: ExoTrace):
    """Perturbed ``(plant, trace)`` for ``spec``; raises ConfigurationError if invalid."""
    key = canonical_param(spec.param)
    target, names = SWEEP_PARAMS[key]
    factor = spec.factor
    if target == "plant":
        changed = plant.replace(**{n: getattr(plant, n) * factor for n in names})
        changed.validate()
        return changed, trace
    delay = trace.params.get("delay")
    if delay is None:
        raise ConfigurationError("trace carries no delay parameters", "sweep.param")
    if factor == 1.0:
        return plant, trace
    if not factor > 0:
        raise ConfigurationError("delay bounds must stay positive", "sweep.change")
    return plant, with_delays(trace, delay.scaled(factor))


@dataclass
class SweepResult:
    spec: SweepSpec
    J: float
    J_nominal: float

    @property
    def percent(self):
        return (self.J - self.J_nominal) * 100.0 / self.J_nominal


def param_sweep(genome: FoGenome, spec: SweepSpec, trace: ExoTrace, plant: PlantConfig,
                sim: SimConfig, ctrl: ControllerConfig | None = None, j_nominal=None):
    """Signed percent change in J when one plant (or delay) parameter is perturbed."""
    perturbed_plant, perturbed_trace = apply_sweep(spec, plant, trace)
    if j_nominal is None:
        j_nominal = fitness(genome, trace, plant, sim, ctrl)
    J = fitness(genome, perturbed_trace, perturbed_plant, sim, ctrl)
    return SweepResult(spec, J, j_nominal)


# standard sensitivity rows: (parameter, magnitude %, reciprocal for the decrease case)
SENSITIVITY_ROWS = (
    ("m", 50, False), ("d", 500, True), ("k_deg", 500, True), ("t_deg", 500, True),
    ("k_fess", 70, False), ("t_fess", 90, False), ("k_bess", 70, False), ("tau", 50, False),
)


def sensitivity_specs():
    specs = []
    for param, magnitude, reciprocal in SENSITIVITY_ROWS:
        specs.append(SweepSpec(param, magnitude))
        specs.append(SweepSpec(param, magnitude, reciprocal=True) if reciprocal
                     else SweepSpec(param, -magnitude))
    return specs


@dataclass
class CornerResult:
    J_nominal: float
    J_plus: float
    J_minus: float
    genome_plus: FoGenome = field(repr=False)
    genome_minus: FoGenome = field(repr=False)

    @property
    def percent_plus(self):
        return (self.J_plus - self.J_nominal) * 100.0 / self.J_nominal

    @property
    def percent_minus(self):
        return (self.J_minus - self.J_nominal) * 100.0 / self.J_nominal


def corner_perturbation(genome: FoGenome, delta, trace: ExoTrace, plant: PlantConfig,
                        sim: SimConfig, ctrl: ControllerConfig | None = None, structure=None):
    """Score the all-plus and all-minus corners of the perturbation box."""
    structure = structure or structure_of(genome)
    dims = 3 if structure == "pid" else 5
    step = np.zeros(5)
    step[:dims] = np.asarray(delta, dtype=float)[:dims]
    nominal = genome.as_vector("fopid")
    plus, minus = FoGenome(*(nominal + step)), FoGenome(*(nominal - step))
    return CornerResult(J_nominal=fitness(genome, trace, plant, sim, ctrl),
                        J_plus=fitness(plus, trace, plant, sim, ctrl),
                        J_minus=fitness(minus, trace, plant, sim, ctrl),
                        genome_plus=plus, genome_minus=minus)
