"""Constricted particle swarms: canonical (CPSO), fully informed (FIPS) and charged (CCPSO).

All fitness evaluations of a generation finish before any velocity update, and the
random draws of a generation are taken in particle order, so evaluating a
generation in parallel does not change the trajectory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

VARIANTS = ("cpso", "fips", "ccpso")
DEFAULT_DELTA = (10.0, 10.0, 0.15, 0.2, 0.2)
FOPID_BOUNDS = ((0.0, 0.0, 0.0, 0.0, 0.0), (100.0, 100.0, 10.0, 2.0, 1.0))


def constriction(phi):
    """Clerc's constriction coefficient for acceleration sum ``phi > 4``."""
    if phi <= 4.0:
        raise ConfigurationError("constriction requires beta1 + beta2 > 4")
    return 2.0 / abs(2.0 - phi - math.sqrt(phi * phi - 4.0 * phi))


@dataclass
class SwarmParams:
    n_particles: int = 30
    beta1: float = 2.8
    beta2: float = 1.3
    chi: float | None = None
    # None picks the per-variant default: ring for cpso, fully connected otherwise
    topology: str | None = None
    budget: int = 2500
    lower: tuple = FOPID_BOUNDS[0]
    upper: tuple = FOPID_BOUNDS[1]
    charge: float = 1.0
    r_core: float = 1.0
    r_perception: float | None = None
    delta: tuple = DEFAULT_DELTA
    charged_fraction: float = 0.5

    def __post_init__(self):
        if self.chi is None:
            self.chi = constriction(self.beta1 + self.beta2)
        if self.r_perception is None:
            self.r_perception = 2.0 * max(self.delta)

    def validate(self, path="optimizer"):
        if self.n_particles < 2:
            raise ConfigurationError("n_particles must be >= 2", f"{path}.n_particles")
        if not self.beta1 + self.beta2 > 4.0:
            raise ConfigurationError("beta1 + beta2 must exceed 4", f"{path}.beta1")
        lo, hi = self.bounds
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ConfigurationError("every lower bound must be below its upper bound",
                                     f"{path}.lower")
        if self.budget < self.n_particles:
            raise ConfigurationError("budget smaller than the population", f"{path}.budget")
        if not 0.0 < self.r_core < self.r_perception:
            raise ConfigurationError("requires 0 < r_core < r_perception", f"{path}.r_core")
        if self.topology not in (None, "ring", "full"):
            raise ConfigurationError("must be 'ring' or 'full'", f"{path}.topology")
        if not 0.0 <= self.charged_fraction <= 1.0:
            raise ConfigurationError("must lie in [0, 1]", f"{path}.charged_fraction")
        return self

    @property
    def bounds(self):
        return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)

    def for_dims(self, dims):
        """Copy restricted to the first ``dims`` coordinates (PID uses three)."""
        return SwarmParams(
            n_particles=self.n_particles, beta1=self.beta1, beta2=self.beta2, chi=self.chi,
            topology=self.topology, budget=self.budget, lower=tuple(self.lower[:dims]),
            upper=tuple(self.upper[:dims]), charge=self.charge, r_core=self.r_core,
            r_perception=self.r_perception, delta=tuple(self.delta[:dims]),
            charged_fraction=self.charged_fraction)


def cpso_velocity(x, v, pbest, nbr_best, params: SwarmParams, theta1, theta2):
    """Constricted velocity toward the personal and neighborhood bests."""
    return params.chi * (v + params.beta1 * theta1 * (pbest - x)
                         + params.beta2 * theta2 * (nbr_best - x))


def fips_velocity(x, v, neighbors, params: SwarmParams, thetas):
    """Fully informed velocity: mean pull toward every neighbor in ``neighbors`` (rows)."""
    neighbors = np.atleast_2d(np.asarray(neighbors, dtype=float))
    if len(neighbors) == 0:
        raise ConfigurationError("FIPS needs at least one neighbor")
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim < 2:
        thetas = thetas.reshape(len(neighbors), 1)
    pull = np.sum(params.beta1 * thetas * (neighbors - x), axis=0) / len(neighbors)
    return params.chi * (v + pull)


def pair_repulsion(xi, xl, params: SwarmParams, charge=None, tie_sign=1.0):
    """Repulsive acceleration on ``xi`` due to ``xl``.

    Inverse-square inside the perception shell, constant magnitude ``Q / R_c^2``
    inside the core, zero beyond ``R_p``. Coincident points push along the first
    axis, signed by ``tie_sign`` so that the pair stays antisymmetric.
    """
    q = params.charge if charge is None else charge
    diff = np.asarray(xi, dtype=float) - np.asarray(xl, dtype=float)
    dist = float(np.linalg.norm(diff))
    if dist > params.r_perception:
        return np.zeros_like(diff)
    if dist >= params.r_core:
        return q * diff / dist**3
    if dist == 0.0:
        unit = np.zeros_like(diff)
        unit[0] = tie_sign
        return q * unit / params.r_core**2
    return q * diff / (params.r_core**2 * dist)


def ccpso_repulsion(i, positions, params: SwarmParams, charged=None):
    """Total repulsion on particle ``i`` from every other charged particle."""
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    charged = np.ones(n, dtype=bool) if charged is None else np.asarray(charged)
    acc = np.zeros(positions.shape[1])
    if not charged[i]:
        return acc
    for l in range(n):
        if l == i or not charged[l]:
            continue
        acc += pair_repulsion(positions[i], positions[l], params,
                              tie_sign=1.0 if i < l else -1.0)
    return acc


def ring_neighbors(i, n):
    return [(i - 1) % n, i, (i + 1) % n]


@dataclass
class OptimizeResult:
    best_position: np.ndarray
    best_fitness: float
    history: np.ndarray  # rows of (eval_count, best fitness so far)
    best_positions: np.ndarray  # best-so-far position after each evaluation
    n_evals: int
    variant: str
    extra: dict = field(default_factory=dict)


class _Recorder:
    def __init__(self, dims):
        self.count = 0
        self.best = math.inf
        self.best_x = np.full(dims, np.nan)
        self.rows = []
        self.positions = []

    def add(self, x, value):
        self.count += 1
        if value < self.best:
            self.best = float(value)
            self.best_x = np.array(x, dtype=float)
        self.rows.append((self.count, self.best))
        self.positions.append(self.best_x.copy())


def optimize(fitness, params: SwarmParams, variant="cpso", rng=None, map_fn=map,
             callback=None) -> OptimizeResult:
    """Minimize ``fitness`` over the box ``params.bounds`` within ``params.budget`` evaluations.

    ``map_fn`` evaluates a generation (e.g. an executor's ``map``); it must return
    results in input order. ``callback(generation, swarm_positions)`` is optional.
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown variant {variant!r}", "optimizer.variant")
    params.validate()
    rng = np.random.default_rng(rng)
    lo, hi = params.bounds
    dims, n = len(lo), params.n_particles
    topology = params.topology or ("ring" if variant == "cpso" else "full")

    x = rng.uniform(lo, hi, size=(n, dims))
    span = (hi - lo) / 10.0
    v = rng.uniform(-span, span, size=(n, dims))
    n_charged = int(round(params.charged_fraction * n)) if variant == "ccpso" else 0
    charged = np.arange(n) < n_charged

    rec = _Recorder(dims)
    values = np.array(list(map_fn(fitness, list(x))), dtype=float)
    for xi, fi in zip(x, values):
        rec.add(xi, fi)
    pbest = x.copy()
    pbest_f = values.copy()
    generation = 0

    while rec.count < params.budget:
        active = min(n, params.budget - rec.count)
        if topology == "ring":
            nbr = np.array([pbest[min(ring_neighbors(i, n), key=lambda j: pbest_f[j])]
                            for i in range(n)])
        else:
            nbr = np.repeat(pbest[np.argmin(pbest_f)][None, :], n, axis=0)

        new_v = v.copy()
        for i in range(active):
            if variant == "fips":
                members = ring_neighbors(i, n) if topology == "ring" else range(n)
                members = list(members)
                thetas = rng.random((len(members), dims))
                new_v[i] = fips_velocity(x[i], v[i], pbest[members], params, thetas)
            else:
                t1, t2 = rng.random((2, dims))
                new_v[i] = cpso_velocity(x[i], v[i], pbest[i], nbr[i], params, t1, t2)
                if variant == "ccpso":
                    new_v[i] += params.chi * ccpso_repulsion(i, x, params, charged)
        v[:active] = new_v[:active]
        x[:active] = x[:active] + v[:active]
        outside = (x[:active] < lo) | (x[:active] > hi)
        x[:active] = np.clip(x[:active], lo, hi)
        v[:active][outside] = 0.0

        values = np.array(list(map_fn(fitness, list(x[:active]))), dtype=float)
        for i, fi in enumerate(values):
            rec.add(x[i], fi)
            if fi < pbest_f[i]:
                pbest_f[i] = fi
                pbest[i] = x[i]
        generation += 1
        if callback is not None:
            callback(generation, x.copy())

    return OptimizeResult(best_position=rec.best_x, best_fitness=rec.best,
                          history=np.array(rec.rows, dtype=float),
                          best_positions=np.array(rec.positions), n_evals=rec.count,
                          variant=variant, extra={"topology": topology,
                                                  "generations": generation})
