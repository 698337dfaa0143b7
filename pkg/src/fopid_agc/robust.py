"""Archive-assisted effective (expected) fitness for robust optimization.

Effective fitness is the mean objective over the box ``[x - delta, x + delta]``
under uniform perturbation. Each estimate draws a Latin hypercube of candidate
points in the box. A candidate is served from the archive when its nearest
in-box archive point has that candidate as its own nearest candidate; every other
candidate is evaluated with the true fitness and archived.
The estimate averages every archive value inside the box together with the newly
evaluated candidates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import ConfigurationError
from .pso import DEFAULT_DELTA


@dataclass(frozen=True)
class RobustParams:
    delta: tuple = DEFAULT_DELTA
    n_samples: int = 10
    archive_cap: int = 5000
    use_archive: bool = True
    # Candidates outside the search box are evaluated as-is unless this is set.
    clip_to_bounds: bool = False

    def validate(self, path="robust"):
        if any(d <= 0 for d in self.delta):
            raise ConfigurationError("every delta must be positive", f"{path}.delta")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1", f"{path}.n_samples")
        if self.archive_cap < self.n_samples:
            raise ConfigurationError("archive_cap must be >= n_samples", f"{path}.archive_cap")
        return self

    def for_dims(self, dims):
        return RobustParams(tuple(self.delta[:dims]), self.n_samples, self.archive_cap,
                            self.use_archive, self.clip_to_bounds)


class Archive:
    """Insertion-ordered store of ``(position, fitness)`` pairs, oldest first."""

    def __init__(self, dims, cap=5000):
        self.cap = cap
        self.positions = np.empty((0, dims))
        self.values = np.empty(0)
        self.ids = np.empty(0, dtype=np.int64)
        self.inserted = 0

    def __len__(self):
        return len(self.values)

    def add(self, positions, values):
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        values = np.asarray(values, dtype=float).reshape(-1)
        new_ids = np.arange(self.inserted, self.inserted + len(values))
        self.positions = np.concatenate([self.positions, positions])
        self.values = np.concatenate([self.values, values])
        self.ids = np.concatenate([self.ids, new_ids])
        self.inserted += len(values)
        return new_ids


def archive_cleanup(archive: Archive, cap=None) -> Archive:
    """Evict the oldest entries until at most ``cap`` remain."""
    cap = archive.cap if cap is None else cap
    excess = len(archive) - cap
    if excess > 0:
        archive.positions = archive.positions[excess:]
        archive.values = archive.values[excess:]
        archive.ids = archive.ids[excess:]
    return archive


@dataclass
class EvalAccounting:
    effective_evals: int = 0
    actual_evals: int = 0
    served_from_archive: int = 0


def savings_report(acct: EvalAccounting, n_samples):
    """Fraction of true-fitness calls relative to an archive-free run of the same length."""
    if acct.effective_evals <= 0:
        raise ValueError("no effective evaluations recorded")
    return acct.actual_evals / (acct.effective_evals * n_samples)


def latin_hypercube(n, lower, upper, rng):
    unit = qmc.LatinHypercube(d=len(lower), rng=rng).random(n)
    return lower + unit * (upper - lower)


def in_box(points, lower, upper):
    return np.all((points >= lower) & (points <= upper), axis=1)


def effective_fitness(x, archive: Archive | None, fitness, params: RobustParams, rng,
                      accounting: EvalAccounting | None = None, bounds=None, map_fn=map):
    """Archive-assisted estimate of the expected fitness at ``x``.

    ``archive=None`` (or ``params.use_archive`` false) gives the plain
    multi-evaluation mean over the Latin hypercube candidates.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(params.delta, dtype=float)
    lower, upper = x - delta, x + delta
    cand = latin_hypercube(params.n_samples, lower, upper, rng)
    if params.clip_to_bounds and bounds is not None:
        cand = np.clip(cand, bounds[0], bounds[1])

    use_archive = params.use_archive and archive is not None
    resample = np.ones(len(cand), dtype=bool)
    inside_vals = np.empty(0)
    if use_archive and len(archive):
        inside = in_box(archive.positions, lower, upper)
        inside_vals = archive.values[inside]
        if inside_vals.size:
            scaled = (cand[:, None, :] - archive.positions[inside][None, :, :]) / delta
            d2 = np.einsum("ijk,ijk->ij", scaled, scaled)
            nearest_archive = np.argmin(d2, axis=1)
            nearest_cand = np.argmin(d2[:, nearest_archive], axis=0)
            resample = nearest_cand != np.arange(len(cand))

    to_eval = cand[resample]
    new_vals = np.array(list(map_fn(fitness, list(to_eval))), dtype=float)
    if use_archive and len(new_vals):
        archive.add(to_eval, new_vals)
        archive_cleanup(archive, params.archive_cap)

    if accounting is not None:
        accounting.effective_evals += 1
        accounting.actual_evals += len(new_vals)
        accounting.served_from_archive += int(np.count_nonzero(~resample))
    pool = np.concatenate([inside_vals, new_vals])
    return float(np.mean(pool))


@dataclass
class RobustObjective:
    """Stateful robust wrapper around a plain fitness; call it like the fitness.

    Calls must be sequential (the archive is single-writer). ``map_fn`` may
    parallelize the true-fitness calls inside one estimate.
    """

    fitness: object
    params: RobustParams
    rng: np.random.Generator
    bounds: tuple | None = None
    map_fn: object = map
    archive: Archive | None = None
    accounting: EvalAccounting = field(default_factory=EvalAccounting)
    archive_trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.archive is None and self.params.use_archive:
            self.archive = Archive(len(self.params.delta), self.params.archive_cap)

    def __call__(self, x):
        value = effective_fitness(x, self.archive, self.fitness, self.params, self.rng,
                                  self.accounting, self.bounds, self.map_fn)
        size = len(self.archive) if self.archive is not None else 0
        self.archive_trace.append((self.accounting.effective_evals,
                                   self.accounting.actual_evals, size))
        return value

    def savings(self):
        return savings_report(self.accounting, self.params.n_samples)
