"""Run configuration: one JSON document of nested blocks, validated before any run.

Every block maps onto a frozen dataclass; omitted keys take their defaults and
unknown keys are rejected with their dotted path.
"""
from __future__ import annotations

import json
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .evaluation import McConfig
from .exo import DelayParams, PvLoadParams, WindParams, build_trace, zero_trace
from .foctrl import ControllerConfig, FoGenome
from .plant import PlantConfig
from .pso import FOPID_BOUNDS, VARIANTS, SwarmParams
from .robust import RobustParams
from .sim import SimConfig

# Named sub-streams of the master seed.
STREAMS = ("exo", "optimizer", "robust", "eval")


def sub_seed(master, name):
    """Deterministic 63-bit seed for sub-stream ``name`` of ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=(STREAMS.index(name),))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class ExoConfig:
    # "stochastic": noisy signals; "deterministic": step profiles only; "zero": no inputs
    mode: str = "stochastic"
    seed: int | None = None
    wind: WindParams = field(default_factory=WindParams)
    pv_load: PvLoadParams = field(default_factory=PvLoadParams)
    delay: DelayParams = field(default_factory=DelayParams)

    def validate(self, path="exo"):
        if self.mode not in ("stochastic", "deterministic", "zero"):
            raise ConfigurationError("must be 'stochastic', 'deterministic' or 'zero'",
                                     f"{path}.mode")
        self.wind.validate(f"{path}.wind")
        self.pv_load.validate(f"{path}.pv_load")
        self.delay.validate(f"{path}.delay")
        return self


@dataclass(frozen=True)
class OptimizerConfig:
    variant: str = "cpso"
    structure: str = "fopid"
    mode: str = "optimal"
    n_particles: int = 30
    beta1: float = 2.8
    beta2: float = 1.3
    chi: float | None = None
    topology: str | None = None
    budget: int = 2500
    lower: tuple = FOPID_BOUNDS[0]
    upper: tuple = FOPID_BOUNDS[1]
    charge: float = 1.0
    r_core: float = 1.0
    r_perception: float | None = None
    charged_fraction: float = 0.5

    def swarm(self, delta) -> SwarmParams:
        dims = 3 if self.structure == "pid" else 5
        params = SwarmParams(
            n_particles=self.n_particles, beta1=self.beta1, beta2=self.beta2, chi=self.chi,
            topology=self.topology, budget=self.budget, lower=tuple(self.lower),
            upper=tuple(self.upper), charge=self.charge, r_core=self.r_core,
            r_perception=self.r_perception, delta=tuple(delta),
            charged_fraction=self.charged_fraction)
        return params.for_dims(dims)

    def validate(self, path="optimizer", delta=RobustParams().delta):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"must be one of {VARIANTS}", f"{path}.variant")
        if self.structure not in ("pid", "fopid"):
            raise ConfigurationError("must be 'pid' or 'fopid'", f"{path}.structure")
        if self.mode not in ("optimal", "robust"):
            raise ConfigurationError("must be 'optimal' or 'robust'", f"{path}.mode")
        if len(self.lower) != 5 or len(self.upper) != 5:
            raise ConfigurationError("bounds need five entries (kp, ki, kd, lam, mu)",
                                     f"{path}.lower")
        self.swarm(delta).validate(path)
        return self


@dataclass(frozen=True)
class EvalConfig:
    n_runs: int = 100
    distribution: str = "uniform"
    sigma_fraction: float = 1.0 / 3.0
    resample_trace: bool = False
    # (kp, ki, kd, lam, mu) used by simulate / montecarlo / sweep unless --genome is given
    genome: tuple | None = None
    sweep_param: str = "m"
    sweep_change: float = -50.0
    sweep_reciprocal: bool = False

    def mc(self, delta, seed) -> McConfig:
        return McConfig(n_runs=self.n_runs, distribution=self.distribution,
                        delta=tuple(delta), sigma_fraction=self.sigma_fraction, seed=seed)

    def validate(self, path="eval", delta=RobustParams().delta):
        self.mc(delta, 0).validate(path)
        if self.genome is not None:
            if len(self.genome) not in (3, 5) or not all(
                    isinstance(g, (int, float)) and not isinstance(g, bool) for g in self.genome):
                raise ConfigurationError("genome needs 3 (PID) or 5 (FOPID) numbers",
                                         f"{path}.genome")
        from .evaluation import canonical_param

        try:
            canonical_param(self.sweep_param)
        except ConfigurationError as exc:
            raise ConfigurationError(exc.message, f"{path}.sweep_param") from None
        return self


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out: str = "out"
    plant: PlantConfig = field(default_factory=PlantConfig)
    exo: ExoConfig = field(default_factory=ExoConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    robust: RobustParams = field(default_factory=RobustParams)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self):
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative", "seed")
        self.plant.validate("plant")
        self.exo.validate("exo")
        self.controller.validate("controller")
        self.sim.validate("sim")
        self.robust.validate("robust")
        if len(self.robust.delta) != 5:
            raise ConfigurationError("delta needs five entries", "robust.delta")
        self.optimizer.validate("optimizer", self.robust.delta)
        self.eval.validate("eval", self.robust.delta)
        return self

    def exo_seed(self):
        return self.exo.seed if self.exo.seed is not None else sub_seed(self.seed, "exo")

    def trace(self):
        """The exogenous realization this configuration describes."""
        e = self.exo
        if e.mode == "zero":
            return zero_trace(self.sim.dt, self.sim.t_max)
        return build_trace(self.exo_seed(), dt=self.sim.dt, duration=self.sim.t_max,
                           wind=e.wind, pv_load=e.pv_load, delay=e.delay,
                           noise=e.mode == "stochastic")

    def genome(self):
        if self.eval.genome is None:
            return None
        structure = "pid" if len(self.eval.genome) == 3 else "fopid"
        return FoGenome.from_vector(self.eval.genome, structure)

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def _coerce(value, default, path):
    """Check a scalar leaf against the type of its default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError("expected true or false", path)
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigurationError("expected an integer", path)
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError("expected a number", path)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError("expected a string", path)
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError("expected a list", path)
        return _tuplify(list(value))
    if default is None:
        if isinstance(value, list):
            return _tuplify(value)
        if isinstance(value, bool) or not isinstance(value, (int, float, str)) and value is not None:
            raise ConfigurationError("unsupported value", path)
        return value
    return value


def _build(cls, doc, path):
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigurationError("expected a block of key/value pairs", path or "<root>")
    known = {f.name: f for f in fields(cls)}
    for key in doc:
        if key not in known:
            raise ConfigurationError("unknown key", f"{path}.{key}" if path else key)
    kwargs = {}
    for name, f in known.items():
        key_path = f"{path}.{name}" if path else name
        if f.default is not MISSING:
            default = f.default
        else:
            default = f.default_factory()
        if name not in doc:
            continue
        value = doc[name]
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, key_path)
        else:
            kwargs[name] = _coerce(value, default, key_path)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc), path or "<root>") from None


def validate_config(document) -> RunConfig:
    """Validated :class:`RunConfig` from a parsed document (``dict``) or JSON text."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document) if document.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"not valid JSON ({exc.msg} at line {exc.lineno})",
                                     "<document>") from None
    return _build(RunConfig, document, "").validate()


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config ({exc.strerror})", str(path)) from None
    return validate_config(text)


def _jsonable(obj):
    if isinstance(obj, tuple):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    return obj


def to_document(cfg: RunConfig) -> dict:
    """Fully materialized document; feeding it back yields an equal config."""
    return _jsonable(asdict(cfg))


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(to_document(cfg), indent=2, sort_keys=True) + "\n"
