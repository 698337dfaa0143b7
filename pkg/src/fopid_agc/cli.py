"""Command-line front end: ``python -m fopid_agc <subcommand> [flags]``.

Exit status is 0 on success, 2 on configuration errors (with the offending key
path on stderr) and 1 on runtime failures. All outputs are written below
``--out`` and are byte-identical for identical configuration and seed.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evaluation as ev
from .config import RunConfig, dump_config, load_config, sub_seed
from .errors import ConfigurationError
from .exo import build_trace
from .foctrl import FoGenome, OraSpec, discretize, oustaloup_realize
from .pso import VARIANTS, optimize
from .report import write_columns, write_csv, write_json
from .robust import RobustObjective
from .sim import ClosedLoopFitness, integrate, plant_inputs

SUBCOMMANDS = ("trace", "simulate", "realize", "optimize", "montecarlo", "sweep")


def _parser():
    p = argparse.ArgumentParser(prog="fopid-agc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (defaults when omitted)")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads")
    common.add_argument("--dump-config", action="store_true",
                        help="also write the fully materialized config.json (out recorded as '.')")
    genome = argparse.ArgumentParser(add_help=False)
    genome.add_argument("--genome",
                        help="comma-separated kp,ki,kd[,lam,mu] or a genome JSON file")

    sub.add_parser("trace", parents=[common], help="dump the exogenous realization")
    sub.add_parser("simulate", parents=[common, genome], help="closed-loop run of one genome")
    r = sub.add_parser("realize", parents=[common], help="Oustaloup filter for s^gamma")
    r.add_argument("--gamma", type=float, default=0.5)
    r.add_argument("--points", type=int, default=201)
    o = sub.add_parser("optimize", parents=[common], help="tune a controller with PSO")
    o.add_argument("--variant", choices=VARIANTS)
    o.add_argument("--structure", choices=("pid", "fopid"))
    o.add_argument("--mode", choices=("optimal", "robust"))
    o.add_argument("--budget", type=int)
    m = sub.add_parser("montecarlo", parents=[common, genome],
                       help="controller-parameter perturbation statistics and corners")
    m.add_argument("--distribution", choices=("uniform", "gaussian"))
    m.add_argument("--runs", type=int)
    s = sub.add_parser("sweep", parents=[common, genome], help="plant-parameter perturbation")
    s.add_argument("--param", help="m, d, k_deg, t_deg, k_fess, t_fess (=t_bess), k_bess, tau")
    s.add_argument("--change", type=float, help="signed percent change")
    s.add_argument("--reciprocal", action="store_true",
                   help="divide by 1 + change/100 instead of multiplying")
    s.add_argument("--table", action="store_true",
                   help="run every standard sensitivity row (+-magnitude per parameter)")
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    opt = {k: getattr(args, k) for k in ("variant", "structure", "mode", "budget")
           if getattr(args, k, None) is not None}
    if opt:
        changes["optimizer"] = replace(cfg.optimizer, **opt)
    evl = {}
    if getattr(args, "distribution", None):
        evl["distribution"] = args.distribution
    if getattr(args, "runs", None) is not None:
        evl["n_runs"] = args.runs
    if getattr(args, "param", None):
        evl["sweep_param"] = args.param
    if getattr(args, "change", None) is not None:
        evl["sweep_change"] = args.change
    if getattr(args, "reciprocal", False):
        evl["sweep_reciprocal"] = True
    if evl:
        changes["eval"] = replace(cfg.eval, **evl)
    return cfg.replace(**changes).validate() if changes else cfg


def _genome(cfg: RunConfig, spec):
    if spec:
        path = Path(spec)
        if path.suffix == ".json" or path.exists():
            try:
                doc = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigurationError(f"cannot read genome ({exc})", "--genome") from None
            doc = doc.get("genome", doc)
            try:
                return FoGenome(**{k: float(doc[k]) for k in FoGenome.FIELDS})
            except (KeyError, TypeError, ValueError):
                raise ConfigurationError("needs kp, ki, kd, lam, mu", "--genome") from None
        try:
            values = [float(v) for v in spec.split(",")]
        except ValueError:
            raise ConfigurationError("expected comma-separated numbers", "--genome") from None
        if len(values) not in (3, 5):
            raise ConfigurationError("needs 3 (PID) or 5 (FOPID) values", "--genome")
        return FoGenome.from_vector(values, "pid" if len(values) == 3 else "fopid")
    genome = cfg.genome()
    if genome is None:
        raise ConfigurationError("no genome given (use --genome or eval.genome)", "eval.genome")
    return genome


@contextmanager
def _mapper(jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            yield pool.map
    else:
        yield map


def cmd_trace(cfg: RunConfig, args, out: Path):
    trace = cfg.trace()
    pw, _, pl = plant_inputs(trace, cfg.plant)
    write_columns(out / "trace.csv", {
        "t": trace.t, "p_wind_pu": pw, "phi": trace.phi, "p_load_pu": pl,
        "tau_sc": np.round(trace.tau_sc_steps * trace.dt, 12),
        "tau_ca": np.round(trace.tau_ca_steps * trace.dt, 12),
    })


def cmd_simulate(cfg: RunConfig, args, out: Path):
    genome = _genome(cfg, args.genome)
    res = integrate(genome, cfg.trace(), cfg.plant, cfg.sim, cfg.controller)
    if res.stable:
        cols = {"t": res.t, "delta_f": res.delta_f, "u": res.u, "u_delayed": res.u_delayed}
        cols.update({k: res.powers[k] for k in ("p_wtg", "p_pv", "p_ae", "p_fc", "p_deg",
                                                  "p_fess", "p_bess", "p_load")})
        write_columns(out / "simulation.csv", cols)
    write_json(out / "summary.json", {"J": res.J, "ise": res.ise, "isdco": res.isdco,
                                      "stable": res.stable, "genome": genome.as_dict(),
                                      "info": res.info})


def cmd_realize(cfg: RunConfig, args, out: Path):
    c = cfg.controller
    spec = OraSpec(args.gamma, c.omega_b, c.omega_h, c.n)
    filt = oustaloup_realize(spec)
    omega = np.logspace(np.log10(c.omega_b) - 1, np.log10(c.omega_h) + 1, args.points)
    h = filt.frequency_response(omega)
    write_columns(out / "response.csv", {"omega_rad_s": omega,
                                         "magnitude_db": 20.0 * np.log10(np.abs(h)),
                                         "phase_deg": np.degrees(np.angle(h))})
    digital = discretize(filt, cfg.sim.dt)
    write_json(out / "filter.json", {
        "gamma": args.gamma, "omega_b": c.omega_b, "omega_h": c.omega_h, "n": c.n,
        "gain": filt.gain, "zeros": filt.zeros, "poles": filt.poles,
        "dt": cfg.sim.dt, "sections_b0_b1_a1": digital.sections,
    })


def cmd_optimize(cfg: RunConfig, args, out: Path):
    o = cfg.optimizer
    trace = cfg.trace()
    swarm = o.swarm(cfg.robust.delta)
    base = ClosedLoopFitness(trace, cfg.plant, cfg.sim, cfg.controller, o.structure)
    seed = sub_seed(cfg.seed, "optimizer")
    summary = {"variant": o.variant, "structure": o.structure, "mode": o.mode,
               "budget": swarm.budget, "seed": cfg.seed, "exo_seed": cfg.exo_seed()}
    with _mapper(args.jobs) as map_fn:
        if o.mode == "robust":
            dims = len(swarm.lower)
            robust = RobustObjective(base, cfg.robust.for_dims(dims),
                                     np.random.default_rng(sub_seed(cfg.seed, "robust")),
                                     bounds=swarm.bounds, map_fn=map_fn)
            result = optimize(robust, swarm, o.variant, rng=seed)
            acct = robust.accounting
            summary["savings"] = {
                "effective_evals": acct.effective_evals, "actual_evals": acct.actual_evals,
                "served_from_archive": acct.served_from_archive,
                "archive_free_evals": acct.effective_evals * robust.params.n_samples,
                "ratio": robust.savings(),
            }
            write_csv(out / "archive.csv", ["eval_count", "actual_evals", "archive_size"],
                      robust.archive_trace)
        else:
            result = optimize(base, swarm, o.variant, rng=seed, map_fn=map_fn)
    genome = FoGenome.from_vector(result.best_position, o.structure)
    nominal = integrate(genome, trace, cfg.plant, cfg.sim, cfg.controller, record=False)
    write_csv(out / "convergence.csv", ["eval_count", "best_J"],
              ((int(c), j) for c, j in result.history))
    write_json(out / "genome.json", {"genome": genome.as_dict(), "structure": o.structure})
    summary.update({"best_J": result.best_fitness, "nominal_J": nominal.J,
                    "n_evals": result.n_evals, "genome": genome.as_dict()})
    write_json(out / "summary.json", summary)


def cmd_montecarlo(cfg: RunConfig, args, out: Path):
    genome = _genome(cfg, args.genome)
    trace = cfg.trace()
    mc = cfg.eval.mc(cfg.robust.delta, sub_seed(cfg.seed, "eval"))
    factory = None
    if cfg.eval.resample_trace:
        e = cfg.exo
        factory = lambda i: build_trace(  # noqa: E731
            sub_seed(cfg.exo_seed() + i + 1, "exo"), cfg.sim.dt, cfg.sim.t_max,
            e.wind, e.pv_load, e.delay, e.mode == "stochastic")
    with _mapper(args.jobs) as map_fn:
        res = ev.monte_carlo(genome, trace, cfg.plant, cfg.sim, mc, cfg.controller,
                             map_fn=map_fn, trace_factory=factory)
    write_csv(out / "montecarlo.csv",
              ["run", "kp", "ki", "kd", "lam", "mu", "J", "penalized"], res.rows())
    corners = ev.corner_perturbation(genome, cfg.robust.delta, trace, cfg.plant, cfg.sim,
                                     cfg.controller)
    write_csv(out / "corners.csv", ["corner", "J", "J_nominal", "percent_change"], [
        ("plus", corners.J_plus, corners.J_nominal, corners.percent_plus),
        ("minus", corners.J_minus, corners.J_nominal, corners.percent_minus),
    ])
    write_json(out / "summary.json", {
        "genome": genome.as_dict(), "distribution": res.distribution, "n_runs": mc.n_runs,
        "mean_J": res.mean, "std_J": res.std, "n_penalized": int(res.penalized.sum()),
        "corner_percent_plus": corners.percent_plus,
        "corner_percent_minus": corners.percent_minus,
    })


def cmd_sweep(cfg: RunConfig, args, out: Path):
    genome = _genome(cfg, args.genome)
    trace = cfg.trace()
    if args.table:
        specs = ev.sensitivity_specs()
    else:
        specs = [ev.SweepSpec(cfg.eval.sweep_param, cfg.eval.sweep_change,
                              cfg.eval.sweep_reciprocal)]
    j_nom = integrate(genome, trace, cfg.plant, cfg.sim, cfg.controller, record=False).J
    with _mapper(args.jobs) as map_fn:
        results = list(map_fn(lambda s: ev.param_sweep(genome, s, trace, cfg.plant, cfg.sim,
                                                       cfg.controller, j_nom), specs))
    rows = [(ev.canonical_param(r.spec.param), r.spec.label, r.spec.factor, r.J_nominal, r.J,
             r.percent) for r in results]
    write_csv(out / "sweep.csv",
              ["param", "change", "factor", "J_nominal", "J", "percent_change"], rows)
    write_json(out / "summary.json", {"genome": genome.as_dict(), "J_nominal": j_nom,
                                      "rows": [dict(zip(("param", "change", "factor",
                                                         "J_nominal", "J", "percent_change"),
                                                        r)) for r in rows]})


COMMANDS = {"trace": cmd_trace, "simulate": cmd_simulate, "realize": cmd_realize,
            "optimize": cmd_optimize, "montecarlo": cmd_montecarlo, "sweep": cmd_sweep}


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig().validate()
        cfg = _apply_overrides(cfg, args)
        if args.jobs < 1:
            raise ConfigurationError("must be >= 1", "--jobs")
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.dump_config:
            (out / "config.json").write_text(dump_config(cfg.replace(out=".")))
        COMMANDS[args.command](cfg, args, out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
