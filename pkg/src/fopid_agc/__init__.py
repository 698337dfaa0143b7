"""Robust fractional-order PID tuning for load-frequency control of a hybrid microgrid.

Modules: ``foctrl`` (Oustaloup realization and the discrete FOPID), ``plant``
(hybrid-system dynamics), ``exo`` (stochastic inputs and delays), ``sim``
(closed loop and objective), ``pso`` (swarm optimizers), ``robust`` (archive-assisted
effective fitness), ``evaluation`` (Monte-Carlo, sweeps, corners), ``config`` and ``cli``.
"""
from .errors import ConfigurationError, InfeasibleGenomeError
from .exo import DelayParams, ExoTrace, PvLoadParams, WindParams, build_trace, zero_trace
from .foctrl import Controller, ControllerConfig, FoGenome, OraSpec, discretize, oustaloup_realize
from .plant import PlantConfig
from .pso import SwarmParams, optimize
from .robust import RobustObjective, RobustParams, effective_fitness
from .sim import ClosedLoopFitness, SimConfig, fitness, integrate

__version__ = "0.1.0"
