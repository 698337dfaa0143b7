import numpy as np
import pytest

from fopid_agc.errors import ConfigurationError
from fopid_agc.evaluation import (McConfig, SweepSpec, apply_sweep, corner_perturbation,
                                  monte_carlo, param_sweep, perturbation_draws, sensitivity_specs)
from fopid_agc.exo import build_trace
from fopid_agc.foctrl import FoGenome
from fopid_agc.plant import PlantConfig
from fopid_agc.sim import SimConfig, fitness

SIM = SimConfig(t_max=30.0)
PLANT = PlantConfig()
GENOME = FoGenome(42.468, 16.565, 1.072, 1.024, 0.316)


@pytest.fixture(scope="module")
def trace():
    return build_trace(21, duration=30.0)


def test_degenerate_distribution_reproduces_nominal(trace):
    mc = McConfig(n_runs=4, delta=(0.0,) * 5)
    res = monte_carlo(GENOME, trace, PLANT, SIM, mc)
    assert res.mean == fitness(GENOME, trace, PLANT, SIM)
    assert res.std == 0.0


def test_negative_gain_draws_score_penalty(trace):
    genome = FoGenome(40.0, 5.0, 1.0, 1.0, 0.3)
    res = monte_carlo(genome, trace, PLANT, SIM, McConfig(n_runs=30, seed=2))
    negative = res.genomes[:, 1] < 0
    assert negative.any()
    np.testing.assert_array_equal(res.values[negative], 1e4)
    np.testing.assert_array_equal(res.penalized, res.values == 1e4)
    assert float(np.mean(res.values)) == pytest.approx(res.mean, abs=1e-12)


def test_monte_carlo_is_deterministic(trace):
    mc = McConfig(n_runs=6, distribution="gaussian", seed=11)
    a = monte_carlo(GENOME, trace, PLANT, SIM, mc)
    b = monte_carlo(GENOME, trace, PLANT, SIM, mc)
    np.testing.assert_array_equal(a.values, b.values)
    assert (a.mean, a.std) == (b.mean, b.std)


def test_draw_distributions():
    g = FoGenome(50, 50, 5, 1.0, 0.5)
    u = perturbation_draws(g, McConfig(n_runs=4000, seed=0))
    assert np.all(np.abs(u - g.as_vector()) <= np.array(McConfig().delta))
    n = perturbation_draws(g, McConfig(n_runs=4000, distribution="gaussian", seed=0))
    np.testing.assert_allclose(n.std(axis=0), np.array(McConfig().delta) / 3, rtol=0.05)
    pid = perturbation_draws(FoGenome(50, 50, 5), McConfig(n_runs=10, seed=0))
    np.testing.assert_array_equal(pid[:, 3:], 1.0)


def test_zero_sweep_reproduces_nominal_exactly(trace):
    nominal = fitness(GENOME, trace, PLANT, SIM)
    for param in ("m", "t_fess", "tau"):
        res = param_sweep(GENOME, SweepSpec(param, 0.0), trace, PLANT, SIM)
        assert res.J == nominal and res.percent == 0.0


def test_tied_parameters_move_together(trace):
    plant, _ = apply_sweep(SweepSpec("T_FESS=T_BESS", 50.0), PLANT, trace)
    assert (plant.t_fess, plant.t_bess) == pytest.approx((0.15, 0.15))
    _, longer = apply_sweep(SweepSpec("tau", 50.0), PLANT, trace)
    assert longer.params["delay"].low == pytest.approx(0.075)
    assert longer.tau_sc_steps.mean() > trace.tau_sc_steps.mean()


def test_reciprocal_decrease():
    spec = SweepSpec("d", 500.0, reciprocal=True)
    assert spec.factor == pytest.approx(1 / 6)
    assert len(sensitivity_specs()) == 16


def test_invalid_sweep_is_configuration_error(trace):
    with pytest.raises(ConfigurationError):
        param_sweep(GENOME, SweepSpec("t_deg", -100.0), trace, PLANT, SIM)
    with pytest.raises(ConfigurationError):
        param_sweep(GENOME, SweepSpec("tau", -150.0), trace, PLANT, SIM)
    with pytest.raises(ConfigurationError):
        apply_sweep(SweepSpec("x", 10.0), PLANT, trace)


def test_higher_damping_lowers_cost(trace):
    assert param_sweep(GENOME, SweepSpec("D", 500.0), trace, PLANT, SIM).percent < 0


def test_corners(trace):
    zero = corner_perturbation(GENOME, (0.0,) * 5, trace, PLANT, SIM)
    assert (zero.percent_plus, zero.percent_minus) == (0.0, 0.0)
    res = corner_perturbation(GENOME, (10, 10, 0.15, 0.2, 0.2), trace, PLANT, SIM)
    assert res.genome_minus.kp == pytest.approx(GENOME.kp - 10)
    assert np.isfinite(res.percent_plus) and np.isfinite(res.percent_minus)


def test_mc_config_validation():
    with pytest.raises(ConfigurationError):
        McConfig(n_runs=0).validate()
    with pytest.raises(ConfigurationError):
        McConfig(distribution="cauchy").validate()
    with pytest.raises(ConfigurationError):
        McConfig(distribution="gaussian", sigma_fraction=0.0).validate()
