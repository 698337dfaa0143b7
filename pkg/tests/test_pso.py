from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fopid_agc.errors import ConfigurationError
from fopid_agc.pso import (SwarmParams, ccpso_repulsion, constriction, cpso_velocity,
                           fips_velocity, optimize, pair_repulsion, ring_neighbors)

CHI = 0.7298437881283576  # 2 / |2 - 4.1 - sqrt(4.1^2 - 4 * 4.1)|


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def unit_params(**kw):
    base = dict(lower=(-5.0, -5.0), upper=(5.0, 5.0), delta=(1.0, 1.0), budget=300)
    base.update(kw)
    return SwarmParams(**base)


def test_constriction_value():
    assert constriction(4.1) == pytest.approx(CHI, rel=1e-15)
    assert SwarmParams().chi == pytest.approx(CHI, rel=1e-15)


def test_cpso_hand_update():
    p = unit_params()
    v = cpso_velocity(np.array([1.0, 2.0]), np.array([0.5, -0.5]), np.array([2.0, 2.0]),
                      np.array([0.0, 4.0]), p, np.array([0.5, 0.25]), np.array([0.1, 1.0]))
    # dim 0: 0.5 + 2.8*0.5*1 + 1.3*0.1*(-1) = 1.77 ; dim 1: -0.5 + 0 + 1.3*1*2 = 2.1
    np.testing.assert_allclose(v, [CHI * 1.77, CHI * 2.1], rtol=1e-12)


def test_fips_hand_update():
    p = unit_params()
    nbrs = np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, -1.0]])
    v = fips_velocity(np.zeros(2), np.zeros(2), nbrs, p, np.array([1.0, 0.5, 0.2]))
    # (2.8 / 3) * ([1, 0] + [0, 1] + [-0.2, -0.2]) = (2.8 / 3) * [0.8, 0.8]
    np.testing.assert_allclose(v, CHI * 2.8 / 3 * np.array([0.8, 0.8]), rtol=1e-12)
    with pytest.raises(ConfigurationError):
        fips_velocity(np.zeros(2), np.zeros(2), np.empty((0, 2)), p, np.empty(0))


def test_repulsion_regimes():
    p = unit_params(delta=(10.0, 10.0))  # r_core 1, r_perception 20
    np.testing.assert_allclose(pair_repulsion([3.0, 4.0], [0.0, 0.0], p), [0.024, 0.032])
    np.testing.assert_allclose(pair_repulsion([0.3, 0.4], [0.0, 0.0], p), [0.6, 0.8])
    np.testing.assert_array_equal(pair_repulsion([15.0, 20.0], [0.0, 0.0], p), [0.0, 0.0])
    np.testing.assert_array_equal(pair_repulsion([1.0, 1.0], [1.0, 1.0], p), [1.0, 0.0])


@given(a=st.lists(st.floats(-30, 30), min_size=3, max_size=3),
       b=st.lists(st.floats(-30, 30), min_size=3, max_size=3))
def test_repulsion_is_antisymmetric_and_bounded(a, b):
    p = SwarmParams(lower=(-50,) * 3, upper=(50,) * 3, delta=(10.0,) * 3)
    pos = np.array([a, b])
    f_ab, f_ba = ccpso_repulsion(0, pos, p), ccpso_repulsion(1, pos, p)
    np.testing.assert_allclose(f_ab, -f_ba, atol=1e-15)
    assert np.linalg.norm(f_ab) <= p.charge / p.r_core**2 * (1 + 1e-12)


def test_uncharged_particles_feel_nothing():
    p = unit_params()
    pos = np.array([[0.0, 0.0], [0.5, 0.0]])
    np.testing.assert_array_equal(ccpso_repulsion(0, pos, p, np.array([False, True])), 0.0)


def test_ring_neighbors_wrap():
    assert ring_neighbors(0, 5) == [4, 0, 1]
    assert ring_neighbors(4, 5) == [3, 4, 0]


@pytest.mark.parametrize("variant", ["cpso", "fips", "ccpso"])
def test_budget_history_and_bounds(variant):
    p = unit_params(budget=100)
    seen = []
    res = optimize(sphere, p, variant, rng=1, callback=lambda g, x: seen.append(x))
    assert res.n_evals == 100 and len(res.history) == 100
    assert np.all(np.diff(res.history[:, 1]) <= 0)
    assert res.best_fitness == res.history[-1, 1] == sphere(res.best_position)
    lo, hi = p.bounds
    assert all(np.all((x >= lo) & (x <= hi)) for x in seen)


@given(seed=st.integers(0, 2**32 - 1))
def test_positions_stay_in_bounds(seed):
    p = unit_params(budget=90, lower=(-1.0, 2.0), upper=(1.0, 3.0))
    res = optimize(lambda x: -x[0], p, "cpso", rng=seed)
    lo, hi = p.bounds
    assert np.all((res.best_positions >= lo) & (res.best_positions <= hi))


def test_same_seed_same_run_and_parallel_map():
    p = unit_params(budget=200)
    a = optimize(sphere, p, "ccpso", rng=5)
    b = optimize(sphere, p, "ccpso", rng=5)
    with ThreadPoolExecutor(3) as pool:
        c = optimize(sphere, p, "ccpso", rng=5, map_fn=pool.map)
    np.testing.assert_array_equal(a.history, b.history)
    np.testing.assert_array_equal(a.history, c.history)


def test_fips_finds_sphere_minimum():
    res = optimize(sphere, unit_params(budget=1500), "fips", rng=0)
    assert res.best_fitness < 1e-6


def test_parameter_validation():
    with pytest.raises(ConfigurationError):
        unit_params(budget=10).validate()
    with pytest.raises(ConfigurationError):
        unit_params(beta1=1.0, beta2=1.0).validate()
    with pytest.raises(ConfigurationError):
        unit_params(lower=(1.0, 1.0), upper=(0.0, 2.0)).validate()
    with pytest.raises(ConfigurationError):
        optimize(sphere, unit_params(), "pso", rng=0)
