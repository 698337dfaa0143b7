import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fopid_agc.errors import ConfigurationError
from fopid_agc.exo import build_trace
from fopid_agc.foctrl import FoGenome
from fopid_agc.plant import (FirstOrderBlock, PlantConfig, PlantState, RateLimiter, bs3_step,
                             first_order_step, plant_step, rate_limit)
from fopid_agc.sim import SimConfig, integrate

DT = 0.01


def observed_order(dts, t_end=1.0):
    errors = []
    for dt in dts:
        y = 1.0
        for k in range(int(round(t_end / dt))):
            y = bs3_step(lambda t, y: -y, k * dt, y, dt)
        errors.append(abs(y - math.exp(-t_end)))
    return np.log2(np.array(errors[:-1]) / np.array(errors[1:]))


def test_bs3_third_order():
    orders = observed_order([0.02, 0.01, 0.005])
    assert np.all((orders > 2.9) & (orders < 3.1))


def test_first_order_block_exact():
    block = FirstOrderBlock(gain=2.0, time_constant=1.5)
    for k in range(1, 401):
        y = first_order_step(block, 1.0, DT)
        assert y == pytest.approx(2.0 * (1 - math.exp(-k * DT / 1.5)), abs=1e-12)


@given(rate=st.floats(0.001, 5.0), targets=st.lists(st.floats(-10, 10), min_size=1, max_size=50))
def test_rate_limiter_bound(rate, targets):
    lim = RateLimiter(rate)
    prev = 0.0
    for target in targets:
        out = rate_limit(lim, target, DT)
        assert abs(out - prev) <= rate * DT * (1 + 1e-12)
        # never overshoots the target
        assert min(prev, target) - 1e-12 <= out <= max(prev, target) + 1e-12
        prev = out


def run_plant(cfg, steps, p_wind=0.0, p_pv=0.0, p_load=0.0, u=0.0, state=None):
    state = state or PlantState(cfg)
    rows = []
    for _ in range(steps):
        plant_step(state, cfg, u, p_wind, p_pv, p_load, DT)
        rows.append(state.x.copy())
    return state, np.array(rows)


def test_open_loop_swing_step():
    cfg = PlantConfig()
    _, x = run_plant(cfg, 30000, p_load=-0.1)
    t = np.arange(1, 30001) * DT
    exact = 0.1 / cfg.d * (1 - np.exp(-cfg.d * t / cfg.m))
    assert np.max(np.abs(x[:, -1] - exact)) < 1e-3


def test_swing_sign_flag_reverses_response():
    _, x = run_plant(PlantConfig(swing_sign=-1), 100, p_load=-0.1)
    assert x[-1, -1] < 0


@pytest.mark.parametrize("index,gain,tau,drive", [
    (0, 1.0, 1.5, {"p_wind": 1.0}),       # wtg
    (3, 1.0, 1.8, {"p_pv": 1.0}),         # pv
    (7, 0.003, 2.0, {"u": 1.0}),          # deg
    (8, -0.01, 0.1, {"u": 1.0}),          # fess
    (9, -0.003, 0.1, {"u": 1.0}),         # bess
])
def test_driven_block_step_responses(index, gain, tau, drive):
    _, x = run_plant(PlantConfig(), 1000, **drive)
    t = np.arange(1, 1001) * DT
    assert np.max(np.abs(x[:, index] - gain * (1 - np.exp(-t / tau)))) < 1e-4


def test_electrolyzer_and_fuel_cell_step_responses():
    cfg = PlantConfig()
    # hold the pv block at its equilibrium so the electrolyzer sees a clean step
    state = PlantState(cfg)
    state.x[3] = 1.0
    _, x = run_plant(cfg, 1000, p_pv=1.0, state=state)
    t = np.arange(1, 1001) * DT
    ae_step = cfg.k_ae * (1 - cfg.k_split)
    assert np.max(np.abs(x[:, 4] - ae_step * (1 - np.exp(-t / cfg.t_ae)))) < 1e-4

    state = PlantState(cfg)
    state.x[3] = 1.0
    state.x[4] = ae_step
    _, x = run_plant(cfg, 2000, p_pv=1.0, state=state)
    t = np.arange(1, 2001) * DT
    for j in (5, 6):
        exact = cfg.k_fc * ae_step * (1 - np.exp(-t / cfg.t_fc))
        assert np.max(np.abs(x[:, j] - exact)) < 1e-4


def test_component_powers_sum_to_supply():
    cfg = PlantConfig()
    state, _ = run_plant(cfg, 300, p_wind=0.5, p_pv=0.3, u=0.7)
    p = state.powers()
    renew = p["p_wtg"] + p["p_pv"]
    expected = cfg.k_split * renew + p["p_fc"] + p["p_deg"] + p["p_fess"] + p["p_bess"]
    assert p["p_s"] == pytest.approx(expected, rel=1e-12)


def test_slew_bounds_hold_over_stochastic_run():
    cfg = PlantConfig()
    trace = build_trace(3, duration=300.0)
    res = integrate(FoGenome(42.468, 16.565, 1.072, 1.024, 0.316), trace, cfg, SimConfig())
    assert res.stable
    for name, rate in (("p_deg", cfg.rate_deg), ("p_fess", cfg.rate_fess),
                       ("p_bess", cfg.rate_bess)):
        assert np.max(np.abs(np.diff(res.powers[name]))) <= rate * DT * (1 + 1e-9)


def test_non_finite_state_raises():
    cfg = PlantConfig()
    with pytest.raises(FloatingPointError):
        plant_step(PlantState(cfg), cfg, float("inf"), 0.0, 0.0, 0.0, DT)


@pytest.mark.parametrize("changes", [{"t_deg": 0.0}, {"m": -1.0}, {"d": 0.0},
                                     {"k_split": 1.5}, {"rate_bess": 0.0}, {"swing_sign": 2}])
def test_config_validation(changes):
    with pytest.raises(ConfigurationError):
        PlantConfig(**changes).validate()


def test_kernel_params_layout():
    cfg = PlantConfig()
    p = cfg.kernel_params()
    assert len(p) == 21
    assert (p[14], p[15], p[16]) == (cfg.m, cfg.d, cfg.k_split)
    assert cfg.n_states == 11
