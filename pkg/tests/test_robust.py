import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fopid_agc.errors import ConfigurationError
from fopid_agc.robust import (Archive, EvalAccounting, RobustObjective, RobustParams,
                              archive_cleanup, effective_fitness, in_box, latin_hypercube,
                              savings_report)


def square(x):
    return float(np.sum(np.asarray(x) ** 2))


@given(n=st.integers(1, 30), dims=st.integers(1, 5), seed=st.integers(0, 2**31))
def test_latin_hypercube_stratifies_every_axis(n, dims, seed):
    lo, hi = -np.ones(dims), 3 * np.ones(dims)
    pts = latin_hypercube(n, lo, hi, np.random.default_rng(seed))
    assert pts.shape == (n, dims)
    assert np.all(in_box(pts, lo, hi))
    strata = np.floor((pts - lo) / (hi - lo) * n).astype(int)
    for axis in range(dims):
        assert sorted(strata[:, axis]) == list(range(n))


def test_without_archive_is_plain_lhs_mean():
    params = RobustParams(delta=(1.0,), n_samples=8, use_archive=False)
    acct = EvalAccounting()
    seen = []

    def f(x):
        seen.append(float(x[0]))
        return float(x[0]) ** 2

    value = effective_fitness(np.array([0.5]), None, f, params, np.random.default_rng(0), acct)
    assert value == pytest.approx(np.mean(np.square(seen)), rel=1e-15)
    assert acct.actual_evals == 8 and acct.served_from_archive == 0


def test_repeated_estimates_reuse_archive():
    params = RobustParams(delta=(1.0, 1.0), n_samples=10)
    obj = RobustObjective(square, params, np.random.default_rng(1))
    for _ in range(30):
        obj(np.array([0.2, -0.1]))
    acct = obj.accounting
    assert acct.effective_evals == 30
    assert acct.actual_evals + acct.served_from_archive == 300
    assert acct.actual_evals < 150
    assert obj.savings() == acct.actual_evals / 300
    assert [row[0] for row in obj.archive_trace] == list(range(1, 31))


def test_estimate_uses_only_box_points():
    params = RobustParams(delta=(1.0,), n_samples=5)
    archive = Archive(1)
    # far-away archive entries must neither be averaged nor serve candidates
    archive.add(np.array([[10.0], [11.0]]), np.array([1e6, 1e6]))
    value = effective_fitness(np.array([0.0]), archive, square, params,
                              np.random.default_rng(2))
    assert value < 1.0
    assert len(archive) == 7


def test_archive_fifo_cleanup():
    a = Archive(2, cap=5)
    a.add(np.arange(16.0).reshape(8, 2), np.arange(8.0))
    archive_cleanup(a)
    assert len(a) == 5
    np.testing.assert_array_equal(a.values, [3, 4, 5, 6, 7])
    np.testing.assert_array_equal(a.ids, [3, 4, 5, 6, 7])


def test_archive_cap_respected_during_run():
    params = RobustParams(delta=(0.5, 0.5), n_samples=10, archive_cap=40)
    obj = RobustObjective(square, params, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    for _ in range(50):
        obj(rng.uniform(-3, 3, 2))
    assert max(row[2] for row in obj.archive_trace) <= 40


def test_clip_to_bounds_option():
    params = RobustParams(delta=(1.0,), n_samples=20, use_archive=False, clip_to_bounds=True)
    seen = []

    def f(x):
        seen.append(float(x[0]))
        return 0.0

    effective_fitness(np.array([0.2]), None, f, params, np.random.default_rng(0),
                      bounds=(np.array([0.0]), np.array([5.0])))
    assert min(seen) >= 0.0


def test_same_seed_same_estimates():
    def run():
        obj = RobustObjective(square, RobustParams(delta=(1.0, 1.0)), np.random.default_rng(9))
        return [obj(np.array([x, -x])) for x in np.linspace(-1, 1, 15)]

    assert run() == run()


def test_validation_and_report():
    with pytest.raises(ConfigurationError):
        RobustParams(delta=(1.0, 0.0)).validate()
    with pytest.raises(ConfigurationError):
        RobustParams(n_samples=0).validate()
    with pytest.raises(ValueError):
        savings_report(EvalAccounting(), 10)
    assert RobustParams().for_dims(3).delta == (10.0, 10.0, 0.15)
