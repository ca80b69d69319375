import math
import warnings

import numpy as np
import pytest

from oracles import gnc_failure_monte_carlo, gnc_valid_count, union_area
from archopt.bench import hypervolume_2d
from archopt.metrics import hierarchy_stats
from archopt.problems import (
    PROBLEMS, GNCProblem, compute_gnc_reference, get_problem, gnc_failure_probability,
    gnc_unit_failure, gnc_unit_mass, turbofan_failure_indicator,
)
from archopt.sampling import SamplingShortfallWarning, sample_hierarchical


def _random_valid(space, n, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SamplingShortfallWarning)
        return sample_hierarchical(space, n, seed=seed)


def _scramble_inactive(space, X, rng):
    A = space.activeness(X)
    R = space.round(rng.uniform(space.lower, space.upper, size=X.shape))
    return np.where(A, X, R)


def test_registry():
    for name in PROBLEMS:
        assert get_problem(name).name == name
    assert get_problem("gnc").name == "gnc_so_scalarized"
    with pytest.raises(KeyError):
        get_problem("rocket")


def test_toy_counts_and_optimum():
    p = get_problem("toy")
    s = hierarchy_stats(p.space)
    assert p.space.declared_size() == 16
    assert s.n_valid_discr == 8
    assert s.mrd == pytest.approx(0.5)
    X, _ = p.space.enumerate_valid()
    F, G = p.evaluate(X)
    assert F.min() == pytest.approx(p.optimum)
    assert G.shape == (8, 0)


def test_toy_formula():
    p = get_problem("toy")
    # one source, two consumers: 0.4 + (1.0 + 0.6) - 0.7
    assert p.evaluate([0, 1, 0, 0])[0][0] == pytest.approx(1.3)
    # two sources, consumers on different sources: 0.8 + 1.0 - 0.7
    assert p.evaluate([1, 1, 1, 0])[0][0] == pytest.approx(1.1)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_inactive_value_independence(name):
    p = get_problem(name)
    rng = np.random.default_rng(3)
    X = _random_valid(p.space, 60, seed=1)
    F1, G1 = p.evaluate(X)
    F2, G2 = p.evaluate(_scramble_inactive(p.space, X, rng))
    np.testing.assert_array_equal(F1, F2)
    np.testing.assert_array_equal(G1, G2)
    F3, G3 = p.evaluate(p.space.impute(X))
    np.testing.assert_array_equal(F1, F3)
    np.testing.assert_array_equal(G1, G3)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_deterministic(name):
    p = get_problem(name)
    X = _random_valid(p.space, 40, seed=2)
    F1, G1 = p.evaluate(X)
    F2, G2 = get_problem(name).evaluate(X)
    np.testing.assert_array_equal(F1, F2)
    np.testing.assert_array_equal(G1, G2)


def test_gnc_counts():
    p = get_problem("gnc")
    X, _ = p.space.enumerate_valid()
    assert len(X) == 327 == gnc_valid_count()
    single = (X[:, 0] == 0) & (X[:, 1] == 0)
    assert single.sum() == 1


def test_gnc_unit_tables():
    assert gnc_unit_failure(0.0) == pytest.approx(0.1)
    assert gnc_unit_failure(1.0) == pytest.approx(1e-4)
    assert gnc_unit_mass(0.0) == 1.0 and gnc_unit_mass(1.0) == 10.0
    assert np.all(np.diff(gnc_unit_failure(np.linspace(0, 1, 11))) < 0)


def test_gnc_single_pair():
    assert gnc_failure_probability([0.1], [0.1], [[1]]) == pytest.approx(0.19)
    p = GNCProblem("multi")
    x = p.space.canonical.copy()  # 1 sensor, 1 computer, types at 0.5
    x[p.space.index("type_sensor0")] = 0.0
    x[p.space.index("type_computer0")] = 0.0
    x[p.space.index("conn_s0_c0")] = 1
    f, _ = p.evaluate(x)
    assert f[0] == pytest.approx(3.0)
    assert f[1] == pytest.approx(math.log10(0.19))


def test_gnc_failure_matches_monte_carlo():
    rng = np.random.default_rng(0)
    for _ in range(5):
        n_s, n_c = rng.integers(1, 4, size=2)
        conn = rng.random((n_s, n_c)) < 0.6
        conn[np.arange(n_s), rng.integers(n_c, size=n_s)] = True
        p_s = gnc_unit_failure(rng.uniform(0, 0.3, n_s))
        p_c = gnc_unit_failure(rng.uniform(0, 0.3, n_c))
        exact = gnc_failure_probability(p_s, p_c, conn)
        n = 10 ** 6
        est = gnc_failure_monte_carlo(p_s, p_c, conn, n, rng)
        sigma = math.sqrt(exact * (1 - exact) / n)
        assert abs(est - exact) <= 3 * sigma + 1e-12


def test_gnc_single_objective_optima():
    p = GNCProblem("so_failure")
    x = p.space.canonical.copy()
    x[:2] = 2
    x[2:11] = 1
    x[11:17] = 1.0
    assert p.evaluate(x)[0][0] == pytest.approx(p.optimum, abs=1e-9)
    assert p.optimum == pytest.approx(math.log10(2e-12 - 1e-24))
    assert GNCProblem("so_weight").optimum == 3.0
    # no sampled design beats the stored scalarized optimum
    q = GNCProblem("so_scalarized")
    X = _random_valid(q.space, 3000, seed=5)
    assert q.evaluate(X)[0].min() >= q.optimum - 1e-9


def test_gnc_front_dominates_samples():
    p = GNCProblem("multi")
    front = p.front
    assert np.all(np.diff(front[:, 0]) > 0) and np.all(np.diff(front[:, 1]) < 0)
    F, _ = p.evaluate(_random_valid(p.space, 3000, seed=6))
    ref = np.array([70.0, 0.0])
    assert hypervolume_2d(F, ref) < hypervolume_2d(front, ref)
    assert hypervolume_2d(front[:40], ref) == pytest.approx(union_area(front[:40].tolist(), ref))


@pytest.mark.slow
def test_gnc_reference_recomputes():
    ref = compute_gnc_reference()
    p = GNCProblem("so_scalarized")
    assert ref["optimum"]["so_scalarized"] == pytest.approx(p.optimum, abs=1e-9)
    np.testing.assert_allclose(ref["front"], GNCProblem("multi").front, atol=1e-9)


def test_turbofan_failure_fraction():
    p = get_problem("turbofan")
    rates = []
    for seed in range(5):
        F, _ = p.evaluate(sample_hierarchical(p.space, 1000, seed=seed))
        rates.append(np.isnan(F[:, 0]).mean())
    assert abs(np.mean(rates) - 0.5) <= 0.05


def test_turbofan_failure_is_all_nan_and_stable():
    p = get_problem("turbofan")
    X = _random_valid(p.space, 200, seed=4)
    F, G = p.evaluate(X)
    failed = np.isnan(F[:, 0])
    assert np.array_equal(failed, np.isnan(G).all(axis=1))
    assert np.array_equal(failed, turbofan_failure_indicator(p.space.impute(X)) > p.failure_threshold)
    assert np.array_equal(failed, np.isnan(p.evaluate(X)[0][:, 0]))


def test_turbofan_reference_optimum():
    p = get_problem("turbofan")
    x = p.optimum_x
    assert p.space.is_valid(x)
    f, g = p.evaluate(x)
    assert f[0] == pytest.approx(p.optimum, abs=1e-9)
    assert np.all(g <= 1e-9)
    F, G = p.evaluate(_random_valid(p.space, 4000, seed=8))
    ok = ~np.isnan(F[:, 0]) & np.all(G <= 0, axis=1)
    assert F[ok, 0].min() > p.optimum


@pytest.mark.parametrize("name", ["gnc", "turbofan"])
def test_hooks_make_vectors_correct(name):
    p = get_problem(name)
    assert p.has_hook
    rng = np.random.default_rng(0)
    X = p.space.round(rng.uniform(p.space.lower, p.space.upper, size=(200, p.space.n_x)))
    out = p.correction_hook(X)
    assert p.space.is_correct(p.space.round(out)).all()
    assert p.corrector().mode_ == "problem_specific"
    assert p.space.is_valid(p.corrector().transform(X)).all()


def test_toy_has_no_hook():
    assert not get_problem("toy").has_hook
