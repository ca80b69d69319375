import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from archopt.bo import (
    BoAbort, BoConfig, _Models, bo_run, expected_improvement, lcb, maximin_select,
    min_euclidean_poi, min_probability_of_improvement, pareto_front, probability_of_improvement,
)
from archopt.design_space import Continuous, DesignSpace
from archopt.problems import Problem, get_problem
from archopt.record import RunRecord


class Quadratic2(Problem):
    name = "quadratic2"
    optimum = 0.0

    def __init__(self):
        super().__init__(DesignSpace([Continuous("a", -1.0, 1.0), Continuous("b", -1.0, 1.0)]))

    def _evaluate(self, X, A):
        return ((X[:, 0] - 0.2) ** 2 + (X[:, 1] + 0.3) ** 2)[:, None], np.zeros((len(X), 0))


class FailingQuadratic(Quadratic2):
    """Half of the box (a + b > 0) fails; the optimum lies in the viable half."""
    name = "failing_quadratic"
    optimum = 0.0

    def _evaluate(self, X, A):
        F, G = super()._evaluate(X, A)
        failed = X[:, 0] + X[:, 1] > 0
        return np.where(failed[:, None], np.nan, F), G


class AlwaysFailing(Quadratic2):
    def _evaluate(self, X, A):
        return np.full((len(X), 1), np.nan), np.zeros((len(X), 0))


def test_ei_poi_examples():
    assert expected_improvement([2.0], [0.0], 1.0)[0] == 0.0
    assert probability_of_improvement([2.0], [0.0], 1.0)[0] == 0.0
    assert expected_improvement([1.0], [1.0], 1.0)[0] == pytest.approx(0.3989422804, abs=1e-9)
    assert probability_of_improvement([1.0], [1.0], 1.0)[0] == 0.5
    assert expected_improvement([0.5], [0.0], 1.0)[0] == 0.5
    assert lcb([1.0], [0.5])[0] == 0.0


@given(st.floats(-5, 5), st.floats(0.01, 3), st.floats(-5, 5))
@settings(max_examples=100, deadline=None)
def test_ei_matches_integral(mu, s, y_min):
    # E[max(y_min - Y, 0)] for Y ~ N(mu, s), integrated up to the kink at y_min
    lb = min(mu - 12 * s, y_min)
    ref = stats.norm(mu, s).expect(lambda y: y_min - y, lb=lb, ub=y_min) if y_min > lb else 0.0
    assert expected_improvement([mu], [s], y_min)[0] == pytest.approx(ref, abs=1e-7)


def test_mpoi_dominating_prediction():
    front = np.array([[0.0, 1.0], [1.0, 0.0]])
    v = min_probability_of_improvement([[0.0, 0.0]], [[1e-9, 1e-9]], front)
    assert v[0] == pytest.approx(1.0)
    v0 = min_probability_of_improvement([[0.0, 0.0]], [[0.0, 0.0]], front)
    assert v0[0] == 1.0
    dominated = min_probability_of_improvement([[2.0, 2.0]], [[1e-9, 1e-9]], front)
    assert dominated[0] == pytest.approx(0.0)
    assert min_euclidean_poi([[0.0, 0.0]], [[1e-9, 1e-9]], front)[0] == pytest.approx(1.0)


def test_pareto_front_and_maximin():
    F = np.array([[1, 3], [2, 2], [3, 1], [2, 3], [np.nan, 0]], dtype=float)
    assert pareto_front(F).tolist() == [[1, 3], [2, 2], [3, 1]]
    C = np.array([[0.0, 0.0], [1.0, 1.0], [0.1, 0.1], [0.5, 0.5]])
    assert maximin_select(C, 2) == [0, 1]
    assert sorted(maximin_select(C, 3)) == [0, 1, 3]


def test_quadratic_convergence():
    p = Quadratic2()
    rec = bo_run(p, BoConfig(n_doe=9, n_infill=20, seed=0))
    assert len(rec) == 29
    assert np.min(rec.F) < 1e-2


def test_hidden_constraint_handling():
    p = FailingQuadratic()
    rec = bo_run(p, BoConfig(n_doe=20, n_infill=20, seed=1))
    viable = ~np.isnan(rec.F[:, 0])
    doe_fail = 1 - viable[:20].mean()
    infill_fail = 1 - viable[20:].mean()
    assert 0.2 < doe_fail < 0.8
    assert infill_fail < doe_fail
    models = _Models(p, BoConfig(n_doe=20, seed=1).resolved(p), rec.X, rec.A, rec.F, rec.G, 0)
    assert len(models.f_models[0].X_train_) == viable.sum()
    assert np.all(np.isfinite(models.f_models[0].y_mean_))
    pov = models.pov(rec.X)
    assert pov.min() >= 0 and pov.max() <= 1


def test_zero_viable_doe_aborts():
    with pytest.raises(BoAbort, match="no viable"):
        bo_run(AlwaysFailing(), BoConfig(n_doe=5, n_infill=2))


def test_batch_contract():
    p = get_problem("toy")
    rec = bo_run(p, BoConfig(n_doe=3, n_infill=4, n_batch=4, seed=0))
    X, it = rec.X, rec.iterations
    assert (it == 1).sum() == 4
    assert len({tuple(x) for x in X[it == 1]}) == 4
    assert len({tuple(x) for x in X}) == len(X)


def test_infills_valid_on_gnc():
    p = get_problem("gnc")
    for level in ("repair", "hier_sampling", "activeness"):
        rec = bo_run(p, BoConfig(n_infill=3, integration=level, seed=2))
        assert p.space.is_valid(rec.X).all()
        assert len(rec) == 51 + 3


def test_multi_objective_and_constraints():
    p = get_problem("gnc_multi")
    rec = bo_run(p, BoConfig(n_doe=20, n_infill=3, seed=0))
    assert rec.F.shape == (23, 2)
    t = get_problem("turbofan")
    for mode in ("mean", "pof"):
        rec = bo_run(t, BoConfig(n_doe=40, n_infill=2, constraint=mode, seed=0))
        assert rec.G.shape == (42, 5)
        assert t.space.is_valid(rec.X).all()


def test_config_defaults_and_validation():
    assert BoConfig().resolved(get_problem("gnc")).n_doe == 51
    assert BoConfig().resolved(get_problem("turbofan")).n_doe == 150
    assert BoConfig(n_doe_mult=2).resolved(get_problem("gnc")).n_doe == 34
    for bad in (dict(integration="naive"), dict(pov_min=0.0), dict(pov_min=1.0),
                dict(constraint="x"), dict(n_doe=1)):
        with pytest.raises(ValueError):
            BoConfig(**bad).resolved(get_problem("gnc"))


def test_determinism_and_resume(tmp_path):
    p = get_problem("toy")
    cfg = BoConfig(n_doe=3, n_infill=4, seed=7)
    path = tmp_path / "bo.jsonl"
    full = bo_run(p, cfg, out=str(path))
    again = bo_run(p, cfg)
    assert np.array_equal(full.X, again.X)
    lines = path.read_text().splitlines(keepends=True)
    part = tmp_path / "part.jsonl"
    part.write_text("".join(lines[:5]))
    resumed = bo_run(p, cfg, resume=RunRecord.read(str(part)), out=str(part))
    assert np.array_equal(resumed.X, full.X)
    assert part.read_text() == path.read_text()
