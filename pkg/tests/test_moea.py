import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_fronts
from archopt.design_space import Continuous, DesignSpace
from archopt.moea import (
    INTEGRATION_LEVELS, MoeaConfig, NSGA2, barrier, constraint_violation, crowding_distance,
    domination_matrix, nondominated_fronts, nsga2_run,
)
from archopt.problems import Problem, get_problem
from archopt.record import RunRecord


class Quadratic(Problem):
    name = "quadratic"
    optimum = 0.0

    def __init__(self, n=3):
        super().__init__(DesignSpace([Continuous(f"x{i}", -1.0, 1.0) for i in range(n)]))

    def _evaluate(self, X, A):
        return ((X - 0.3) ** 2).sum(axis=1)[:, None], np.zeros((len(X), 0))


class HalfFailing(Quadratic):
    """Evaluations with x0 < 0 fail; one constraint x1 <= 0.5."""
    n_g = 1

    def _evaluate(self, X, A):
        F, _ = super()._evaluate(X, A)
        G = (X[:, 1] - 0.5)[:, None]
        failed = X[:, 0] < 0
        return np.where(failed[:, None], np.nan, F), np.where(failed[:, None], np.nan, G)


class CountingCorrector:
    """Wraps a corrector and counts the invalid vectors it receives."""

    def __init__(self, inner, space):
        self.inner, self.space, self.n_invalid = inner, space, 0

    def transform(self, X, seed=None):
        self.n_invalid += int((~self.space.is_valid(X)).sum())
        return self.inner.transform(X, seed=seed)


def test_fronts_example():
    F = np.array([[1, 3], [2, 2], [3, 1], [2, 3]], dtype=float)
    fronts = nondominated_fronts(F)
    assert [f.tolist() for f in fronts] == [[0, 1, 2], [3]]


def test_crowding_boundaries_infinite():
    d = crowding_distance(np.array([[1, 3], [2, 2], [3, 1], [1.5, 2.5]], dtype=float))
    assert np.isinf(d[0]) and np.isinf(d[2])
    assert np.all(np.isfinite(d[[1, 3]]))


def test_constrained_domination():
    F = np.array([[5.0], [1.0], [0.0], [0.0]])
    cv = np.array([0.0, 0.0, 2.0, 1.0])
    D = domination_matrix(F, cv)
    assert D[0, 2] and D[0, 3] and D[1, 0]  # feasible beats infeasible
    assert D[3, 2] and not D[2, 3]  # smaller violation wins
    assert constraint_violation([[1.0, -2.0, 0.5]]).tolist() == [1.5]


def test_barrier_marks_failures():
    F, cv = barrier(np.array([[1.0], [np.nan]]), np.array([[0.0], [np.nan]]))
    assert F[1, 0] == np.inf and cv[1] == np.inf and cv[0] == 0


@given(st.integers(1, 50), st.integers(1, 3), st.integers(0, 10 ** 6), st.booleans())
@settings(max_examples=60, deadline=None)
def test_sorting_matches_brute_force(n, m, seed, constrained):
    rng = np.random.default_rng(seed)
    F = rng.integers(0, 5, size=(n, m)).astype(float)
    cv = np.where(rng.random(n) < 0.3, rng.integers(1, 4, n), 0).astype(float) if constrained else np.zeros(n)
    got = [sorted(f.tolist()) for f in nondominated_fronts(F, cv)]
    assert got == brute_fronts(F.tolist(), cv.tolist())


def test_quadratic_convergence():
    p = Quadratic()
    rec = nsga2_run(p, MoeaConfig(pop_size=20, n_gen=25, seed=0))
    assert len(rec) == 20 * 26
    assert np.min(rec.F) < 1e-2


def test_elitism_and_determinism():
    p = Quadratic()
    best = []
    rec = nsga2_run(p, MoeaConfig(pop_size=12, n_gen=15, seed=4),
                    callback=lambda g, X, F, cv: best.append(F[cv <= 0, 0].min()))
    assert all(b <= a for a, b in zip(best, best[1:]))
    again = nsga2_run(p, MoeaConfig(pop_size=12, n_gen=15, seed=4))
    assert np.array_equal(rec.X, again.X) and np.array_equal(rec.F, again.F)
    other = nsga2_run(p, MoeaConfig(pop_size=12, n_gen=15, seed=5))
    assert not np.array_equal(rec.X, other.X)


def test_budget_truncation():
    rec = nsga2_run(Quadratic(), MoeaConfig(pop_size=20, n_eval=45, seed=0))
    assert len(rec) == 45
    assert rec.iterations.tolist() == [0] * 20 + [1] * 20 + [2] * 5


def test_config_validation():
    space = Quadratic().space
    assert MoeaConfig(pop_size=7, n_gen=1).resolved(space).pop_size == 8
    assert MoeaConfig(n_gen=1).resolved(space).pop_size == 30
    with pytest.raises(ValueError):
        MoeaConfig(pop_size=2, n_gen=1).resolved(space)
    with pytest.raises(ValueError):
        MoeaConfig(pop_size=10).resolved(space)
    with pytest.raises(ValueError):
        MoeaConfig(pop_size=10, n_gen=1, integration="magic").resolved(space)


def test_failed_points_never_survive_when_avoidable():
    p = HalfFailing()
    final = {}

    def cb(g, X, F, cv):
        final["F"], final["cv"] = F, cv

    rec = nsga2_run(p, MoeaConfig(pop_size=20, n_gen=10, seed=1), callback=cb)
    assert np.isnan(rec.F).any()
    assert np.all(np.isfinite(final["F"]))
    assert np.all(final["cv"] <= 0)


@pytest.mark.parametrize("level", INTEGRATION_LEVELS)
def test_integration_levels(level):
    p = get_problem("gnc")
    counter = CountingCorrector(p.corrector(), p.space)
    rec = nsga2_run(p, MoeaConfig(pop_size=20, n_eval=80, integration=level, seed=0),
                    problem_corrector=counter)
    valid = p.space.is_valid(rec.X)
    if level == "naive":
        assert counter.n_invalid > 0 and not valid.all()
    else:
        assert valid.all()
    if level in ("repair", "hier_sampling", "activeness"):
        assert counter.n_invalid == 0
    if level == "x_out":
        assert counter.n_invalid > 0


def test_activeness_mutation_only_touches_active():
    space = get_problem("gnc").space
    X = space.impute(space.round(np.zeros((200, space.n_x))))
    eng = NSGA2(space, 10, p_mut=0.5, active_mutation=True)
    Y = eng.mutate(X, np.random.default_rng(0))
    A = space.activeness(X)
    assert np.array_equal(Y[~A], X[~A])
    assert not np.array_equal(Y[A], X[A])


def test_resume_reproduces_run(tmp_path):
    p = get_problem("toy")
    cfg = MoeaConfig(pop_size=8, n_eval=40, seed=3)
    full = nsga2_run(p, cfg)
    path = tmp_path / "run.jsonl"
    nsga2_run(p, cfg, out=str(path))
    lines = path.read_text().splitlines(keepends=True)
    partial = tmp_path / "partial.jsonl"
    partial.write_text("".join(lines[:20]) + lines[20][:15])  # cut mid-line
    resumed = nsga2_run(p, cfg, resume=RunRecord.read(str(partial)), out=str(partial))
    assert np.array_equal(resumed.X, full.X) and np.array_equal(resumed.F, full.F)
    assert partial.read_text() == path.read_text()
