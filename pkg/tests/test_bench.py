import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import t_test_p, union_area
from archopt.bench import (
    aggregate_ranks, delta_hv, delta_hv_ratio, hypervolume_2d, rank_configs, rank_records,
    reference_point, regret, run_matrix, t_test_pvalue,
)
from archopt.moea import MoeaConfig, nsga2_run
from archopt.problems import get_problem
from archopt.record import SCHEMA_VERSION, RunRecord, SchemaError


class _P:
    def __init__(self, n_f=1, optimum=None, front=None):
        self.n_f, self.optimum, self.front = n_f, optimum, front


def _record(F, G=None):
    F = np.atleast_2d(np.asarray(F, float))
    G = np.zeros((len(F), 0)) if G is None else np.asarray(G, float)
    rec = RunRecord()
    rec.append(0, np.zeros((len(F), 1)), np.ones((len(F), 1), bool), F, G)
    return rec


def test_regret_examples():
    assert regret([1.0, 0.5]).tolist() == [0.0, 0.75]
    assert regret([1.0, 0.5, 0.25]).tolist() == [0.0, 0.75, 1.125]
    assert regret([0.3, 0.3], n_step=4)[-1] == pytest.approx(4 * 0.3)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_regret_nondecreasing(series):
    r = regret(series)
    assert r[0] == 0 and np.all(np.diff(r) >= 0)


def test_hypervolume_examples():
    assert hypervolume_2d([[0, 0]], [1, 1]) == 1.0
    assert hypervolume_2d([[0.25, 0.75], [0.5, 0.5]], [1, 1]) == pytest.approx(0.3125)
    assert hypervolume_2d([[2, 0]], [1, 1]) == 0.0


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=12),
       st.tuples(st.floats(0, 1), st.floats(0, 1)))
@settings(max_examples=100, deadline=None)
def test_hypervolume_matches_union_and_is_monotone(points, extra):
    ref = (1.0, 1.0)
    hv = hypervolume_2d(points, ref)
    assert hv == pytest.approx(union_area(points, ref), abs=1e-12)
    assert hypervolume_2d(points + [extra], ref) >= hv - 1e-12


def test_reference_point():
    ref = reference_point([[0.0, 2.0], [1.0, 0.0]])
    assert ref.tolist() == pytest.approx([1.1, 2.2])
    ref = reference_point([[3.0, -11.7], [69.0, -0.7]])
    assert ref[1] > -0.7


def test_delta_hv_single_objective():
    p = _P(optimum=0.0)
    s = delta_hv(_record([[4.0], [2.0], [np.nan], [0.0]]), p)
    assert s.tolist() == [1.0, 0.5, 0.5, 0.0]
    assert delta_hv_ratio(s)[0] == 1.0
    assert delta_hv(_record([[0.0], [0.0]]), p).tolist() == [0.0, 0.0]  # degenerate range
    # infeasible points do not count as best
    s = delta_hv(_record([[4.0], [1.0]], G=[[0.0], [1.0]]), p)
    assert s.tolist() == [1.0, 1.0]


def test_delta_hv_multi_objective():
    p = _P(n_f=2, front=np.array([[0.0, 1.0], [1.0, 0.0]]))
    s = delta_hv(_record([[2.0, 2.0], [0.0, 1.0], [1.0, 0.0]]), p)
    assert s[0] == 1.0 and s[-1] == pytest.approx(0.0)
    assert np.all(np.diff(s) <= 0)


def test_delta_hv_of_runs_nonincreasing():
    p = get_problem("gnc")
    rec = nsga2_run(p, MoeaConfig(pop_size=10, n_eval=60, seed=0))
    s = delta_hv(rec, p, start=10)
    assert np.all(np.diff(s) <= 0)
    r = delta_hv_ratio(s)
    assert r[0] == 1.0 and np.all(np.diff(r) <= 0)


def test_rank_examples():
    assert rank_configs([(1.0, 0.1, 16), (1.0, 0.1, 16), (2.0, 0.1, 16)]).ranks.tolist() == [1, 1, 2]
    assert rank_configs([(1.0, 0.5, 8)] * 4).ranks.tolist() == [1, 1, 1, 1]
    assert rank_configs([(3.0, 0.1, 10), (1.0, 0.1, 10), (2.0, 0.1, 10)]).ranks.tolist() == [3, 1, 2]
    assert rank_configs([(1.0, 0.1, 10), (2.0, 0.1, 10)], minimize=False).ranks.tolist() == [2, 1]


def test_rank_compares_against_rank_reference():
    # b cannot be told apart from a, so a stays the reference; c is compared
    # with a (not with its neighbour b) and gets rank 2
    r = rank_configs({"a": (1.0, 0.5, 10), "b": (1.3, 0.5, 10), "c": (1.6, 0.5, 10)})
    assert r.as_dict() == {"a": 1, "b": 1, "c": 2}


def test_zero_variance():
    assert t_test_pvalue(1.0, 0.0, 5, 1.0, 0.0, 5) == 1.0
    assert t_test_pvalue(1.0, 0.0, 5, 2.0, 0.0, 5) == 0.0


def test_pvalues_match_reference():
    rng = np.random.default_rng(0)
    for _ in range(100):
        m1, m2 = rng.normal(size=2)
        s1, s2 = rng.uniform(0.05, 2, size=2)
        n1, n2 = rng.integers(2, 40, size=2)
        assert t_test_pvalue(m1, s1, n1, m2, s2, n2) == pytest.approx(
            t_test_p(m1, s1, n1, m2, s2, n2), abs=1e-6)


def test_randomized_rank_tables_match_hand_procedure():
    rng = np.random.default_rng(1)
    for _ in range(100):
        k = rng.integers(2, 7)
        rows = [(float(rng.normal()), float(rng.uniform(0.1, 1)), int(rng.integers(2, 20))) for _ in range(k)]
        order = sorted(range(k), key=lambda i: rows[i][0])
        ranks = {order[0]: 1}
        ref, cur = order[0], 1
        for i in order[1:]:
            if t_test_p(*rows[ref], *rows[i]) <= 0.10:
                cur, ref = cur + 1, i
            ranks[i] = cur
        assert rank_configs(rows).ranks.tolist() == [ranks[i] for i in range(k)]


def test_rank_duplicate_invariance():
    stats = {"a": (1.0, 0.2, 10), "b": (1.5, 0.2, 10), "c": (3.0, 0.2, 10)}
    base = rank_configs(stats).as_dict()
    dup = rank_configs(stats | {"b2": stats["b"]}).as_dict()
    assert {k: dup[k] for k in base} == base and dup["b2"] == dup["b"]


def test_aggregation_selection():
    ranks = {
        "p1": {"A": 1, "B": 1, "C": 2},
        "p2": {"A": 2, "B": 1, "C": 1},
        "p3": {"A": 2, "B": 3, "C": 1},
        "p4": {"A": 1, "B": 1, "C": 3},
    }
    agg = aggregate_ranks(ranks)
    # rank <= 2 shares: A 100 %, B 75 %, C 75 %; A wins despite fewer rank-1 results than B
    assert agg["table"]["A"]["rank2"] == 1.0 and agg["table"]["B"]["rank1"] == 0.75
    assert agg["best"] == "A"
    ranks["p3"]["B"] = 2
    agg = aggregate_ranks(ranks, {p: {"A": 1.0, "B": 1.0, "C": 2.0} for p in ranks})
    assert agg["best"] == "B"  # tie on rank <= 2, B has more rank-1 results
    assert agg["table"]["C"]["penalty"] == pytest.approx(1.0)


def test_record_round_trip(tmp_path):
    rec = _record([[1.0], [np.nan], [np.inf]], G=[[0.5], [np.nan], [-1.0]])
    rec.meta = {"problem": "x", "seed": 3}
    path = tmp_path / "r.jsonl"
    rec.write(str(path))
    back = RunRecord.read(str(path))
    assert back.meta == rec.meta
    np.testing.assert_array_equal(back.F, rec.F)
    np.testing.assert_array_equal(back.G, rec.G)
    assert back.viable.tolist() == [True, False, True]
    assert json.loads(path.read_text().splitlines()[0])["schema"] == SCHEMA_VERSION


def test_record_edge_cases(tmp_path):
    empty = tmp_path / "e.jsonl"
    empty.write_text("")
    assert len(RunRecord.read(str(empty))) == 0
    assert len(RunRecord.read(str(tmp_path / "missing.jsonl"))) == 0
    bad = tmp_path / "b.jsonl"
    bad.write_text(json.dumps({"schema": 99, "meta": {}}) + "\n")
    with pytest.raises(SchemaError):
        RunRecord.read(str(bad))
    rec = _record([[1.0], [2.0]])
    path = tmp_path / "t.jsonl"
    rec.write(str(path))
    text = path.read_text()
    path.write_text(text[:-10])
    assert len(RunRecord.read(str(path))) == 1
    lines = text.splitlines()
    path.write_text("\n".join([lines[0], "{broken", lines[2]]) + "\n")
    with pytest.raises(SchemaError):
        RunRecord.read(str(path))


def test_matrix_and_rank(tmp_path):
    config = {"problems": ["toy"], "repetitions": 3, "seed": 0, "algorithms": [
        {"algorithm": "nsga2", "pop_size": 6, "n_eval": 24, "integration": "repair"},
        {"algorithm": "nsga2", "pop_size": 6, "n_eval": 24, "integration": "activeness"},
    ]}
    paths = run_matrix(config, str(tmp_path))
    assert len(paths) == 6
    before = [open(p).read() for p in paths]
    assert run_matrix(config, str(tmp_path)) == paths  # finished runs are kept
    assert [open(p).read() for p in paths] == before
    result = rank_records(paths)
    assert set(result["ranks"]["toy"]) == {"nsga2-repair", "nsga2-activeness"}
    assert result["aggregate"]["best"] in result["ranks"]["toy"]
