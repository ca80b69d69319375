"""Benchmark bookkeeping: distance to optimum, regret, ranking and run matrices.

Distance to optimum (``delta_hv``)
    Single-objective: ``(best - f_opt) / (f_max - f_opt)`` clamped to [0, 1],
    with ``best`` the best viable feasible value so far and ``f_max`` the
    largest viable value in the whole run. Multi-objective: relative
    hypervolume gap ``(HV_ref - HV) / HV_ref`` to the known front.
Regret
    Trapezoidal cumulative sum of the ``delta_hv`` series divided by its
    first value.
Ranking
    Configurations are visited from the best mean; each is compared with
    the current reference configuration by a pooled-variance two-sample
    t-test from summary statistics. ``p <= 0.10`` starts a new rank and makes
    the configuration the new reference.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import stdtr

from .record import RunRecord

__all__ = [
    "hypervolume_2d", "reference_point", "delta_hv", "delta_hv_ratio", "regret", "run_regret",
    "t_test_pvalue", "rank_configs", "RankTable", "aggregate_ranks", "run_matrix",
    "rank_records", "plot_data", "P_SAME",
]

P_SAME = 0.10


# ---------------------------------------------------------------------------
# Hypervolume and distance to optimum
# ---------------------------------------------------------------------------

def hypervolume_2d(points, ref) -> float:
    """Area dominated by ``points`` and bounded by ``ref`` (minimization)."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    ref = np.asarray(ref, dtype=float)
    P = P[np.all(P < ref, axis=1)]
    if not len(P):
        return 0.0
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    hv, prev = 0.0, ref[1]
    for f1, f2 in P:
        if f2 < prev:
            hv += (ref[0] - f1) * (prev - f2)
            prev = f2
    return float(hv)


def reference_point(front) -> np.ndarray:
    """Nadir of ``front`` pushed outwards by 10 % of the front's extent."""
    front = np.atleast_2d(np.asarray(front, dtype=float))
    nadir, ideal = front.max(axis=0), front.min(axis=0)
    extent = np.where(nadir > ideal, nadir - ideal, np.maximum(np.abs(nadir), 1.0))
    return nadir + 0.1 * extent


def _checkpoints(n_total, start, step):
    start = int(min(max(start, 1), n_total))
    pts = list(range(start, n_total + 1, max(1, int(step))))
    if not pts or pts[-1] != n_total:
        pts.append(n_total)
    return pts


def delta_hv(record: RunRecord, problem, start=1, step=1, f_max=None) -> np.ndarray:
    """Distance-to-optimum series at evaluation counts ``start, start + step, ..., N``.

    ``problem`` supplies ``optimum`` (single-objective) or ``front``.
    """
    F, G = record.F, record.G
    n = len(F)
    if n == 0:
        return np.zeros(0)
    viable = ~np.isnan(F).any(axis=1)
    feasible = viable & (np.all(np.nan_to_num(G, nan=np.inf) <= 0, axis=1) if G.shape[1] else True)
    cps = _checkpoints(n, start, step)
    out = np.empty(len(cps))
    if problem.n_f == 1:
        f_opt = float(problem.optimum)
        if f_max is None:
            f_max = float(np.max(F[viable, 0])) if viable.any() else f_opt
        span = f_max - f_opt
        if span <= 0:
            return np.zeros(len(cps))
        best = np.where(feasible, F[:, 0], np.inf)
        best = np.minimum.accumulate(best)
        for k, c in enumerate(cps):
            out[k] = 1.0 if not np.isfinite(best[c - 1]) else (best[c - 1] - f_opt) / span
        return np.clip(out, 0.0, 1.0)
    front = np.asarray(problem.front, dtype=float)
    ref = reference_point(front)
    hv_ref = hypervolume_2d(front, ref)
    if hv_ref <= 0:
        return np.zeros(len(cps))
    for k, c in enumerate(cps):
        pts = F[:c][feasible[:c]]
        out[k] = (hv_ref - hypervolume_2d(pts, ref)) / hv_ref
    out = np.clip(out, 0.0, 1.0)
    return np.minimum.accumulate(out)


def delta_hv_ratio(series) -> np.ndarray:
    """Series divided by its first value (all zeros when the first value is 0)."""
    s = np.asarray(series, dtype=float)
    if not len(s) or s[0] <= 0:
        return np.zeros(len(s))
    return s / s[0]


def regret(series, n_step=1.0) -> np.ndarray:
    """Cumulative trapezoidal regret, starting at 0."""
    r = np.asarray(series, dtype=float)
    out = np.zeros(len(r))
    for i in range(1, len(r)):
        out[i] = out[i - 1] + 0.5 * n_step * (r[i - 1] + r[i])
    return out


def run_regret(record: RunRecord, problem, start=None, f_max=None) -> float:
    """Final per-evaluation regret of one run, counted from evaluation ``start``.

    ``start`` defaults to the DoE size (BO) or population size (NSGA-II)
    stored in the record metadata.
    """
    if start is None:
        cfg = record.meta.get("config", {})
        start = cfg.get("n_doe") or cfg.get("pop_size") or 1
    series = delta_hv_ratio(delta_hv(record, problem, start, 1, f_max))
    return float(regret(series, 1.0)[-1]) if len(series) else 0.0


# ---------------------------------------------------------------------------
# Ranking
# ---------------------------------------------------------------------------

def t_test_pvalue(m1, s1, n1, m2, s2, n2) -> float:
    """Two-sided p-value of the pooled-variance two-sample t-test from summary statistics."""
    dof = n1 + n2 - 2
    if dof <= 0:
        raise ValueError("need at least 2 samples in total beyond the two means")
    sp2 = ((n1 - 1) * s1 ** 2 + (n2 - 1) * s2 ** 2) / dof
    se = math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
    diff = m1 - m2
    if se == 0.0:
        return 1.0 if diff == 0 else 0.0
    t = abs(diff) / se
    return float(2.0 * stdtr(dof, -t))


@dataclass
class RankTable:
    names: list
    mean: np.ndarray
    sd: np.ndarray
    n: np.ndarray
    ranks: np.ndarray
    p_values: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {name: int(r) for name, r in zip(self.names, self.ranks)}


def rank_configs(stats, minimize=True, p_same=P_SAME) -> RankTable:
    """Rank configurations given ``{name: (mean, sd, n)}`` (or a list of triples)."""
    if isinstance(stats, dict):
        names = list(stats)
        rows = [stats[k] for k in names]
    else:
        rows = list(stats)
        names = list(range(len(rows)))
    mean = np.array([r[0] for r in rows], dtype=float)
    sd = np.array([r[1] for r in rows], dtype=float)
    n = np.array([r[2] for r in rows], dtype=int)
    if np.any(n < 2):
        raise ValueError("every configuration needs at least 2 samples")
    order = np.argsort(mean if minimize else -mean, kind="stable")
    ranks = np.zeros(len(rows), dtype=int)
    ref = order[0]
    ranks[ref] = 1
    current = 1
    p_values = []
    for i in order[1:]:
        p = t_test_pvalue(mean[ref], sd[ref], n[ref], mean[i], sd[i], n[i])
        p_values.append(p)
        if p <= p_same:
            current += 1
            ref = i
        ranks[i] = current
    return RankTable(names, mean, sd, n, ranks, p_values)


def aggregate_ranks(ranks_per_problem: dict, regret_per_problem: dict | None = None,
                    minimize=True) -> dict:
    """Summaries per configuration and the overall selection.

    ``ranks_per_problem``: ``{problem: {config: rank}}``; ``regret_per_problem``
    (optional): ``{problem: {config: mean regret}}`` for the penalty column.
    Returns ``{"table": {config: {...}}, "best": config}`` where the best
    configuration has the highest share of rank 1 among those with the
    highest share of rank <= 2.
    """
    configs = sorted({c for r in ranks_per_problem.values() for c in r}, key=str)
    table = {}
    for c in configs:
        rs = [r[c] for r in ranks_per_problem.values() if c in r]
        row = {
            "mean_rank": float(np.mean(rs)),
            "rank1": float(np.mean([x == 1 for x in rs])),
            "rank2": float(np.mean([x <= 2 for x in rs])),
            "penalty": math.nan,
        }
        if regret_per_problem:
            pen = []
            for reg in regret_per_problem.values():
                if c not in reg:
                    continue
                best = min(reg.values()) if minimize else max(reg.values())
                if best != 0:
                    pen.append((reg[c] - best) / abs(best))
            row["penalty"] = float(np.mean(pen)) if pen else 0.0
        table[c] = row
    top2 = max(row["rank2"] for row in table.values())
    shortlist = [c for c in configs if table[c]["rank2"] == top2]
    best = max(shortlist, key=lambda c: (table[c]["rank1"], -np.nan_to_num(table[c]["penalty"])))
    return {"table": table, "best": best}


# ---------------------------------------------------------------------------
# Run matrices
# ---------------------------------------------------------------------------

def _label(algo: dict) -> str:
    return algo.get("label") or f"{algo['algorithm']}-{algo.get('integration', 'activeness')}"


def _run_one(problem_name, algo, seed, path):
    from .bo import BoConfig, bo_run
    from .moea import MoeaConfig, nsga2_run
    from .problems import get_problem

    problem = get_problem(problem_name)
    params = {k: v for k, v in algo.items() if k not in ("algorithm", "label")}
    tmp = f"{path}.partial"
    resume = RunRecord.read(tmp) if os.path.exists(tmp) else None
    if algo["algorithm"] == "bo":
        rec = bo_run(problem, BoConfig(seed=seed, **params), resume=resume, out=tmp)
    elif algo["algorithm"] == "nsga2":
        rec = nsga2_run(problem, MoeaConfig(seed=seed, **params), resume=resume, out=tmp)
    else:
        raise ValueError(f"unknown algorithm {algo['algorithm']!r}")
    rec.meta["label"] = _label(algo)
    rec.write(tmp)
    os.replace(tmp, path)
    return path


def run_matrix(config: dict, out_dir, threads=1) -> list[str]:
    """Run every (problem, algorithm, repetition) of ``config``; one record file per run.

    ``config``: ``{"problems": [...], "algorithms": [{"algorithm": "bo" | "nsga2",
    "label": optional, ...settings}], "repetitions": int, "seed": int}``.
    Finished runs (existing files) are skipped, interrupted ones resumed.
    """
    for key in ("problems", "algorithms"):
        if key not in config:
            raise ValueError(f"bench config misses {key!r}")
    reps = int(config.get("repetitions", 1))
    seed0 = int(config.get("seed", 0))
    jobs = []
    for prob in config["problems"]:
        for algo in config["algorithms"]:
            d = os.path.join(out_dir, prob, _label(algo))
            os.makedirs(d, exist_ok=True)
            for r in range(reps):
                path = os.path.join(d, f"seed{seed0 + r}.jsonl")
                if not os.path.exists(path):
                    jobs.append((prob, algo, seed0 + r, path))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(lambda j: _run_one(*j), jobs))
    else:
        for j in jobs:
            _run_one(*j)
    return sorted(os.path.join(dp, f) for dp, _, fs in os.walk(out_dir) for f in fs if f.endswith(".jsonl"))


def _load_groups(paths):
    groups = {}
    for p in sorted(paths):
        rec = RunRecord.read(p)
        if not len(rec):
            continue
        key = (rec.meta.get("problem"), rec.meta.get("label") or
               f"{rec.meta.get('algorithm')}-{rec.meta.get('config', {}).get('integration')}")
        groups.setdefault(key, []).append(rec)
    return groups


def rank_records(paths, start=None) -> dict:
    """Regret-based rank table over record files (grouped by problem and label)."""
    from .problems import get_problem

    groups = _load_groups(paths)
    regrets, ranks, stats_out = {}, {}, {}
    for prob in sorted({k[0] for k in groups}):
        problem = get_problem(prob)
        labels = sorted(k[1] for k in groups if k[0] == prob)
        recs = [r for lab in labels for r in groups[(prob, lab)]]
        # common normalization and starting point for all runs of a problem
        viable_max = [np.nanmax(r.F[:, 0]) for r in recs if problem.n_f == 1 and np.isfinite(r.F).any()]
        f_max = max(viable_max) if viable_max else None
        s = start
        if s is None:
            s = max(r.meta.get("config", {}).get("n_doe") or r.meta.get("config", {}).get("pop_size") or 1
                    for r in recs)
        stats = {}
        for lab in labels:
            vals = [run_regret(r, problem, s, f_max) for r in groups[(prob, lab)]]
            stats[lab] = (float(np.mean(vals)), float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                          len(vals))
        stats_out[prob] = stats
        regrets[prob] = {k: v[0] for k, v in stats.items()}
        ranks[prob] = rank_configs({k: v if v[2] >= 2 else (v[0], v[1], 2) for k, v in stats.items()}).as_dict()
    agg = aggregate_ranks(ranks, regrets)
    return {"stats": stats_out, "ranks": ranks, "aggregate": agg}


def rank_report_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config", "mean_rank", "rank1_pct", "rank2_pct", "penalty_pct"])
    for c, row in result["aggregate"]["table"].items():
        w.writerow([c, f"{row['mean_rank']:.3f}", f"{100 * row['rank1']:.1f}",
                    f"{100 * row['rank2']:.1f}", f"{100 * row['penalty']:.1f}"])
    return buf.getvalue()


def rank_report_text(result: dict) -> str:
    lines = []
    for prob, stats in result["stats"].items():
        lines.append(f"{prob}:")
        for c, (m, s, n) in stats.items():
            lines.append(f"  {c:<28} regret {m:10.4f} +- {s:8.4f} (n={n})  rank {result['ranks'][prob][c]}")
    lines.append("")
    lines.append(f"{'config':<28} {'rank':>6} {'rank1%':>7} {'rank<=2%':>9} {'penalty%':>9}")
    for c, row in result["aggregate"]["table"].items():
        mark = " *" if c == result["aggregate"]["best"] else ""
        lines.append(f"{c:<28} {row['mean_rank']:6.2f} {100 * row['rank1']:7.1f} "
                     f"{100 * row['rank2']:9.1f} {100 * row['penalty']:9.1f}{mark}")
    return "\n".join(lines) + "\n"


def plot_data(paths, start=None) -> str:
    """CSV of median and quartiles of the distance-ratio series per problem and label."""
    from .problems import get_problem

    groups = _load_groups(paths)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["problem", "config", "step", "q25", "median", "q75"])
    for (prob, lab), recs in sorted(groups.items()):
        problem = get_problem(prob)
        series = []
        for r in recs:
            s = start or r.meta.get("config", {}).get("n_doe") or r.meta.get("config", {}).get("pop_size") or 1
            series.append(delta_hv_ratio(delta_hv(r, problem, s, 1)))
        n = min(len(s) for s in series)
        S = np.array([s[:n] for s in series])
        q = np.percentile(S, [25, 50, 75], axis=0)
        for i in range(n):
            w.writerow([prob, lab, i, f"{q[0, i]:.6g}", f"{q[1, i]:.6g}", f"{q[2, i]:.6g}"])
    return buf.getvalue()


def write_json(obj, path):
    """Write JSON atomically (sorted keys, so output is byte-stable)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")
    os.replace(tmp, path)
