"""Bayesian optimization with hidden-constraint handling.

Loop: hierarchical (or repaired) DoE, then per iteration

1. fit one GP per objective and per design constraint on the viable
   points, and a viability model (GP regression on 0/1 labels, clipped to
   [0, 1]) on all points;
2. search the surrogate with NSGA-II, treating every infill criterion of
   the ensemble as an objective, subject to the constraint predictions and
   to a minimum probability of viability;
3. pick ``n_batch`` points from the non-dominated set by maximin spacing in
   criterion space, evaluate them and repeat.

Single-objective ensemble: lower confidence bound (``mu - 2 s``), expected
improvement and probability of improvement. Multi-objective ensemble:
minimum probability of improvement over the current front and its
distance-scaled variant.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr

from .moea import NSGA2, Evaluator, level_at_least, minimize_population, nondominated_fronts
from .record import RecordWriter, RunRecord
from .sampling import SamplingShortfallWarning, sample_hierarchical, sample_nonhierarchical
from .surrogate import HierarchicalGP

__all__ = [
    "BoConfig", "BoAbort", "lcb", "expected_improvement", "probability_of_improvement",
    "min_probability_of_improvement", "min_euclidean_poi", "pareto_front", "maximin_select",
    "bo_run",
]

BO_LEVELS = ("repair", "hier_sampling", "activeness")
LCB_ALPHA = 2.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class BoAbort(RuntimeError):
    """The optimization cannot continue (for example no viable DoE point)."""


@dataclass
class BoConfig:
    """Settings of a BO run.

    ``n_doe`` defaults to ``n_doe_mult * n_x`` with a multiplier of 3, or 10
    for problems with a large failed region. ``n_infill`` counts infill
    evaluations after the DoE.
    """
    n_doe: int | None = None
    n_doe_mult: float | None = None
    n_infill: int = 20
    n_batch: int = 1
    integration: str = "activeness"
    constraint: str = "mean"
    pof_target: float = 0.5
    pov_min: float = 0.25
    seed: int = 0
    categorical: str = "gower"
    gp_starts: int = 3
    inner_pop: int = 50
    inner_gen: int = 30

    def resolved(self, problem) -> "BoConfig":
        if self.integration not in BO_LEVELS:
            raise ValueError(f"unknown integration level {self.integration!r}; expected one of {BO_LEVELS}")
        if self.constraint not in ("mean", "pof"):
            raise ValueError(f"unknown constraint mode {self.constraint!r}")
        if not 0.0 < self.pov_min < 1.0:
            raise ValueError("pov_min must be in (0, 1)")
        if self.n_batch < 1 or self.n_infill < 0:
            raise ValueError("n_batch must be >= 1 and n_infill >= 0")
        n_doe = self.n_doe
        if n_doe is None:
            mult = self.n_doe_mult if self.n_doe_mult is not None else (10 if problem.high_failure else 3)
            n_doe = int(math.ceil(mult * problem.space.n_x))
        if n_doe < 2:
            raise ValueError("n_doe must be at least 2")
        return BoConfig(**(asdict(self) | {"n_doe": n_doe}))


# ---------------------------------------------------------------------------
# Infill criteria (all in "larger is better" form except the LCB value itself)
# ---------------------------------------------------------------------------

def _cdf_ratio(num, s):
    """Standard normal CDF of ``num / s`` with the s = 0 limit (0.5 at num = 0)."""
    num, s = np.broadcast_arrays(np.asarray(num, float), np.asarray(s, float))
    out = np.where(num > 0, 1.0, np.where(num < 0, 0.0, 0.5))
    pos = s > 0
    out = np.where(pos, ndtr(np.divide(num, s, out=np.zeros_like(num), where=pos)), out)
    return out


def lcb(mu, s, alpha=LCB_ALPHA):
    return np.asarray(mu, float) - alpha * np.asarray(s, float)


def expected_improvement(mu, s, y_min):
    mu, s = np.asarray(mu, float), np.asarray(s, float)
    imp = y_min - mu
    pos = s > 0
    z = np.divide(imp, s, out=np.zeros_like(imp), where=pos)
    ei = imp * ndtr(z) + s * np.exp(-0.5 * z ** 2) / _SQRT_2PI
    return np.where(pos, np.maximum(ei, 0.0), np.maximum(imp, 0.0))


def probability_of_improvement(mu, s, y_min):
    mu, s = np.asarray(mu, float), np.asarray(s, float)
    pos = s > 0
    z = np.divide(y_min - mu, s, out=np.zeros_like(mu), where=pos)
    return np.where(pos, ndtr(z), (mu < y_min).astype(float))


def min_probability_of_improvement(mu, s, front):
    """Smallest probability, over front members, of not being dominated by that member.

    ``mu``, ``s``: (n, m) predictions; ``front``: (k, m).
    """
    mu, s = np.atleast_2d(mu), np.atleast_2d(s)
    front = np.atleast_2d(front)
    # probability that front member j dominates the prediction
    p_dom = _cdf_ratio(mu[:, None, :] - front[None, :, :], s[:, None, :]).prod(axis=2)
    return (1.0 - p_dom).min(axis=1)


def min_euclidean_poi(mu, s, front):
    """MPoI scaled by the normalized distance of the mean prediction to the front."""
    front = np.atleast_2d(front)
    extent = front.max(axis=0) - front.min(axis=0)
    extent = np.where(extent > 0, extent, 1.0)
    d = np.sqrt((((np.atleast_2d(mu)[:, None, :] - front[None]) / extent) ** 2).sum(axis=2)).min(axis=1)
    return min_probability_of_improvement(mu, s, front) * d


def pareto_front(F) -> np.ndarray:
    """Non-dominated rows of ``F`` (finite rows only), unique, sorted by the first objective."""
    F = np.asarray(F, dtype=float)
    F = F[np.all(np.isfinite(F), axis=1)]
    if not len(F):
        return F
    front = np.unique(F[nondominated_fronts(F)[0]], axis=0)
    return front[np.argsort(front[:, 0], kind="stable")]


def maximin_select(C, n, first=0) -> list[int]:
    """Greedy maximin subset of rows of ``C`` (columns normalized to [0, 1])."""
    C = np.asarray(C, dtype=float)
    if len(C) <= n:
        return list(range(len(C)))
    lo, hi = C.min(axis=0), C.max(axis=0)
    Z = (C - lo) / np.where(hi > lo, hi - lo, 1.0)
    chosen = [int(first)]
    dmin = np.sqrt(((Z - Z[first]) ** 2).sum(axis=1))
    while len(chosen) < n:
        k = int(np.argmax(dmin))
        chosen.append(k)
        dmin = np.minimum(dmin, np.sqrt(((Z - Z[k]) ** 2).sum(axis=1)))
    return chosen


# ---------------------------------------------------------------------------
# Loop
# ---------------------------------------------------------------------------

class _Models:
    """Surrogates of one BO iteration."""

    def __init__(self, problem, cfg: BoConfig, X, A, F, G, seed):
        space = problem.space
        self.problem = problem
        self.cfg = cfg
        hier = cfg.integration == "activeness"
        viable = ~np.isnan(F).any(axis=1)
        if not viable.any():
            raise BoAbort("no viable point among the evaluated designs: every evaluation failed; "
                          "increase n_doe or check the problem's failed region")

        def gp(k):
            return HierarchicalGP(space, categorical=cfg.categorical, hierarchical=hier,
                                  n_starts=cfg.gp_starts, seed=[seed, k])

        Xv, Av = X[viable], A[viable]
        self.f_models = [gp(k).fit(Xv, F[viable, k], Av) for k in range(problem.n_f)]
        self.g_models = [gp(problem.n_f + k).fit(Xv, G[viable, k], Av) for k in range(problem.n_g)]
        self.pov_model = None
        if not viable.all():
            self.pov_model = gp(problem.n_f + problem.n_g).fit(X, viable.astype(float), A)
        feas = viable & (np.nan_to_num(G, nan=np.inf) <= 0).all(axis=1) if problem.n_g else viable
        ref = F[feas] if feas.any() else F[viable]
        self.y_min = float(ref[:, 0].min())
        self.front = pareto_front(ref) if problem.n_f > 1 else None

    def predict(self, X):
        mu, s = zip(*(m.predict(X, return_std=True) for m in self.f_models))
        return np.column_stack(mu), np.column_stack(s)

    def criteria(self, X):
        """Criteria to minimize: (n, n_criteria)."""
        mu, s = self.predict(X)
        if self.problem.n_f == 1:
            m, sd = mu[:, 0], s[:, 0]
            return np.column_stack([
                lcb(m, sd),
                -expected_improvement(m, sd, self.y_min),
                -probability_of_improvement(m, sd, self.y_min),
            ])
        return np.column_stack([
            -min_probability_of_improvement(mu, s, self.front),
            -min_euclidean_poi(mu, s, self.front),
        ])

    def pov(self, X):
        if self.pov_model is None:
            return np.ones(len(X))
        return np.clip(self.pov_model.predict(X), 0.0, 1.0)

    def violation(self, X):
        cfg = self.cfg
        cv = np.maximum(cfg.pov_min - self.pov(X), 0.0)
        for m in self.g_models:
            mu, s = m.predict(X, return_std=True)
            if cfg.constraint == "mean":
                cv = cv + np.maximum(mu, 0.0)
            else:
                pof = _cdf_ratio(-mu, s)
                cv = cv + np.maximum(cfg.pof_target - pof, 0.0)
        return cv

    def __call__(self, X):
        return self.criteria(X), self.violation(X)


def _doe(problem, cfg: BoConfig, repair, rng):
    space = problem.space
    if level_at_least(cfg.integration, "hier_sampling"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SamplingShortfallWarning)
            return sample_hierarchical(space, cfg.n_doe, seed=rng)
    return sample_nonhierarchical(space, cfg.n_doe, corrector=repair, seed=rng)


def _propose(problem, cfg, models, X_seen, n, repair, rng):
    space = problem.space
    hier_init = level_at_least(cfg.integration, "hier_sampling")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SamplingShortfallWarning)
        X0 = (sample_hierarchical(space, cfg.inner_pop, seed=rng) if hier_init
              else sample_nonhierarchical(space, cfg.inner_pop, corrector=repair, seed=rng))
    X0 = np.vstack([X0, np.zeros((0, space.n_x))])[:cfg.inner_pop]
    if len(X0) < cfg.inner_pop:
        X0 = np.vstack([X0, sample_nonhierarchical(space, cfg.inner_pop - len(X0), corrector=repair, seed=rng)])
    X, C, cv = minimize_population(space, models, cfg.inner_pop, cfg.inner_gen, rng, X0=X0,
                                   repair=repair, active_mutation=cfg.integration == "activeness")
    seen = {tuple(r) for r in X_seen}
    chosen = []
    for front in nondominated_fronts(C, cv):
        uniq, picked = [], set()
        for i in front:
            key = tuple(X[i])
            if key not in seen and key not in picked:
                picked.add(key)
                uniq.append(i)
        need = n - len(chosen)
        if not uniq:
            continue
        first = int(np.argmin(C[uniq, 0]))
        chosen.extend(uniq[k] for k in maximin_select(C[uniq], need, first))
        seen |= {tuple(X[i]) for i in chosen}
        if len(chosen) >= n:
            break
    out = [X[i] for i in chosen[:n]]
    # not enough new points: perturb known ones by mutation and repair
    mutator = NSGA2(space, 4, p_mut=min(1.0, 3.0 / space.n_x))
    tries = 0
    while len(out) < n and tries < 100:
        tries += 1
        cand = mutator.mutate(X[rng.integers(len(X))][None, :], rng)
        cand = repair.transform(space.round(cand), seed=rng)[0]
        if tuple(cand) not in seen:
            seen.add(tuple(cand))
            out.append(cand)
    if len(out) < n:
        raise BoAbort("could not find new design points to evaluate (design space exhausted?)")
    return np.array(out)


def bo_run(problem, config: BoConfig, problem_corrector=None, resume: RunRecord | None = None,
           out=None, threads=1, callback=None) -> RunRecord:
    """Run Bayesian optimization on ``problem``; returns the record of all evaluations.

    Iteration 0 is the DoE; iteration ``i`` draws its random numbers from
    ``default_rng([seed, i])``, so resuming from a partial record replays
    the interrupted run exactly.
    """
    cfg = config.resolved(problem)
    repair = problem.corrector()
    record = RunRecord(meta={"problem": problem.name, "algorithm": "bo", "config": asdict(cfg),
                             "seed": cfg.seed})
    writer = RecordWriter(out, record) if out is not None else None
    budget = cfg.n_doe + cfg.n_infill
    ev = Evaluator(problem, cfg.integration, problem_corrector, record, resume, writer, threads, budget)
    try:
        rng = np.random.default_rng([cfg.seed, 0])
        X0 = _doe(problem, cfg, repair, rng)
        ev(X0[:cfg.n_doe], 0, rng)
        it = 0
        while ev.remaining > 0:
            it += 1
            rng = np.random.default_rng([cfg.seed, it])
            X, A, F, G = record.X, record.A, record.F, record.G
            models = _Models(problem, cfg, X, A, F, G, seed=cfg.seed * 100003 + it)
            n = int(min(cfg.n_batch, ev.remaining))
            X_new = _propose(problem, cfg, models, X, n, repair, rng)
            ev(X_new, it, rng)
            if callback is not None:
                callback(it, record)
    finally:
        if writer is not None:
            writer.close()
    return record
