"""NSGA-II for hierarchical mixed-discrete problems.

Integration levels (how much the optimizer knows about the hierarchy):

``naive``
    The problem corrects design vectors internally; the optimizer keeps the
    raw (possibly invalid) vectors it generated.
``x_out``
    As ``naive``, but the optimizer adopts the corrected vectors returned
    by the evaluation.
``repair``
    The optimizer repairs vectors itself after initialization and after
    variation, so the problem only ever sees valid vectors.
``hier_sampling``
    ``repair`` plus a hierarchical initial population.
``activeness``
    ``hier_sampling`` plus activeness-aware mutation: the per-gene mutation
    rate is spread over the active variables of each individual only.

Failed evaluations (NaN outputs) get +inf objectives and constraint
violation (extreme barrier), so they lose every comparison.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .design_space import DesignSpace
from .record import RecordWriter, RunRecord
from .sampling import SamplingShortfallWarning, sample_hierarchical, sample_nonhierarchical

__all__ = [
    "INTEGRATION_LEVELS", "MoeaConfig", "nondominated_fronts", "crowding_distance",
    "constraint_violation", "NSGA2", "Evaluator", "nsga2_run",
]

INTEGRATION_LEVELS = ("naive", "x_out", "repair", "hier_sampling", "activeness")


def level_at_least(level: str, minimum: str) -> bool:
    return INTEGRATION_LEVELS.index(level) >= INTEGRATION_LEVELS.index(minimum)


@dataclass
class MoeaConfig:
    """NSGA-II settings; ``pop_size`` defaults to 10 n_x (rounded up to even)."""
    pop_size: int | None = None
    n_gen: int | None = None
    n_eval: int | None = None
    eta_c: float = 15.0
    eta_m: float = 20.0
    p_cross: float = 0.9
    p_mut: float | None = None
    integration: str = "activeness"
    seed: int = 0

    def resolved(self, space: DesignSpace) -> "MoeaConfig":
        if self.integration not in INTEGRATION_LEVELS:
            raise ValueError(f"unknown integration level {self.integration!r}; "
                             f"expected one of {INTEGRATION_LEVELS}")
        pop = self.pop_size if self.pop_size is not None else 10 * space.n_x
        pop += pop % 2
        if pop < 4:
            raise ValueError("population size must be at least 4")
        if self.n_gen is None and self.n_eval is None:
            raise ValueError("set n_gen and/or n_eval")
        p_mut = self.p_mut if self.p_mut is not None else 1.0 / space.n_x
        return MoeaConfig(pop, self.n_gen, self.n_eval, self.eta_c, self.eta_m, self.p_cross,
                          p_mut, self.integration, self.seed)


# ---------------------------------------------------------------------------
# Ranking
# ---------------------------------------------------------------------------

def constraint_violation(G) -> np.ndarray:
    """Sum of positive constraint values per row (inf for failed rows)."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if G.shape[1] == 0:
        return np.zeros(len(G))
    cv = np.maximum(G, 0.0).sum(axis=1)
    return np.where(np.isnan(cv), np.inf, cv)


def barrier(F, G):
    """Objectives and violations with failed rows set to +inf."""
    F = np.array(F, dtype=float)
    failed = np.isnan(F).any(axis=1)
    F[failed] = np.inf
    cv = constraint_violation(G)
    cv[failed] = np.inf
    return F, cv


def domination_matrix(F, cv=None) -> np.ndarray:
    """``D[i, j]`` is True when row i constrained-dominates row j."""
    F = np.asarray(F, dtype=float)
    n = len(F)
    cv = np.zeros(n) if cv is None else np.asarray(cv, dtype=float)
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    pareto = le & lt
    feas = cv <= 0
    both_feas = feas[:, None] & feas[None, :]
    both_infeas = ~feas[:, None] & ~feas[None, :]
    D = np.where(both_feas, pareto, False)
    D |= feas[:, None] & ~feas[None, :]
    D |= both_infeas & (cv[:, None] < cv[None, :])
    return D


def nondominated_fronts(F, cv=None) -> list[np.ndarray]:
    """Fronts of (constrained) non-dominated sorting, best first."""
    D = domination_matrix(F, cv)
    n_dom = D.sum(axis=0)
    remaining = np.ones(len(D), dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (n_dom == 0))
        fronts.append(front)
        remaining[front] = False
        n_dom = n_dom - D[front].sum(axis=0)
        n_dom[~remaining] = -1
    return fronts


def crowding_distance(F) -> np.ndarray:
    """Crowding distance of the members of one front (boundary points get inf)."""
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        col = F[order, k]
        d[order[0]] = d[order[-1]] = np.inf
        span = col[-1] - col[0]
        if not np.isfinite(span) or span <= 0:
            continue
        d[order[1:-1]] += (col[2:] - col[:-2]) / span
    return d


def rank_and_crowding(F, cv):
    rank = np.empty(len(F), dtype=int)
    crowd = np.empty(len(F))
    for r, front in enumerate(nondominated_fronts(F, cv)):
        rank[front] = r
        crowd[front] = crowding_distance(F[front]) if np.all(np.isfinite(F[front])) else 0.0
    return rank, crowd


# ---------------------------------------------------------------------------
# Evaluation wrapper (integration, recording, resume)
# ---------------------------------------------------------------------------

class Evaluator:
    """Evaluates raw offspring according to the integration level and records them.

    ``problem_corrector`` plays the role of the correction done inside the
    problem (any object with ``transform(X, seed=...)``). Evaluations
    already present in ``resume`` are replayed instead of recomputed.
    """

    def __init__(self, problem, integration="activeness", problem_corrector=None, record=None,
                 resume=None, writer=None, threads=1, budget=None):
        self.problem = problem
        self.space = problem.space
        self.integration = integration
        self.corrector = problem_corrector if problem_corrector is not None else problem.corrector()
        self.record = record if record is not None else RunRecord()
        self.cache = list(resume.evaluations) if resume is not None else []
        self.writer = writer
        self.threads = max(1, int(threads))
        self.budget = budget

    @property
    def n_evaluated(self) -> int:
        return len(self.record)

    @property
    def remaining(self) -> float:
        return math.inf if self.budget is None else self.budget - self.n_evaluated

    def _evaluate(self, X):
        if self.threads == 1 or len(X) < 2:
            return self.problem.evaluate(X)
        chunks = np.array_split(np.arange(len(X)), min(self.threads, len(X)))
        with ThreadPoolExecutor(self.threads) as pool:
            parts = list(pool.map(lambda idx: self.problem.evaluate(X[idx]), chunks))
        return np.vstack([p[0] for p in parts]), np.vstack([p[1] for p in parts])

    def __call__(self, X_raw, iteration, rng):
        """Evaluate rows of ``X_raw``; returns (X_kept, F, G)."""
        X_raw = np.atleast_2d(np.asarray(X_raw, dtype=float))
        start = self.n_evaluated
        X_eval = self.corrector.transform(X_raw, seed=rng)
        X_keep = X_raw if self.integration == "naive" else X_eval
        n_cached = max(0, min(len(X_raw), len(self.cache) - start))
        F = np.empty((len(X_raw), self.problem.n_f))
        G = np.empty((len(X_raw), self.problem.n_g))
        for k in range(n_cached):
            ev = self.cache[start + k]
            if not np.allclose(ev.x, X_keep[k], rtol=0, atol=1e-9):
                raise ValueError(f"resume record diverges at evaluation {start + k}")
            F[k], G[k] = ev.f, ev.g
        if n_cached < len(X_raw):
            F[n_cached:], G[n_cached:] = self._evaluate(X_eval[n_cached:])
        A = self.space.activeness(X_keep)
        new = self.record.append(iteration, X_keep, A, F, G)
        if self.writer is not None:
            self.writer.write(new)
        return X_keep, F, G


# ---------------------------------------------------------------------------
# Variation operators
# ---------------------------------------------------------------------------

class NSGA2:
    """NSGA-II engine over a design space.

    ``evaluate(X, gen, rng) -> (X_kept, F, G)`` is called for the initial
    population and every offspring batch. ``repair`` (optional) is applied
    to the initial population and to every offspring batch.
    """

    def __init__(self, space: DesignSpace, pop_size, eta_c=15.0, eta_m=20.0, p_cross=0.9,
                 p_mut=None, repair=None, active_mutation=False):
        self.space = space
        self.pop_size = pop_size
        self.eta_c = eta_c
        self.eta_m = eta_m
        self.p_cross = p_cross
        self.p_mut = p_mut if p_mut is not None else 1.0 / space.n_x
        self.repair = repair
        self.active_mutation = active_mutation
        self._cont = space.continuous_indices
        self._disc = space.discrete_indices

    # -- operators --------------------------------------------------------------

    def tournament(self, rank, crowd, n, rng) -> np.ndarray:
        a = rng.integers(len(rank), size=n)
        b = rng.integers(len(rank), size=n)
        better_a = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] > crowd[b]))
        better_b = (rank[b] < rank[a]) | ((rank[a] == rank[b]) & (crowd[b] > crowd[a]))
        coin = rng.random(n) < 0.5
        return np.where(better_a, a, np.where(better_b, b, np.where(coin, a, b)))

    def _sbx(self, p1, p2, rng):
        c1, c2 = p1.copy(), p2.copy()
        lo, hi = self.space.lower[self._cont], self.space.upper[self._cont]
        x1, x2 = p1[self._cont], p2[self._cont]
        swap_var = rng.random(len(self._cont)) < 0.5
        differ = np.abs(x1 - x2) > 1e-14
        u = rng.random(len(self._cont))
        y1, y2 = np.minimum(x1, x2), np.maximum(x1, x2)
        dy = np.where(differ, y2 - y1, 1.0)
        eta = self.eta_c

        def child(beta_base):
            alpha = 2.0 - beta_base ** -(eta + 1.0)
            betaq = np.where(u <= 1.0 / alpha, (u * alpha) ** (1.0 / (eta + 1.0)),
                             (1.0 / np.maximum(2.0 - u * alpha, 1e-300)) ** (1.0 / (eta + 1.0)))
            return betaq

        bq1 = child(1.0 + 2.0 * (y1 - lo) / dy)
        bq2 = child(1.0 + 2.0 * (hi - y2) / dy)
        ch1 = np.clip(0.5 * ((y1 + y2) - bq1 * (y2 - y1)), lo, hi)
        ch2 = np.clip(0.5 * ((y1 + y2) + bq2 * (y2 - y1)), lo, hi)
        flip = rng.random(len(self._cont)) < 0.5
        ch1, ch2 = np.where(flip, ch2, ch1), np.where(flip, ch1, ch2)
        use = swap_var & differ
        c1[self._cont] = np.where(use, ch1, x1)
        c2[self._cont] = np.where(use, ch2, x2)
        return c1, c2

    def crossover(self, P1, P2, rng):
        C1, C2 = P1.copy(), P2.copy()
        for k in range(len(P1)):
            if rng.random() >= self.p_cross:
                continue
            if len(self._cont):
                C1[k], C2[k] = self._sbx(P1[k], P2[k], rng)
            if len(self._disc):
                swap = rng.random(len(self._disc)) < 0.5
                d = self._disc
                C1[k, d] = np.where(swap, P2[k, d], P1[k, d])
                C2[k, d] = np.where(swap, P1[k, d], P2[k, d])
        return C1, C2

    def mutate(self, X, rng):
        X = X.copy()
        space = self.space
        n, n_x = X.shape
        if self.active_mutation:
            A = space.activeness(X)
            n_act = np.maximum(A.sum(axis=1), 1)
            prob = np.where(A, np.minimum(1.0, self.p_mut * n_x / n_act)[:, None], 0.0)
        else:
            prob = np.full((n, n_x), self.p_mut)
        hit = rng.random((n, n_x)) < prob
        if len(self._cont):
            c = self._cont
            lo, hi = space.lower[c], space.upper[c]
            span = hi - lo
            x = X[:, c]
            u = rng.random(x.shape)
            d1, d2 = (x - lo) / span, (hi - x) / span
            mp = 1.0 / (self.eta_m + 1.0)
            val1 = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (self.eta_m + 1.0)
            val2 = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (self.eta_m + 1.0)
            dq = np.where(u < 0.5, val1 ** mp - 1.0, 1.0 - val2 ** mp)
            X[:, c] = np.where(hit[:, c], np.clip(x + dq * span, lo, hi), x)
        if len(self._disc):
            d = self._disc
            n_opt = space.n_options[d]
            # random reset to a different option
            shift = rng.integers(1, np.maximum(n_opt, 2), size=(n, len(d)))
            new = np.where(n_opt > 1, (X[:, d] + shift) % n_opt, X[:, d])
            X[:, d] = np.where(hit[:, d], new, X[:, d])
        return X

    def offspring(self, X, rank, crowd, n, rng, avoid=None):
        """``n`` repaired offspring, avoiding duplicates of ``avoid`` where possible."""
        avoid = set() if avoid is None else {tuple(r) for r in avoid}
        out = []
        for _attempt in range(10):
            need = n - len(out)
            if need <= 0:
                break
            n_pairs = (need + 1) // 2
            idx = self.tournament(rank, crowd, 2 * n_pairs, rng)
            C1, C2 = self.crossover(X[idx[:n_pairs]], X[idx[n_pairs:]], rng)
            C = self.mutate(np.vstack([C1, C2]), rng)
            C = self.space.round(C)
            if self.repair is not None:
                C = self.repair.transform(C, seed=rng)
            for row in C:
                key = tuple(row)
                if key not in avoid:
                    avoid.add(key)
                    out.append(row)
        if len(out) < n:  # accept duplicates rather than stalling
            idx = self.tournament(rank, crowd, n - len(out), rng)
            extra = self.space.round(self.mutate(X[idx], rng))
            if self.repair is not None:
                extra = self.repair.transform(extra, seed=rng)
            out.extend(extra)
        return np.array(out[:n])

    def survive(self, X, F, cv, n):
        rank, crowd = rank_and_crowding(F, cv)
        order = np.lexsort((-crowd, rank))
        keep = order[:n]
        return keep, rank[keep], crowd[keep]


# ---------------------------------------------------------------------------
# Run driver
# ---------------------------------------------------------------------------

def _initial_population(problem, cfg: MoeaConfig, repair, rng):
    space = problem.space
    if level_at_least(cfg.integration, "hier_sampling"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SamplingShortfallWarning)
            X = sample_hierarchical(space, cfg.pop_size, seed=rng)
        if len(X) < cfg.pop_size:  # small purely discrete spaces: top up
            extra = sample_nonhierarchical(space, cfg.pop_size - len(X), corrector=repair, seed=rng)
            X = np.vstack([X, extra])
        return X
    return sample_nonhierarchical(space, cfg.pop_size,
                                  corrector=repair if level_at_least(cfg.integration, "repair") else None,
                                  seed=rng)


def nsga2_run(problem, config: MoeaConfig, problem_corrector=None, resume: RunRecord | None = None,
              out=None, threads=1, callback=None) -> RunRecord:
    """Run NSGA-II on ``problem`` and return the record of all evaluations.

    The run stops after ``config.n_gen`` generations or when the evaluation
    budget ``config.n_eval`` is used up (the last batch is truncated).
    Generation ``g`` draws its random numbers from ``default_rng([seed, g])``,
    so a run resumed from a partial record replays identically.
    """
    space = problem.space
    cfg = config.resolved(space)
    repair = problem.corrector() if level_at_least(cfg.integration, "repair") else None
    record = RunRecord(meta={"problem": problem.name, "algorithm": "nsga2", "config": asdict(cfg),
                             "seed": cfg.seed})
    writer = RecordWriter(out, record) if out is not None else None
    ev = Evaluator(problem, cfg.integration, problem_corrector, record, resume, writer, threads,
                   cfg.n_eval)
    engine = NSGA2(space, cfg.pop_size, cfg.eta_c, cfg.eta_m, cfg.p_cross, cfg.p_mut, repair,
                   active_mutation=cfg.integration == "activeness")
    try:
        rng = np.random.default_rng([cfg.seed, 0])
        X0 = _initial_population(problem, cfg, repair, rng)
        X0 = X0[:int(min(len(X0), ev.remaining))]
        X, F, G = ev(X0, 0, rng)
        Fb, cv = barrier(F, G)
        keep, rank, crowd = engine.survive(X, Fb, cv, cfg.pop_size)
        X, Fb, cv = X[keep], Fb[keep], cv[keep]
        gen = 0
        while ev.remaining > 0 and (cfg.n_gen is None or gen < cfg.n_gen):
            gen += 1
            rng = np.random.default_rng([cfg.seed, gen])
            n_off = int(min(cfg.pop_size, ev.remaining))
            C = engine.offspring(X, rank, crowd, n_off, rng, avoid=X)
            C, Fc, Gc = ev(C, gen, rng)
            Fcb, cvc = barrier(Fc, Gc)
            X_all = np.vstack([X, C])
            F_all = np.vstack([Fb, Fcb])
            cv_all = np.concatenate([cv, cvc])
            keep, rank, crowd = engine.survive(X_all, F_all, cv_all, cfg.pop_size)
            X, Fb, cv = X_all[keep], F_all[keep], cv_all[keep]
            if callback is not None:
                callback(gen, X, Fb, cv)
    finally:
        if writer is not None:
            writer.close()
    return record


def minimize_population(space, func, pop_size, n_gen, rng, X0=None, repair=None,
                        active_mutation=False):
    """Plain NSGA-II on a cheap vectorized function ``func(X) -> (F, cv)``.

    Used for inner (surrogate) searches. Returns the final population and
    its objective values and violations.
    """
    engine = NSGA2(space, pop_size, repair=repair, active_mutation=active_mutation)
    if X0 is None:
        X0 = sample_nonhierarchical(space, pop_size, corrector=repair, seed=rng)
    X = np.asarray(X0, dtype=float)
    F, cv = func(X)
    keep, rank, crowd = engine.survive(X, F, cv, pop_size)
    X, F, cv = X[keep], F[keep], cv[keep]
    for _ in range(n_gen):
        C = engine.offspring(X, rank, crowd, pop_size, rng, avoid=X)
        Fc, cvc = func(C)
        X_all, F_all, cv_all = np.vstack([X, C]), np.vstack([F, Fc]), np.concatenate([cv, cvc])
        keep, rank, crowd = engine.survive(X_all, F_all, cv_all, pop_size)
        X, F, cv = X_all[keep], F_all[keep], cv_all[keep]
    return X, F, cv
