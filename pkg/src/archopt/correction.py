"""Correction of invalid discrete design vectors.

Eager correctors search the enumerated set of valid discrete vectors; lazy
correctors only need the ``is_correct`` check of the design space and
generate candidates on the fly. A problem may also provide its own
correction hook.

Every corrector returns *valid* vectors: corrected and then imputed. Inputs
that are already correct are only imputed.
"""
from __future__ import annotations

import heapq
import itertools

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .design_space import DesignSpace, EnumerationUnavailable

__all__ = ["MODES", "Corrector", "CorrectionFailed", "distance_weights", "offset_sequence"]

MODES = ("default", "eager_any", "eager_greedy", "eager_similar", "lazy_any",
         "lazy_similar", "problem_specific")
_LAZY_CHUNK = 2048


class CorrectionFailed(RuntimeError):
    """Raised when a lazy corrector exhausts its trial budget."""


def distance_weights(n: int) -> np.ndarray:
    """Weights decreasing linearly from 1.1 (first variable) to 1.0 (last)."""
    if n <= 1:
        return np.ones(n)
    return 1.1 - 0.1 * np.arange(n) / (n - 1)


def offset_sequence(value: int, n_options: int) -> list[int]:
    """Offsets 0, -1, +1, -2, +2, ... that keep ``value + offset`` in range."""
    out = [0]
    for k in range(1, n_options):
        for off in (-k, k):
            if 0 <= value + off < n_options:
                out.append(off)
    return out


def _distance(delta: np.ndarray, weights: np.ndarray, metric: str) -> np.ndarray:
    wd = np.abs(delta) * weights
    if metric == "manhattan":
        return wd.sum(axis=-1)
    return np.sqrt((wd ** 2).sum(axis=-1))


class Corrector(BaseEstimator, TransformerMixin):
    """Repair design vectors so that they become valid.

    Parameters
    ----------
    space : DesignSpace
    mode : str
        ``"default"`` selects ``problem_specific`` when a hook is given, else
        ``eager_any`` when the space can be enumerated, else
        ``lazy_similar``.
    metric : {"manhattan", "euclidean"}
        Distance used by the ``*_similar`` modes, weighted by
        :func:`distance_weights`.
    order : {"depth_first", "distance_first"}
        Candidate order of ``lazy_similar``.
    randomized : bool
        Break ties (and, for ``lazy_any``, draw candidates) from the seeded
        generator instead of deterministically.
    hook : callable, optional
        ``hook(X) -> X`` problem-specific correction of a 2-D array. Its output
        is imputed and checked; rows it leaves incorrect are passed on to the
        automatic fallback mode.
    max_trials : int
        Candidate budget of the lazy modes.
    enumeration_cap : int, optional
        Declared-size cap for the eager modes.
    """

    def __init__(self, space: DesignSpace | None = None, mode: str = "default",
                 metric: str = "manhattan", order: str = "depth_first",
                 randomized: bool = False, hook=None, max_trials: int = 10**6,
                 enumeration_cap=None):
        self.space = space
        self.mode = mode
        self.metric = metric
        self.order = order
        self.randomized = randomized
        self.hook = hook
        self.max_trials = max_trials
        self.enumeration_cap = enumeration_cap

    # -- fitting -----------------------------------------------------------

    def _enumerable(self):
        try:
            self.space.enumerate_valid(self.enumeration_cap)
            return True
        except EnumerationUnavailable:
            return False

    def fit(self, X=None, y=None):
        if not isinstance(self.space, DesignSpace):
            raise TypeError("Corrector needs a DesignSpace")
        if self.mode not in MODES:
            raise ValueError(f"unknown correction mode {self.mode!r}; expected one of {MODES}")
        if self.metric not in ("manhattan", "euclidean"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.order not in ("depth_first", "distance_first"):
            raise ValueError(f"unknown order {self.order!r}")
        if self.mode == "problem_specific" and self.hook is None:
            raise ValueError("problem_specific correction needs a hook")
        enumerable = self._enumerable()
        fallback = "eager_any" if enumerable else "lazy_similar"
        mode = self.mode
        if mode == "default":
            mode = "problem_specific" if self.hook is not None else fallback
        if mode.startswith("eager") and not enumerable:
            raise EnumerationUnavailable(f"{mode} correction needs an enumerable design space")
        self.mode_ = mode
        self.fallback_ = fallback
        self.weights_ = distance_weights(self.space.n_discrete)
        if enumerable:
            X_valid, _ = self.space.enumerate_valid(self.enumeration_cap)
            self.valid_discrete_ = X_valid[:, self.space.discrete_indices]
        else:
            self.valid_discrete_ = None
        return self

    def _ensure_fitted(self):
        if not hasattr(self, "mode_"):
            self.fit()

    # -- public API ------------------------------------------------------------

    def transform(self, X, seed=None) -> np.ndarray:
        """Corrected and imputed copy of ``X`` (1-D or 2-D)."""
        self._ensure_fitted()
        space = self.space
        X, single = space.check_X(X)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        X = space.round(X)
        bad = np.flatnonzero(~space.is_correct(X))
        if len(bad) and self.mode_ == "problem_specific":
            X[bad] = space.round(np.atleast_2d(self.hook(X[bad].copy())))
            bad = bad[~space.is_correct(X[bad])]
            mode = self.fallback_
        else:
            mode = self.mode_
        for i in bad:
            X[i] = self._correct_row(X[i], mode, rng)
        X = space.impute(X)
        return X[0] if single else X

    def correct(self, x, seed=None) -> np.ndarray:
        """Correct a single design vector."""
        return self.transform(np.asarray(x, dtype=float), seed=seed)

    # -- algorithms -------------------------------------------------------------

    def _pick(self, candidates: np.ndarray, rng) -> int:
        """Index of the chosen one among tied candidate indices."""
        if self.randomized and len(candidates) > 1:
            return int(candidates[rng.integers(len(candidates))])
        return int(candidates[0])

    def _correct_row(self, x, mode, rng) -> np.ndarray:
        d = self.space.discrete_indices
        xd = x[d].copy()
        if mode == "eager_any":
            xd = self.valid_discrete_[rng.integers(len(self.valid_discrete_))]
        elif mode == "eager_greedy":
            xd = self._greedy(xd, rng)
        elif mode == "eager_similar":
            dist = _distance(self.valid_discrete_ - xd, self.weights_, self.metric)
            ties = np.flatnonzero(np.isclose(dist, dist.min(), rtol=0, atol=1e-12))
            xd = self.valid_discrete_[self._pick(ties, rng)]
        elif mode == "lazy_any":
            xd = self._lazy_any(x, rng)
        elif mode == "lazy_similar":
            xd = self._lazy_similar(x)
        else:  # pragma: no cover - guarded in fit
            raise ValueError(mode)
        y = x.copy()
        y[d] = xd
        return y

    def _greedy(self, xd, rng):
        cand = self.valid_discrete_
        for i in range(len(xd)):
            col = cand[:, i]
            present = np.unique(col)
            if xd[i] in present:
                target = xd[i]
            else:
                gap = np.abs(present - xd[i])
                ties = np.flatnonzero(gap == gap.min())  # ascending, so ties resolve downward
                target = present[self._pick(ties, rng)]
            cand = cand[col == target]
        return cand[0]

    def _lazy_any(self, x, rng):
        space = self.space
        d = space.discrete_indices
        gen = rng if self.randomized else np.random.default_rng(0)
        tried = 0
        while tried < self.max_trials:
            k = min(_LAZY_CHUNK, self.max_trials - tried)
            Y = np.repeat(x[None, :], k, axis=0)
            Y[:, d] = gen.integers(0, space.n_options[d], size=(k, len(d)))
            ok = np.flatnonzero(space.is_correct(Y))
            if len(ok):
                self.last_trials_ = tried + int(ok[0]) + 1
                return Y[ok[0], d]
            tried += k
        raise CorrectionFailed(f"no correct vector found in {self.max_trials} random trials")

    def _offset_candidates(self, xd):
        n_opt = self.space.n_options[self.space.discrete_indices]
        seqs = [offset_sequence(int(v), int(n)) for v, n in zip(xd, n_opt)]
        if self.order == "depth_first":
            yield from itertools.product(*seqs)
            return
        # best-first over the offset lattice; offsets are sorted by magnitude so
        # advancing any position never decreases the distance
        w = self.weights_
        metric = self.metric

        def dist(pos):
            delta = np.array([seqs[i][p] for i, p in enumerate(pos)], dtype=float)
            return float(_distance(delta, w, metric))

        start = (0,) * len(seqs)
        heap = [(0.0, 0, start)]
        seen = {start}
        counter = itertools.count(1)
        while heap:
            _, _, pos = heapq.heappop(heap)
            yield tuple(seqs[i][p] for i, p in enumerate(pos))
            for i in range(len(pos)):
                if pos[i] + 1 < len(seqs[i]):
                    nxt = pos[:i] + (pos[i] + 1,) + pos[i + 1:]
                    if nxt not in seen:
                        seen.add(nxt)
                        heapq.heappush(heap, (dist(nxt), next(counter), nxt))

    def _lazy_similar(self, x):
        space = self.space
        d = space.discrete_indices
        xd = x[d]
        gen = self._offset_candidates(xd)
        tried = 0
        while tried < self.max_trials:
            chunk = list(itertools.islice(gen, min(_LAZY_CHUNK, self.max_trials - tried)))
            if not chunk:
                break
            Y = np.repeat(x[None, :], len(chunk), axis=0)
            Y[:, d] = xd + np.asarray(chunk, dtype=float)
            ok = np.flatnonzero(space.is_correct(Y))
            if len(ok):
                self.last_trials_ = tried + int(ok[0]) + 1
                return Y[ok[0], d]
            tried += len(chunk)
        raise CorrectionFailed(f"no correct vector found within {tried} candidate offsets")
