"""Design-of-experiments generation for hierarchical design spaces.

Hierarchical sampling works in four steps:

1. enumerate all valid discrete vectors and their activeness;
2. split them into groups (by number of active variables, by the set of
   active variables, or recursively by high rate-diversity variables) and
   give every group a weight;
3. apportion the requested number of samples over the groups and draw
   discrete vectors within each group;
4. fill the active continuous variables from a scrambled Sobol' sequence.

Non-hierarchical sampling draws a Sobol' design over the declared bounds and
optionally passes it through a corrector.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import qmc

from .design_space import DesignSpace
from .metrics import value_rates

__all__ = [
    "GROUPINGS", "WEIGHTINGS", "SamplingShortfallWarning", "group_vectors", "group_weights",
    "apportion", "sample_hierarchical", "sample_nonhierarchical", "sobol_unit",
]

GROUPINGS = ("none", "nact", "xact", "mrd")
WEIGHTINGS = ("uniform", "nact", "size")


class SamplingShortfallWarning(UserWarning):
    """Fewer samples returned than requested (purely discrete group exhausted)."""


def _check_choice(value, options, what):
    if value not in options:
        raise ValueError(f"unknown {what} {value!r}; expected one of {options}")


def _by_key(keys) -> list[np.ndarray]:
    """Partition row indices by key, groups ordered by first appearance."""
    groups: dict = {}
    for i, k in enumerate(keys):
        groups.setdefault(k, []).append(i)
    return [np.array(g, dtype=int) for g in groups.values()]


def _mrd_split(space: DesignSpace, X, A, idx, rd_min) -> list[np.ndarray]:
    best_j, best_rd = None, -1.0
    for j in space.discrete_indices:
        keys = np.where(A[idx, j], X[idx, j], -1.0)
        if len(np.unique(keys)) < 2:
            continue  # splitting on a constant column would not subdivide anything
        rd = value_rates(X[idx, j], A[idx, j], int(space.n_options[j]))[3]
        if rd >= rd_min and rd > best_rd:
            best_j, best_rd = j, rd
    if best_j is None:
        return [idx]
    keys = np.where(A[idx, best_j], X[idx, best_j], -1.0)
    out = []
    for sub in _by_key(keys.tolist()):
        out.extend(_mrd_split(space, X, A, idx[sub], rd_min))
    return out


def group_vectors(space: DesignSpace, X: np.ndarray, A: np.ndarray, grouping: str = "xact",
                  rd_min: float = 0.8) -> list[np.ndarray]:
    """Partition rows of an enumeration into groups of row indices.

    Groups are ordered by the position of their first member in ``X``.
    """
    _check_choice(grouping, GROUPINGS, "grouping")
    if not 0.0 < rd_min <= 1.0:
        raise ValueError("rd_min must lie in (0, 1]")
    n = len(X)
    if n == 0:
        raise ValueError("cannot group an empty set of design vectors")
    if grouping == "none":
        return [np.arange(n)]
    if grouping == "nact":
        return _by_key(A.sum(axis=1).tolist())
    if grouping == "xact":
        return _by_key([tuple(r) for r in A.tolist()])
    return _mrd_split(space, X, A, np.arange(n), rd_min)


def group_weights(groups, A: np.ndarray, weighting: str = "uniform") -> np.ndarray:
    """Relative weights of the groups (summing to 1)."""
    _check_choice(weighting, WEIGHTINGS, "weighting")
    if weighting == "uniform":
        w = np.ones(len(groups))
    elif weighting == "nact":
        w = np.array([A[g].sum(axis=1).mean() for g in groups], dtype=float)
    else:
        w = np.sqrt([len(g) for g in groups])
    return w / w.sum()


def apportion(n: int, w_rel) -> np.ndarray:
    """Largest-remainder apportionment of ``n`` items; ties go to the earlier group."""
    w_rel = np.asarray(w_rel, dtype=float)
    quota = n * w_rel
    counts = np.floor(quota + 1e-9).astype(int)
    remainder = quota - counts
    left = n - counts.sum()
    # stable sort on negative remainders keeps group order for ties
    order = np.argsort(-np.round(remainder, 9), kind="stable")
    counts[order[:left]] += 1
    return counts


def sobol_unit(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` scrambled Sobol' points in ``[0, 1)^d``, skipping the first point."""
    if d == 0 or n == 0:
        return np.zeros((n, d))
    engine = qmc.Sobol(d=d, scramble=True, seed=rng)
    engine.fast_forward(1)
    with warnings.catch_warnings():
        # balance properties need powers of two; any n is fine here
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(n)


def _fill_continuous(space: DesignSpace, X, A, rng):
    c = space.continuous_indices
    if len(c) and len(X):
        u = sobol_unit(len(X), len(c), rng)
        vals = space.lower[c] + u * (space.upper[c] - space.lower[c])
        X[:, c] = np.where(A[:, c], vals, space.canonical[c])
    return X


def sample_hierarchical(space: DesignSpace, n: int, grouping: str = "xact",
                        weighting: str = "uniform", rd_min: float = 0.8, seed=None,
                        cap=None) -> np.ndarray:
    """Hierarchical DoE of ``n`` valid design vectors.

    Raises EnumerationUnavailable when the space is too large to enumerate.
    Emits SamplingShortfallWarning (and returns fewer rows) when a purely
    discrete group is asked for more vectors than it contains.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    X_valid, A_valid = space.enumerate_valid(cap)
    groups = group_vectors(space, X_valid, A_valid, grouping, rd_min)
    counts = apportion(n, group_weights(groups, A_valid, weighting))
    c = space.continuous_indices
    chosen = []
    short = 0
    for g, k in zip(groups, counts):
        if k == 0:
            continue
        if k <= len(g):
            chosen.append(rng.choice(g, size=k, replace=False))
            continue
        extra = k - len(g)
        has_cont = bool(len(c)) and bool(A_valid[np.ix_(g, c)].any())
        picks = [rng.permutation(g)]
        if has_cont:
            picks.append(rng.choice(g, size=extra, replace=True))
        else:
            short += extra
        chosen.append(np.concatenate(picks))
    if short:
        warnings.warn(f"{short} of {n} requested samples could not be drawn without duplicates",
                      SamplingShortfallWarning, stacklevel=2)
    idx = np.concatenate(chosen) if chosen else np.zeros(0, dtype=int)
    X = X_valid[idx].copy()
    return _fill_continuous(space, X, A_valid[idx], rng)


def sample_nonhierarchical(space: DesignSpace, n: int, corrector=None, seed=None) -> np.ndarray:
    """Sobol' design over the declared bounds, then corrected.

    Discrete variables are mapped by equal-width bins. ``corrector`` is any
    object with a ``transform(X, seed=...)`` method (see
    :class:`archopt.correction.Corrector`); ``None`` returns the raw design.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    u = sobol_unit(n, space.n_x, rng)
    d = space.discrete_indices
    X = space.lower + u * (space.upper - space.lower)
    X[:, d] = np.minimum(np.floor(u[:, d] * space.n_options[d]), space.n_options[d] - 1)
    if corrector is None:
        return X
    return corrector.transform(X, seed=rng)
