"""Correlation kernels for mixed-discrete, hierarchical design vectors.

The correlation between two design vectors is a product over variables::

    k(x, x') = exp(-sum_p theta_p * D_p(x, x'))  *  prod_ehh R_ehh(x, x')

where every hyperparameter ``theta_p`` multiplies a precomputed "distance
feature" ``D_p``. This keeps the log-likelihood gradient cheap for all
kernels except the hypersphere one, whose angles enter nonlinearly.

Per-variable components
-----------------------
continuous, integer and ordinal variables
    Inputs are normalized to [0, 1]. ``D = dx**2`` (squared exponential) or
    ``|dx|`` (absolute exponential). In hierarchical mode inactive values
    are replaced by 0.5 and ``D`` gains 0.5 when exactly one side is active.
categorical, ``"gower"``
    ``D = sqrt(2)`` for different active levels, ``L/2`` when exactly one
    side is active and 0 otherwise (one hyperparameter per variable).
categorical, ``"exp_onehot"``
    One hyperparameter ``phi_j`` per level: correlation
    ``exp(-sqrt(2) * (phi_r + phi_s))`` for different active levels and
    ``exp(-sum_j phi_j)`` when exactly one side is active.
categorical, ``"ehh"``
    Homoscedastic hypersphere correlation matrix ``T = C C^T`` built from
    angles; ``R = exp(-c * (1 - T[l_r, l_s]))``. Inactive levels are replaced
    by level 0 before evaluation.

With ``hierarchical=False`` activeness is ignored and the stored values are
used as they are.
"""
from __future__ import annotations

import math

import numpy as np

from ..design_space import DesignSpace

__all__ = [
    "gower_hier_distance", "exp_onehot_hier_correlation", "hypersphere_matrix",
    "ehh_correlation", "MixedKernel", "LOG_THETA_BOUNDS",
]

SQRT2 = math.sqrt(2.0)
LOG_THETA_BOUNDS = (math.log(1e-3), math.log(1e2))
_ANGLE_BOUNDS = (1e-3, math.pi - 1e-3)


# ---------------------------------------------------------------------------
# Scalar closed forms (reference definitions, also used in tests)
# ---------------------------------------------------------------------------

def _check_level(level, active, n_levels):
    if active and not 0 <= level < n_levels:
        raise ValueError(f"level {level} out of range for {n_levels} levels")


def gower_hier_distance(level_r, level_s, active_r, active_s, n_levels, theta):
    """Weighted hierarchical Gower distance between two categorical values."""
    _check_level(level_r, active_r, n_levels)
    _check_level(level_s, active_s, n_levels)
    if active_r and active_s:
        return 0.0 if level_r == level_s else SQRT2 * theta
    if active_r or active_s:
        return 0.5 * n_levels * theta
    return 0.0


def exp_onehot_hier_correlation(level_r, level_s, active_r, active_s, phi_diag):
    """Hierarchical exponential one-hot correlation; ``phi_diag`` are the Phi_jj."""
    phi_diag = np.asarray(phi_diag, dtype=float)
    n_levels = len(phi_diag)
    _check_level(level_r, active_r, n_levels)
    _check_level(level_s, active_s, n_levels)
    if active_r and active_s:
        if level_r == level_s:
            return 1.0
        return math.exp(-SQRT2 * (phi_diag[level_r] + phi_diag[level_s]))
    if active_r or active_s:
        return math.exp(-phi_diag.sum())
    return 1.0


def hypersphere_matrix(angles, n_levels) -> np.ndarray:
    """Unit-diagonal PSD matrix ``C C^T`` from ``L (L - 1) / 2`` angles."""
    angles = np.asarray(angles, dtype=float)
    if len(angles) != n_levels * (n_levels - 1) // 2:
        raise ValueError(f"expected {n_levels * (n_levels - 1) // 2} angles, got {len(angles)}")
    C = np.zeros((n_levels, n_levels))
    C[0, 0] = 1.0
    k = 0
    for i in range(1, n_levels):
        row = angles[k:k + i]
        k += i
        s = 1.0
        for j in range(i):
            C[i, j] = s * math.cos(row[j])
            s *= math.sin(row[j])
        C[i, i] = s
    return C @ C.T


def ehh_correlation(level_r, level_s, active_r, active_s, angles, scale, n_levels):
    """Hypersphere correlation with inactive levels imputed to level 0."""
    _check_level(level_r, active_r, n_levels)
    _check_level(level_s, active_s, n_levels)
    lr = level_r if active_r else 0
    ls = level_s if active_s else 0
    T = hypersphere_matrix(angles, n_levels)
    return math.exp(-scale * (1.0 - T[lr, ls]))


# ---------------------------------------------------------------------------
# Vectorized kernel over a design space
# ---------------------------------------------------------------------------

class MixedKernel:
    """Product kernel over all variables of a design space.

    Parameters
    ----------
    space : DesignSpace
    continuous : {"se", "abs"}
    categorical : {"gower", "exp_onehot", "ehh"}
    hierarchical : bool
        Use activeness information (requires masks at fit/predict time).
    """

    def __init__(self, space: DesignSpace, continuous="se", categorical="gower", hierarchical=True):
        if continuous not in ("se", "abs"):
            raise ValueError(f"unknown continuous kernel {continuous!r}")
        if categorical not in ("gower", "exp_onehot", "ehh"):
            raise ValueError(f"unknown categorical kernel {categorical!r}")
        self.space = space
        self.continuous = continuous
        self.categorical = categorical
        self.hierarchical = hierarchical

        self._num = []   # indices of continuous-like variables
        self._cat = []   # (index, n_levels)
        for j, var in enumerate(space.variables):
            if var.kind == "categorical":
                self._cat.append((j, var.n_options))
            else:
                self._num.append(j)
        self._num = np.array(self._num, dtype=int)
        span = space.upper - space.lower
        self._lo = space.lower[self._num]
        self._span = np.where(span[self._num] > 0, span[self._num], 1.0)

        n_lin = len(self._num)
        self._ehh = []
        if categorical == "gower":
            n_lin += len(self._cat)
        elif categorical == "exp_onehot":
            n_lin += sum(L for _, L in self._cat)
        else:
            self._ehh = list(self._cat)
        self.n_linear = n_lin
        lo, hi = [LOG_THETA_BOUNDS] * n_lin, []
        for _, L in self._ehh:
            hi.append(LOG_THETA_BOUNDS)
            hi.extend([_ANGLE_BOUNDS] * (L * (L - 1) // 2))
        self.bounds = np.array(lo + hi, dtype=float).reshape(-1, 2)
        self.n_params = len(self.bounds)

    def default_params(self) -> np.ndarray:
        """Starting point: theta = 1 and angles pi / 2 (uncorrelated levels)."""
        p = np.zeros(self.n_params)
        k = self.n_linear
        for _, L in self._ehh:
            p[k] = 0.0
            p[k + 1:k + 1 + L * (L - 1) // 2] = math.pi / 2
            k += 1 + L * (L - 1) // 2
        return p

    def random_params(self, rng, n) -> np.ndarray:
        lo, hi = self.bounds[:, 0].copy(), self.bounds[:, 1].copy()
        lin = slice(0, self.n_linear)
        # starts concentrate on the useful part of the log-theta range
        lo[lin], hi[lin] = math.log(1e-2), math.log(2e1)
        return rng.uniform(lo, hi, size=(n, self.n_params))

    # -- features -------------------------------------------------------------

    def features(self, Xa, Aa, Xb, Ab):
        """Distance features ``(n_linear, na, nb)`` and level pairs for ehh variables."""
        Xa, Xb = np.atleast_2d(Xa), np.atleast_2d(Xb)
        na, nb = len(Xa), len(Xb)
        if not self.hierarchical:
            Aa = np.ones(Xa.shape, dtype=bool)
            Ab = np.ones(Xb.shape, dtype=bool)
        else:
            Aa, Ab = np.atleast_2d(Aa).astype(bool), np.atleast_2d(Ab).astype(bool)
        D = np.empty((self.n_linear, na, nb))
        k = 0
        if len(self._num):
            ua = (Xa[:, self._num] - self._lo) / self._span
            ub = (Xb[:, self._num] - self._lo) / self._span
            act_a, act_b = Aa[:, self._num], Ab[:, self._num]
            if self.hierarchical:
                ua = np.where(act_a, ua, 0.5)
                ub = np.where(act_b, ub, 0.5)
            diff = ua[:, None, :] - ub[None, :, :]
            base = diff ** 2 if self.continuous == "se" else np.abs(diff)
            if self.hierarchical:
                base = base + 0.5 * (act_a[:, None, :] != act_b[None, :, :])
            D[k:k + len(self._num)] = np.moveaxis(base, 2, 0)
            k += len(self._num)
        ehh_pairs = []
        for j, L in self._cat:
            la = np.rint(Xa[:, j]).astype(int)
            lb = np.rint(Xb[:, j]).astype(int)
            aa, ab = Aa[:, j][:, None], Ab[:, j][None, :]
            both = aa & ab
            one = aa ^ ab
            differ = la[:, None] != lb[None, :]
            if self.categorical == "gower":
                D[k] = SQRT2 * (both & differ) + 0.5 * L * one
                k += 1
            elif self.categorical == "exp_onehot":
                bd = both & differ
                for lev in range(L):
                    D[k] = SQRT2 * bd * ((la[:, None] == lev).astype(float) + (lb[None, :] == lev)) + one
                    k += 1
            else:
                ehh_pairs.append((np.where(Aa[:, j], la, 0), np.where(Ab[:, j], lb, 0)))
        return D, ehh_pairs

    def log_corr(self, params, feats) -> np.ndarray:
        D, ehh_pairs = feats
        params = np.asarray(params, dtype=float)
        theta = np.exp(params[:self.n_linear])
        out = -np.tensordot(theta, D, axes=1) if self.n_linear else np.zeros(D.shape[1:])
        k = self.n_linear
        for (la, lb), (_, L) in zip(ehh_pairs, self._ehh):
            scale = math.exp(params[k])
            T = hypersphere_matrix(params[k + 1:k + 1 + L * (L - 1) // 2], L)
            out = out - scale * (1.0 - T[la[:, None], lb[None, :]])
            k += 1 + L * (L - 1) // 2
        return out

    def corr(self, params, feats) -> np.ndarray:
        return np.exp(self.log_corr(params, feats))

    def __call__(self, params, Xa, Aa, Xb=None, Ab=None) -> np.ndarray:
        if Xb is None:
            Xb, Ab = Xa, Aa
        return self.corr(params, self.features(Xa, Aa, Xb, Ab))
