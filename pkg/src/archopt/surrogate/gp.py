"""Ordinary-kriging Gaussian process for mixed-discrete hierarchical inputs."""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg, optimize
from sklearn.base import BaseEstimator, RegressorMixin

from ..design_space import DesignSpace
from .kernels import MixedKernel

__all__ = ["HierarchicalGP", "GPFitError"]

_NUGGETS = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


class GPFitError(RuntimeError):
    """The correlation matrix could not be factorized even with the largest nugget."""


def _factorize(K, escalate=True):
    """Cholesky factor of ``K + nugget * I`` with the smallest workable nugget."""
    n = len(K)
    for nugget in (_NUGGETS if escalate else _NUGGETS[:1]):
        try:
            L = linalg.cholesky(K + nugget * np.eye(n), lower=True, check_finite=False)
            return L, nugget
        except linalg.LinAlgError:
            continue
    raise GPFitError(f"correlation matrix not positive definite (nugget up to {_NUGGETS[-1]})")


class HierarchicalGP(BaseEstimator, RegressorMixin):
    """Kriging model with a constant trend and a mixed hierarchical kernel.

    Hyperparameters are fitted by maximizing the concentrated log-likelihood
    with L-BFGS-B from several seeded starting points (analytic gradient for
    all linear kernel parameters, finite differences for hypersphere angles).

    Parameters
    ----------
    space : DesignSpace
    continuous : {"se", "abs"}
    categorical : {"gower", "exp_onehot", "ehh"}
    hierarchical : bool
        Use activeness masks in the kernel.
    n_starts : int
        Number of optimizer starts (the first one is the default point).
    seed : int or None
    """

    def __init__(self, space: DesignSpace | None = None, continuous="se", categorical="gower",
                 hierarchical=True, n_starts=10, seed=None, maxiter=200):
        self.space = space
        self.continuous = continuous
        self.categorical = categorical
        self.hierarchical = hierarchical
        self.n_starts = n_starts
        self.seed = seed
        self.maxiter = maxiter

    # -- likelihood -------------------------------------------------------------

    def _likelihood(self, params, feats, y, grad=True, escalate=False):
        # During the hyperparameter search only the base nugget is used, so the
        # search stays in the well-conditioned (interpolating) region.
        kern = self.kernel_
        K = kern.corr(params, feats)
        try:
            L, nugget = _factorize(K, escalate)
        except GPFitError:
            return -1e10, np.zeros_like(params), None
        n = len(y)
        ones = np.ones(n)
        Ri_y = linalg.cho_solve((L, True), y, check_finite=False)
        Ri_1 = linalg.cho_solve((L, True), ones, check_finite=False)
        beta = (ones @ Ri_y) / (ones @ Ri_1)
        r = y - beta
        alpha = Ri_y - beta * Ri_1
        sigma2 = max((r @ alpha) / n, 1e-300)
        logdet = 2.0 * np.log(np.diag(L)).sum()
        lnl = -0.5 * (n * math.log(sigma2) + logdet)
        state = dict(L=L, nugget=nugget, beta=beta, alpha=alpha, sigma2=sigma2, Ri_1=Ri_1)
        if not grad:
            return lnl, None, state
        g = np.zeros_like(params)
        nl = kern.n_linear
        if nl:
            Rinv = linalg.cho_solve((L, True), np.eye(n), check_finite=False)
            W = (Rinv - np.outer(alpha, alpha) / sigma2) * K
            theta = np.exp(params[:nl])
            D = feats[0]
            g[:nl] = 0.5 * theta * (D.reshape(nl, -1) @ W.ravel())
        for k in range(nl, len(params)):
            h = 1e-5
            p1, p2 = params.copy(), params.copy()
            p1[k] += h
            p2[k] -= h
            g[k] = (self._likelihood(p1, feats, y, False)[0]
                    - self._likelihood(p2, feats, y, False)[0]) / (2 * h)
        return lnl, g, state

    def log_likelihood(self, params, grad=False):
        """Concentrated log-likelihood (and gradient w.r.t. the log/angle parameters)."""
        lnl, g, _ = self._likelihood(np.asarray(params, float), self._feats, self._y_std, grad)
        return (lnl, g) if grad else lnl

    # -- fitting --------------------------------------------------------------

    def fit(self, X, y, activeness=None):
        """Fit to design vectors ``X`` with targets ``y``.

        ``activeness`` defaults to the space's activeness of ``X``.
        """
        if not isinstance(self.space, DesignSpace):
            raise TypeError("HierarchicalGP needs a DesignSpace")
        X, _ = self.space.check_X(X)
        y = np.asarray(y, dtype=float).ravel()
        if len(y) != len(X):
            raise ValueError("X and y have different lengths")
        if len(y) < 2:
            raise ValueError("at least 2 training points are needed")
        if not np.all(np.isfinite(y)):
            raise ValueError("training targets must be finite")
        A = self.space.activeness(X) if activeness is None else np.asarray(activeness, bool)
        self.kernel_ = MixedKernel(self.space, self.continuous, self.categorical, self.hierarchical)
        self.X_train_, self.A_train_ = X.copy(), A.copy()
        self.y_mean_ = float(y.mean())
        self.y_scale_ = float(y.std())
        self.constant_ = self.y_scale_ == 0.0
        if self.constant_:
            self.params_ = self.kernel_.default_params()
            return self
        self._y_std = (y - self.y_mean_) / self.y_scale_
        self._feats = self.kernel_.features(X, A, X, A)

        rng = np.random.default_rng(self.seed)
        starts = [self.kernel_.default_params()]
        if self.n_starts > 1:
            starts.extend(self.kernel_.random_params(rng, self.n_starts - 1))
        bounds = [tuple(b) for b in self.kernel_.bounds]
        best = None

        def objective(p):
            lnl, g, _ = self._likelihood(p, self._feats, self._y_std)
            return -lnl, -g

        for p0 in starts:
            res = optimize.minimize(objective, p0, jac=True, method="L-BFGS-B", bounds=bounds,
                                    options={"maxiter": self.maxiter})
            if best is None or res.fun < best.fun - 1e-12:
                best = res
        self.params_ = np.asarray(best.x, dtype=float)
        self._set_state(self.params_)
        return self

    def _set_state(self, params):
        lnl, _, state = self._likelihood(params, self._feats, self._y_std, grad=False, escalate=True)
        if state is None:
            raise GPFitError("correlation matrix not positive definite at the fitted parameters")
        self.log_likelihood_ = lnl
        self.nugget_ = state["nugget"]
        self._L = state["L"]
        self._beta = state["beta"]
        self._alpha = state["alpha"]
        self._sigma2 = state["sigma2"]
        self._Ri_1 = state["Ri_1"]
        self._one_Ri_1 = float(np.ones(len(self._alpha)) @ self._Ri_1)

    # -- prediction -------------------------------------------------------------

    def predict(self, X, activeness=None, return_std=False):
        """Predictive mean (and standard deviation) at ``X``."""
        if not hasattr(self, "params_"):
            raise RuntimeError("model is not fitted")
        X, _ = self.space.check_X(X)
        if self.constant_:
            mean = np.full(len(X), self.y_mean_)
            return (mean, np.zeros(len(X))) if return_std else mean
        A = self.space.activeness(X) if activeness is None else np.atleast_2d(np.asarray(activeness, bool))
        k = self.kernel_.corr(self.params_, self.kernel_.features(X, A, self.X_train_, self.A_train_))
        # The nugget only regularizes the factorization: a query that coincides
        # with a training point gets the same self-correlation, which keeps
        # the predictor interpolating.
        k[k == 1.0] += self.nugget_
        mean_std = self._beta + k @ self._alpha
        mean = self.y_mean_ + self.y_scale_ * mean_std
        if not return_std:
            return mean
        v = linalg.solve_triangular(self._L, k.T, lower=True, check_finite=False)
        u = 1.0 - k @ self._Ri_1
        s2 = self._sigma2 * (1.0 - (v ** 2).sum(axis=0) + u ** 2 / self._one_Ri_1)
        return mean, self.y_scale_ * np.sqrt(np.maximum(s2, 0.0))

    # -- persistence -------------------------------------------------------------

    def to_dict(self) -> dict:
        """JSON-serializable state; the factorization is rebuilt on load."""
        return {
            "params": self.get_params(deep=False) | {"space": self.space.to_dict()},
            "X": self.X_train_.tolist(), "A": self.A_train_.astype(int).tolist(),
            "y": (self.y_mean_ + self.y_scale_ * self._y_std).tolist() if not self.constant_
            else [self.y_mean_] * len(self.X_train_),
            "theta": self.params_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HierarchicalGP":
        params = dict(d["params"])
        params["space"] = DesignSpace.from_dict(params["space"])
        model = cls(**params)
        X = np.asarray(d["X"], dtype=float)
        A = np.asarray(d["A"], dtype=bool)
        y = np.asarray(d["y"], dtype=float)
        model.kernel_ = MixedKernel(model.space, model.continuous, model.categorical, model.hierarchical)
        model.X_train_, model.A_train_ = X, A
        model.y_mean_, model.y_scale_ = float(y.mean()), float(y.std())
        model.constant_ = model.y_scale_ == 0.0
        model.params_ = np.asarray(d["theta"], dtype=float)
        if not model.constant_:
            model._y_std = (y - model.y_mean_) / model.y_scale_
            model._feats = model.kernel_.features(X, A, X, A)
            model._set_state(model.params_)
        return model
