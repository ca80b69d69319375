"""Built-in test problems.

A problem couples a design space with a deterministic evaluator returning
objective values ``f`` (minimized) and inequality constraints ``g``
(feasible when ``g <= 0``). A failed evaluation (hidden constraint) returns
NaN for all outputs of that design point.

Problems
--------
toy
    Energy-source assignment toy. Consumer loads are 1.0 and 0.6; the cost is
    ``0.4 * n_sources + max_source_load - 0.7 * [two consumers]`` where the
    load of a source is the sum of the loads of the consumers assigned to it.
    The optimum 1.1 is two sources, two consumers on different sources.
gnc_*
    Guidance-navigation-control style architectures (sensors, computers and
    their connections). A unit of type ``t`` in [0, 1] fails with probability
    ``p(t) = 10**(-1 - 3 t)`` and has mass ``m(t) = 1 + 9 t``; each connection
    weighs 1. The system works when some working sensor is connected to some
    working computer. The failure objective is ``log10`` of the exact system
    failure probability (all unit states enumerated). Variants:
    ``so_weight`` (mass), ``so_failure`` (failure), ``so_scalarized``
    (mean of mass normalized on [3, 69] and log-failure normalized on
    [-12, 0]) and ``multi`` (mass and failure).
turbofan
    Synthetic stand-in for a turbofan cycle model over the turbofan
    architecture space: a smooth specific-fuel-consumption-like objective,
    five design constraints (jet Mach number, pressure-ratio split, and the
    pressure ratio of each shaft) and a failed region given by a smooth
    auxiliary function exceeding a calibrated threshold (about half of a
    hierarchical DoE fails).
"""
from __future__ import annotations

import itertools
import json
import math
from importlib import resources

import numpy as np

from .correction import Corrector
from .design_space import DesignSpace
from .spaces import gnc_space, toy_space, turbofan_space

__all__ = [
    "Problem", "toy_problem", "gnc_problem", "turbofan_problem", "PROBLEMS", "get_problem",
    "gnc_unit_failure", "gnc_unit_mass", "gnc_failure_probability", "GNC_VARIANTS",
]


class Problem:
    """Deterministic test problem over a design space.

    Subclasses implement ``_evaluate(X, A)`` on imputed design vectors.

    Attributes
    ----------
    name : str
    space : DesignSpace
    n_f, n_g : int
    optimum : float or None
        Known optimal objective (single-objective problems).
    front : ndarray or None
        Known (reference) Pareto front (multi-objective problems).
    high_failure : bool
        Large failed region; optimizers use a larger DoE.
    """
    name = "problem"
    n_f = 1
    n_g = 0
    optimum = None
    front = None
    high_failure = False

    def __init__(self, space: DesignSpace):
        self.space = space

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, n_x={self.space.n_x}, n_f={self.n_f}, n_g={self.n_g})"

    def correction_hook(self, X):
        """Problem-specific correction of a 2-D array; ``None`` means no hook."""
        return None

    @property
    def has_hook(self) -> bool:
        return type(self).correction_hook is not Problem.correction_hook

    def corrector(self, **kwargs) -> Corrector:
        """Fitted corrector for this problem, using the hook when there is one."""
        if self.has_hook and "hook" not in kwargs:
            kwargs["hook"] = self.correction_hook
        return Corrector(self.space, **kwargs).fit()

    def evaluate(self, X, activeness=None):
        """Objectives ``(n, n_f)`` and constraints ``(n, n_g)``; NaN rows on failure.

        Inactive variables are imputed first, so their values never matter.
        """
        X, single = self.space.check_X(X)
        X = self.space.impute(self.space.round(X), activeness)
        A = self.space.activeness(X)
        F, G = self._evaluate(X, A)
        F = np.asarray(F, dtype=float).reshape(len(X), self.n_f)
        G = np.asarray(G, dtype=float).reshape(len(X), self.n_g)
        return (F[0], G[0]) if single else (F, G)

    def _evaluate(self, X, A):  # pragma: no cover - abstract
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Toy problem
# ---------------------------------------------------------------------------

class ToyProblem(Problem):
    name = "toy"
    optimum = 1.1
    loads = (1.0, 0.6)

    def __init__(self):
        super().__init__(toy_space())

    def _evaluate(self, X, A):
        n_src = X[:, 0] + 1
        n_con = X[:, 1] + 1
        src = X[:, 2:4].astype(int)  # 0-based source index per consumer
        load = np.zeros((len(X), 2))
        for c, w in enumerate(self.loads):
            used = n_con > c
            np.add.at(load, (np.flatnonzero(used), src[used, c]), w)
        f = 0.4 * n_src + load.max(axis=1) - 0.7 * (n_con == 2)
        return f[:, None], np.zeros((len(X), 0))


def toy_problem() -> Problem:
    return ToyProblem()


# ---------------------------------------------------------------------------
# GNC problems
# ---------------------------------------------------------------------------

GNC_VARIANTS = ("so_weight", "so_failure", "so_scalarized", "multi")
GNC_MASS_RANGE = (3.0, 69.0)
GNC_LOG_FAILURE_RANGE = (-12.0, 0.0)


def gnc_unit_failure(t):
    """Failure probability of a unit of type ``t`` in [0, 1]."""
    return 10.0 ** (-1.0 - 3.0 * np.asarray(t, dtype=float))


def gnc_unit_mass(t):
    """Mass of a unit of type ``t`` in [0, 1]."""
    return 1.0 + 9.0 * np.asarray(t, dtype=float)


_STATES = {}


def _unit_states(n_s, n_c):
    """All unit up/down states for ``n_s`` sensors and ``n_c`` computers (True = working)."""
    key = (n_s, n_c)
    if key not in _STATES:
        _STATES[key] = np.array(list(itertools.product([True, False], repeat=n_s + n_c)), dtype=bool)
    return _STATES[key]


def gnc_failure_probability(p_sensors, p_computers, connections) -> float:
    """Exact probability that no working sensor reaches a working computer.

    ``connections`` is a boolean (n_sensors, n_computers) matrix. Failing
    state probabilities are summed directly, which keeps full relative
    precision for very reliable systems.
    """
    p = np.concatenate([np.asarray(p_sensors, float), np.asarray(p_computers, float)])
    conn = np.asarray(connections, dtype=bool)
    n_s, n_c = conn.shape
    S = _unit_states(n_s, n_c)
    prob = np.where(S, 1.0 - p, p).prod(axis=1)
    works = np.einsum("ki,ij,kj->k", S[:, :n_s].astype(int), conn.astype(int),
                      S[:, n_s:].astype(int)) > 0
    return float(prob[~works].sum())


class GNCProblem(Problem):
    high_failure = False

    def __init__(self, variant="so_scalarized"):
        if variant not in GNC_VARIANTS:
            raise ValueError(f"unknown GNC variant {variant!r}; expected one of {GNC_VARIANTS}")
        super().__init__(gnc_space())
        self.variant = variant
        self.name = f"gnc_{variant}"
        self.n_f = 2 if variant == "multi" else 1
        ref = _gnc_reference()
        if variant == "multi":
            self.front = np.asarray(ref["front"], dtype=float)
        else:
            self.optimum = float(ref["optimum"][variant])

    def mass_and_failure(self, X):
        """Mass and log10 failure probability of imputed design vectors."""
        X = np.atleast_2d(X)
        out = np.empty((len(X), 2))
        for r, x in enumerate(X):
            n_s, n_c = int(x[0]) + 1, int(x[1]) + 1
            conn = x[2:11].reshape(3, 3)[:n_s, :n_c] > 0.5
            t_s, t_c = x[11:11 + n_s], x[14:14 + n_c]
            mass = gnc_unit_mass(t_s).sum() + gnc_unit_mass(t_c).sum() + conn.sum()
            p = gnc_failure_probability(gnc_unit_failure(t_s), gnc_unit_failure(t_c), conn)
            out[r] = mass, math.log10(p)
        return out

    def _evaluate(self, X, A):
        mf = self.mass_and_failure(X)
        if self.variant == "so_weight":
            F = mf[:, :1]
        elif self.variant == "so_failure":
            F = mf[:, 1:]
        elif self.variant == "so_scalarized":
            F = gnc_scalarize(mf)[:, None]
        else:
            F = mf
        return F, np.zeros((len(X), 0))

    def correction_hook(self, X):
        """Connect every unconnected present unit to its counterpart of the same index (or the last one)."""
        X = np.array(X, dtype=float)
        for x in X:
            n_s, n_c = int(round(x[0])) + 1, int(round(x[1])) + 1
            conn = x[2:11].reshape(3, 3)
            for i in range(n_s):
                if not conn[i, :n_c].any():
                    conn[i, min(i, n_c - 1)] = 1
            for j in range(n_c):
                if not conn[:n_s, j].any():
                    conn[min(j, n_s - 1), j] = 1
            x[2:11] = conn.ravel()
        return X


def gnc_scalarize(mass_failure):
    """Equal-weight mean of normalized mass and normalized log10 failure."""
    mf = np.atleast_2d(mass_failure)
    m = (mf[:, 0] - GNC_MASS_RANGE[0]) / (GNC_MASS_RANGE[1] - GNC_MASS_RANGE[0])
    q = (mf[:, 1] - GNC_LOG_FAILURE_RANGE[0]) / (GNC_LOG_FAILURE_RANGE[1] - GNC_LOG_FAILURE_RANGE[0])
    return 0.5 * (m + q)


def gnc_problem(variant="so_scalarized") -> Problem:
    return GNCProblem(variant)


_GNC_REF = None


def _gnc_reference():
    global _GNC_REF
    if _GNC_REF is None:
        text = resources.files("archopt").joinpath("data/gnc_reference.json").read_text()
        _GNC_REF = json.loads(text)
    return _GNC_REF


def compute_gnc_reference(n_weights=21, seed=0):
    """Recompute the GNC single-objective optima and the reference Pareto front.

    Every valid architecture is optimized over its active type selectors
    with L-BFGS-B (several starts): once for the scalarized objective and
    once per weight of a weighted sum of the normalized objectives. The
    front is the non-dominated set of all points found, so it is a
    (tight) approximation of the true front.
    """
    from scipy import optimize

    prob = GNCProblem.__new__(GNCProblem)
    Problem.__init__(prob, gnc_space())
    space = prob.space
    X_valid, A_valid = space.enumerate_valid()
    rng = np.random.default_rng(seed)
    cont = space.continuous_indices
    best_scal = (math.inf, None)
    points = []
    for x0, a in zip(X_valid, A_valid):
        idx = cont[a[cont]]

        def mf(t):
            x = x0.copy()
            x[idx] = t
            return prob.mass_and_failure(x)[0]

        def obj(t, w):
            m, q = mf(t)
            return (w * (m - GNC_MASS_RANGE[0]) / (GNC_MASS_RANGE[1] - GNC_MASS_RANGE[0])
                    + (1 - w) * (q - GNC_LOG_FAILURE_RANGE[0])
                    / (GNC_LOG_FAILURE_RANGE[1] - GNC_LOG_FAILURE_RANGE[0]))

        bounds = [(0.0, 1.0)] * len(idx)
        starts = [np.zeros(len(idx)), np.ones(len(idx))] + list(rng.uniform(size=(3, len(idx))))
        for s in starts:
            res = optimize.minimize(obj, s, args=(0.5,), method="L-BFGS-B", bounds=bounds)
            if res.fun < best_scal[0]:
                best_scal = (float(res.fun), res.x)
        # weight sweep with warm starts (continuation from failure-only to mass-only)
        t = np.ones(len(idx))
        for w in np.linspace(0.0, 1.0, n_weights):
            t = optimize.minimize(obj, t, args=(w,), method="L-BFGS-B", bounds=bounds).x
            points.append(mf(t))
    P = np.array(points)
    front = P[_non_dominated_2d(P)]
    front = front[np.argsort(front[:, 0])]
    return {
        "optimum": {
            "so_weight": float(GNC_MASS_RANGE[0]),
            "so_failure": float(P[:, 1].min()),
            "so_scalarized": best_scal[0],
        },
        "front": front.tolist(),
    }


def _non_dominated_2d(P):
    order = np.lexsort((P[:, 1], P[:, 0]))
    keep = []
    best = math.inf
    for i in order:
        if P[i, 1] < best - 1e-12:
            keep.append(i)
            best = P[i, 1]
    return np.array(keep, dtype=int)


# ---------------------------------------------------------------------------
# Synthetic turbofan
# ---------------------------------------------------------------------------

# design-vector indices of the turbofan space
_FAN, _MIX, _GB, _NSH, _POW, _BLEED = range(6)
_BPR, _FPR, _GR, _OPR, _PR2, _PR3, _RPM1, _RPM2, _RPM3 = range(6, 15)
_RPM_CENTER = np.array([8000.0, 11000.0, 14000.0])
_RPM_BEST_FAN = (4000.0, 9000.0)  # low-pressure shaft optimum without / with gearbox
_RPM_BEST = np.array([9000.0, 11500.0, 14500.0])


def _turbofan_shares(X):
    """Pressure-ratio exponent share per shaft (zero for missing shafts)."""
    n = X[:, _NSH] + 1
    s2 = np.where(n >= 2, X[:, _PR2], 0.0)
    s3 = np.where(n >= 3, X[:, _PR3], 0.0)
    return np.stack([1.0 - s2 - s3, s2, s3], axis=1), n


def turbofan_failure_indicator(X, A=None):
    """Smooth auxiliary function; evaluations above the threshold fail."""
    X = np.atleast_2d(X)
    n = X[:, _NSH] + 1
    rpm = X[:, _RPM1:_RPM3 + 1]
    dev = ((rpm - _RPM_CENTER) / 19000.0) ** 2
    dev = dev * (np.arange(3)[None, :] < n[:, None])
    fan = X[:, _FAN] > 0.5
    gb = fan & (X[:, _GB] > 0.5)
    h = dev.sum(axis=1)
    h += 0.05 * (X[:, _OPR] / 60.0) ** 2
    h += np.where(fan, 0.08 * ((X[:, _BPR] - 2.0) / 10.5) * ((X[:, _FPR] - 1.1) / 0.7), 0.0)
    h += np.where(gb, 0.03 * ((X[:, _GR] - 1.0) / 4.0) ** 2, 0.0)
    return h


class TurbofanProblem(Problem):
    name = "turbofan"
    n_f = 1
    n_g = 5
    high_failure = True
    # median of the failure indicator over hierarchical DoEs of 1000 points
    failure_threshold = 0.1908
    optimum = None

    def __init__(self):
        super().__init__(turbofan_space())
        ref = json.loads(resources.files("archopt").joinpath("data/turbofan_reference.json").read_text())
        self.optimum = float(ref["optimum"])
        self.optimum_x = np.asarray(ref["x"], dtype=float)

    def objective_constraints(self, X):
        """Objective and constraints ignoring the failed region."""
        X = np.atleast_2d(X)
        fan = X[:, _FAN] > 0.5
        mixed = fan & (X[:, _MIX] > 0.5)
        gb = fan & (X[:, _GB] > 0.5)
        bpr, fpr, gr, opr = X[:, _BPR], X[:, _FPR], X[:, _GR], X[:, _OPR]
        shares, n = _turbofan_shares(X)

        core = 1.0 - opr ** -0.25
        fpr_best = 1.75 - 0.045 * bpr
        prop_fan = 0.45 + 0.4 * (1.0 - np.exp(-bpr / 4.0)) - 2.0 * (fpr - fpr_best) ** 2
        prop_fan += 0.015 * mixed + gb * (0.02 * bpr / 12.5 - 0.01 * (gr - 3.2) ** 2 / 4.0 - 0.005)
        prop = np.where(fan, prop_fan, 0.45)
        eta_shaft = np.choose((n - 1).astype(int), [0.90, 0.95, 0.965])
        present = np.arange(3)[None, :] < n[:, None]
        split = (((shares - 1.0 / n[:, None]) ** 2) * present).sum(axis=1)
        rpm_best = np.tile(_RPM_BEST, (len(X), 1))
        rpm_best[:, 0] = np.where(fan & ~gb, _RPM_BEST_FAN[0], np.where(gb, _RPM_BEST_FAN[1], _RPM_BEST[0]))
        rpm = X[:, _RPM1:_RPM3 + 1]
        rpm_pen = ((((rpm - rpm_best) / 19000.0) ** 2) * present).sum(axis=1)
        power_pen = 0.004 * X[:, _POW]                 # offtake best on the low-pressure shaft
        bleed_pen = 0.004 * ((n - 1) - X[:, _BLEED])   # bleed best on the highest-pressure shaft
        eta = core * prop * eta_shaft - 0.08 * split - 0.02 * rpm_pen - power_pen - bleed_pen
        f = 8.0 / np.maximum(eta, 0.05)

        m_jet = np.where(fan, 0.45 + 0.55 * (fpr - 1.0) / 0.7 * (1.0 + 0.1 * mixed), 0.7 + 0.01 * opr)
        pr_shaft = np.where(present, opr[:, None] ** shares, 1.0)
        G = np.column_stack([
            m_jet - 1.0,
            shares[:, 1] + shares[:, 2] - 0.9,
            pr_shaft - 15.0,
        ])
        return f, G

    def _evaluate(self, X, A):
        f, G = self.objective_constraints(X)
        failed = turbofan_failure_indicator(X, A) > self.failure_threshold
        F = np.where(failed[:, None], np.nan, f[:, None])
        G = np.where(failed[:, None], np.nan, G)
        return F, G

    def correction_hook(self, X):
        """Move offtakes on missing shafts to the highest existing shaft."""
        X = np.array(X, dtype=float)
        top = X[:, _NSH]
        X[:, _POW] = np.minimum(X[:, _POW], top)
        X[:, _BLEED] = np.minimum(X[:, _BLEED], top)
        return X


def turbofan_problem() -> Problem:
    return TurbofanProblem()


def compute_turbofan_reference(n_starts=8, seed=0):
    """Recompute the best viable feasible objective of the synthetic turbofan.

    Every valid architecture is optimized over its active continuous
    variables with SLSQP, subject to the design constraints and to staying
    inside the viable region.
    """
    from scipy import optimize

    prob = TurbofanProblem.__new__(TurbofanProblem)
    Problem.__init__(prob, turbofan_space())
    space = prob.space
    rng = np.random.default_rng(seed)
    X_valid, A_valid = space.enumerate_valid()
    lo, hi = space.lower, space.upper
    best = (math.inf, None)
    for x0, a in zip(X_valid, A_valid):
        idx = space.continuous_indices[a[space.continuous_indices]]
        span = hi[idx] - lo[idx]

        def full(u):
            x = x0.copy()
            x[idx] = lo[idx] + np.clip(u, 0, 1) * span
            return x

        cons = [
            {"type": "ineq", "fun": lambda u: -prob.objective_constraints(full(u))[1][0]},
            {"type": "ineq", "fun": lambda u: prob.failure_threshold - 1e-6
             - turbofan_failure_indicator(full(u))},
        ]
        for s in rng.uniform(size=(n_starts, len(idx))):
            res = optimize.minimize(lambda u: prob.objective_constraints(full(u))[0][0], s,
                                    method="SLSQP", bounds=[(0, 1)] * len(idx), constraints=cons,
                                    options={"maxiter": 300, "ftol": 1e-10})
            x = full(res.x)
            f, G = prob.objective_constraints(x)
            ok = np.all(G <= 1e-9) and turbofan_failure_indicator(x)[0] <= prob.failure_threshold
            if ok and f[0] < best[0]:
                best = (float(f[0]), x)
    return {"optimum": best[0], "x": best[1].tolist()}


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

PROBLEMS = {
    "toy": toy_problem,
    "gnc_so_weight": lambda: gnc_problem("so_weight"),
    "gnc_so_failure": lambda: gnc_problem("so_failure"),
    "gnc_so_scalarized": lambda: gnc_problem("so_scalarized"),
    "gnc_multi": lambda: gnc_problem("multi"),
    "turbofan": turbofan_problem,
}


def get_problem(name: str) -> Problem:
    """Built-in problem by short name (``gnc`` is an alias of ``gnc_so_scalarized``)."""
    if name == "gnc":
        name = "gnc_so_scalarized"
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; expected one of {sorted(PROBLEMS)}") from None
