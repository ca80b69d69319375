"""Hierarchical mixed-discrete design spaces.

A design space is an ordered list of variables (continuous, integer,
ordinal or categorical), a set of activation conditions that switch
variables on and off depending on the values of discrete variables, and a
set of forbidden clauses (value constraints).

Design vectors are stored as float arrays of shape ``(n, n_x)``. Continuous
variables hold their real value, discrete variables hold the *option index*
``0 .. N_j - 1`` (for an integer variable the index is ``value - lower``).
Activeness is returned as a boolean array with the same shape.

Predicates are written as small JSON-style trees::

    {"eq": ["n_shafts", 2]}
    {"in": ["x0", [0, 1]]}
    {"gt": ["n_shafts", 1]}          # also "lt", "ge", "le"
    {"and": [pred, pred, ...]}
    {"or": [pred, pred, ...]}

Values in the leaves are the *declared* values (category labels, ordinal
values, integer values), never option indices.
"""
from __future__ import annotations

import enum
import graphlib
import itertools
import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

__all__ = [
    "Variable", "Continuous", "Integer", "Ordinal", "Categorical",
    "Activation", "Forbidden", "DesignSpace",
    "SpaceDefinitionError", "EnumerationUnavailable", "PointStatus",
    "DEFAULT_ENUMERATION_CAP",
]

DEFAULT_ENUMERATION_CAP = 10**8
# Declared sizes up to this value are scanned exhaustively to count correct
# vectors; above it the count is derived from the valid set.
_SCAN_CAP = 10**7
_SCAN_CHUNK = 200_000


class SpaceDefinitionError(ValueError):
    """Raised for malformed or inconsistent design space definitions."""


class EnumerationUnavailable(RuntimeError):
    """Raised when the declared discrete size exceeds the enumeration cap."""


class PointStatus(enum.IntEnum):
    """Status ladder of a design point.

    The first five values describe a point relative to the design space,
    the last four describe the outcome of an evaluation.
    """
    DECLARED = 0
    INVALID = 1
    CORRECT = 2
    NON_CANONICAL = 3
    VALID = 4
    FAILED = 5
    VIABLE = 6
    INFEASIBLE = 7
    FEASIBLE = 8


# ---------------------------------------------------------------------------
# Variables
# ---------------------------------------------------------------------------

class Variable:
    """Base class of design variables."""

    kind = "abstract"
    is_discrete = True

    def __init__(self, name: str):
        if not isinstance(name, str) or not name:
            raise SpaceDefinitionError("variable name must be a non-empty string")
        self.name = name

    @property
    def n_options(self) -> int:
        raise NotImplementedError

    @property
    def declared_values(self) -> list:
        raise NotImplementedError

    def index_of(self, value) -> int:
        """Option index of a declared value."""
        values = self.declared_values
        for i, v in enumerate(values):
            if v == value:
                return i
        raise SpaceDefinitionError(
            f"value {value!r} is not a declared value of variable {self.name!r}")

    def value_of(self, index: int):
        return self.declared_values[int(index)]

    def numeric_values(self) -> np.ndarray | None:
        """Declared values as floats, or None for unordered variables."""
        return np.asarray(self.declared_values, dtype=float)

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(json.dumps(self.to_dict(), sort_keys=True))

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.to_dict().items() if k != "kind")
        return f"{type(self).__name__}({args})"


class Continuous(Variable):
    kind = "continuous"
    is_discrete = False

    def __init__(self, name: str, lower: float, upper: float):
        super().__init__(name)
        lower, upper = float(lower), float(upper)
        if not (np.isfinite(lower) and np.isfinite(upper)) or not lower < upper:
            raise SpaceDefinitionError(
                f"continuous variable {name!r} needs finite lower < upper, got [{lower}, {upper}]")
        self.lower, self.upper = lower, upper

    @property
    def n_options(self) -> int:
        return 0

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "bounds": [self.lower, self.upper]}


class Integer(Variable):
    kind = "integer"

    def __init__(self, name: str, lower: int, upper: int):
        super().__init__(name)
        if int(lower) != lower or int(upper) != upper:
            raise SpaceDefinitionError(f"integer variable {name!r} needs integer bounds")
        lower, upper = int(lower), int(upper)
        if not lower < upper:
            raise SpaceDefinitionError(
                f"integer variable {name!r} needs lower < upper, got [{lower}, {upper}]")
        self.lower, self.upper = lower, upper

    @property
    def n_options(self) -> int:
        return self.upper - self.lower + 1

    @property
    def declared_values(self) -> list:
        return list(range(self.lower, self.upper + 1))

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "bounds": [self.lower, self.upper]}


class Ordinal(Variable):
    kind = "ordinal"

    def __init__(self, name: str, values: Sequence[float]):
        super().__init__(name)
        values = [float(v) for v in values]
        if len(values) < 2:
            raise SpaceDefinitionError(f"ordinal variable {name!r} needs at least 2 values")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise SpaceDefinitionError(f"ordinal variable {name!r} values must be strictly increasing")
        # keep integral values as ints so they round-trip cleanly through JSON
        self.values = [int(v) if v == int(v) else v for v in values]

    @property
    def n_options(self) -> int:
        return len(self.values)

    @property
    def declared_values(self) -> list:
        return list(self.values)

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "values": list(self.values)}


class Categorical(Variable):
    kind = "categorical"

    def __init__(self, name: str, levels: Sequence):
        super().__init__(name)
        levels = list(levels)
        if len(levels) < 2:
            raise SpaceDefinitionError(f"categorical variable {name!r} needs at least 2 levels")
        if len(set(map(repr, levels))) != len(levels):
            raise SpaceDefinitionError(f"categorical variable {name!r} has duplicate levels")
        self.levels = levels

    @property
    def n_options(self) -> int:
        return len(self.levels)

    @property
    def declared_values(self) -> list:
        return list(self.levels)

    def numeric_values(self):
        return None

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "levels": list(self.levels)}


_VARIABLE_KINDS = {
    "continuous": lambda d, p: Continuous(d["name"], *_pair(d, "bounds", p)),
    "integer": lambda d, p: Integer(d["name"], *_pair(d, "bounds", p)),
    "ordinal": lambda d, p: Ordinal(d["name"], _field(d, "values", p)),
    "categorical": lambda d, p: Categorical(d["name"], _field(d, "levels", p)),
}


def _field(d: dict, key: str, path: str):
    if key not in d:
        raise SpaceDefinitionError(f"{path}: missing field {key!r}")
    return d[key]


def _pair(d: dict, key: str, path: str):
    value = _field(d, key, path)
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise SpaceDefinitionError(f"{path}.{key}: expected [lower, upper]")
    return value


def variable_from_dict(d: dict, path: str = "variable") -> Variable:
    if not isinstance(d, dict):
        raise SpaceDefinitionError(f"{path}: expected an object")
    _field(d, "name", path)
    kind = _field(d, "kind", path)
    if kind not in _VARIABLE_KINDS:
        raise SpaceDefinitionError(
            f"{path}.kind: unknown kind {kind!r} (expected one of {sorted(_VARIABLE_KINDS)})")
    try:
        return _VARIABLE_KINDS[kind](d, path)
    except SpaceDefinitionError as exc:
        msg = str(exc)
        raise SpaceDefinitionError(msg if msg.startswith(path) else f"{path}: {msg}") from None


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Activation:
    """Variable ``target`` is active only when ``predicate`` holds."""
    target: str
    predicate: dict


@dataclass(frozen=True)
class Forbidden:
    """Design vectors for which ``predicate`` holds are incorrect."""
    predicate: dict


class _Leaf:
    __slots__ = ("index", "allowed")

    def __init__(self, index: int, allowed: np.ndarray):
        self.index = index
        self.allowed = allowed

    def variables(self):
        return {self.index}

    def evaluate(self, Xi, active=None):
        out = self.allowed[Xi[:, self.index]]
        if active is not None:
            out = out & active[:, self.index]
        return out


class _Node:
    __slots__ = ("op", "children")

    def __init__(self, op, children):
        self.op = op
        self.children = children

    def variables(self):
        return set().union(*(c.variables() for c in self.children))

    def evaluate(self, Xi, active=None):
        results = [c.evaluate(Xi, active) for c in self.children]
        fn = np.logical_and if self.op == "and" else np.logical_or
        return fn.reduce(results) if len(results) > 1 else results[0]


_COMPARE = {
    "gt": np.greater, "lt": np.less, "ge": np.greater_equal, "le": np.less_equal,
}


def _compile(tree, variables: list[Variable], name_to_index: dict, path: str):
    if not isinstance(tree, dict) or len(tree) != 1:
        raise SpaceDefinitionError(f"{path}: a predicate node must be an object with exactly one key")
    (op, args), = tree.items()
    if op in ("and", "or"):
        if not isinstance(args, list) or not args:
            raise SpaceDefinitionError(f"{path}.{op}: expected a non-empty list of predicates")
        return _Node(op, [_compile(a, variables, name_to_index, f"{path}.{op}[{i}]")
                          for i, a in enumerate(args)])
    if op not in ("eq", "in", *_COMPARE):
        raise SpaceDefinitionError(f"{path}: unknown predicate operator {op!r}")
    if not isinstance(args, list) or len(args) != 2:
        raise SpaceDefinitionError(f"{path}.{op}: expected [variable, value]")
    name, value = args
    if name not in name_to_index:
        raise SpaceDefinitionError(f"{path}.{op}: unknown variable {name!r}")
    idx = name_to_index[name]
    var = variables[idx]
    if not var.is_discrete:
        raise SpaceDefinitionError(
            f"{path}.{op}: predicates may only reference discrete variables ({name!r} is continuous)")
    allowed = np.zeros(var.n_options, dtype=bool)
    try:
        if op == "eq":
            allowed[var.index_of(value)] = True
        elif op == "in":
            if not isinstance(value, list):
                raise SpaceDefinitionError("'in' expects a list of values")
            for v in value:
                allowed[var.index_of(v)] = True
        else:
            numeric = var.numeric_values()
            if numeric is None:
                raise SpaceDefinitionError(f"cannot compare categorical variable {name!r} numerically")
            allowed[:] = _COMPARE[op](numeric, float(value))
    except SpaceDefinitionError as exc:
        raise SpaceDefinitionError(f"{path}.{op}: {exc}") from None
    return _Leaf(idx, allowed)


# ---------------------------------------------------------------------------
# Design space
# ---------------------------------------------------------------------------

class DesignSpace:
    """Immutable hierarchical design space.

    Parameters
    ----------
    variables : sequence of Variable
    activations : sequence of Activation
        Several conditions targeting the same variable are combined with AND.
    forbidden : sequence of Forbidden
    single_option_inactive : bool
        If set, an active discrete variable whose value is pinned to a single
        option by the forbidden clauses is reported as inactive. Only clauses
        that otherwise reference variables declared *before* the variable are
        considered, so a choice can be pinned by earlier decisions but never
        by later ones.
    """

    def __init__(self, variables: Sequence[Variable], activations: Sequence[Activation] = (),
                 forbidden: Sequence[Forbidden] = (), single_option_inactive: bool = True):
        self.variables = tuple(variables)
        if not self.variables:
            raise SpaceDefinitionError("a design space needs at least one variable")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SpaceDefinitionError(f"duplicate variable names: {dup}")
        self.names = tuple(names)
        self._index = {n: i for i, n in enumerate(names)}
        self.activations = tuple(activations)
        self.forbidden = tuple(forbidden)
        self.single_option_inactive = bool(single_option_inactive)

        self.n_x = len(self.variables)
        self.is_discrete = np.array([v.is_discrete for v in self.variables])
        self.is_continuous = ~self.is_discrete
        self.discrete_indices = np.flatnonzero(self.is_discrete)
        self.continuous_indices = np.flatnonzero(self.is_continuous)
        self.n_options = np.array([v.n_options for v in self.variables], dtype=int)
        self.lower = np.array([v.lower if not v.is_discrete else 0.0 for v in self.variables])
        self.upper = np.array([v.upper if not v.is_discrete else v.n_options - 1.0
                               for v in self.variables])
        self.canonical = np.where(self.is_discrete, 0.0, 0.5 * (self.lower + self.upper))

        # compile activation conditions
        self._act = [[] for _ in range(self.n_x)]
        graph = {i: set() for i in range(self.n_x)}
        for k, act in enumerate(self.activations):
            path = f"activations[{k}]"
            if act.target not in self._index:
                raise SpaceDefinitionError(f"{path}.target: unknown variable {act.target!r}")
            t = self._index[act.target]
            pred = _compile(act.predicate, list(self.variables), self._index, f"{path}.predicate")
            if t in pred.variables():
                raise SpaceDefinitionError(f"{path}: variable {act.target!r} cannot activate itself")
            self._act[t].append(pred)
            graph[t] |= pred.variables()
        try:
            self._order = list(graphlib.TopologicalSorter(graph).static_order())
        except graphlib.CycleError as exc:
            cyc = [self.names[i] for i in exc.args[1]]
            raise SpaceDefinitionError(f"cyclic activation dependencies: {' -> '.join(cyc)}") from None

        # compile forbidden clauses
        self._forb = []
        for k, fb in enumerate(self.forbidden):
            pred = _compile(fb.predicate, list(self.variables), self._index, f"forbidden[{k}]")
            self._forb.append((pred, np.array(sorted(pred.variables()))))
        # clauses that can pin variable j: they reference j and otherwise only
        # variables declared before j
        self._pin_clauses = {j: [c for c in self._forb if j in c[1] and c[1].max() == j]
                             for j in self.discrete_indices}

        self._cache: dict = {}

    # -- basic properties ---------------------------------------------------

    @property
    def n_discrete(self) -> int:
        return int(self.is_discrete.sum())

    @property
    def n_continuous(self) -> int:
        return int(self.is_continuous.sum())

    @property
    def is_hierarchical(self) -> bool:
        return bool(self.activations or self.forbidden)

    def index(self, name: str) -> int:
        return self._index[name]

    def declared_size(self) -> int:
        """Size of the Cartesian product of all discrete options (1 if none)."""
        return math.prod(int(n) for n in self.n_options[self.discrete_indices])

    def __repr__(self):
        return (f"DesignSpace(n_x={self.n_x}, n_discrete={self.n_discrete}, "
                f"n_activations={len(self.activations)}, n_forbidden={len(self.forbidden)})")

    def __eq__(self, other):
        return isinstance(other, DesignSpace) and self.to_dict() == other.to_dict()

    __hash__ = object.__hash__

    # -- array helpers ------------------------------------------------------

    def check_X(self, X) -> tuple[np.ndarray, bool]:
        """Return ``X`` as a 2-D float array and whether the input was 1-D."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.ndim != 2 or X.shape[1] != self.n_x:
            raise ValueError(f"expected design vectors with {self.n_x} entries, got shape {np.shape(X)}")
        return X, single

    def _indices(self, X: np.ndarray) -> np.ndarray:
        """Integer option indices, clipped to the declared range (0 for continuous)."""
        Xi = np.zeros(X.shape, dtype=np.int64)
        d = self.discrete_indices
        if len(d):
            Xi[:, d] = np.clip(np.rint(X[:, d]), 0, self.n_options[d] - 1).astype(np.int64)
        return Xi

    def round(self, X) -> np.ndarray:
        """Round discrete entries to option indices and clip everything to bounds."""
        X, single = self.check_X(X)
        X = np.clip(X, self.lower, self.upper)
        X[:, self.discrete_indices] = np.rint(X[:, self.discrete_indices])
        return X[0] if single else X

    def in_bounds(self, X) -> np.ndarray:
        X, single = self.check_X(X)
        ok = np.all((X >= self.lower) & (X <= self.upper), axis=1)
        d = self.discrete_indices
        ok &= np.all(X[:, d] == np.rint(X[:, d]), axis=1)
        return ok[0] if single else ok

    # -- activeness / correctness -------------------------------------------

    def _activation_only(self, Xi: np.ndarray) -> np.ndarray:
        active = np.ones(Xi.shape, dtype=bool)
        for j in self._order:
            for pred in self._act[j]:
                active[:, j] &= pred.evaluate(Xi, active)
        return active

    def _violations(self, Xi, active, clauses=None) -> np.ndarray:
        """Boolean (n,) array: some clause is violated with all its variables active."""
        viol = np.zeros(len(Xi), dtype=bool)
        for pred, refs in (self._forb if clauses is None else clauses):
            viol |= pred.evaluate(Xi) & np.all(active[:, refs], axis=1)
        return viol

    def _activeness_idx(self, Xi: np.ndarray) -> np.ndarray:
        act = self._activation_only(Xi)
        if not (self.single_option_inactive and self._forb):
            return act
        active = act.copy()
        for j, clauses in self._pin_clauses.items():
            if not clauses:
                continue
            rows = np.flatnonzero(act[:, j])
            if not len(rows):
                continue
            sub = Xi[rows].copy()
            n_allowed = np.zeros(len(rows), dtype=int)
            for v in range(self.n_options[j]):
                sub[:, j] = v
                n_allowed += ~self._violations(sub, act[rows], clauses)
            active[rows, j] &= n_allowed != 1
        return active

    def activeness(self, X) -> np.ndarray:
        """Activeness mask of one (1-D) or several (2-D) design vectors."""
        X, single = self.check_X(X)
        active = self._activeness_idx(self._indices(X))
        return active[0] if single else active

    def is_correct(self, X) -> np.ndarray | bool:
        """True where no forbidden clause holds among active variables."""
        X, single = self.check_X(X)
        Xi = self._indices(X)
        ok = ~self._violations(Xi, self._activeness_idx(Xi))
        return bool(ok[0]) if single else ok

    def impute(self, X, active=None) -> np.ndarray:
        """Replace inactive values by canonical ones (index 0 / mid-bounds).

        Without an explicit mask the replacement is repeated until the
        activeness no longer changes: imputing a pinned variable that also
        drives an activation condition can switch other variables off.
        """
        X, single = self.check_X(X)
        if active is not None:
            X = np.where(np.atleast_2d(np.asarray(active, dtype=bool)), X, self.canonical)
            return X[0] if single else X
        for _ in range(self.n_x + 1):
            new = np.where(self._activeness_idx(self._indices(X)), X, self.canonical)
            if np.array_equal(new, X):
                break
            X = new
        return X[0] if single else X

    def is_canonical(self, X, active=None) -> np.ndarray:
        X, single = self.check_X(X)
        ok = np.all(self.impute(X, active) == X, axis=1)
        return bool(ok[0]) if single else ok

    def is_valid(self, X) -> np.ndarray:
        """Correct, canonical and within declared bounds."""
        X, single = self.check_X(X)
        Xi = self._indices(X)
        active = self._activeness_idx(Xi)
        ok = ~self._violations(Xi, active)
        ok &= np.all(np.where(active, X, self.canonical) == X, axis=1)
        ok &= self.in_bounds(X)
        return bool(ok[0]) if single else ok

    def status(self, X) -> np.ndarray:
        """Design-space status (INVALID, NON_CANONICAL or VALID) per vector."""
        X, single = self.check_X(X)
        out = np.full(len(X), int(PointStatus.VALID))
        out[~self.is_canonical(X)] = int(PointStatus.NON_CANONICAL)
        out[~self.is_correct(X) | ~self.in_bounds(X)] = int(PointStatus.INVALID)
        return PointStatus(out[0]) if single else out

    # -- enumeration ---------------------------------------------------------

    def _check_cap(self, cap):
        cap = DEFAULT_ENUMERATION_CAP if cap is None else cap
        size = self.declared_size()
        if size > cap:
            raise EnumerationUnavailable(
                f"declared discrete size {size} exceeds the enumeration cap {cap}")

    def enumerate_valid(self, cap: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """All valid discrete design vectors and their activeness masks.

        Continuous variables are set to their mid-bounds. Rows are sorted
        lexicographically by variable index. Raises EnumerationUnavailable
        if the declared size exceeds ``cap`` (default 1e8).
        """
        self._check_cap(cap)
        if "valid" not in self._cache:
            self._cache["valid"] = self._enumerate_valid()
        X, A = self._cache["valid"]
        return X.copy(), A.copy()

    def _enumerate_valid(self):
        # Branch over discrete variables in topological order. A variable that
        # is already known to be inactive through its activation conditions
        # only takes its canonical index.
        Xi = np.zeros((1, self.n_x), dtype=np.int64)
        order_d = [j for j in self._order if self.is_discrete[j]]
        for j in order_d:
            act = np.ones(len(Xi), dtype=bool)
            for pred in self._act[j]:
                act &= pred.evaluate(Xi, self._activation_only(Xi))
            n_opt = self.n_options[j]
            reps = np.where(act, n_opt, 1)
            new = np.repeat(Xi, reps, axis=0)
            offsets = np.concatenate([np.arange(r) for r in reps]) if len(reps) else np.zeros(0, int)
            new[:, j] = offsets
            Xi = new
        active = self._activeness_idx(Xi)
        ok = ~self._violations(Xi, active)
        ok &= np.all(active | (Xi == 0), axis=1)
        Xi, active = Xi[ok], active[ok]
        order = np.lexsort(Xi.T[::-1]) if len(Xi) else np.zeros(0, int)
        Xi, active = Xi[order], active[order]
        X = np.where(self.is_discrete, Xi.astype(float), self.canonical)
        X.setflags(write=False)
        active.setflags(write=False)
        return X, active

    def correct_counts(self, cap: int | None = None) -> tuple[int, float]:
        """Number of correct discrete vectors and the summed continuous activeness over them.

        Small spaces are scanned exhaustively. For declared sizes above an
        internal scan limit, each valid vector is weighted by the number of
        declared values of its inactive discrete variables.
        """
        self._check_cap(cap)
        if "correct" not in self._cache:
            if self.declared_size() <= _SCAN_CAP:
                self._cache["correct"] = self._scan_correct()
            else:
                X, A = self.enumerate_valid(cap)
                d, c = self.discrete_indices, self.continuous_indices
                mult = np.prod(np.where(A[:, d], 1, self.n_options[d]), axis=1).astype(float)
                self._cache["correct"] = (int(mult.sum()), float((mult * A[:, c].sum(axis=1)).sum()))
        return self._cache["correct"]

    def _scan_correct(self):
        d, c = self.discrete_indices, self.continuous_indices
        ranges = [range(int(n)) for n in self.n_options[d]]
        n_corr, act_sum = 0, 0.0
        it = itertools.product(*ranges)
        while True:
            chunk = list(itertools.islice(it, _SCAN_CHUNK))
            if not chunk:
                break
            Xi = np.zeros((len(chunk), self.n_x), dtype=np.int64)
            if len(d):
                Xi[:, d] = np.asarray(chunk, dtype=np.int64).reshape(len(chunk), len(d))
            active = self._activeness_idx(Xi)
            ok = ~self._violations(Xi, active)
            n_corr += int(ok.sum())
            act_sum += float(active[ok][:, c].sum())
            if not len(d):
                break
        return n_corr, act_sum

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "variables": [v.to_dict() for v in self.variables],
            "activations": [{"target": a.target, "predicate": a.predicate} for a in self.activations],
            "forbidden": [f.predicate for f in self.forbidden],
            "single_option_inactive": self.single_option_inactive,
        }

    def to_json(self, path=None, indent: int = 2) -> str:
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "DesignSpace":
        if not isinstance(d, dict):
            raise SpaceDefinitionError("design space definition must be a JSON object")
        unknown = set(d) - {"variables", "activations", "forbidden", "single_option_inactive"}
        if unknown:
            raise SpaceDefinitionError(f"unknown top-level fields: {sorted(unknown)}")
        variables = _field(d, "variables", "space")
        if not isinstance(variables, list):
            raise SpaceDefinitionError("variables: expected a list")
        variables = [variable_from_dict(v, f"variables[{i}]") for i, v in enumerate(variables)]
        acts = []
        for i, a in enumerate(d.get("activations", [])):
            path = f"activations[{i}]"
            if not isinstance(a, dict):
                raise SpaceDefinitionError(f"{path}: expected an object")
            acts.append(Activation(_field(a, "target", path), _field(a, "predicate", path)))
        forb = [Forbidden(p) for p in d.get("forbidden", [])]
        flag = d.get("single_option_inactive", True)
        if not isinstance(flag, bool):
            raise SpaceDefinitionError("single_option_inactive: expected true or false")
        return cls(variables, acts, forb, flag)

    @classmethod
    def from_json(cls, source) -> "DesignSpace":
        """Load from a JSON string or a path to a JSON file."""
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(source) as fh:
                text = fh.read()
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpaceDefinitionError(
                f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(d)
