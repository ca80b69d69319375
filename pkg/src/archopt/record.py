"""Run records: the ordered log of all evaluations of an optimization run.

Records are stored as line-delimited JSON. The first line is a header with
the schema version and run metadata; each following line is one evaluation.
NaN values (failed evaluations) are written as ``null``. A truncated last
line, as left behind by an interrupted run, is ignored on reading.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SCHEMA_VERSION", "Evaluation", "RunRecord", "SchemaError"]

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Record file with an unknown schema version or malformed header."""


def _num(v: float):
    v = float(v)
    return None if math.isnan(v) else (v if math.isfinite(v) else ("inf" if v > 0 else "-inf"))


def _from_num(v):
    if v is None:
        return math.nan
    if isinstance(v, str):
        return math.inf if v == "inf" else -math.inf
    return float(v)


@dataclass
class Evaluation:
    iteration: int
    x: list
    active: list
    f: list
    g: list

    @property
    def viable(self) -> bool:
        return not any(math.isnan(v) for v in self.f)

    def to_json(self) -> str:
        return json.dumps({
            "it": self.iteration, "x": [float(v) for v in self.x],
            "act": [int(a) for a in self.active],
            "f": [_num(v) for v in self.f], "g": [_num(v) for v in self.g],
            "viable": self.viable,
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Evaluation":
        d = json.loads(line)
        return cls(d["it"], [float(v) for v in d["x"]], [bool(a) for a in d["act"]],
                   [_from_num(v) for v in d["f"]], [_from_num(v) for v in d["g"]])


@dataclass
class RunRecord:
    """Evaluations of one run plus metadata (problem, algorithm, config, seed)."""
    meta: dict = field(default_factory=dict)
    evaluations: list = field(default_factory=list)

    def __len__(self):
        return len(self.evaluations)

    def append(self, iteration, X, A, F, G):
        new = []
        for x, a, f, g in zip(np.atleast_2d(X), np.atleast_2d(A), np.atleast_2d(F), np.atleast_2d(G)):
            ev = Evaluation(int(iteration), [float(v) for v in x], [bool(v) for v in a],
                            [float(v) for v in f], [float(v) for v in g])
            self.evaluations.append(ev)
            new.append(ev)
        return new

    # -- array views ---------------------------------------------------------

    def _stack(self, attr, width=0):
        rows = [getattr(e, attr) for e in self.evaluations]
        if not rows:
            return np.zeros((0, width))
        return np.array(rows, dtype=float if attr != "active" else bool)

    @property
    def X(self):
        return self._stack("x")

    @property
    def A(self):
        return self._stack("active")

    @property
    def F(self):
        return self._stack("f")

    @property
    def G(self):
        return self._stack("g")

    @property
    def iterations(self):
        return np.array([e.iteration for e in self.evaluations], dtype=int)

    @property
    def viable(self):
        return np.array([e.viable for e in self.evaluations], dtype=bool)

    # -- persistence -------------------------------------------------------------

    def header_json(self) -> str:
        return json.dumps({"schema": SCHEMA_VERSION, "meta": self.meta}, sort_keys=True,
                          separators=(",", ":"))

    def write(self, path):
        """Write the whole record atomically (temporary file + rename)."""
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            fh.write(self.header_json() + "\n")
            for ev in self.evaluations:
                fh.write(ev.to_json() + "\n")
        os.replace(tmp, path)

    @classmethod
    def read(cls, path) -> "RunRecord":
        """Read a record; an empty or missing file gives an empty record."""
        if not os.path.exists(path):
            return cls()
        with open(path) as fh:
            lines = fh.read().split("\n")
        if not lines or not lines[0].strip():
            return cls()
        try:
            head = json.loads(lines[0])
        except json.JSONDecodeError:
            raise SchemaError(f"{path}: malformed header line") from None
        if not isinstance(head, dict) or head.get("schema") != SCHEMA_VERSION:
            raise SchemaError(f"{path}: unsupported schema version {head.get('schema')!r}"
                              if isinstance(head, dict) else f"{path}: malformed header")
        rec = cls(meta=head.get("meta", {}))
        body = lines[1:]
        for k, line in enumerate(body):
            if not line.strip():
                continue
            try:
                rec.evaluations.append(Evaluation.from_json(line))
            except (json.JSONDecodeError, KeyError, TypeError):
                if any(rest.strip() for rest in body[k + 1:]):
                    raise SchemaError(f"{path}: corrupt record at line {k + 2}") from None
                break  # truncated final line
        return rec


class RecordWriter:
    """Appends evaluations to a record file as they happen."""

    def __init__(self, path, record: RunRecord):
        self.path = path
        self._fh = open(path, "w")
        self._fh.write(record.header_json() + "\n")
        for ev in record.evaluations:
            self._fh.write(ev.to_json() + "\n")
        self._fh.flush()

    def write(self, evaluations):
        for ev in evaluations:
            self._fh.write(ev.to_json() + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()
