"""Hierarchy metrics of a design space.

All metrics are computed from the exhaustive enumeration of valid discrete
design vectors (and, for the correction ratio, from the count of correct
ones):

* imputation ratio ``ir = ir_d * ir_c``: how many declared vectors map onto
  one valid vector, times the share of continuous variables that are inactive
  on average;
* correction ratio ``cr = cr_d * cr_c``: the same with correct vectors
  instead of valid ones;
* correction fraction ``crf = log(cr) / log(ir)``;
* rate diversity per discrete variable: the spread between the most and the
  least frequent value over all valid vectors.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .design_space import DesignSpace

__all__ = [
    "VariableRates", "HierarchyStats", "imputation_ratio", "correction_ratio",
    "correction_fraction", "rate_diversity", "value_rates", "hierarchy_stats",
]


@dataclass
class VariableRates:
    """Occurrence rates of one discrete variable over the valid vectors."""
    name: str
    inactive_rate: float
    value_rates: list[float]
    rd_all: float
    rd: float


@dataclass
class HierarchyStats:
    n_declared_discr: int
    n_valid_discr: int
    n_corr_discr: int
    ir_d: float
    ir_c: float
    ir: float
    cr_d: float
    cr_c: float
    cr: float
    crf: float
    mrd: float
    mrd_all: float
    rates: list[VariableRates] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        """Aligned plain-text summary."""
        rows = [
            ("declared discrete", f"{self.n_declared_discr}"),
            ("valid discrete", f"{self.n_valid_discr}"),
            ("correct discrete", f"{self.n_corr_discr}"),
            ("IR (d / c / total)", f"{self.ir_d:.3f} / {self.ir_c:.3f} / {self.ir:.3f}"),
            ("CR (d / c / total)", f"{self.cr_d:.3f} / {self.cr_c:.3f} / {self.cr:.3f}"),
            ("CRF", f"{100 * self.crf:.1f}%"),
            ("MRD / MRD_all", f"{100 * self.mrd:.1f}% / {100 * self.mrd_all:.1f}%"),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"{k.ljust(width)}  {v}" for k, v in rows]
        if self.rates:
            lines.append("")
            name_w = max(len("variable"), *(len(r.name) for r in self.rates))
            lines.append(f"{'variable'.ljust(name_w)}  {'inactive':>8}  {'RD_all':>7}  {'RD':>7}  rates")
            for r in self.rates:
                inact = "-" if r.inactive_rate == 0 else f"{100 * r.inactive_rate:.1f}%"
                vals = " ".join(f"{100 * v:.1f}%" for v in r.value_rates)
                lines.append(f"{r.name.ljust(name_w)}  {inact:>8}  {100 * r.rd_all:6.1f}%  "
                             f"{100 * r.rd:6.1f}%  {vals}")
        return "\n".join(lines)


def imputation_ratio(space: DesignSpace, cap=None) -> tuple[float, float, float]:
    """Return ``(ir_d, ir_c, ir)``."""
    X, A = space.enumerate_valid(cap)
    n_valid = len(X)
    ir_d = space.declared_size() / n_valid
    n_c = space.n_continuous
    if n_c == 0:
        ir_c = 1.0
    else:
        ir_c = n_valid * n_c / A[:, space.continuous_indices].sum()
    return ir_d, ir_c, ir_d * ir_c


def correction_ratio(space: DesignSpace, cap=None) -> tuple[float, float, float]:
    """Return ``(cr_d, cr_c, cr)``."""
    n_corr, act_sum = space.correct_counts(cap)
    cr_d = space.declared_size() / n_corr
    n_c = space.n_continuous
    cr_c = 1.0 if n_c == 0 else n_corr * n_c / act_sum
    return cr_d, cr_c, cr_d * cr_c


def correction_fraction(cr: float, ir: float) -> float:
    """``log(cr) / log(ir)``, defined as 0 for a non-hierarchical space."""
    if ir <= 1.0 or math.isclose(ir, 1.0):
        return 0.0
    return math.log(cr) / math.log(ir)


def value_rates(values: np.ndarray, active: np.ndarray, n_options: int):
    """Inactive rate and per-value rates of one variable column.

    Returns ``(inactive_rate, rates, rd_all, rd)``; ``rates`` are fractions
    of all rows, ``rd`` is computed on the rates renormalized over the rows
    where the variable is active.
    """
    n = len(values)
    idx = np.rint(values[active]).astype(int)
    counts = np.bincount(idx, minlength=n_options)[:n_options].astype(float)
    n_inactive = n - counts.sum()
    rates = counts / n
    inactive_rate = n_inactive / n
    entries = list(rates) + ([inactive_rate] if n_inactive > 0 else [])
    rd_all = max(entries) - min(entries)
    n_active = counts.sum()
    if n_active == 0:
        rd = 0.0
    else:
        rel = counts / n_active
        rd = float(rel.max() - rel.min())
    return float(inactive_rate), [float(r) for r in rates], float(rd_all), rd


def rate_diversity(space: DesignSpace, cap=None):
    """Per-variable rate records plus ``(mrd, mrd_all)``."""
    X, A = space.enumerate_valid(cap)
    records = []
    for j in space.discrete_indices:
        inact, rates, rd_all, rd = value_rates(X[:, j], A[:, j], int(space.n_options[j]))
        records.append(VariableRates(space.names[j], inact, rates, rd_all, rd))
    mrd = max((r.rd for r in records), default=0.0)
    mrd_all = max((r.rd_all for r in records), default=0.0)
    return records, mrd, mrd_all


def hierarchy_stats(space: DesignSpace, cap=None) -> HierarchyStats:
    """All hierarchy metrics of ``space`` in one record."""
    X, _ = space.enumerate_valid(cap)
    n_corr, _ = space.correct_counts(cap)
    ir_d, ir_c, ir = imputation_ratio(space, cap)
    cr_d, cr_c, cr = correction_ratio(space, cap)
    records, mrd, mrd_all = rate_diversity(space, cap)
    return HierarchyStats(
        n_declared_discr=space.declared_size(), n_valid_discr=len(X), n_corr_discr=n_corr,
        ir_d=ir_d, ir_c=ir_c, ir=ir, cr_d=cr_d, cr_c=cr_c, cr=cr,
        crf=correction_fraction(cr, ir), mrd=mrd, mrd_all=mrd_all, rates=records,
    )
