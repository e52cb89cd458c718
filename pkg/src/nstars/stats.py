"""Empirical weight histograms, conditional moments and the Taylor log-log fit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .analytic import MomentRow
from .errors import InsufficientData

AXES = ("fix_w1", "fix_w2")


@dataclass(frozen=True)
class EmpiricalJoint:
    """Number of vertices with each observed weight pair ``(w1, w2)``."""

    counts: Dict[Tuple[int, int], int]
    total_vertices: int

    def arrays(self):
        """``(w1, w2, count)`` as int64 arrays sorted by ``(w1, w2)``."""
        if not self.counts:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy(), empty.copy()
        items = sorted(self.counts.items())
        w1 = np.fromiter((k[0] for k, _ in items), dtype=np.int64, count=len(items))
        w2 = np.fromiter((k[1] for k, _ in items), dtype=np.int64, count=len(items))
        c = np.fromiter((v for _, v in items), dtype=np.int64, count=len(items))
        return w1, w2, c

    def fraction(self, w1: int, w2: int) -> float:
        return self.counts.get((w1, w2), 0) / self.total_vertices

    def transposed(self) -> "EmpiricalJoint":
        return EmpiricalJoint({(b, a): c for (a, b), c in self.counts.items()},
                              self.total_vertices)


@dataclass(frozen=True)
class TaylorFit:
    slope: float
    intercept: float
    r_squared: float
    points_used: int
    theoretical_C: Optional[float] = None
    # fixed values of rows dropped because their mean or second moment was 0
    excluded: Tuple[int, ...] = field(default=())


def joint_from_weights(w1, w2) -> EmpiricalJoint:
    w1 = np.asarray(w1, dtype=np.int64)
    w2 = np.asarray(w2, dtype=np.int64)
    if w1.size == 0:
        return EmpiricalJoint({}, 0)
    pairs, counts = np.unique(np.stack([w1, w2], axis=1), axis=0, return_counts=True)
    table = {(int(a), int(b)): int(c) for (a, b), c in zip(pairs, counts)}
    return EmpiricalJoint(table, int(w1.size))


def empirical_joint(state) -> EmpiricalJoint:
    """Exact ``(w1, w2)`` histogram over the vertices of a simulated graph."""
    return joint_from_weights(state.w1, state.w2)


def conditional_moments(j: EmpiricalJoint, axis: str = "fix_w1",
                        min_count: int = 1) -> List[MomentRow]:
    """Per fixed coordinate: population fraction and the first two moments of the other.

    Sums are accumulated in integers, so ``second_moment >= mean**2`` holds
    for every row.  Bins with fewer than ``min_count`` vertices are skipped.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    w1, w2, c = j.arrays()
    fixed, other = (w1, w2) if axis == "fix_w1" else (w2, w1)
    if fixed.size == 0:
        return []
    order = np.argsort(fixed, kind="stable")
    fixed, other, c = fixed[order], other[order], c[order]
    starts = np.flatnonzero(np.r_[True, fixed[1:] != fixed[:-1]])
    n = np.add.reduceat(c, starts)
    s1 = np.add.reduceat(c * other, starts)
    s2 = np.add.reduceat(c * other * other, starts)
    rows = []
    for k, start in enumerate(starts):
        nk = int(n[k])
        if nk < min_count:
            continue
        a, b = int(s1[k]), int(s2[k])
        mean = a / nk
        second = b / nk
        # guard the float rounding; the integer sums already satisfy n*b >= a*a
        second = max(second, mean * mean)
        rows.append(MomentRow(w1=int(fixed[start]), marginal=nk / j.total_vertices,
                              mean=mean, second_moment=second, count=nk))
    return rows


def loglog_fit(rows: Iterable[MomentRow], min_count: int = 30,
               theoretical_C: Optional[float] = None,
               weighting: str = "count") -> TaylorFit:
    """Weighted least squares of ``log10 M`` on ``log10 E``.

    Rows whose ``count`` is below ``min_count`` are dropped (rows without a
    count, e.g. analytic ones, always pass).  ``weighting="count"`` weights
    each row by its bin population; ``"uniform"`` gives every row weight 1.
    """
    if weighting not in ("count", "uniform"):
        raise ValueError(f"unknown weighting {weighting!r}")
    xs, ys, ws, excluded = [], [], [], []
    for row in rows:
        if row.count is not None and row.count < min_count:
            continue
        if not (row.mean > 0 and row.second_moment > 0) or not math.isfinite(row.second_moment):
            excluded.append(row.w1)
            continue
        xs.append(math.log10(row.mean))
        ys.append(math.log10(row.second_moment))
        ws.append(float(row.count) if (weighting == "count" and row.count is not None) else 1.0)
    if len(xs) < 2:
        raise InsufficientData(f"need at least 2 usable rows, got {len(xs)}")
    x, y, w = np.array(xs), np.array(ys), np.array(ws)
    w = w / w.sum()
    xm, ym = w @ x, w @ y
    sxx = w @ (x - xm) ** 2
    if sxx == 0:
        raise InsufficientData("all usable rows share the same mean")
    slope = (w @ ((x - xm) * (y - ym))) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    syy = w @ (y - ym) ** 2
    r2 = 1.0 - (w @ resid ** 2) / syy if syy > 0 else 1.0
    return TaylorFit(float(slope), float(intercept), float(r2), len(xs),
                     theoretical_C, tuple(excluded))
