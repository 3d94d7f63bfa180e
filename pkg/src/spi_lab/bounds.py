"""Closed-form competitive-ratio calculator.

A ratio is c(b)·e^{-b}(1 - e^{-b}) for monotone objectives and a quarter of
that for general ones, where c(b) is the selectability of a (b, c) online
contention resolution scheme for the constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintFamily, Knapsack, Matching, UniformMatroid

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
GRID_POINTS = 2001
B_TOL = 1e-9

KINDS = ("matroid", "matching", "knapsack", "uniform", "uniform-limit")


@dataclass(frozen=True)
class BoundSpec:
    kind: str
    monotone: bool = True
    k: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if self.kind == "uniform" and (self.k is None or self.k < 1):
            raise ValueError("uniform bound needs a rank k >= 1")

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind == "knapsack":
            return 0.0, 0.5
        if self.kind == "uniform-limit":
            return 1.0, 1.0
        return 0.0, 1.0

    def c(self, b: float) -> float:
        if self.kind == "matroid":
            return 1.0 - b
        if self.kind == "matching":
            return math.exp(-2.0 * b)
        if self.kind == "knapsack":
            return (1.0 - 2.0 * b) / (2.0 - 2.0 * b)
        if self.kind == "uniform":
            t = (1.0 - b) * math.sqrt(self.k)
            return 1.0 - math.exp(-t * t / 4.0)
        return 1.0

    def objective(self, b: float) -> float:
        eb = math.exp(-b)
        val = self.c(b) * eb * (1.0 - eb)
        return val if self.monotone else val / 4.0


@dataclass(frozen=True)
class RatioResult:
    b_star: float
    ratio: float

    @property
    def reciprocal(self) -> float:
        return 1.0 / self.ratio if self.ratio > 0 else math.inf


def optimize_ratio(spec: BoundSpec) -> RatioResult:
    """Grid search followed by golden-section refinement on the best bracket."""
    lo, hi = spec.domain
    if hi - lo <= 0:
        return RatioResult(lo, spec.objective(lo))
    grid = np.linspace(lo, hi, GRID_POINTS)
    vals = np.array([spec.objective(b) for b in grid])
    i = int(np.argmax(vals))
    a, d = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    b_ = d - GOLDEN * (d - a)
    c_ = a + GOLDEN * (d - a)
    fb, fc = spec.objective(b_), spec.objective(c_)
    while d - a > B_TOL:
        if fb >= fc:
            d, c_, fc = c_, b_, fb
            b_ = d - GOLDEN * (d - a)
            fb = spec.objective(b_)
        else:
            a, b_, fb = b_, c_, fc
            c_ = a + GOLDEN * (d - a)
            fc = spec.objective(c_)
    b_star = (a + d) / 2.0
    best = spec.objective(b_star)
    if vals[i] > best:
        b_star, best = float(grid[i]), float(vals[i])
    return RatioResult(float(b_star), float(best))


@dataclass(frozen=True)
class TableRow:
    constraint: str
    objective: str
    result: RatioResult | None
    note: str = ""

    def csv_fields(self) -> list[str]:
        if self.result is None:
            return [self.constraint, self.objective, "", "", "", self.note]
        r = self.result
        return [self.constraint, self.objective, f"{r.b_star:.6g}", f"{r.ratio:.6g}",
                f"{r.reciprocal:.6g}", self.note]


TABLE_HEADER = ["constraint", "objective", "b_star", "ratio", "reciprocal", "note"]

TABLE_ROWS = (
    ("uniform-rank-k-limit", "uniform-limit"),
    ("matroid", "matroid"),
    ("matching", "matching"),
    ("knapsack", "knapsack"),
)


def table1(k: int | None = None) -> list[TableRow]:
    """Best ratios per constraint for monotone and general objectives.

    With ``k`` an extra pair of rows reports the finite-rank uniform matroid.
    """
    rows = []
    specs = list(TABLE_ROWS)
    if k is not None:
        specs.insert(1, (f"uniform-rank-{k}", "uniform"))
    for name, kind in specs:
        for monotone in (True, False):
            spec = BoundSpec(kind, monotone, k if kind == "uniform" else None)
            rows.append(TableRow(name, "monotone" if monotone else "general", optimize_ratio(spec)))
    rows.append(TableRow("matroid-intersection-k", "both", None, "Ω(1/k) — formula-level only"))
    return rows


def bound_spec_for(C: ConstraintFamily, monotone: bool) -> BoundSpec:
    """Bound form that yields the best optimized ratio for a constraint family."""
    if isinstance(C, Matching):
        return BoundSpec("matching", monotone)
    if isinstance(C, Knapsack):
        return BoundSpec("knapsack", monotone)
    if isinstance(C, UniformMatroid) and C.k > 1:
        generic = BoundSpec("matroid", monotone)
        rank_k = BoundSpec("uniform", monotone, C.k)
        return max((generic, rank_k), key=lambda s: optimize_ratio(s).ratio)
    if C.is_matroid:
        return BoundSpec("matroid", monotone)
    raise ValueError(f"no closed-form selectability for constraint kind {C.kind!r}")
