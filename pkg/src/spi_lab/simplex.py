"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Small and exact enough for the desk-scale LPs in this package (a few
thousand columns, a few dozen rows).  Solves

    maximize  c @ a   subject to   A @ a == b,  a >= 0

and returns a basic feasible optimum together with its basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleLP, UnboundedLP

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class LPResult:
    value: float
    solution: np.ndarray
    basis: tuple[int, ...]
    iterations: int


def _pivot(tab: np.ndarray, cost: np.ndarray, row: int, col: int) -> float:
    """Pivot in place; returns the change to the objective value."""
    piv = tab[row, col]
    tab[row] /= piv
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, tab[row])
    step = cost[col]
    cost -= step * tab[row, :-1]
    return step * tab[row, -1]


def _run(tab: np.ndarray, cost: np.ndarray, basis: list[int], allowed: int, tol: float,
         max_iter: int) -> tuple[float, int]:
    """Bland's rule iterations over the first ``allowed`` columns."""
    value = 0.0
    it = 0
    while it < max_iter:
        entering = -1
        for j in range(allowed):
            if cost[j] > tol:
                entering = j
                break
        if entering < 0:
            return value, it
        colv = tab[:, entering]
        rows = np.nonzero(colv > tol)[0]
        if rows.size == 0:
            raise UnboundedLP(f"column {entering} unbounded")
        ratios = tab[rows, -1] / colv[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        leave = min(ties, key=lambda r: basis[r])
        value += _pivot(tab, cost, leave, entering)
        basis[leave] = entering
        it += 1
    raise RuntimeError("simplex iteration cap reached")


def solve(c, A, b, *, tol: float = PIVOT_TOL, max_iter: int = 100_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("shape mismatch between c, A, b")

    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # phase I: artificial columns n..n+m-1, maximize -sum(artificials)
    tab = np.zeros((m, n + m + 1))
    tab[:, :n] = A
    tab[:, n:n + m] = np.eye(m)
    tab[:, -1] = b
    basis = list(range(n, n + m))
    cost = np.zeros(n + m)
    cost[:n] = A.sum(axis=0)
    phase1_gap = b.sum()
    gain, it1 = _run(tab, cost, basis, n, tol, max_iter)
    residual = phase1_gap - gain
    if residual > 1e-9 * max(1.0, phase1_gap):
        raise InfeasibleLP(f"phase I residual {residual:.3e}")

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] < n:
            keep.append(r)
            continue
        candidates = np.nonzero(np.abs(tab[r, :n]) > 1e-9)[0]
        if candidates.size:
            _pivot(tab, cost, r, int(candidates[0]))
            basis[r] = int(candidates[0])
            keep.append(r)
    tab = np.delete(tab[keep], np.s_[n:n + m], axis=1)
    basis = [basis[r] for r in keep]

    # phase II
    cost = c - c[basis] @ tab[:, :n]
    _, it2 = _run(tab, cost, basis, n, tol, max_iter)

    x = np.zeros(n)
    x[basis] = tab[:, -1]
    x[np.abs(x) < tol] = 0.0
    return LPResult(value=float(c @ x), solution=x, basis=tuple(basis), iterations=it1 + it2)
