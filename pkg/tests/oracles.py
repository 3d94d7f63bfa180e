"""Independent reference computations used to derive frozen test values.

Nothing here imports the package: set functions are plain Python callables
over frozensets and every expectation is an explicit itertools enumeration.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def subsets(elems):
    elems = list(elems)
    for r in range(len(elems) + 1):
        for c in itertools.combinations(elems, r):
            yield frozenset(c)


def multilinear(f, x):
    n = len(x)
    total = 0.0
    for S in subsets(range(n)):
        p = 1.0
        for i in range(n):
            p *= x[i] if i in S else 1.0 - x[i]
        total += p * f(S)
    return total


def gradient(f, x):
    out = []
    for i in range(len(x)):
        hi, lo = list(x), list(x)
        hi[i], lo[i] = 1.0, 0.0
        out.append(multilinear(f, hi) - multilinear(f, lo))
    return out


def closure(f, x):
    """Concave closure by HiGHS on the subset-distribution LP."""
    n = len(x)
    cols = list(subsets(range(n)))
    c = [-f(S) for S in cols]
    A = [[1.0] * len(cols)] + [[1.0 if i in S else 0.0 for S in cols] for i in range(n)]
    res = linprog(c, A_eq=A, b_eq=[1.0, *x], bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


def cover_fn(sets, weights=None):
    def f(S):
        covered = set()
        for i in S:
            covered |= set(sets[i])
        return float(sum(1.0 if weights is None else weights[u] for u in covered))
    return f


def cut_fn(arcs):
    def f(S):
        return float(sum(w for u, v, w in arcs if u in S and v not in S))
    return f


def prophet_opt(supports_sizes, probs, independent, f):
    """E over realization tuples of max over independent day sets of f.

    ``independent`` takes a frozenset of days; elements are numbered day by day.
    """
    offsets = np.cumsum([0] + list(supports_sizes[:-1]))
    days = range(len(supports_sizes))
    feasible = [T for T in subsets(days) if independent(T)]
    total = 0.0
    for choice in itertools.product(*[range(s) for s in supports_sizes]):
        pr = math.prod(probs[d][choice[d]] for d in days)
        if pr == 0:
            continue
        best = max(f(frozenset(int(offsets[d] + choice[d]) for d in T)) for T in feasible)
        total += pr * best
    return total


def day_set_law(z, D):
    """Law of the per-day set by total probability, from first principles."""
    m = len(z)
    prod = {S: math.prod(z[i] if i in S else 1 - z[i] for i in range(m)) for S in subsets(range(m))}
    not_single = {S: p for S, p in prod.items() if len(S) != 1}
    tot = sum(not_single.values())
    law = {S: 0.0 for S in prod}
    for e in range(m):
        if D[e] == 0:
            continue
        branch = prod[frozenset([e])] / D[e]
        law[frozenset([e])] += D[e] * branch
        for S, p in not_single.items():
            law[S] += D[e] * (1 - branch) * p / tot
    return law, prod
