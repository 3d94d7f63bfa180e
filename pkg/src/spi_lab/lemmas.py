"""Exact checks of the sampling inequalities for submodular functions.

Every expectation here is an exact finite sum: correlated samplers are
explicit distributions over subsets, and independent samplers are product
laws evaluated through the multilinear extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .submodular import (
    SLACK,
    SetFunction,
    members,
    multilinear_exact,
    random_submodular,
    restrict_shift,
)

MAX_N = 6
MAX_K = 3
MAX_M = 20


@dataclass
class LemmaReport:
    name: str
    cases: int
    violations: int
    worst_slack: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.cases} cases, {self.violations} violations, min slack {self.worst_slack:.3g}"


def _random_function(rng: np.random.Generator) -> tuple[SetFunction, int]:
    """A random submodular function shifted by a random base set, so h(empty) may be > 0."""
    n = int(rng.integers(2, MAX_N + 1))
    f = random_submodular(n, rng)
    base = int(rng.integers(0, 1 << n)) if rng.random() < 0.7 else 0
    return restrict_shift(f, base), n


def _random_subset(rng, n, nonempty=True) -> int:
    while True:
        m = int(rng.integers(0, 1 << n))
        if m or not nonempty:
            return m


def _random_distribution_on(rng, A: int, support: int) -> tuple[list[int], np.ndarray]:
    """Random correlated law over subsets of A with the given support size."""
    elems = members(A)
    sets = []
    for _ in range(support):
        pick = rng.random(len(elems)) < rng.random()
        sets.append(sum(1 << e for e, k in zip(elems, pick) if k))
    w = rng.random(support)
    return sets, w / w.sum()


def _marginals(sets, probs, n) -> np.ndarray:
    out = np.zeros(n)
    for s, p in zip(sets, probs):
        for e in members(s):
            out[e] += p
    return out


def check_correlated_upper(cases: int, seed: int) -> LemmaReport:
    """E[h(A(p))] >= (1 - p)·h(empty) when each element appears w.p. at most p."""
    rng = np.random.default_rng([seed, 1])
    worst, bad = math.inf, 0
    for _ in range(cases):
        h, n = _random_function(rng)
        A = _random_subset(rng, n)
        sets, probs = _random_distribution_on(rng, A, int(rng.integers(1, 9)))
        p = float(_marginals(sets, probs, n).max())
        lhs = sum(q * h.value(s) for s, q in zip(sets, probs))
        slack = lhs - (1.0 - p) * h.value(0)
        worst = min(worst, slack)
        bad += slack < -SLACK
    return LemmaReport("correlated sampling, marginals at most p", cases, bad, worst)


def _symmetrize(sets, probs, A: int) -> tuple[list[int], np.ndarray]:
    """Average a law over the cyclic shifts of A, making every marginal equal."""
    elems = members(A)
    r = len(elems)
    pos = {e: i for i, e in enumerate(elems)}
    out_sets, out_probs = [], []
    for shift in range(r):
        for s, q in zip(sets, probs):
            out_sets.append(sum(1 << elems[(pos[e] + shift) % r] for e in members(s)))
            out_probs.append(q / r)
    return out_sets, np.array(out_probs)


def check_correlated_exact(cases: int, seed: int) -> LemmaReport:
    """E[g(A(p))] >= (1 - p)·g(empty) + p·g(A) when every marginal equals p."""
    rng = np.random.default_rng([seed, 2])
    worst, bad = math.inf, 0
    for _ in range(cases):
        g, n = _random_function(rng)
        A = _random_subset(rng, n)
        sets, probs = _symmetrize(*_random_distribution_on(rng, A, int(rng.integers(1, 7))), A)
        marg = _marginals(sets, probs, n)[members(A)]
        p = float(marg[0])
        assert np.allclose(marg, p, atol=1e-12)
        lhs = sum(q * g.value(s) for s, q in zip(sets, probs))
        slack = lhs - ((1.0 - p) * g.value(0) + p * g.value(A))
        worst = min(worst, slack)
        bad += slack < -SLACK
    return LemmaReport("correlated sampling, marginals exactly p", cases, bad, worst)


def union_marginals(sets: list[int], probs: list[float], n: int) -> np.ndarray:
    """Inclusion probabilities of the union of independently sampled A_j(p_j)."""
    miss = np.ones(n)
    for A, p in zip(sets, probs):
        for e in members(A):
            miss[e] *= 1.0 - p
    return 1.0 - miss


def _union_expectation(f: SetFunction, sets, probs) -> float:
    # the union is itself a product law, so the expectation is F at its marginals
    return multilinear_exact(f, union_marginals(sets, probs, f.n))


def _subset_sum_bound(f: SetFunction, sets, probs) -> float:
    k = len(sets)
    total = 0.0
    for I in range(1 << k):
        w, U = 1.0, 0
        for j in range(k):
            if I >> j & 1:
                w *= probs[j]
                U |= sets[j]
            else:
                w *= 1.0 - probs[j]
        total += w * f.value(U)
    return total


def check_two_independent(cases: int, seed: int) -> LemmaReport:
    """E[f(A(p) ∪ B(q))] dominates the four-corner combination."""
    rng = np.random.default_rng([seed, 3])
    worst, bad = math.inf, 0
    for _ in range(cases):
        f, n = _random_function(rng)
        A, B = _random_subset(rng, n, False), _random_subset(rng, n, False)
        p, q = float(rng.random()), float(rng.random())
        lhs = _union_expectation(f, [A, B], [p, q])
        rhs = ((1 - p) * (1 - q) * f.value(0) + p * (1 - q) * f.value(A)
               + (1 - p) * q * f.value(B) + p * q * f.value(A | B))
        slack = lhs - rhs
        worst = min(worst, slack)
        bad += slack < -SLACK
    return LemmaReport("two independently sampled sets", cases, bad, worst)


def check_k_independent(cases: int, seed: int) -> LemmaReport:
    """E[f(∪ A_i(p_i))] dominates the subset-sum over which sets are fully taken."""
    rng = np.random.default_rng([seed, 4])
    worst, bad = math.inf, 0
    for _ in range(cases):
        f, n = _random_function(rng)
        k = int(rng.integers(1, MAX_K + 1))
        sets = [_random_subset(rng, n, False) for _ in range(k)]
        probs = rng.random(k).tolist()
        slack = _union_expectation(f, sets, probs) - _subset_sum_bound(f, sets, probs)
        worst = min(worst, slack)
        bad += slack < -SLACK
    return LemmaReport("k independently sampled sets", cases, bad, worst)


def check_ordered_sum(cases: int, seed: int) -> LemmaReport:
    """Σ q_k a_k Π_{j<k}(1 - q_j) >= (1 - 1/e) Σ q_j a_j for non-increasing a."""
    rng = np.random.default_rng([seed, 5])
    worst, bad = math.inf, 0
    for _ in range(cases):
        m = int(rng.integers(1, MAX_M + 1))
        a = np.sort(rng.random(m) * rng.choice([1.0, 10.0]))[::-1]
        q = rng.dirichlet(np.full(m, float(rng.choice([0.2, 1.0, 5.0]))))
        survive = np.concatenate([[1.0], np.cumprod(1.0 - q)[:-1]])
        lhs = float(np.sum(q * a * survive))
        slack = lhs - (1.0 - 1.0 / math.e) * float(q @ a)
        worst = min(worst, slack)
        bad += slack < -SLACK
    return LemmaReport("ordered weighted sum", cases, bad, worst)


SUITE = (
    check_correlated_upper,
    check_correlated_exact,
    check_two_independent,
    check_k_independent,
    check_ordered_sum,
)


def verify_lemmas(cases: int = 100, seed: int = 0) -> list[LemmaReport]:
    return [check(cases, seed) for check in SUITE]
