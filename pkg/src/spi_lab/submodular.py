"""Set-function oracles, multilinear extension, concave closure and the
correlation-gap instruments.

Subsets are encoded as Python ``int`` bitmasks throughout: bit ``i`` set
means element ``i`` is in the set.  Iterables of indices are accepted at
the public boundary and converted with :func:`to_mask`.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from . import simplex
from .errors import (
    DegenerateWeight,
    DimensionMismatch,
    GroundSetTooLarge,
    NotSubmodular,
    SubsetTooLarge,
    UnknownElement,
)

EXACT_MAX_N = 24
CLOSURE_MAX_N = 12
FMAX_MAX_SUBSET = 22
TABLE_MAX_N = 24
SLACK = 1e-9
MC_CHUNK = 1 << 15


def to_mask(S, n: int | None = None) -> int:
    if isinstance(S, (int, np.integer)):
        mask = int(S)
        if mask < 0 or (n is not None and mask >> n):
            raise UnknownElement(f"mask {mask:#x} outside ground of size {n}")
        return mask
    mask = 0
    for i in S:
        i = int(i)
        if i < 0 or (n is not None and i >= n):
            raise UnknownElement(f"element {i} outside ground of size {n}")
        mask |= 1 << i
    return mask


def members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def submasks(mask: int) -> np.ndarray:
    """All submasks of ``mask`` as an int64 array (``mask`` must fit 63 bits)."""
    subs = np.zeros(1, dtype=np.int64)
    for i in members(mask):
        subs = np.concatenate([subs, subs | (1 << i)])
    return subs


def product_law(x: np.ndarray) -> np.ndarray:
    """Probability of every mask under independent inclusion with marginals x."""
    probs = np.ones(1)
    for xi in x:
        probs = np.concatenate([probs * (1.0 - xi), probs * xi])
    return probs


@dataclass(frozen=True)
class GroundSet:
    size: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("ground set must be non-empty")
        if self.labels:
            if len(self.labels) != self.size:
                raise DimensionMismatch("one label per element required")
            if len(set(self.labels)) != self.size:
                raise ValueError("labels must be unique")

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else str(i)


class SetFunction:
    """Value oracle over a ground set of ``n`` elements.

    ``oracle`` maps a bitmask to a float.  ``vectorized`` (optional) maps an
    int64 array of masks to an array of values and is used to build the full
    value table quickly.  Structured functions may carry closed-form hooks
    for the multilinear extension and the concave closure so that large
    instances (e.g. the star graph with n = 1000) stay tractable.
    """

    def __init__(self, n: int, oracle: Callable[[int], float], *, kind: str,
                 is_monotone: bool, vectorized: Callable[[np.ndarray], np.ndarray] | None = None,
                 labels: Sequence[str] = (), params: dict | None = None,
                 multilinear_hook: Callable[[np.ndarray], float] | None = None,
                 closure_hook: Callable[[np.ndarray], float] | None = None,
                 collapse: CopyCollapse | None = None):
        self.ground = GroundSet(n, tuple(labels))
        self.n = n
        self.kind = kind
        self.is_monotone = is_monotone
        self.params = params or {}
        self._oracle = oracle
        self._vectorized = vectorized
        self._cache: dict[int, float] = {}
        self._table: np.ndarray | None = None
        self.multilinear_hook = multilinear_hook
        self.closure_hook = closure_hook
        self.collapse = collapse

    def __repr__(self):
        return f"SetFunction(kind={self.kind!r}, n={self.n}, monotone={self.is_monotone})"

    def value(self, mask: int) -> float:
        if self._table is not None:
            return float(self._table[mask])
        v = self._cache.get(mask)
        if v is None:
            v = float(self._oracle(mask))
            self._cache[mask] = v
        return v

    def __call__(self, S) -> float:
        return self.value(to_mask(S, self.n))

    def values(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self._table is not None:
            return self._table[masks]
        if self._vectorized is not None:
            return np.asarray(self._vectorized(masks), dtype=float)
        return np.array([self.value(int(m)) for m in masks.ravel()]).reshape(masks.shape)

    def table(self) -> np.ndarray:
        """Values of all 2^n subsets, indexed by mask (cached)."""
        if self._table is None:
            if self.n > TABLE_MAX_N:
                raise GroundSetTooLarge(f"table needs n <= {TABLE_MAX_N}, got {self.n}")
            masks = np.arange(1 << self.n, dtype=np.int64)
            if self._vectorized is not None:
                tab = np.asarray(self._vectorized(masks), dtype=float)
            else:
                tab = np.array([self._oracle(int(m)) for m in masks], dtype=float)
            self._table = tab
        return self._table


@dataclass(frozen=True)
class CopyCollapse:
    """Copy-collapse map from a lifted ground set to a base function's ground.

    ``copy_of[e']`` is the base element that lifted element ``e'`` stands for.
    Several lifted elements may share one base element; any non-empty subset
    of them acts as that base element.
    """

    base: SetFunction
    copy_of: tuple[int, ...]

    def collapse_mask(self, mask: int) -> int:
        out = 0
        for e in members(mask):
            out |= 1 << self.copy_of[e]
        return out

    def collapse_vector(self, z: np.ndarray) -> np.ndarray:
        miss = np.ones(self.base.n)
        for e, b in enumerate(self.copy_of):
            miss[b] *= 1.0 - z[e]
        return 1.0 - miss


# ---------------------------------------------------------------- builders

def _bit_matrix(masks: np.ndarray, n: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def modular(weights: Sequence[float]) -> SetFunction:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("modular weights must be non-negative")

    def oracle(mask):
        return float(sum(w[i] for i in members(mask)))

    def vec(masks):
        return _bit_matrix(masks, len(w)) @ w

    return SetFunction(len(w), oracle, kind="modular", is_monotone=True, vectorized=vec,
                       params={"weights": w.tolist()},
                       multilinear_hook=lambda x: float(w @ x),
                       closure_hook=lambda x: float(w @ x))


def coverage(sets: Sequence[Iterable[int]], weights: dict | Sequence[float] | None = None) -> SetFunction:
    """f(S) = total weight of universe items covered by the sets indexed by S."""
    sets = [frozenset(s) for s in sets]
    universe = sorted(set().union(*sets)) if sets else []
    if weights is None:
        wmap = {u: 1.0 for u in universe}
    elif isinstance(weights, dict):
        wmap = {u: float(weights.get(u, weights.get(str(u), 1.0))) for u in universe}
    else:
        wmap = {u: float(weights[u]) for u in universe}
    if any(v < 0 for v in wmap.values()):
        raise ValueError("coverage weights must be non-negative")
    n = len(sets)
    cover_masks = {u: to_mask([i for i, s in enumerate(sets) if u in s]) for u in universe}

    def oracle(mask):
        return float(sum(wmap[u] for u, cm in cover_masks.items() if cm & mask))

    def vec(masks):
        out = np.zeros(masks.shape, dtype=float)
        for u, cm in cover_masks.items():
            out += wmap[u] * ((masks & cm) != 0)
        return out

    return SetFunction(n, oracle, kind="coverage", is_monotone=True, vectorized=vec,
                       params={"sets": [sorted(s) for s in sets], "weights": wmap})


def directed_cut(arcs: Sequence[Sequence[float]], n: int | None = None) -> SetFunction:
    """f(S) = total weight of arcs (u, v) with u in S and v not in S."""
    arcs = [(int(a[0]), int(a[1]), float(a[2]) if len(a) > 2 else 1.0) for a in arcs]
    if any(w < 0 for *_, w in arcs):
        raise ValueError("arc weights must be non-negative")
    if n is None:
        n = 1 + max(max(u, v) for u, v, _ in arcs) if arcs else 1

    def oracle(mask):
        return float(sum(w for u, v, w in arcs if (mask >> u) & 1 and not (mask >> v) & 1))

    def vec(masks):
        out = np.zeros(masks.shape, dtype=float)
        for u, v, w in arcs:
            out += w * (((masks >> u) & 1) & (1 - ((masks >> v) & 1)))
        return out

    return SetFunction(n, oracle, kind="directed-cut", is_monotone=False, vectorized=vec,
                       params={"arcs": [list(a) for a in arcs]})


def budget_additive(weights: Sequence[float], budget: float) -> SetFunction:
    w = np.asarray(weights, dtype=float)

    def oracle(mask):
        return min(float(sum(w[i] for i in members(mask))), budget)

    def vec(masks):
        return np.minimum(_bit_matrix(masks, len(w)) @ w, budget)

    return SetFunction(len(w), oracle, kind="budget-additive", is_monotone=True, vectorized=vec,
                       params={"weights": w.tolist(), "budget": budget})


def explicit_table(values: dict, n: int, *, is_monotone: bool | None = None) -> SetFunction:
    """Function from a table keyed by subsets (masks, index tuples or "0,2,3")."""
    tab = np.zeros(1 << n)
    for key, v in values.items():
        if isinstance(key, str):
            idx = [int(t) for t in key.split(",") if t.strip() != ""]
            mask = to_mask(idx, n)
        else:
            mask = to_mask(key, n)
        tab[mask] = float(v)
    if tab[0] != 0.0:
        raise ValueError("set functions must be normalized: f(empty) = 0")
    if np.any(tab < 0):
        raise ValueError("set functions must be non-negative")
    if is_monotone is None:
        is_monotone = all(
            np.all(tab[np.arange(1 << n) | (1 << i)] >= tab - SLACK) for i in range(n)
        )
    f = SetFunction(n, lambda m: float(tab[m]), kind="explicit-table", is_monotone=bool(is_monotone),
                    vectorized=lambda masks: tab[masks])
    f._table = tab
    return f


def weighted_matroid_rank(is_independent: Callable[[int], bool], weights: Sequence[float]) -> SetFunction:
    """Max weight of an independent subset; greedy is exact for matroids."""
    w = np.asarray(weights, dtype=float)
    order = sorted(range(len(w)), key=lambda i: (-w[i], i))

    def oracle(mask):
        chosen = 0
        total = 0.0
        for i in order:
            if w[i] <= 0:
                break
            if (mask >> i) & 1 and is_independent(chosen | (1 << i)):
                chosen |= 1 << i
                total += w[i]
        return total

    return SetFunction(len(w), oracle, kind="weighted-matroid-rank", is_monotone=True)


def mixture(functions: Sequence[SetFunction], coeffs: Sequence[float]) -> SetFunction:
    """Non-negative combination of set functions on a common ground set."""
    n = functions[0].n
    if any(f.n != n for f in functions):
        raise DimensionMismatch("mixture components must share a ground set")
    if any(c < 0 for c in coeffs):
        raise ValueError("mixture coefficients must be non-negative")
    pairs = list(zip(functions, coeffs))
    return SetFunction(
        n,
        lambda m: sum(c * f.value(m) for f, c in pairs),
        kind="derived",
        is_monotone=all(f.is_monotone for f, _ in pairs),
        vectorized=lambda masks: sum(c * f.values(masks) for f, c in pairs),
        params={"components": [f.kind for f in functions], "coeffs": list(coeffs)},
    )


def restrict_shift(f: SetFunction, base_mask: int) -> SetFunction:
    """h(T) = f(B | T): non-negative and submodular whenever f is, h(empty) may be > 0."""
    return SetFunction(f.n, lambda m: f.value(m | base_mask), kind="derived",
                       is_monotone=f.is_monotone,
                       vectorized=lambda masks: f.values(masks | base_mask))


def copy_collapse(base: SetFunction, copy_of: Sequence[int], labels: Sequence[str] = ()) -> SetFunction:
    """Derived function over copies: g(A) = f(collapse(A))."""
    cc = CopyCollapse(base, tuple(int(b) for b in copy_of))
    copy_of_arr = np.asarray(cc.copy_of, dtype=np.int64)

    def vec(masks):
        base_masks = np.zeros(masks.shape, dtype=np.int64)
        for e, b in enumerate(copy_of_arr):
            base_masks |= ((masks >> e) & 1) << b
        return base.values(base_masks)

    return SetFunction(len(cc.copy_of), lambda m: base.value(cc.collapse_mask(m)), kind="derived",
                       is_monotone=base.is_monotone,
                       vectorized=vec if len(copy_of_arr) <= 62 else None,
                       labels=labels, collapse=cc,
                       params={"base_kind": base.kind, "copy_of": list(cc.copy_of)})


def star_instance(n: int, p: float) -> tuple[SetFunction, np.ndarray]:
    """Star graph u_1..u_n -> v: f(S) = 1 iff v not in S and S non-empty.

    Elements u_i are indices 0..n-1 and v is index n.  Returns (f, x) with
    x_u = (1-p)/n and x_v = p.
    """
    if n < 1:
        raise ValueError("star needs n >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    v_bit = 1 << n

    def oracle(mask):
        return 1.0 if mask and not mask & v_bit else 0.0

    def vec(masks):
        return ((masks != 0) & ((masks & v_bit) == 0)).astype(float)

    def ml(x):
        return float((1.0 - x[n]) * (1.0 - np.prod(1.0 - x[:n])))

    def closure(x):
        return float(min(x[:n].sum(), 1.0 - x[n], 1.0))

    f = SetFunction(n + 1, oracle, kind="star", is_monotone=False, vectorized=vec,
                    labels=[f"u{i + 1}" for i in range(n)] + ["v"],
                    multilinear_hook=ml, closure_hook=closure, params={"n": n})
    x = np.full(n + 1, (1.0 - p) / n)
    x[n] = p
    return f, x


# ------------------------------------------------------------- operations

def _check_x(f: SetFunction, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (f.n,):
        raise DimensionMismatch(f"vector of length {x.shape} for ground of size {f.n}")
    if np.any(x < -SLACK) or np.any(x > 1 + SLACK):
        raise ValueError("fractional vector must lie in [0,1]^n")
    return np.clip(x, 0.0, 1.0)


def multilinear_exact(f: SetFunction, x) -> float:
    x = _check_x(f, x)
    if f.n <= EXACT_MAX_N:
        return float(product_law(x) @ f.table())
    if f.collapse is not None and f.collapse.base.n <= EXACT_MAX_N:
        return multilinear_exact(f.collapse.base, f.collapse.collapse_vector(x))
    if f.multilinear_hook is not None:
        return float(f.multilinear_hook(x))
    raise GroundSetTooLarge(f"exact multilinear extension needs n <= {EXACT_MAX_N}, got {f.n}")


def sample_masks(x: np.ndarray, rng: np.random.Generator, trials: int) -> np.ndarray:
    bits = rng.random((trials, len(x))) < x
    return bits @ (np.int64(1) << np.arange(len(x), dtype=np.int64))


def multilinear_mc(f: SetFunction, x, trials: int, seed: int) -> tuple[float, float]:
    """Sample-mean estimate of F(x) and its standard error.

    Draws come in fixed-size chunks, each from its own stream derived from
    (seed, chunk index), so the result does not depend on how chunks are
    scheduled.  With a single draw the standard error is undefined (nan).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x = _check_x(f, x)
    if f.n > 62:
        raise GroundSetTooLarge("Monte Carlo sampling uses 63-bit masks")
    vals = []
    for c, start in enumerate(range(0, trials, MC_CHUNK)):
        rng = np.random.default_rng([seed, c])
        vals.append(f.values(sample_masks(x, rng, min(MC_CHUNK, trials - start))))
    vals = np.concatenate(vals)
    mean = float(vals.mean())
    if trials == 1:
        return mean, float("nan")
    return mean, float(vals.std(ddof=1) / math.sqrt(trials))


@dataclass
class ConcaveDecomposition:
    terms: list[tuple[float, int]]
    value: float
    n: int = 0
    basis_size: int = 0

    def marginals(self) -> np.ndarray:
        x = np.zeros(self.n)
        for q, A in self.terms:
            for i in members(A):
                x[i] += q
        return x


def concave_closure(f: SetFunction, x) -> ConcaveDecomposition:
    """Optimal basic feasible solution of the LP defining f^+(x).

    Columns are all 2^n subsets; rows are the n marginal constraints plus
    normalization.
    """
    x = _check_x(f, x)
    n = f.n
    if n > CLOSURE_MAX_N:
        raise GroundSetTooLarge(f"concave closure LP needs n <= {CLOSURE_MAX_N}, got {n}")
    masks = np.arange(1 << n, dtype=np.int64)
    A = np.vstack([np.ones(1 << n), _bit_matrix(masks, n).T.astype(float)])
    rhs = np.concatenate([[1.0], x])
    res = simplex.solve(f.table(), A, rhs)
    terms = [(float(res.solution[j]), int(j)) for j in res.basis if res.solution[j] > 0.0]
    terms.sort(key=lambda t: t[1])
    return ConcaveDecomposition(terms=terms, value=res.value, n=n, basis_size=len(res.basis))


def concave_closure_value(f: SetFunction, x) -> float:
    x = _check_x(f, x)
    if f.n <= CLOSURE_MAX_N:
        return concave_closure(f, x).value
    if f.closure_hook is not None:
        return float(f.closure_hook(x))
    raise GroundSetTooLarge(f"concave closure needs n <= {CLOSURE_MAX_N}, got {f.n}")


def f_max_value(f: SetFunction, S) -> float:
    mask = to_mask(S, f.n)
    if mask.bit_count() > FMAX_MAX_SUBSET:
        raise SubsetTooLarge(f"f_max enumerates subsets of size <= {FMAX_MAX_SUBSET}")
    if mask == 0:
        return 0.0
    if f.n <= 62:
        return float(f.values(submasks(mask)).max())
    return max(f.value(int(s)) for s in _submask_iter(mask))


def _submask_iter(mask: int):
    s = mask
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & mask


def rebalance_r(dec: ConcaveDecomposition, x) -> np.ndarray:
    """Per-element top-up probabilities r_i so that sampling each A_j with
    probability q_j and then each element with r_i hits marginal x_i."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(dec.marginals() - x) > 1e-9):
        raise DimensionMismatch("decomposition does not certify x")
    if any(q >= 1.0 for q, _ in dec.terms):
        raise DegenerateWeight("a decomposition weight equals 1")
    miss = np.ones(len(x))
    for q, A in dec.terms:
        for i in members(A):
            miss[i] *= 1.0 - q
    r = 1.0 - (1.0 - x) / miss
    return np.clip(r, 0.0, x)


def gap_ratio(f: SetFunction, x) -> float:
    """F(x) / f^+(x); 1 by convention when the closure vanishes."""
    closure = concave_closure_value(f, x)
    if closure <= SLACK:
        return 1.0
    return multilinear_exact(f, x) / closure


def check_submodular(f: SetFunction, *, pairs: int = 2000, seed: int = 0, tol: float = SLACK,
                     raise_on_failure: bool = True) -> bool:
    """All pairs for n <= 10, otherwise a seeded random sample of pairs."""
    n = f.n
    if n <= 10:
        tab = f.table()
        full = np.arange(1 << n, dtype=np.int64)
        for a in range(1 << n):
            lhs = tab[a] + tab
            rhs = tab[a | full] + tab[a & full]
            if np.any(lhs < rhs - tol):
                b = int(np.argmax(rhs - lhs))
                if raise_on_failure:
                    raise NotSubmodular(f"violated on A={a:#x}, B={b:#x}")
                return False
        return True
    rng = np.random.default_rng(seed)
    for _ in range(pairs):
        a = int.from_bytes(rng.bytes((n + 7) // 8), "little") & ((1 << n) - 1)
        b = int.from_bytes(rng.bytes((n + 7) // 8), "little") & ((1 << n) - 1)
        if f.value(a) + f.value(b) < f.value(a | b) + f.value(a & b) - tol:
            if raise_on_failure:
                raise NotSubmodular(f"violated on A={a:#x}, B={b:#x}")
            return False
    return True


def check_monotone(f: SetFunction, *, samples: int = 2000, seed: int = 0, tol: float = SLACK) -> bool:
    n = f.n
    if n <= 12:
        tab = f.table()
        full = np.arange(1 << n, dtype=np.int64)
        return all(np.all(tab[full | (1 << i)] >= tab - tol) for i in range(n))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        a = int.from_bytes(rng.bytes((n + 7) // 8), "little") & ((1 << n) - 1)
        i = int(rng.integers(n))
        if f.value(a | (1 << i)) < f.value(a) - tol:
            return False
    return True


def random_submodular(n: int, rng: np.random.Generator, *, monotone: bool | None = None) -> SetFunction:
    """Random non-negative coverage / directed-cut mixture on n elements."""
    if monotone is None:
        monotone = bool(rng.random() < 0.5)
    universe = int(rng.integers(2, 2 * n + 2))
    sets = []
    for _ in range(n):
        size = int(rng.integers(0, universe + 1))
        sets.append(rng.choice(universe, size=size, replace=False).tolist())
    cov = coverage(sets, weights=rng.random(universe).tolist())
    if monotone:
        return cov
    arcs = [(int(u), int(v), float(rng.random()))
            for u, v in itertools.permutations(range(n), 2) if rng.random() < 0.4]
    cut = directed_cut(arcs, n) if arcs else directed_cut([], n)
    return mixture([cov, cut], [float(rng.random()), float(rng.random() * 2)])
