"""Downward-closed constraint families, their solvable relaxations, the
partition extension over a blown-up ground set, and the day-marginal
polytopes used by the prophet relaxation."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from .errors import GroundSetMismatch, GroundSetTooLarge
from .submodular import members, to_mask

MEMBERSHIP_TOL = 1e-9
BRUTE_FORCE_MAX = 20
RANK_INEQ_MAX = 16


class ConstraintFamily:
    """Independence system on elements 0..n-1 (downward closed, contains the empty set)."""

    kind = "abstract"
    is_matroid = False

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("ground set must be non-empty")
        self.n = n

    def _independent(self, mask: int) -> bool:
        raise NotImplementedError

    def is_independent(self, S) -> bool:
        return self._independent(to_mask(S, self.n))

    def rank(self, S) -> int:
        """Size of a maximum independent subset (greedy; exact for matroids)."""
        mask = to_mask(S, self.n)
        if self.is_matroid:
            chosen = 0
            for i in members(mask):
                if self._independent(chosen | (1 << i)):
                    chosen |= 1 << i
            return chosen.bit_count()
        return max(s.bit_count() for s in self.independent_sets(mask))

    def independent_sets(self, within: int | None = None) -> Iterator[int]:
        """Every independent subset of ``within`` (DFS with down-closure pruning)."""
        if within is None:
            within = (1 << self.n) - 1
        elems = members(within)

        def dfs(start, mask):
            yield mask
            for k in range(start, len(elems)):
                m2 = mask | (1 << elems[k])
                if self._independent(m2):
                    yield from dfs(k + 1, m2)

        yield from dfs(0, 0)

    def maximal_independent_sets(self, within: int | None = None) -> list[int]:
        sets = list(self.independent_sets(within))
        if within is None:
            within = (1 << self.n) - 1
        out = []
        for s in sets:
            if not any(self._independent(s | (1 << i)) for i in members(within & ~s)):
                out.append(s)
        return out

    def inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, c) with relaxation = {x in [0,1]^n : A x <= c}."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


class UniformMatroid(ConstraintFamily):
    kind = "uniform"
    is_matroid = True

    def __init__(self, n: int, k: int):
        super().__init__(n)
        if k < 0:
            raise ValueError("rank must be non-negative")
        self.k = k

    def _independent(self, mask):
        return mask.bit_count() <= self.k

    def rank(self, S):
        return min(to_mask(S, self.n).bit_count(), self.k)

    def inequalities(self):
        return np.ones((1, self.n)), np.array([float(self.k)])

    def to_json(self):
        return {"kind": "uniform", "k": self.k}


class PartitionMatroid(ConstraintFamily):
    kind = "partition"
    is_matroid = True

    def __init__(self, n: int, parts: Sequence[Sequence[int]], caps: Sequence[int]):
        super().__init__(n)
        if len(parts) != len(caps):
            raise ValueError("one cap per part")
        seen = [e for p in parts for e in p]
        if sorted(seen) != list(range(n)):
            raise ValueError("parts must partition the ground set")
        self.parts = [list(p) for p in parts]
        self.caps = [int(c) for c in caps]
        self.part_masks = [to_mask(p, n) for p in self.parts]
        self.part_of = np.empty(n, dtype=int)
        for j, p in enumerate(self.parts):
            self.part_of[p] = j

    def _independent(self, mask):
        return all((mask & pm).bit_count() <= c for pm, c in zip(self.part_masks, self.caps))

    def rank(self, S):
        mask = to_mask(S, self.n)
        return sum(min((mask & pm).bit_count(), c) for pm, c in zip(self.part_masks, self.caps))

    def inequalities(self):
        A = np.zeros((len(self.parts), self.n))
        for j, p in enumerate(self.parts):
            A[j, p] = 1.0
        return A, np.asarray(self.caps, dtype=float)

    def to_json(self):
        return {"kind": "partition", "parts": self.parts, "caps": self.caps}


class _RankInequalities:
    def inequalities(self):
        if self.n > RANK_INEQ_MAX:
            raise GroundSetTooLarge(f"rank inequalities enumerated only for n <= {RANK_INEQ_MAX}")
        rows, rhs = [], []
        for mask in range(1, 1 << self.n):
            r = self.rank(mask)
            if r < mask.bit_count():
                row = np.zeros(self.n)
                row[members(mask)] = 1.0
                rows.append(row)
                rhs.append(float(r))
        if not rows:
            return np.zeros((0, self.n)), np.zeros(0)
        return np.array(rows), np.array(rhs)


class GraphicMatroid(_RankInequalities, ConstraintFamily):
    """Elements are edges; independent iff acyclic."""

    kind = "graphic"
    is_matroid = True

    def __init__(self, edges: Sequence[Sequence[int]]):
        super().__init__(len(edges))
        self.edges = [(int(u), int(v)) for u, v in edges]

    def _independent(self, mask):
        parent: dict[int, int] = {}

        def find(a):
            while parent.get(a, a) != a:
                parent[a] = parent.get(parent[a], parent[a])
                a = parent[a]
            return a

        for i in members(mask):
            u, v = self.edges[i]
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True

    def to_json(self):
        return {"kind": "graphic", "edges": [list(e) for e in self.edges]}


class ExplicitMatroid(_RankInequalities, ConstraintFamily):
    """Independent sets listed explicitly; closed downward on construction."""

    kind = "explicit"
    is_matroid = True

    def __init__(self, n: int, independent: Sequence[Sequence[int]]):
        super().__init__(n)
        fam = {0}
        for s in independent:
            m = to_mask(s, n)
            fam.update(int(t) for t in _submasks(m))
        self.family = frozenset(fam)

    def _independent(self, mask):
        return mask in self.family

    def to_json(self):
        return {"kind": "explicit", "independent": [members(m) for m in sorted(self.family)]}


class Matching(ConstraintFamily):
    """Elements are edges of a graph; independent iff vertex-disjoint."""

    kind = "matching"

    def __init__(self, edges: Sequence[Sequence[int]]):
        super().__init__(len(edges))
        self.edges = [(int(u), int(v)) for u, v in edges]
        self.vertices = sorted({x for e in self.edges for x in e})

    def _independent(self, mask):
        used = set()
        for i in members(mask):
            u, v = self.edges[i]
            if u in used or v in used or u == v:
                return False
            used.update((u, v))
        return True

    def inequalities(self):
        A = np.zeros((len(self.vertices), self.n))
        for r, vtx in enumerate(self.vertices):
            for i, (u, v) in enumerate(self.edges):
                if vtx in (u, v):
                    A[r, i] = 1.0
        return A, np.ones(len(self.vertices))

    def to_json(self):
        return {"kind": "matching", "graph": [list(e) for e in self.edges]}


class Knapsack(ConstraintFamily):
    kind = "knapsack"

    def __init__(self, weights: Sequence[float], capacity: float):
        super().__init__(len(weights))
        self.weights = np.asarray(weights, dtype=float)
        if np.any(self.weights < 0):
            raise ValueError("knapsack weights must be non-negative")
        self.capacity = float(capacity)

    def _independent(self, mask):
        return float(sum(self.weights[i] for i in members(mask))) <= self.capacity + 1e-12

    def inequalities(self):
        return self.weights[None, :].copy(), np.array([self.capacity])

    def to_json(self):
        return {"kind": "knapsack", "weights": self.weights.tolist(), "capacity": self.capacity}


def _submasks(mask):
    s = mask
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & mask


@dataclass(frozen=True)
class BlowupMap:
    """Lifted ground set partitioned into parts U_i, one per base element."""

    part_of: tuple[int, ...]
    base_size: int

    def __post_init__(self):
        if any(not 0 <= p < self.base_size for p in self.part_of):
            raise ValueError("part index out of range")
        if set(self.part_of) != set(range(self.base_size)):
            raise ValueError("every part must be non-empty")

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> BlowupMap:
        return cls(tuple(i for i, s in enumerate(sizes) for _ in range(s)), len(sizes))

    @property
    def lifted_size(self) -> int:
        return len(self.part_of)

    @cached_property
    def parts(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.base_size)]
        for e, i in enumerate(self.part_of):
            out[i].append(e)
        return out

    @cached_property
    def part_masks(self) -> list[int]:
        return [to_mask(p) for p in self.parts]

    @cached_property
    def incidence(self) -> np.ndarray:
        """(base_size, lifted_size) 0/1 matrix of part membership."""
        M = np.zeros((self.base_size, self.lifted_size))
        M[list(self.part_of), np.arange(self.lifted_size)] = 1.0
        return M

    def project(self, mask: int) -> int:
        out = 0
        for i, pm in enumerate(self.part_masks):
            if mask & pm:
                out |= 1 << i
        return out

    def day_sums(self, z: np.ndarray) -> np.ndarray:
        return self.incidence @ np.asarray(z, dtype=float)


class PartitionExtension(ConstraintFamily):
    """Lifted family: at most one element per part, projection independent."""

    kind = "partition-extension"

    def __init__(self, base: ConstraintFamily, blowup: BlowupMap):
        if blowup.base_size != base.n:
            raise GroundSetMismatch("blowup base does not match the constraint's ground set")
        super().__init__(blowup.lifted_size)
        self.base = base
        self.blowup = blowup
        self.is_matroid = base.is_matroid

    def _independent(self, mask):
        if any((mask & pm).bit_count() > 1 for pm in self.blowup.part_masks):
            return False
        return self.base._independent(self.blowup.project(mask))

    def rank(self, S):
        mask = to_mask(S, self.n)
        if self.is_matroid:
            return self.base.rank(self.blowup.project(mask))
        return super().rank(mask)


def partition_extension(C: ConstraintFamily, B: BlowupMap) -> PartitionExtension:
    return PartitionExtension(C, B)


def exchange_axiom_holds(C: ConstraintFamily) -> bool:
    """Exhaustive matroid exchange check (small ground sets only)."""
    if C.n > 12:
        raise GroundSetTooLarge("exchange axiom check limited to n <= 12")
    indep = list(C.independent_sets())
    for a in indep:
        for b in indep:
            if b.bit_count() > a.bit_count():
                if not any(C._independent(a | (1 << e)) for e in members(b & ~a)):
                    return False
    return True


# --------------------------------------------------------------- polytopes

class Polytope:
    """Downward-closed solvable polytope inside [0,1]^n."""

    n: int

    def linear_optimize(self, w) -> tuple[np.ndarray, float]:
        raise NotImplementedError

    def contains(self, x, scale: float = 1.0, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def coordinate_cap(self) -> float:
        """Largest value any single coordinate can take in the polytope."""
        caps = []
        for i in range(self.n):
            w = np.zeros(self.n)
            w[i] = 1.0
            caps.append(self.linear_optimize(w)[1])
        return float(max(caps))


class FamilyPolytope(Polytope):
    """Relaxation of a constraint family.

    Matroids: independent-set hull via rank inequalities, optimized greedily.
    Matching: degree relaxation, optimized by exhaustive max-weight matching.
    Knapsack: natural LP relaxation, optimized by the fractional greedy.
    """

    def __init__(self, family: ConstraintFamily):
        self.family = family
        self.n = family.n

    @cached_property
    def _ineq(self):
        return self.family.inequalities()

    def linear_optimize(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise ValueError("weight vector has wrong length")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        fam = self.family
        if fam.is_matroid:
            chosen = 0
            for i in sorted(range(self.n), key=lambda i: (-w[i], i)):
                if w[i] <= 0:
                    break
                if fam._independent(chosen | (1 << i)):
                    chosen |= 1 << i
            x = np.zeros(self.n)
            x[members(chosen)] = 1.0
            return x, float(w @ x)
        if isinstance(fam, Knapsack):
            return _fractional_knapsack(w, fam.weights, fam.capacity)
        if self.n > BRUTE_FORCE_MAX:
            raise GroundSetTooLarge(f"exhaustive optimization limited to n <= {BRUTE_FORCE_MAX}")
        best, best_val = 0, 0.0
        pos = to_mask([i for i in range(self.n) if w[i] > 0])
        for s in fam.independent_sets(pos):
            val = float(sum(w[i] for i in members(s)))
            if val > best_val + 1e-15:
                best, best_val = s, val
        x = np.zeros(self.n)
        x[members(best)] = 1.0
        return x, float(w @ x)

    def contains(self, x, scale=1.0, tol=MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError("vector has wrong length")
        if np.any(x < -tol) or np.any(x > scale + tol):
            return False
        A, c = self._ineq
        return bool(np.all(A @ x <= scale * c + tol))


def _fractional_knapsack(w, weights, capacity):
    x = np.zeros(len(w))
    room = capacity
    free = [i for i in range(len(w)) if w[i] > 0 and weights[i] <= 0]
    x[free] = 1.0
    order = sorted((i for i in range(len(w)) if w[i] > 0 and weights[i] > 0),
                   key=lambda i: (-w[i] / weights[i], i))
    for i in order:
        if room <= 0:
            break
        take = min(1.0, room / weights[i])
        x[i] = take
        room -= take * weights[i]
    return x, float(w @ x)


class BoxPolytope(Polytope):
    """{x : 0 <= x_i <= cap_i}."""

    def __init__(self, caps):
        self.caps = np.asarray(caps, dtype=float)
        self.n = len(self.caps)

    def linear_optimize(self, w):
        w = np.asarray(w, dtype=float)
        x = np.where(w > 0, self.caps, 0.0)
        return x, float(w @ x)

    def contains(self, x, scale=1.0, tol=MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= -tol) and np.all(x <= scale * self.caps + tol))

    def coordinate_cap(self):
        return float(self.caps.max())

    def inequalities(self):
        return np.zeros((0, self.n)), np.zeros(0)


class LiftedPolytope(Polytope):
    """Day-marginal polytope over the lifted set.

    Without caps this is {y >= 0 : (sum_{e in U_i} y_e)_i in P}; with caps it
    additionally enforces y_e <= caps[e] (the realization-probability bound).
    """

    def __init__(self, base: Polytope, blowup: BlowupMap, caps=None):
        if blowup.base_size != base.n:
            raise GroundSetMismatch("blowup base does not match polytope dimension")
        self.base = base
        self.blowup = blowup
        self.n = blowup.lifted_size
        self.caps = None if caps is None else np.asarray(caps, dtype=float)

    @cached_property
    def _lp_rows(self):
        M = self.blowup.incidence
        if isinstance(self.base, FamilyPolytope):
            A, c = self.base._ineq
        else:
            A, c = self.base.inequalities()
        rows = [A @ M, M]
        rhs = [c, np.ones(self.base.n)]
        if isinstance(self.base, BoxPolytope):
            rows.append(M)
            rhs.append(self.base.caps)
        return np.vstack(rows), np.concatenate(rhs)

    def linear_optimize(self, w):
        w = np.asarray(w, dtype=float)
        if not np.any(w > 0):
            return np.zeros(self.n), 0.0
        upper = np.ones(self.n) if self.caps is None else np.minimum(1.0, self.caps)
        upper = np.where(w > 0, upper, 0.0)
        A, c = self._lp_rows
        res = linprog(-w, A_ub=A, b_ub=c, bounds=list(zip(np.zeros(self.n), upper)), method="highs")
        if res.status != 0:
            raise RuntimeError(f"lifted LP failed: {res.message}")
        y = np.clip(res.x, 0.0, upper)
        return y, float(w @ y)

    def contains(self, z, scale=1.0, tol=MEMBERSHIP_TOL):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n,) or np.any(z < -tol) or np.any(z > 1 + tol):
            return False
        if self.caps is not None and np.any(z > self.caps + 1e-12 + tol):
            return False
        return self.base.contains(self.blowup.day_sums(z), scale, tol)


def polytope_for(family: ConstraintFamily) -> FamilyPolytope:
    return FamilyPolytope(family)


def linear_optimize(P: Polytope, w) -> tuple[np.ndarray, float]:
    return P.linear_optimize(w)


def is_independent(C: ConstraintFamily, S) -> bool:
    return C.is_independent(S)


def _guard_matroid_membership(P: Polytope):
    if isinstance(P, FamilyPolytope) and isinstance(P.family, _RankInequalities) and P.n > RANK_INEQ_MAX:
        raise GroundSetTooLarge(f"matroid membership is exhaustive; n <= {RANK_INEQ_MAX}")


def membership_P_prime(z, P: Polytope, B: BlowupMap, b: float = 1.0) -> bool:
    z = np.asarray(z, dtype=float)
    if z.shape != (B.lifted_size,):
        raise ValueError("z must live on the lifted ground set")
    if B.base_size != P.n:
        raise GroundSetMismatch("blowup base does not match polytope")
    _guard_matroid_membership(P)
    if np.any(z < -MEMBERSHIP_TOL) or np.any(z > 1 + MEMBERSHIP_TOL):
        return False
    return P.contains(B.day_sums(z), b)


def membership_P_doubleprime(z, D, P: Polytope, B: BlowupMap, b: float = 1.0) -> bool:
    z = np.asarray(z, dtype=float)
    D = np.asarray(D, dtype=float)
    if np.any(z > D + 1e-12):
        return False
    return membership_P_prime(z, P, B, b)


def constraint_from_json(spec: dict, n: int | None = None) -> ConstraintFamily:
    kind = spec["kind"]
    if kind == "uniform":
        if n is None:
            raise ValueError("uniform constraint needs the ground-set size")
        return UniformMatroid(n, int(spec["k"]))
    if kind == "partition":
        parts = spec["parts"]
        size = n if n is not None else sum(len(p) for p in parts)
        return PartitionMatroid(size, parts, spec["caps"])
    if kind == "graphic":
        return GraphicMatroid(spec["edges"])
    if kind == "matching":
        graph = spec["graph"]
        edges = graph["edges"] if isinstance(graph, dict) else graph
        return Matching(edges)
    if kind == "knapsack":
        return Knapsack(spec["weights"], spec["capacity"])
    if kind == "explicit":
        size = n if n is not None else 1 + max((e for s in spec["independent"] for e in s), default=0)
        return ExplicitMatroid(size, spec["independent"])
    raise ValueError(f"unknown constraint kind {kind!r}")
