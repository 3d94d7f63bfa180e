"""Greedy online contention resolution schemes.

A greedy scheme fixes a down-closed feasible subfamily when it is built and
then accepts an active element iff adding it keeps the accepted set inside
that subfamily.  The offline characteristic scheme selects the elements of
an active set that stay addable to every feasible subset of it.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .constraints import (
    BlowupMap,
    ConstraintFamily,
    FamilyPolytope,
    PartitionMatroid,
    Polytope,
    UniformMatroid,
)
from .errors import (
    DuplicateOffer,
    NotInScaledPolytope,
    SaturatedCoordinate,
    SubsetTooLarge,
)
from .submodular import members, to_mask

CRS_MAX_ACTIVE = 20


@dataclass
class OcrsTranscript:
    order: list[int] = field(default_factory=list)
    active: list[bool] = field(default_factory=list)
    decisions: list[bool] = field(default_factory=list)
    accepted: int = 0

    def to_json_line(self) -> str:
        return json.dumps({"order": self.order, "active": self.active,
                           "decisions": self.decisions, "accepted": members(self.accepted)})


class GreedyOcrs:
    """Stateful greedy selector over a fixed feasible subfamily."""

    def __init__(self, family: ConstraintFamily, x: np.ndarray, *, scheme: str,
                 randomized: bool = False, member: Callable[[int], bool] | None = None,
                 literature_c: Callable[[float], float] | None = None, b: float = 1.0):
        self.family = family
        self.n = family.n
        self.input_x = np.asarray(x, dtype=float)
        self.scheme = scheme
        self.randomized = randomized
        self.b = b
        self._member = member or family._independent
        self.literature_c = literature_c
        self.reset()

    def reset(self) -> None:
        self.accepted = 0
        self._offered = 0
        self.transcript = OcrsTranscript()

    def family_member(self, S) -> bool:
        return self._member(to_mask(S, self.n))

    @property
    def uses_matroid_rank(self) -> bool:
        # the subfamily is the family itself, so matroid rank describes it
        return self._member == self.family._independent and self.family.is_matroid

    def would_accept(self, element: int) -> bool:
        return self._member(self.accepted | (1 << element))

    def offer(self, element: int, is_active: bool) -> bool:
        bit = 1 << element
        if self._offered & bit:
            raise DuplicateOffer(f"element {element} already offered")
        self._offered |= bit
        take = bool(is_active) and self._member(self.accepted | bit)
        if take:
            self.accepted |= bit
        t = self.transcript
        t.order.append(element)
        t.active.append(bool(is_active))
        t.decisions.append(take)
        t.accepted = self.accepted
        return take

    def run(self, order: Sequence[int], active) -> int:
        """Offer every element of ``order``; returns the accepted mask."""
        active_mask = to_mask(active, self.n)
        for e in order:
            self.offer(e, bool(active_mask >> e & 1))
        return self.accepted


def uniform_rank_k_c(b: float, k: int) -> float:
    """Selectability 1 - exp(-t^2/4) with b = 1 - t/sqrt(k)."""
    t = (1.0 - b) * math.sqrt(k)
    return 1.0 - math.exp(-t * t / 4.0)


def make_ocrs(P: Polytope, b: float, x, seed: int = 0) -> GreedyOcrs:
    """Kind-dispatched greedy scheme for a family polytope.

    All shipped schemes are deterministic, so ``seed`` does not change the
    subfamily; it is accepted so randomized schemes can share the signature.
    """
    if not isinstance(P, FamilyPolytope):
        raise TypeError("greedy schemes are built on constraint-family polytopes")
    x = np.asarray(x, dtype=float)
    if not P.contains(x, b):
        raise NotInScaledPolytope(f"x is not in {b}·P")
    fam = P.family
    if isinstance(fam, UniformMatroid):
        k = fam.k
        lit = (lambda bb: max(1.0 - bb, uniform_rank_k_c(bb, k))) if k > 1 else (lambda bb: 1.0 - bb)
        return GreedyOcrs(fam, x, scheme=f"uniform-rank-{k}", literature_c=lit, b=b)
    if isinstance(fam, PartitionMatroid):
        return GreedyOcrs(fam, x, scheme="partition-per-part", literature_c=lambda bb: 1.0 - bb, b=b)
    return GreedyOcrs(fam, x, scheme=f"greedy-fallback-{fam.kind}", b=b)


def offer(pi: GreedyOcrs, element: int, is_active: bool) -> bool:
    return pi.offer(element, is_active)


def family_member(pi: GreedyOcrs, S) -> bool:
    return pi.family_member(S)


def _crs_exhaustive(pi: GreedyOcrs, A: int) -> int:
    feasible = []
    elems = members(A)

    def dfs(start, mask):
        feasible.append(mask)
        for k in range(start, len(elems)):
            m2 = mask | (1 << elems[k])
            if pi._member(m2):
                dfs(k + 1, m2)

    dfs(0, 0)
    out = 0
    for e in elems:
        bit = 1 << e
        if all(pi._member(I | bit) for I in feasible if not I & bit):
            out |= bit
    return out


def _crs_rank(pi: GreedyOcrs, A: int) -> int:
    fam = pi.family
    out = 0
    for e in members(A):
        rest = A & ~(1 << e)
        if fam.rank(rest | (1 << e)) > fam.rank(rest):
            out |= 1 << e
    return out


def characteristic_crs(pi: GreedyOcrs, A, method: str = "auto") -> int:
    """Elements of A addable to every feasible subset of A (returned as a mask).

    ``method="exhaustive"`` checks every feasible subset; ``"rank"`` uses the
    matroid fact that e qualifies iff e is not spanned by A - e.
    """
    A = to_mask(A, pi.n)
    if method == "auto":
        method = "rank" if pi.uses_matroid_rank else "exhaustive"
    if method == "rank":
        return _crs_rank(pi, A)
    if A.bit_count() > CRS_MAX_ACTIVE:
        raise SubsetTooLarge(f"characteristic scheme enumerates subsets of <= {CRS_MAX_ACTIVE} elements")
    return _crs_exhaustive(pi, A)


def lift_pi_prime(pi: GreedyOcrs, B: BlowupMap, S) -> int:
    """Lifted scheme: keep S ∩ U_i for selected days i where S meets U_i exactly once."""
    S = to_mask(S, B.lifted_size)
    down = B.project(S)
    chosen_days = characteristic_crs(pi, down)
    out = 0
    for i in members(chosen_days):
        hit = S & B.part_masks[i]
        if hit.bit_count() == 1:
            out |= hit
    return out


@dataclass
class SelectabilityEstimate:
    mean: np.ndarray
    stderr: np.ndarray
    trials: int

    @property
    def c(self) -> float:
        return float(self.mean.min()) if self.mean.size else 1.0


def _selectable_vectorized(fam: ConstraintFamily, R: np.ndarray) -> np.ndarray | None:
    """(trials, n) boolean: e in pi_bar(R + e) for cardinality-type families."""
    if isinstance(fam, UniformMatroid):
        others = R.sum(axis=1, keepdims=True) - R
        return (others <= fam.k - 1) & (fam.k >= 1)
    if isinstance(fam, PartitionMatroid):
        out = np.empty(R.shape, dtype=bool)
        for part, cap in zip(fam.parts, fam.caps):
            sub = R[:, part]
            others = sub.sum(axis=1, keepdims=True) - sub
            out[:, part] = (others <= cap - 1) & (cap >= 1)
        return out
    return None


def estimate_selectability(maker: Callable, P: Polytope, b: float, x, trials: int,
                           seed: int) -> SelectabilityEstimate:
    """Monte Carlo estimate of Pr[e stays addable to every feasible I ⊆ R(x)] per element."""
    x = np.asarray(x, dtype=float)
    pi = maker(P, b, x, seed)
    n = len(x)
    rng = np.random.default_rng([seed, 0x5E1EC7])
    R = rng.random((trials, n)) < x
    hits = _selectable_vectorized(pi.family, R) if pi.uses_matroid_rank and not pi.randomized else None
    if hits is None:
        hits = np.zeros((trials, n), dtype=bool)
        weights = np.int64(1) << np.arange(n, dtype=np.int64)
        masks = R @ weights
        for t in range(trials):
            if pi.randomized:
                pi = maker(P, b, x, seed + 1 + t)
            base = int(masks[t])
            for e in range(n):
                A = base | (1 << e)
                hits[t, e] = bool(characteristic_crs(pi, A) >> e & 1)
    mean = hits.mean(axis=0)
    stderr = hits.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.full(n, np.nan)
    return SelectabilityEstimate(mean=mean, stderr=stderr, trials=trials)


def gamma(z, B: BlowupMap) -> float:
    z = np.asarray(z, dtype=float)
    if np.any(z >= 1.0):
        raise SaturatedCoordinate("a lifted coordinate equals 1")
    return float(min(np.prod(1.0 - z[p]) for p in B.parts))
