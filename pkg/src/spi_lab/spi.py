"""Submodular prophet inequality engine.

Instances, the small-probability reduction, fractional solutions over the
prophet relaxation, the two online rounding algorithms, adversary
policies, exhaustive prophet oracles and experiment orchestration.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import bounds
from .constraints import (
    BlowupMap,
    ConstraintFamily,
    FamilyPolytope,
    LiftedPolytope,
    constraint_from_json,
    membership_P_doubleprime,
)
from .continuous_greedy import (
    TrajectoryConfig,
    cg_bound,
    continuous_greedy,
    mcg_bound,
    measured_continuous_greedy,
)
from .errors import (
    GroundSetTooLarge,
    InstanceTooLarge,
    MarginalExceedsDistribution,
    NotMonotone,
)
from .io import function_from_json
from .ocrs import GreedyOcrs, estimate_selectability, make_ocrs
from .submodular import (
    SetFunction,
    check_monotone,
    check_submodular,
    copy_collapse,
    members,
    multilinear_exact,
    multilinear_mc,
)

PROB_TOL = 1e-12
OPT_MAX_REALIZATIONS = 100_000
OPT_MAX_DAYS = 12
EXACT_CONDITIONAL_MAX = 16
REJECTION_CAP = 1_000_000
CLOSURE_JOINT_MAX = 12


@dataclass
class SpiInstance:
    """Days with disjoint supports, per-day laws, a day-level constraint and an
    objective over the union of supports (elements numbered day by day)."""

    supports: list[list[str]]
    probs: list[np.ndarray]
    constraint: ConstraintFamily
    objective: SetFunction

    def __post_init__(self):
        self.probs = [np.asarray(p, dtype=float) for p in self.probs]
        if len(self.supports) != len(self.probs):
            raise ValueError("one distribution per day")
        for s, p in zip(self.supports, self.probs):
            if len(s) != len(p) or len(s) == 0:
                raise ValueError("support and distribution sizes differ")
            if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL * max(1, len(p)) * 10:
                raise ValueError("each day's distribution must sum to 1")
        if self.constraint.n != self.n_days:
            raise ValueError("constraint must live on the days")
        if self.objective.n != self.n_elements:
            raise ValueError("objective must live on the union of supports")
        labels = [lab for s in self.supports for lab in s]
        if len(set(labels)) != len(labels):
            raise ValueError("supports must be disjoint")
        self.blowup = BlowupMap.from_sizes([len(s) for s in self.supports])

    @property
    def n_days(self) -> int:
        return len(self.supports)

    @property
    def n_elements(self) -> int:
        return sum(len(s) for s in self.supports)

    @property
    def D(self) -> np.ndarray:
        return np.concatenate(self.probs)

    @property
    def labels(self) -> list[str]:
        return [lab for s in self.supports for lab in s]

    def day_elements(self, i: int) -> list[int]:
        return self.blowup.parts[i]

    @property
    def polytope(self) -> FamilyPolytope:
        return FamilyPolytope(self.constraint)

    def lifted_polytope(self) -> LiftedPolytope:
        return LiftedPolytope(self.polytope, self.blowup, caps=self.D)

    def realization_count(self) -> int:
        return math.prod(len(s) for s in self.supports)


def instance_from_json(spec: dict) -> SpiInstance:
    days = spec["days"]
    supports = [[str(s) for s in d["support"]] for d in days]
    probs = [d["probs"] for d in days]
    n_el = sum(len(s) for s in supports)
    constraint = constraint_from_json(spec["constraint"], len(days))
    objective = function_from_json(spec["objective"], n_el)
    return SpiInstance(supports, probs, constraint, objective)


# ----------------------------------------------------------- reduction

def _copies_needed(eps: float) -> int:
    return math.ceil(1.0 / eps - 1e-12)


class ReducedNotSubmodular(UserWarning):
    """The copy-collapsed objective failed the submodularity check."""


def reduce_small_probabilities(inst: SpiInstance, eps: float, *, validate: bool = True) -> SpiInstance:
    """Split every element with probability > eps into ceil(1/eps) equal copies.

    The objective on the new instance treats any set of copies as the
    original element.  Returns ``inst`` itself when nothing qualifies.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    D = inst.D
    if np.all(D <= eps):
        return inst
    h = _copies_needed(eps)
    supports, probs, copy_of = [], [], []
    base_index = 0
    for s, p in zip(inst.supports, inst.probs):
        new_s, new_p = [], []
        for lab, pe in zip(s, p):
            if pe > eps:
                for j in range(h):
                    new_s.append(f"{lab}#{j + 1}")
                    new_p.append(pe / h)
                    copy_of.append(base_index)
            else:
                new_s.append(lab)
                new_p.append(pe)
                copy_of.append(base_index)
            base_index += 1
        supports.append(new_s)
        probs.append(np.array(new_p))
    labels = [lab for s in supports for lab in s]
    g = copy_collapse(inst.objective, copy_of, labels=labels)
    if validate:
        # merging copies preserves submodularity only for monotone f, so a
        # failed check is recorded rather than raised
        ok = check_submodular(g, pairs=500, seed=1, raise_on_failure=False)
        g.params["submodular_checked"] = ok
        if not ok:
            warnings.warn("copy-collapsed objective is not submodular", ReducedNotSubmodular, stacklevel=2)
        if g.is_monotone and not check_monotone(g, samples=500, seed=1):
            raise NotMonotone("derived objective lost monotonicity")
    return SpiInstance(supports, probs, inst.constraint, g)


# ------------------------------------------------------- fractional stage

@dataclass
class FractionalSolution:
    z: np.ndarray
    mode: str
    b: float
    alpha: float
    p: float
    value: float | None = None
    max_closure: float | None = None


def max_closure_over(f: SetFunction, A_ub: np.ndarray, b_ub: np.ndarray, upper: np.ndarray) -> tuple[float, np.ndarray]:
    """max f^+(z) over {z : A_ub z <= b_ub, 0 <= z <= upper} as one joint LP.

    Variables are the distribution weights a_S over all subsets plus z;
    the closure constraints tie them together.
    """
    n = f.n
    if n > CLOSURE_JOINT_MAX:
        raise GroundSetTooLarge(f"joint closure LP needs n <= {CLOSURE_JOINT_MAX}")
    m = 1 << n
    masks = np.arange(m, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    c = np.concatenate([-f.table(), np.zeros(n)])
    A_eq = np.zeros((n + 1, m + n))
    A_eq[0, :m] = 1.0
    A_eq[1:, :m] = bits.T
    A_eq[1:, m:] = -np.eye(n)
    b_eq = np.concatenate([[1.0], np.zeros(n)])
    A_in = np.hstack([np.zeros((A_ub.shape[0], m)), A_ub]) if A_ub.size else None
    bnds = [(0, None)] * m + [(0, u) for u in upper]
    res = linprog(c, A_ub=A_in, b_ub=b_ub if A_ub.size else None, A_eq=A_eq, b_eq=b_eq,
                  bounds=bnds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"joint closure LP failed: {res.message}")
    return float(-res.fun), np.clip(res.x[m:], 0.0, None)


def max_closure_lifted(inst: SpiInstance, scale: float = 1.0) -> tuple[float, np.ndarray]:
    """max f^+ over scale·P'' for the instance (exhaustive joint LP)."""
    LP = inst.lifted_polytope()
    A, c = LP._lp_rows
    return max_closure_over(inst.objective, A, scale * c, scale * np.minimum(1.0, inst.D))


def fractional_solution(inst: SpiInstance, mode: str, b: float, *, steps: int = 1000,
                        gradient_mode: str = "exact", trials: int = 10_000, seed: int = 0,
                        compute_value: bool = True) -> FractionalSolution:
    if not 0.0 < b <= 1.0:
        raise ValueError("b must lie in (0, 1]")
    f = inst.objective
    p = float(inst.D.max())
    P2 = inst.lifted_polytope()
    if mode in ("cg", "mcg"):
        cfg = TrajectoryConfig(b=b, steps=steps, gradient_mode=gradient_mode, trials=trials, seed=seed)
        if mode == "cg":
            if not f.is_monotone:
                raise NotMonotone("cg mode requires a monotone objective")
            traj = continuous_greedy(f, P2, cfg)
            alpha = cg_bound(b)
        else:
            traj = measured_continuous_greedy(f, P2, cfg)
            alpha = mcg_bound(min(p, 1.0 - 1e-12), b)
        z = np.minimum(traj.point, inst.D)
        sol = FractionalSolution(z=z, mode=mode, b=b, alpha=alpha, p=p, value=traj.value_estimate)
    elif mode == "scaled-closure":
        best, zstar = max_closure_lifted(inst)
        z = np.minimum(b * zstar, inst.D)
        alpha = b * (1.0 - 1.0 / math.e) * (1.0 - p)
        sol = FractionalSolution(z=z, mode=mode, b=b, alpha=alpha, p=p, max_closure=best)
        if compute_value:
            sol.value = _objective_value(f, z, seed)
    else:
        raise ValueError(f"unknown fractional mode {mode!r}")
    if not membership_P_doubleprime(sol.z, inst.D, inst.polytope, inst.blowup, b):
        raise RuntimeError("fractional solution left b·P''")
    return sol


def _objective_value(f: SetFunction, z: np.ndarray, seed: int) -> float:
    try:
        return multilinear_exact(f, z)
    except GroundSetTooLarge:
        return multilinear_mc(f, z, 100_000, seed)[0]


# ------------------------------------------------------------ day sampler

class DaySampler:
    """Per-day randomized set T_i whose unconditional law is the product law of z_i.

    Given the realized element e: with probability Pr[R = {e}] / D(e) return
    {e}; otherwise draw R from the product law conditioned on |R| != 1.
    Sets are local masks over the day's support.
    """

    def __init__(self, z: np.ndarray, D: np.ndarray):
        z = np.asarray(z, dtype=float)
        D = np.asarray(D, dtype=float)
        if np.any(z > D + PROB_TOL):
            raise MarginalExceedsDistribution("z_e exceeds D(e)")
        self.z = np.clip(z, 0.0, 1.0)
        self.D = D
        self.m = len(z)
        miss = 1.0 - self.z
        self.p_empty = float(np.prod(miss))
        # Pr[R = {e}] = z_e * prod_{f != e} (1 - z_f)
        self.p_single = np.array([self.z[e] * np.prod(np.delete(miss, e)) for e in range(self.m)])
        self.branch = np.divide(self.p_single, D, out=np.zeros(self.m), where=D > 0)
        self.branch = np.minimum(self.branch, 1.0)
        self.p_not_single = 1.0 - float(self.p_single.sum())
        self._cdf = None
        self._cond_masks = None
        if self.m <= EXACT_CONDITIONAL_MAX:
            self._build_conditional()

    def _build_conditional(self):
        masks = np.arange(1 << self.m, dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(self.m)) & 1).astype(bool)
        law = np.prod(np.where(bits, self.z, 1.0 - self.z), axis=1)
        keep = bits.sum(axis=1) != 1
        self._cond_masks = masks[keep]
        w = law[keep]
        total = w.sum()
        self._cond_law = w / total if total > 0 else np.eye(1, len(w)).ravel()
        self._cdf = np.cumsum(self._cond_law)

    def conditional_law(self) -> dict[int, float]:
        if self._cond_masks is None:
            raise GroundSetTooLarge("exact conditional law only for small supports")
        return {int(m): float(p) for m, p in zip(self._cond_masks, self._cond_law)}

    def sample_conditional(self, rng: np.random.Generator) -> int:
        if self._cdf is not None:
            k = int(np.searchsorted(self._cdf, rng.random() * self._cdf[-1], side="right"))
            return int(self._cond_masks[min(k, len(self._cond_masks) - 1)])
        for _ in range(REJECTION_CAP):
            bits = rng.random(self.m) < self.z
            if bits.sum() != 1:
                return int(sum(1 << i for i in np.nonzero(bits)[0]))
        raise RuntimeError("rejection sampling cap reached")

    def sample(self, e: int, rng: np.random.Generator) -> tuple[int, bool]:
        """Returns (local mask of T_i, whether the singleton branch fired)."""
        if rng.random() < self.branch[e]:
            return 1 << e, True
        return self.sample_conditional(rng), False

    def exact_law(self) -> dict[int, float]:
        """Law of T_i by total probability over the realization and both branches."""
        cond = self.conditional_law()
        law: dict[int, float] = {}
        for e in range(self.m):
            if self.D[e] <= 0:
                continue
            law[1 << e] = law.get(1 << e, 0.0) + self.D[e] * self.branch[e]
            rest = self.D[e] * (1.0 - self.branch[e])
            for mask, p in cond.items():
                law[mask] = law.get(mask, 0.0) + rest * p
        return law

    def waste_probability(self, e: int) -> float:
        """Pr[T_i is non-empty and differs from {e}] given realization e."""
        if self.p_not_single <= 0:
            return 0.0
        nonempty_cond = 1.0 - self.p_empty / self.p_not_single
        return float((1.0 - self.branch[e]) * max(nonempty_cond, 0.0))


def sample_day_set(z_i, D_i, e: int, rng: np.random.Generator) -> int:
    return DaySampler(z_i, D_i).sample(e, rng)[0]


def product_law_dict(z: np.ndarray) -> dict[int, float]:
    out = {}
    m = len(z)
    for mask in range(1 << m):
        p = 1.0
        for i in range(m):
            p *= z[i] if mask >> i & 1 else 1.0 - z[i]
        out[mask] = p
    return out


# ------------------------------------------------------------ adversaries

class Adversary:
    kind = "abstract"

    def start(self, ctx: RoundingContext, realization: list[int], rng: np.random.Generator):
        pass

    def choose(self, remaining: list[int], state: RunState) -> int:
        raise NotImplementedError


class FixedOrder(Adversary):
    kind = "fixed"

    def __init__(self, order: Sequence[int] | None = None):
        self.order = None if order is None else list(order)

    def choose(self, remaining, state):
        if self.order is None:
            return remaining[0]
        for d in self.order:
            if d in remaining:
                return d
        return remaining[0]


class RandomOrder(Adversary):
    kind = "random"

    def start(self, ctx, realization, rng):
        self._perm = list(rng.permutation(ctx.inst.n_days))

    def choose(self, remaining, state):
        for d in self._perm:
            if d in remaining:
                return int(d)
        return remaining[0]


class AdaptiveHeuristic(Adversary):
    """Knows every realization and the algorithm's state; reveals the day with
    the smallest expected immediate gain for the algorithm, breaking ties by
    the largest chance of spending OCRS capacity on a useless day."""

    kind = "adaptive"

    def choose(self, remaining, state):
        ctx = state.ctx
        f = ctx.inst.objective
        base = f.value(state.t_alg)
        best, best_key = remaining[0], None
        for d in remaining:
            e = state.realization[d]
            local = e - ctx.offsets[d]
            sampler = ctx.samplers[d]
            if state.pi.would_accept(d):
                gain = sampler.branch[local] * (f.value(state.t_alg | (1 << e)) - base)
                if ctx.general:
                    gain *= 0.5
                waste = sampler.waste_probability(local)
            else:
                gain, waste = 0.0, 0.0
            key = (gain, -waste, d)
            if best_key is None or key < best_key:
                best, best_key = d, key
        return best


def adversary_from_name(name: str, order: Sequence[int] | None = None) -> Adversary:
    if name == "fixed":
        return FixedOrder(order)
    if name in ("random", "random-order"):
        return RandomOrder()
    if name in ("adaptive", "adaptive-heuristic"):
        return AdaptiveHeuristic()
    raise ValueError(f"unknown adversary {name!r}")


# --------------------------------------------------------------- rounding

@dataclass
class RoundingTranscript:
    order: list[int] = field(default_factory=list)
    realized: list[int] = field(default_factory=list)
    day_sets: list[list[int]] = field(default_factory=list)
    decisions: list[bool] = field(default_factory=list)
    coins: list[bool | None] = field(default_factory=list)
    t_alg: int = 0
    value: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["t_alg"] = members(self.t_alg)
        return d


class RoundingContext:
    """Immutable per-(instance, z) data shared by all replications."""

    def __init__(self, inst: SpiInstance, z: np.ndarray, general: bool):
        self.inst = inst
        self.z = np.asarray(z, dtype=float)
        self.general = general
        self.offsets = [p[0] for p in inst.blowup.parts]
        self.samplers = [DaySampler(self.z[p], inst.D[p]) for p in inst.blowup.parts]
        self.day_marginals = np.array([1.0 - s.p_empty for s in self.samplers])
        self.cdfs = [np.cumsum(p) for p in inst.probs]


@dataclass
class RunState:
    ctx: RoundingContext
    pi: GreedyOcrs
    realization: list[int]
    t_alg: int = 0


def _draw_realization(ctx: RoundingContext, rng: np.random.Generator) -> list[int]:
    out = []
    for d, cdf in enumerate(ctx.cdfs):
        k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        out.append(ctx.offsets[d] + min(k, len(cdf) - 1))
    return out


def _round(ctx: RoundingContext, pi: GreedyOcrs, adversary: Adversary, seed, rep: int = 0) -> RoundingTranscript:
    rng = np.random.default_rng([seed, rep] if not isinstance(seed, list) else seed + [rep])
    pi.reset()
    realization = _draw_realization(ctx, rng)
    adversary.start(ctx, realization, rng)
    state = RunState(ctx, pi, realization)
    tr = RoundingTranscript()
    remaining = list(range(ctx.inst.n_days))
    while remaining:
        d = adversary.choose(remaining, state)
        remaining.remove(d)
        e = realization[d]
        local_e = e - ctx.offsets[d]
        local_T, _ = ctx.samplers[d].sample(local_e, rng)
        T = local_T << ctx.offsets[d]
        accepted = pi.offer(d, T != 0)
        coin = None
        if accepted and T == 1 << e:
            if ctx.general:
                coin = bool(rng.random() < 0.5)
                if coin:
                    state.t_alg |= T
            else:
                state.t_alg |= T
        tr.order.append(d)
        tr.realized.append(e)
        tr.day_sets.append(members(T))
        tr.decisions.append(accepted)
        tr.coins.append(coin)
    tr.t_alg = state.t_alg
    tr.value = ctx.inst.objective.value(state.t_alg)
    return tr


def round_monotone(inst: SpiInstance, z, pi: GreedyOcrs, adversary: Adversary, seed: int,
                   rep: int = 0, ctx: RoundingContext | None = None) -> RoundingTranscript:
    if not inst.objective.is_monotone:
        raise NotMonotone("monotone rounding requires a monotone objective")
    ctx = ctx or RoundingContext(inst, z, general=False)
    return _round(ctx, pi, adversary, seed, rep)


def round_general(inst: SpiInstance, z, pi: GreedyOcrs, adversary: Adversary, seed: int,
                  rep: int = 0, ctx: RoundingContext | None = None) -> RoundingTranscript:
    ctx = ctx or RoundingContext(inst, z, general=True)
    return _round(ctx, pi, adversary, seed, rep)


# --------------------------------------------------------- prophet oracles

def _offline_opt_values(inst: SpiInstance, realizations: np.ndarray) -> np.ndarray:
    """Best feasible value for each row of day-indexed global element ids."""
    C = inst.constraint
    f = inst.objective
    if inst.n_days > OPT_MAX_DAYS:
        raise InstanceTooLarge(f"exhaustive prophet needs <= {OPT_MAX_DAYS} days")
    day_sets = C.maximal_independent_sets() if f.is_monotone else list(C.independent_sets())
    M = np.zeros((len(day_sets), inst.n_days), dtype=bool)
    for r, s in enumerate(day_sets):
        M[r, members(s)] = True
    out = np.empty(len(realizations))
    if inst.n_elements <= 20:
        tab = f.table()
        bits = np.int64(1) << realizations.astype(np.int64)
        for start in range(0, len(realizations), 4096):
            chunk = bits[start:start + 4096]
            masks = (chunk[:, None, :] * M[None, :, :]).sum(axis=2)
            out[start:start + 4096] = tab[masks].max(axis=1)
        return out
    for r, row in enumerate(realizations):
        best = 0.0
        for s_row in M:
            mask = 0
            for d in np.nonzero(s_row)[0]:
                mask |= 1 << int(row[d])
            best = max(best, f.value(mask))
        out[r] = best
    return out


def _all_realizations(inst: SpiInstance) -> tuple[np.ndarray, np.ndarray]:
    offsets = [p[0] for p in inst.blowup.parts]
    grids = [range(len(s)) for s in inst.supports]
    rows = np.array(list(itertools.product(*grids)), dtype=np.int64).reshape(-1, inst.n_days)
    probs = np.ones(len(rows))
    for d in range(inst.n_days):
        probs *= inst.probs[d][rows[:, d]]
    return rows + np.asarray(offsets), probs


def prophet_opt_exact(inst: SpiInstance) -> float:
    """E over realizations of the best feasible selection's value."""
    if inst.realization_count() > OPT_MAX_REALIZATIONS:
        raise InstanceTooLarge(f"{inst.realization_count()} realizations exceed {OPT_MAX_REALIZATIONS}")
    rows, probs = _all_realizations(inst)
    return float(probs @ _offline_opt_values(inst, rows))


def prophet_marginals(inst: SpiInstance) -> np.ndarray:
    """Per-element probability of appearing in the prophet's chosen set
    (ties broken toward the first maximal set found)."""
    if inst.realization_count() > OPT_MAX_REALIZATIONS:
        raise InstanceTooLarge("too many realizations")
    rows, probs = _all_realizations(inst)
    C, f = inst.constraint, inst.objective
    day_sets = list(C.independent_sets())
    out = np.zeros(inst.n_elements)
    for row, pr in zip(rows, probs):
        best_mask, best = 0, -1.0
        for s in day_sets:
            mask = 0
            for d in members(s):
                mask |= 1 << int(row[d])
            v = f.value(mask)
            if v > best + 1e-15:
                best, best_mask = v, mask
        for e in members(best_mask):
            out[e] += pr
    return out


def prophet_opt_mc(inst: SpiInstance, trials: int, seed: int) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng([seed, 0x0B7])
    offsets = np.asarray([p[0] for p in inst.blowup.parts])
    rows = np.empty((trials, inst.n_days), dtype=np.int64)
    for d, p in enumerate(inst.probs):
        rows[:, d] = rng.choice(len(p), size=trials, p=p)
    vals = _offline_opt_values(inst, rows + offsets)
    mean = float(vals.mean())
    if trials == 1:
        return mean, float("nan")
    return mean, float(vals.std(ddof=1) / math.sqrt(trials))


# ------------------------------------------------------------- experiments

@dataclass
class ExperimentConfig:
    instance: SpiInstance
    epsilon: float = 0.1
    mode: str = "mcg"
    b: float | str = "auto"
    adversary: str = "adaptive"
    reps: int = 10_000
    seed: int = 0
    algorithm: str = "auto"
    steps: int = 1000
    gradient_mode: str = "exact"
    selectability_trials: int = 20_000
    order: list[int] | None = None


@dataclass
class ExperimentReport:
    mean: float
    stderr: float
    opt: float
    opt_method: str
    bound: float
    bound_factor: float
    c_emp: float
    c_literature: float | None
    b: float
    epsilon: float
    mode: str
    algorithm: str
    adversary: str
    reps: int
    seed: int
    fractional_value: float | None
    reduction_submodular: bool
    passed: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    CSV_FIELDS = ("mean", "stderr", "opt", "opt_method", "bound", "bound_factor", "c_emp",
                  "c_literature", "b", "epsilon", "mode", "algorithm", "adversary", "reps",
                  "seed", "passed")

    def csv_row(self) -> list[str]:
        out = []
        for k in self.CSV_FIELDS:
            v = getattr(self, k)
            out.append(f"{v:.6g}" if isinstance(v, float) else str(v))
        return out


def experiment_config_from_json(spec: dict, base_dir=None) -> ExperimentConfig:
    inst_spec = spec["instance"]
    if isinstance(inst_spec, str):
        from pathlib import Path
        path = Path(inst_spec)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        inst_spec = json.loads(path.read_text())
    keys = {f for f in ExperimentConfig.__dataclass_fields__} - {"instance"}
    kwargs = {k: v for k, v in spec.items() if k in keys}
    return ExperimentConfig(instance=instance_from_json(inst_spec), **kwargs)


def choose_b(inst: SpiInstance, monotone: bool) -> float:
    spec = bounds.bound_spec_for(inst.constraint, monotone)
    return bounds.optimize_ratio(spec).b_star


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    inst = cfg.instance
    f = inst.objective
    monotone = f.is_monotone if cfg.algorithm == "auto" else cfg.algorithm == "monotone"
    general = not monotone
    try:
        opt, opt_method = prophet_opt_exact(inst), "exact"
    except InstanceTooLarge:
        opt, se = prophet_opt_mc(inst, 20_000, cfg.seed)
        opt_method = f"monte-carlo(stderr={se:.3g})"
    b = choose_b(inst, monotone) if cfg.b == "auto" else float(cfg.b)
    reduced = reduce_small_probabilities(inst, cfg.epsilon)
    frac = fractional_solution(reduced, cfg.mode, b, steps=cfg.steps,
                               gradient_mode=cfg.gradient_mode, seed=cfg.seed)
    ctx = RoundingContext(reduced, frac.z, general=general)
    P = inst.polytope
    x_days = np.minimum(ctx.day_marginals, 1.0)
    pi = make_ocrs(P, b, x_days, cfg.seed)
    sel = estimate_selectability(make_ocrs, P, b, x_days, cfg.selectability_trials, cfg.seed)
    c_emp = sel.c
    c_lit = pi.literature_c(b) if pi.literature_c else None
    eb = math.exp(-b)
    if general:
        factor = c_emp / 4.0 * (eb - cfg.epsilon) * (1.0 - eb - cfg.epsilon)
    else:
        factor = c_emp * (eb - cfg.epsilon) * (1.0 - eb)
    factor = max(factor, 0.0)
    adversary = adversary_from_name(cfg.adversary, cfg.order)
    vals = np.empty(cfg.reps)
    for r in range(cfg.reps):
        vals[r] = _round(ctx, pi, adversary, cfg.seed, r).value
    mean = float(vals.mean()) if cfg.reps else 0.0
    stderr = float(vals.std(ddof=1) / math.sqrt(cfg.reps)) if cfg.reps > 1 else 0.0
    bound = factor * opt
    return ExperimentReport(
        mean=mean, stderr=stderr, opt=opt, opt_method=opt_method, bound=bound,
        bound_factor=factor, c_emp=c_emp, c_literature=c_lit, b=b, epsilon=cfg.epsilon,
        mode=cfg.mode, algorithm="general" if general else "monotone", adversary=cfg.adversary,
        reps=cfg.reps, seed=cfg.seed, fractional_value=frac.value,
        reduction_submodular=bool(reduced.objective.params.get("submodular_checked", True)),
        passed=bool(mean + 3.0 * stderr >= bound - 1e-12),
    )
