import json
import math
import warnings

import numpy as np
import oracles
import pytest

from spi_lab.constraints import UniformMatroid, membership_P_doubleprime
from spi_lab.errors import InstanceTooLarge, MarginalExceedsDistribution, NotMonotone
from spi_lab.ocrs import lift_pi_prime, make_ocrs
from spi_lab.spi import (
    AdaptiveHeuristic,
    DaySampler,
    ExperimentConfig,
    ExperimentReport,
    FixedOrder,
    RandomOrder,
    ReducedNotSubmodular,
    RoundingContext,
    SpiInstance,
    experiment_config_from_json,
    fractional_solution,
    instance_from_json,
    max_closure_lifted,
    prophet_opt_exact,
    prophet_opt_mc,
    reduce_small_probabilities,
    round_general,
    round_monotone,
    run_experiment,
    sample_day_set,
)
from spi_lab.submodular import (
    coverage,
    directed_cut,
    explicit_table,
    members,
    modular,
    multilinear_exact,
)

# Pr[R={a}] = 0.2 * 0.7 for z = (0.2, 0.3); divided by D(a) = 0.5
BRANCH_A = 0.28
# product law of z = (0.2, 0.3): empty 0.8 * 0.7, both 0.2 * 0.3
LAW_EMPTY, LAW_BOTH = 0.56, 0.06
# two fair coin days, weights a=1 b=3 | c=2 d=0, k=1: (2 + 1 + 3 + 3) / 4
COIN_OPT = 2.25


def labels(sizes):
    return [[f"d{d}e{j}" for j in range(s)] for d, s in enumerate(sizes)]


def random_instance(rng, sizes=(2, 3, 2), k=2, universe=5, objective="coverage"):
    probs = [rng.dirichlet(np.ones(s)) for s in sizes]
    n_el = sum(sizes)
    if objective == "coverage":
        f = coverage([rng.choice(universe, 2, replace=False).tolist() for _ in range(n_el)])
    else:
        arcs = [(u, v, float(rng.random())) for u in range(n_el) for v in range(n_el)
                if u != v and rng.random() < 0.3]
        f = directed_cut(arcs, n_el)
    return SpiInstance(labels(sizes), probs, UniformMatroid(len(sizes), k), f)


def single_day():
    return SpiInstance([["e"]], [[1.0]], UniformMatroid(1, 1), modular([1.0]))


class TestInstance:
    def test_validation(self):
        with pytest.raises(ValueError):
            SpiInstance([["a", "b"]], [[0.5, 0.4]], UniformMatroid(1, 1), modular([1, 1]))
        with pytest.raises(ValueError):
            SpiInstance([["a"], ["a"]], [[1.0], [1.0]], UniformMatroid(2, 1), modular([1, 1]))
        with pytest.raises(ValueError):
            SpiInstance([["a"]], [[1.0]], UniformMatroid(2, 1), modular([1]))

    def test_json(self):
        spec = {"days": [{"support": ["a", "b"], "probs": [0.5, 0.5]}, {"support": ["c"], "probs": [1.0]}],
                "constraint": {"kind": "uniform", "k": 1},
                "objective": {"kind": "modular", "weights": [1, 3, 2]}}
        inst = instance_from_json(spec)
        assert inst.n_days == 2 and inst.n_elements == 3 and inst.labels == ["a", "b", "c"]
        assert prophet_opt_exact(inst) == pytest.approx(2.5)


class TestReduction:
    def test_copies(self):
        inst = SpiInstance([["a", "b"]], [[0.5, 0.5]], UniformMatroid(1, 1), modular([1.0, 2.0]))
        red = reduce_small_probabilities(inst, 0.2)
        assert red.n_elements == 10
        assert red.probs[0] == pytest.approx(np.full(10, 0.1))
        assert red.supports[0][:2] == ["a#1", "a#2"]

    def test_float_guard_on_ceil(self):
        inst = SpiInstance([["a", "b", "c"]], [[0.5, 0.3, 0.2]], UniformMatroid(1, 1), modular([1, 1, 1]))
        assert reduce_small_probabilities(inst, 0.1).probs[0][0] == pytest.approx(0.05)

    def test_unchanged(self):
        inst = SpiInstance([["a", "b", "c", "d"]], [[0.25] * 4], UniformMatroid(1, 1), modular([1] * 4))
        assert reduce_small_probabilities(inst, 0.3) is inst

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            reduce_small_probabilities(single_day(), 0.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_opt_invariant(self, seed):
        inst = random_instance(np.random.default_rng(seed), sizes=(2, 2, 2))
        red = reduce_small_probabilities(inst, 0.2)
        assert all(p.max() <= 0.2 for p in red.probs)
        assert prophet_opt_exact(red) == pytest.approx(prophet_opt_exact(inst), abs=1e-9)

    def test_monotone_stays_submodular(self):
        inst = random_instance(np.random.default_rng(1))
        red = reduce_small_probabilities(inst, 0.25)
        assert red.objective.params["submodular_checked"]
        assert red.objective.is_monotone

    def test_nonmonotone_counterexample_recorded(self):
        # arc u -> e with e split into copies: {e1, u} and {e2, u} violate submodularity
        inst = SpiInstance([["e", "x"], ["u"]], [[0.6, 0.4], [1.0]], UniformMatroid(2, 2),
                           directed_cut([(2, 0, 1.0)], 3))
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            red = reduce_small_probabilities(inst, 0.5)
        assert any(issubclass(x.category, ReducedNotSubmodular) for x in w)
        assert red.objective.params["submodular_checked"] is False
        g = red.objective
        A, B = 0b1001, 0b1010  # copies e#1, e#2 with u
        assert g.value(A) + g.value(B) < g.value(A | B) + g.value(A & B)

    def test_oracle_answers(self):
        inst = random_instance(np.random.default_rng(4), sizes=(2, 2))
        red = reduce_small_probabilities(inst, 0.4)
        cc = red.objective.collapse
        for A in range(1 << red.n_elements):
            assert red.objective.value(A) == inst.objective.value(cc.collapse_mask(A))


class TestFractional:
    def test_modular_mcg(self):
        inst = SpiInstance(labels([2, 2]), [[0.5, 0.5], [0.3, 0.7]], UniformMatroid(2, 1),
                           modular([1.0, 2.0, 3.0, 0.5]))
        sol = fractional_solution(inst, "mcg", 1.0, steps=500)
        best, _ = max_closure_lifted(inst)
        assert sol.value >= (1 - 1 / math.e - 0.02) * best
        assert membership_P_doubleprime(sol.z, inst.D, inst.polytope, inst.blowup, 1.0)

    @pytest.mark.parametrize("mode", ["cg", "mcg", "scaled-closure"])
    def test_membership(self, mode):
        inst = random_instance(np.random.default_rng(2))
        sol = fractional_solution(inst, mode, 0.6, steps=100)
        assert membership_P_doubleprime(sol.z, inst.D, inst.polytope, inst.blowup, 0.6)

    def test_cg_requires_monotone(self):
        inst = random_instance(np.random.default_rng(2), objective="cut")
        with pytest.raises(NotMonotone):
            fractional_solution(inst, "cg", 0.5)

    def test_alpha_values(self):
        inst = random_instance(np.random.default_rng(3))
        assert fractional_solution(inst, "cg", 0.5, steps=10).alpha == pytest.approx(1 - math.exp(-0.5))
        p = inst.D.max()
        sc = fractional_solution(inst, "scaled-closure", 0.5)
        assert sc.alpha == pytest.approx(0.5 * (1 - 1 / math.e) * (1 - p))

    def test_star_chain(self):
        # star on u1, u2 -> v spread over two days with dummy partners
        vals = {}
        for S in range(16):
            core = [e for e in members(S) if e in (0, 1, 2)]
            vals[",".join(map(str, members(S)))] = 1.0 if core and 2 not in core else 0.0
        f = explicit_table(vals, 4)
        inst = SpiInstance([["u1", "v"], ["u2", "d"]], [[0.5, 0.5], [0.5, 0.5]], UniformMatroid(2, 2), f)
        opt = prophet_opt_exact(inst)
        for b in (0.4, 0.8, 1.0):
            sol = fractional_solution(inst, "scaled-closure", b)
            assert sol.max_closure >= opt - 1e-9
            assert multilinear_exact(f, sol.z) >= b * (1 - 0.5) * (1 - 1 / math.e) * opt - 1e-9


class TestDaySampler:
    def test_branch(self):
        s = DaySampler(np.array([0.2, 0.3]), np.array([0.5, 0.5]))
        assert s.branch[0] == pytest.approx(BRANCH_A)

    def test_exact_law(self):
        law = DaySampler(np.array([0.2, 0.3]), np.array([0.5, 0.5])).exact_law()
        assert law[0] == pytest.approx(LAW_EMPTY) and law[0b11] == pytest.approx(LAW_BOTH)
        ref, _ = oracles.day_set_law([0.2, 0.3], [0.5, 0.5])
        assert law[0] == pytest.approx(ref[frozenset()])

    def test_zero(self):
        rng = np.random.default_rng(0)
        assert all(sample_day_set(np.zeros(3), np.full(3, 1 / 3), 1, rng) == 0 for _ in range(50))

    def test_exceeds(self):
        with pytest.raises(MarginalExceedsDistribution):
            DaySampler(np.array([0.6, 0.1]), np.array([0.5, 0.5]))

    def test_rejection_path(self):
        m = 18
        z = np.full(m, 0.05)
        s = DaySampler(z, np.full(m, 1 / m))
        rng = np.random.default_rng(1)
        draws = [s.sample_conditional(rng) for _ in range(3000)]
        assert all(bin(d).count("1") != 1 for d in draws)
        p_empty = (0.95 ** m) / s.p_not_single
        assert abs(np.mean([d == 0 for d in draws]) - p_empty) < 0.03

    def test_empirical_law(self):
        z, D = np.array([0.2, 0.3]), np.array([0.5, 0.5])
        rng = np.random.default_rng(5)
        counts = np.zeros(4)
        for _ in range(40_000):
            e = int(rng.random() < 0.5)
            counts[sample_day_set(z, D, e, rng)] += 1
        target = np.array([0.56, 0.2 * 0.7, 0.8 * 0.3, 0.06])
        assert np.all(np.abs(counts / 40_000 - target) < 0.01)


class TestRounding:
    def _ctx(self, inst, z, general=False):
        x = np.array([1 - np.prod(1 - z[p]) for p in inst.blowup.parts])
        return make_ocrs(inst.polytope, 1.0, x), RoundingContext(inst, z, general)

    def test_zero_z(self):
        inst = random_instance(np.random.default_rng(0))
        z = np.zeros(inst.n_elements)
        pi, ctx = self._ctx(inst, z)
        for r in range(20):
            assert round_monotone(inst, z, pi, FixedOrder(), 0, r, ctx).t_alg == 0
        pi, ctx = self._ctx(inst, z, True)
        assert round_general(inst, z, pi, FixedOrder(), 0, 0, ctx).t_alg == 0

    @pytest.mark.parametrize("general,factor", [(False, 1.0), (True, 0.5)])
    def test_single_day_probability(self, general, factor):
        inst = single_day()
        b = 0.6
        z = np.array([b])
        pi, ctx = self._ctx(inst, z, general)
        fn = round_general if general else round_monotone
        hits = np.array([fn(inst, z, pi, FixedOrder(), 3, r, ctx).t_alg == 1 for r in range(20_000)])
        se = math.sqrt(b * factor * (1 - b * factor) / len(hits))
        assert abs(hits.mean() - b * factor) <= 5 * se

    def test_replay(self):
        inst = random_instance(np.random.default_rng(2), objective="cut")
        sol = fractional_solution(inst, "mcg", 0.5, steps=50)
        pi, ctx = self._ctx(inst, sol.z, True)
        a = round_general(inst, sol.z, pi, RandomOrder(), 9, 4, ctx)
        b = round_general(inst, sol.z, pi, RandomOrder(), 9, 4, ctx)
        assert a.to_json() == b.to_json()
        assert any(c is not None for c in a.coins) or not any(a.decisions)

    def test_monotone_requires_monotone(self):
        inst = random_instance(np.random.default_rng(2), objective="cut")
        z = np.zeros(inst.n_elements)
        pi, _ = self._ctx(inst, z)
        with pytest.raises(NotMonotone):
            round_monotone(inst, z, pi, FixedOrder(), 0)

    @pytest.mark.parametrize("adv", [FixedOrder(), RandomOrder(), AdaptiveHeuristic()], ids=lambda a: a.kind)
    def test_feasibility_and_lift(self, adv):
        rng = np.random.default_rng(7)
        inst = random_instance(rng, sizes=(2, 3, 2, 2), k=2)
        sol = fractional_solution(inst, "mcg", 0.5, steps=50)
        pi, ctx = self._ctx(inst, sol.z)
        for r in range(300):
            tr = round_monotone(inst, sol.z, pi, adv, 1, r, ctx)
            assert sorted(tr.order) == list(range(inst.n_days))
            chosen = members(tr.t_alg)
            assert all(e in tr.realized for e in chosen)
            assert inst.constraint._independent(inst.blowup.project(tr.t_alg))
            S = sum(1 << e for ds in tr.day_sets for e in ds)
            assert lift_pi_prime(pi, inst.blowup, S) & ~tr.t_alg == 0


class TestProphet:
    def test_deterministic(self):
        one = SpiInstance([["a"], ["b"]], [[1.0], [1.0]], UniformMatroid(2, 1), modular([1, 2]))
        two = SpiInstance([["a"], ["b"]], [[1.0], [1.0]], UniformMatroid(2, 2), modular([1, 2]))
        assert prophet_opt_exact(one) == 2 and prophet_opt_exact(two) == 3
        est, se = prophet_opt_mc(one, 100, 0)
        assert est == 2 and se == 0

    def test_coin_flip(self):
        inst = SpiInstance([["a", "b"], ["c", "d"]], [[0.5, 0.5], [0.5, 0.5]], UniformMatroid(2, 1),
                           modular([1, 3, 2, 0]))
        assert prophet_opt_exact(inst) == pytest.approx(COIN_OPT)

    def test_against_oracle(self):
        rng = np.random.default_rng(11)
        for objective in ("coverage", "cut"):
            inst = random_instance(rng, sizes=(2, 3, 2, 1), k=2, objective=objective)
            f = inst.objective
            ref = oracles.prophet_opt([2, 3, 2, 1], inst.probs, lambda T: len(T) <= 2,
                                      lambda S: f(sorted(S)))
            assert prophet_opt_exact(inst) == pytest.approx(ref, abs=1e-12)

    def test_mc(self):
        inst = random_instance(np.random.default_rng(12))
        est, se = prophet_opt_mc(inst, 20_000, 3)
        assert abs(est - prophet_opt_exact(inst)) <= 5 * se
        one, se1 = prophet_opt_mc(inst, 1, 3)
        assert math.isnan(se1) and one >= 0

    def test_guard(self):
        inst = SpiInstance(labels([10] * 6), [np.full(10, 0.1)] * 6, UniformMatroid(6, 1), modular(np.ones(60)))
        with pytest.raises(InstanceTooLarge):
            prophet_opt_exact(inst)


class TestExperiment:
    def test_zero_objective(self):
        inst = SpiInstance(labels([2, 2]), [[0.5, 0.5]] * 2, UniformMatroid(2, 1), directed_cut([], 4))
        rep = run_experiment(ExperimentConfig(inst, reps=50, steps=20, adversary="fixed"))
        assert rep.mean == 0 and rep.bound == 0 and rep.passed

    def test_coverage_pipeline(self):
        inst = random_instance(np.random.default_rng(20), sizes=(2, 3, 2, 3), k=2)
        rep = run_experiment(ExperimentConfig(inst, reps=2000, steps=100, selectability_trials=5000))
        assert rep.passed and rep.opt_method == "exact"
        assert rep.b == pytest.approx(0.33583, abs=1e-4)

    def test_modular_rank1(self):
        inst = SpiInstance(labels([2, 2, 2]), [[0.5, 0.5], [0.2, 0.8], [0.6, 0.4]], UniformMatroid(3, 1),
                           modular([1, 2, 0.5, 3, 1, 1]))
        rep = run_experiment(ExperimentConfig(inst, reps=3000, steps=100, b=0.4, selectability_trials=5000))
        eb = math.exp(-0.4)
        assert rep.bound_factor == pytest.approx(rep.c_emp * (eb - 0.1) * (1 - eb))
        assert rep.mean / rep.opt >= rep.bound_factor - 3 * rep.stderr / rep.opt

    @pytest.mark.parametrize("adversary", ["fixed", "random", "adaptive"])
    def test_all_adversaries_meet_bound(self, adversary):
        inst = random_instance(np.random.default_rng(21), sizes=(2, 2, 3), k=1, objective="cut")
        rep = run_experiment(ExperimentConfig(inst, reps=2000, steps=100, adversary=adversary,
                                              selectability_trials=5000))
        assert rep.algorithm == "general" and rep.passed

    def test_report_formats(self, tmp_path):
        inst_spec = {"days": [{"support": ["a", "b"], "probs": [0.5, 0.5]}, {"support": ["c"], "probs": [1.0]}],
                     "constraint": {"kind": "uniform", "k": 1},
                     "objective": {"kind": "coverage", "sets": [[0], [1], [0, 1]]}}
        (tmp_path / "inst.json").write_text(json.dumps(inst_spec))
        cfg = experiment_config_from_json({"instance": "inst.json", "reps": 100, "seed": 5, "steps": 20,
                                           "selectability_trials": 1000}, tmp_path)
        r1, r2 = run_experiment(cfg), run_experiment(cfg)
        assert r1.to_json() == r2.to_json()
        assert json.loads(r1.to_json())["reps"] == 100
        assert len(r1.csv_row()) == len(ExperimentReport.CSV_FIELDS)


def test_lemma_4_6_tv_small():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = int(rng.integers(1, 5))
        D = rng.dirichlet(np.ones(m))
        z = D * rng.random(m)
        law = DaySampler(z, D).exact_law()
        ref, prod = oracles.day_set_law(list(z), list(D))
        tv = 0.5 * sum(abs(law.get(sum(1 << i for i in S), 0.0) - p) for S, p in prod.items())
        assert tv <= 1e-12
        assert all(abs(law.get(sum(1 << i for i in S), 0.0) - ref[S]) <= 1e-12 for S in ref)
