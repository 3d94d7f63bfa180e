import math

import pytest

from spi_lab.bounds import BoundSpec, bound_spec_for, optimize_ratio, table1
from spi_lab.constraints import GraphicMatroid, Knapsack, Matching, UniformMatroid


def test_matroid_monotone():
    r = optimize_ratio(BoundSpec("matroid"))
    assert r.ratio == pytest.approx(0.13541, abs=1e-5)
    assert r.reciprocal == pytest.approx(7.39, abs=0.01)


def test_matching_closed_form():
    # stationary point of e^{-3b}(1 - e^{-b}): 3(1 - e^{-b}) = e^{-b}
    r = optimize_ratio(BoundSpec("matching"))
    assert r.b_star == pytest.approx(math.log(4 / 3), abs=1e-6)
    assert r.ratio == pytest.approx(27 / 256, abs=1e-12)


def test_uniform_limit():
    r = optimize_ratio(BoundSpec("uniform-limit"))
    assert r.b_star == 1.0
    assert r.ratio == pytest.approx(math.exp(-1) * (1 - math.exp(-1)))
    assert r.reciprocal == pytest.approx(4.30, abs=0.01)


def test_knapsack_domain():
    r = optimize_ratio(BoundSpec("knapsack"))
    assert 0 <= r.b_star <= 0.5


def test_b_star_precision():
    # derivative of the matroid objective vanishes at b*
    spec = BoundSpec("matroid")
    b = optimize_ratio(spec).b_star
    h = 1e-5
    assert abs(spec.objective(b + h) - spec.objective(b - h)) / (2 * h) < 1e-6


def test_c_in_unit_interval():
    for kind in ("matroid", "matching", "knapsack"):
        spec = BoundSpec(kind)
        lo, hi = spec.domain
        for i in range(101):
            b = lo + (hi - lo) * i / 100
            assert 0 <= spec.c(b) <= 1
    spec = BoundSpec("uniform", k=9)
    assert all(0 <= spec.c(i / 100) <= 1 for i in range(101))


def test_general_is_quarter():
    for kind in ("matroid", "matching", "knapsack", "uniform-limit"):
        mono = optimize_ratio(BoundSpec(kind, True))
        gen = optimize_ratio(BoundSpec(kind, False))
        assert gen.ratio == pytest.approx(mono.ratio / 4, abs=1e-9)


def test_table_shape():
    rows = table1()
    assert len(rows) == 9
    assert rows[-1].result is None and "formula-level" in rows[-1].note
    assert len(table1(k=5)) == 11


def test_finite_k_approaches_limit():
    ratios = [optimize_ratio(BoundSpec("uniform", k=k)).ratio for k in (10, 100, 10_000, 10**8)]
    assert all(a <= b + 1e-12 for a, b in zip(ratios, ratios[1:]))
    # with b optimized the limit is max_b e^{-b}(1 - e^{-b}) = 1/4, above the b = 1 value
    assert ratios[-1] == pytest.approx(0.25, abs=1e-3)
    assert ratios[-1] > optimize_ratio(BoundSpec("uniform-limit")).ratio


def test_bound_spec_for():
    assert bound_spec_for(Matching([(0, 1)]), True).kind == "matching"
    assert bound_spec_for(Knapsack([1], 1), True).kind == "knapsack"
    assert bound_spec_for(GraphicMatroid([(0, 1)]), False).kind == "matroid"
    assert bound_spec_for(UniformMatroid(4, 2), True).kind == "matroid"
    assert bound_spec_for(UniformMatroid(400, 200), True).kind == "uniform"


def test_invalid():
    with pytest.raises(ValueError):
        BoundSpec("polymatroid")
    with pytest.raises(ValueError):
        BoundSpec("uniform")
