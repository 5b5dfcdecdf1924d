from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from twoweight.errors import MixedGrids, UndeterminedAtBoundary, WindowTooLarge
from twoweight.grid import (DyadicInterval, GoodnessParams, GridSpec, admissible,
                            bad_indicator_from_bits, build_grid, classify_good,
                            endpoint_levels, estimate_bad_probability, parent_in_collection)
from twoweight.measure import Interval, Weight

bits_st = st.dictionaries(st.integers(-6, 3), st.integers(0, 1))


def spec_from(bits):
    return GridSpec.from_bits(bits, -6, 4, window=Interval(Fraction(-2), Fraction(2)))


@given(bits_st, st.integers(-6, 3), st.integers(-40, 40))
def test_parent_contains_child(bits, level, k):
    I = DyadicInterval(level, k, spec_from(bits))
    P = I.parent()
    assert P.contains(I)
    assert P.length == 2 * I.length
    assert I in P.children()


@given(bits_st, st.integers(-5, 4), st.integers(-20, 20))
def test_children_partition(bits, level, k):
    I = DyadicInterval(level, k, spec_from(bits))
    a, b = I.children()
    assert a.left == I.left and a.right == b.left and b.right == I.right


@given(bits_st)
def test_levels_cover_window(bits):
    g = build_grid(spec_from(bits))
    for lev, ints in g.levels.items():
        assert ints[0].left <= -2 and ints[-1].right >= 2
        assert all(u.right == v.left for u, v in zip(ints, ints[1:]))


def test_window_cap():
    with pytest.raises(WindowTooLarge):
        build_grid(GridSpec(min_level=-12, max_level=0), max_intervals=100)


def test_triadic_unshifted():
    g = build_grid(GridSpec.triadic(2))
    assert [(I.left, I.right) for I in g.levels[-1]] == [
        (Fraction(0), Fraction(1, 3)), (Fraction(1, 3), Fraction(2, 3)), (Fraction(2, 3), Fraction(1))]
    with pytest.raises(ValueError):
        GridSpec(omega=((0, 1),), base=3)


@given(st.lists(st.integers(0, 1), min_size=12, max_size=12), st.integers(1, 6),
       st.sampled_from([0.1, 0.25, 0.5]))
def test_goodness_agrees_with_bit_classifier(bits, r, eps):
    spec = GridSpec.from_bits(dict(enumerate(bits)), 0, 12)
    I = DyadicInterval(0, 0, spec)
    p = GoodnessParams(eps, r)
    assert classify_good(I, p) == (not bad_indicator_from_bits(bits, p))


def test_goodness_needs_ancestors():
    spec = GridSpec(min_level=-4, max_level=0)
    with pytest.raises(UndeterminedAtBoundary):
        classify_good(DyadicInterval(-1, 0, spec), GoodnessParams(0.25, 4))


def test_bad_probability_decreases():
    p = [estimate_bad_probability(GoodnessParams(0.5, r), 2000, 1).estimate for r in (4, 6, 8)]
    assert p[0] > p[1] > p[2]
    assert all(q <= 4 / 0.5 * 2 ** (-0.5 * r) for q, r in zip(p, (4, 6, 8)))


def test_bad_probability_reproducible():
    a = estimate_bad_probability(GoodnessParams(0.25, 4), 500, 9)
    b = estimate_bad_probability(GoodnessParams(0.25, 4), 500, 9)
    assert a == b


def test_endpoint_levels_and_admissible():
    spec = GridSpec(min_level=-3, max_level=0)
    assert endpoint_levels(Fraction(1, 4), spec) == [-3, -2]
    assert not admissible(spec, Weight.from_atoms([0.25], [1.0]))
    assert admissible(spec, Weight.from_atoms([0.3], [1.0]))


def test_parent_in_collection():
    spec = GridSpec(min_level=-4, max_level=0)
    I = DyadicInterval(-4, 3, spec)
    F = [DyadicInterval(0, 0, spec), DyadicInterval(-2, 0, spec), I]
    assert parent_in_collection(I, F, 0) == I
    assert parent_in_collection(I, F, 1) == DyadicInterval(-2, 0, spec)
    assert parent_in_collection(I, F, 2) == DyadicInterval(0, 0, spec)
    assert parent_in_collection(I, F, 3) is None
    other = GridSpec.from_bits({-1: 1}, -4, 0)
    with pytest.raises(MixedGrids):
        parent_in_collection(I, [DyadicInterval(0, 0, other)], 1)
