import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twoweight.acceptance import _haar_checks
from twoweight.errors import ZeroMass
from twoweight.haar import HaarExpansion, energy_squared, haar_function, haar_x_coefficient
from twoweight.measure import DensityPiece, Interval, Weight, first_moment, mass

# atoms on dyadic endpoints are rejected by design, so keep them off the tree
off_grid = st.floats(0.001, 0.999).filter(lambda x: (x * 2 ** 12) % 1 != 0)
weights_st = st.lists(st.tuples(off_grid, st.floats(0.05, 2.0)),
                      min_size=1, max_size=25, unique_by=lambda t: t[0]).map(
    lambda a: Weight(atoms=a))
coef_st = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


def test_haar_function_formula():
    w = Weight.from_atoms([0.1, 0.3, 0.8], [1.0, 2.0, 0.5])
    h = haar_function(w, Interval(0, 1))
    mm, mp = 3.0, 0.5
    assert h.left_value == pytest.approx(-math.sqrt(mp / (mm * (mm + mp))))
    assert h.right_value == pytest.approx(math.sqrt(mm / (mp * (mm + mp))))


def test_degenerate_haar():
    w = Weight.from_atoms([0.1, 0.3], [1.0, 2.0])
    assert haar_function(w, Interval(0, 1)).degenerate


@given(weights_st, coef_st)
def test_identities_on_random_atomic_weights(w, c):
    f = lambda x: c[0] + c[1] * np.asarray(x) + np.sin(c[2] * np.asarray(x))
    checks = _haar_checks(w, f, 6)
    assert max(checks.values()) <= 1e-10, checks


@given(weights_st)
def test_x_coefficient_nonnegative(w):
    if mass(w, Interval(0, 0.5), True, False) > 0 and mass(w, Interval(0.5, 1)) > 0:
        assert haar_x_coefficient(w, Interval(0, 1)) > 0


@given(weights_st, coef_st)
def test_reconstruction_exact_when_each_leaf_has_one_atom(w, c):
    f = lambda x: c[0] + c[1] * np.asarray(x) ** 2
    ex = HaarExpansion(w, f, Interval(0, 1), 10)
    leaves = ex.leaf_of(w.atom_x)
    if len(set(leaves.tolist())) == len(leaves):
        assert np.allclose(ex.reconstruct(w.atom_x), f(w.atom_x), atol=1e-10)


def test_lebesgue_energy_resolved_to_depth():
    # the leaves at depth d keep variance 4^-d / 12 of the full 1/12
    w = Weight.lebesgue(0, 1)
    for d in (1, 3, 6):
        assert energy_squared(w, Interval(0, 1), d) == pytest.approx((1 - 4.0 ** -d) / 12, rel=1e-12)
    assert energy_squared(w, Interval(0, 1), None) == pytest.approx(1 / 12, rel=1e-12)


@given(weights_st)
def test_energy_limit_is_variance(w):
    I = Interval(0, 1)
    x, m = w.atom_x, w.atom_m
    mean = np.sum(x * m) / np.sum(m)
    ref = np.sum(m * (x - mean) ** 2)
    assert energy_squared(w, I, None) == pytest.approx(ref, rel=1e-9, abs=1e-14)


def test_energy_of_single_atom_is_zero():
    assert energy_squared(Weight.from_atoms([0.3], [2.0]), Interval(0, 1)) == 0.0
    with pytest.raises(ZeroMass):
        energy_squared(Weight.from_atoms([3.0], [1.0]), Interval(0, 1))


def test_polynomial_density_variance():
    w = Weight(pieces=[DensityPiece(Interval(0, 1), (0.0, 2.0))])
    m, var = first_moment(w, Interval(0, 1))[:2]
    # density 2x: mean 2/3, second moment 1/2
    assert var == pytest.approx(0.5 - 4 / 9, rel=1e-12)
    assert energy_squared(w, Interval(0, 1), None) == pytest.approx(1 / 18, rel=1e-12)
