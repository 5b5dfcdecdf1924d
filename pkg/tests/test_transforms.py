import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate as sint

from twoweight.errors import AtomOnCut, PreconditionViolated
from twoweight.measure import DensityPiece, Interval, Weight
from twoweight.transforms import (TruncationSpec, UpperHalfPlaneMeasure, averaging_op,
                                  dual_poisson, extension_many, kernel_gradient_check,
                                  poisson_extension, poisson_integral, poisson_many,
                                  smooth_kernel, truncated_hilbert)

spec_st = st.builds(lambda a, r: TruncationSpec(a, a * r, "smooth"),
                    st.floats(1e-3, 1.0), st.floats(2.0, 1e3))


def test_spec_validation():
    with pytest.raises(ValueError):
        TruncationSpec(1.0, 0.5)
    with pytest.raises(ValueError):
        TruncationSpec(0.1, 1.0, "fuzzy")


@given(spec_st, st.floats(-5, 5))
def test_smooth_kernel_odd_and_dominated(spec, y):
    k = smooth_kernel(y, spec)
    assert smooth_kernel(-y, spec) == -k
    if y != 0:
        assert abs(k) <= 1 / abs(y) * (1 + 1e-12)


@given(spec_st)
def test_smooth_kernel_continuous_at_cuts(spec):
    for c in (spec.alpha, spec.beta, 2 * spec.beta):
        lo, hi = smooth_kernel(c * (1 - 1e-12), spec), smooth_kernel(c * (1 + 1e-12), spec)
        assert lo == pytest.approx(hi, rel=1e-9, abs=1e-11 / c)


@pytest.mark.parametrize("x", [0.2, 0.5, 0.77])
def test_hard_hilbert_lebesgue_closed_form(x):
    w = Weight.lebesgue(0, 1)
    val = truncated_hilbert(w, None, x, TruncationSpec(1e-3, 10.0))
    assert val == pytest.approx(math.log((1 - x) / x), abs=1e-12)


def test_hilbert_outside_support():
    w = Weight.lebesgue(0, 1)
    assert truncated_hilbert(w, None, 2.0, TruncationSpec(1e-3, 10.0)) == pytest.approx(-math.log(2))


def test_smooth_hilbert_against_quad():
    w = Weight(pieces=[DensityPiece(Interval(0, 1), (1.0, 2.0))])
    spec = TruncationSpec(0.05, 0.4, "smooth")
    x = 0.31
    ref = sum(sint.quad(lambda y: (1 + 2 * y) * smooth_kernel(y - x, spec), a, b, epsabs=1e-14)[0]
              for a, b in [(0, x - 0.05), (x - 0.05, x), (x, x + 0.05), (x + 0.05, 0.71), (0.71, 1)])
    assert truncated_hilbert(w, None, x, spec) == pytest.approx(ref, abs=1e-12)


def test_callable_density_matches_polynomial_form():
    w = Weight(pieces=[DensityPiece(Interval(0, 1), (1.0,))])
    spec = TruncationSpec(0.01, 2.0, "smooth")
    a = truncated_hilbert(w, (0.0, 1.0), 0.4, spec)
    b = truncated_hilbert(w, lambda y: y, 0.4, spec)
    assert a == pytest.approx(b, abs=1e-11)


def test_atom_on_hard_cut():
    w = Weight.from_atoms([1.0], [1.0])
    with pytest.raises(AtomOnCut):
        truncated_hilbert(w, None, 0.5, TruncationSpec(0.5, 4.0))


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0.1, 2)), min_size=1, max_size=8,
                unique_by=lambda t: t[0]), st.floats(-2, 2), st.floats(0.01, 3))
def test_poisson_atoms_direct(atoms, a, L):
    w = Weight(atoms=atoms)
    I = Interval(a, a + L)
    ref = sum(m * L / (L + max(a - x, x - a - L, 0.0)) ** 2 for x, m in atoms)
    assert poisson_integral(w, I) == pytest.approx(ref, rel=1e-12)
    assert poisson_many(w, [a], [a + L])[0] == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("I", [Interval(2, 3), Interval(0.25, 0.5), Interval(-1, 0.1)])
def test_poisson_density_against_quad(I):
    w = Weight(pieces=[DensityPiece(Interval(0, 1), (1.0, 0.0, 3.0))])
    L, a, b = float(I.length), float(I.left), float(I.right)
    g = lambda y: (1 + 3 * y * y) * L / (L + max(a - y, y - b, 0.0)) ** 2
    ref = sint.quad(g, 0, 1, points=[p for p in (a, b) if 0 < p < 1], epsabs=1e-14)[0]
    assert poisson_integral(w, I) == pytest.approx(ref, rel=1e-12)


def test_poisson_of_full_line_lebesgue_is_three():
    w = Weight(pieces=[DensityPiece(Interval(-math.inf, 0), (1.0,)),
                       DensityPiece(Interval(0, math.inf), (1.0,))])
    assert poisson_integral(w, Interval(0, 1)) == pytest.approx(3.0, rel=1e-12)


def test_extension_matches_pointwise():
    w = Weight(atoms=[(0.0, 1.0), (1.0, 0.5)], pieces=[DensityPiece(Interval(-1, 2), (1.0,))])
    xs, ts = np.array([0.3, 5.0]), np.array([0.1, 2.0])
    many = extension_many(w, xs, ts)
    for i in range(2):
        assert many[i] == pytest.approx(poisson_extension(w, None, xs[i], ts[i]), rel=1e-12)


def test_dual_poisson_formula():
    mu = UpperHalfPlaneMeasure(((0.0, 1.0, 2.0), (3.0, 0.5, 1.0)))
    x = 1.0
    ref = 2.0 * 1.0 / (1 + 1) ** 2 + 1.0 * 0.25 / (0.5 + 2) ** 2
    assert dual_poisson(mu, x) == pytest.approx(ref)
    assert dual_poisson(mu, x, box=Interval(-1, 1)) == pytest.approx(0.5)


def test_averaging_op_lebesgue():
    w = Weight.lebesgue(-10, 10)
    assert averaging_op(w, None, 0.0, 0.5) == pytest.approx(1.0)


@given(spec_st, st.floats(-1, 1), st.floats(0.01, 0.99), st.floats(-0.49, 0.49))
def test_gradient_identity_in_band(spec, x, frac, s):
    u = 2 * spec.alpha + frac * ((2 / 3) * spec.beta - 2 * spec.alpha)
    assume(u > 2 * spec.alpha)
    y = x + u
    xp = x + s * u
    assume(xp != x)
    g = kernel_gradient_check(x, xp, y, spec)
    assert g.in_exact_band
    assert g.C == pytest.approx(1.0, abs=1e-12)


@given(spec_st, st.floats(0.01, 0.99), st.floats(0.01, 0.49))
def test_gradient_constant_in_unit_range_inside_beta(spec, frac, s):
    # when both distances stay below beta the constant lies in (0, 1]
    u = frac * spec.beta / 1.5
    xp = s * u
    g = kernel_gradient_check(0.0, xp, u, spec)
    assert 0 < g.C <= 1 + 1e-12


def test_gradient_constant_exceeds_one_near_beta():
    spec = TruncationSpec(0.1, 10.0, "smooth")
    g = kernel_gradient_check(0.0, 3.0, 15.0, spec)
    assert g.C > 1


def test_gradient_preconditions():
    spec = TruncationSpec(0.1, 10.0, "smooth")
    with pytest.raises(PreconditionViolated):
        kernel_gradient_check(0.0, 0.0, 1.0, spec)
    with pytest.raises(PreconditionViolated):
        kernel_gradient_check(0.0, 0.6, 1.0, spec)
    with pytest.raises(PreconditionViolated):
        kernel_gradient_check(0.0, 0.1, 1.0, TruncationSpec(0.1, 10.0))
