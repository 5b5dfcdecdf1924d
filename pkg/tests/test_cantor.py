from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from twoweight import cantor
from twoweight.errors import DepthTooLarge, PointOnSupport
from twoweight.measure import Interval, mass


def _mp_hilbert(n, x):
    mp.mp.dps = 40
    x = mp.mpf(x)
    rho = mp.mpf(3) ** n / mp.mpf(2) ** n
    total = mp.mpf(0)
    for K in cantor.CantorLevel.build(n).components:
        a = mp.mpf(K.left.numerator) / K.left.denominator
        b = mp.mpf(K.right.numerator) / K.right.denominator
        total += rho * mp.log(abs((b - x) / (a - x)))
    return float(total)


@pytest.mark.parametrize("n,x", [(1, 0.5), (1, 0.45), (3, 0.40), (5, 0.1234), (5, 1.7), (6, -0.3)])
def test_hilbert_against_mpmath(n, x):
    val, err = cantor.hilbert_of_cantor(n, x)
    ref = _mp_hilbert(n, x)
    assert abs(val - ref) <= max(err, 1e-15)
    assert err < 1e-11


def test_tail_evaluation_within_bound():
    for x in (0.5, 1 / 6, 5 / 6, 1 / 18):
        exact = _mp_hilbert(8, x)
        val, err = cantor.hilbert_of_cantor(8, x, tail_depth=4)
        assert abs(val - exact) <= err


@given(st.integers(1, 6), st.data())
def test_hilbert_odd_about_one_half(n, data):
    lev, G = data.draw(st.sampled_from(cantor.CantorLevel.build(n).gaps))
    t = data.draw(st.floats(0.01, 0.99))
    x = float(G.left) + t * float(G.length)
    a = cantor.hilbert_of_cantor(n, x)[0]
    b = cantor.hilbert_of_cantor(n, 1 - x)[0]
    assert a == pytest.approx(-b, abs=1e-9 * max(1.0, abs(a)))


def test_support_and_depth_errors():
    with pytest.raises(PointOnSupport):
        cantor.hilbert_of_cantor(2, 0.05)
    with pytest.raises(DepthTooLarge):
        cantor.cantor_weight(cantor.MAX_DEPTH + 1)


@given(st.integers(0, 7), st.data())
def test_component_masses(n, data):
    w = cantor.cantor_weight(n)
    comps, _ = __import__("twoweight.constants", fromlist=["x"]).cantor_intervals(n)
    m = data.draw(st.integers(0, n))
    K = data.draw(st.sampled_from(comps[m]))
    assert mass(w, K) == pytest.approx(2.0 ** -m, rel=1e-12)


def test_central_zero_is_one_half():
    z, _ = cantor.locate_points(6, Interval(Fraction(1, 3), Fraction(2, 3)))
    assert z == pytest.approx(0.5, abs=1e-10)


def test_primed_point_depth_one():
    # independent root of 1.5 [ln|(1/3 - x)/x| + ln|(1 - x)/(2/3 - x)|] = 3^(1 - ln2/ln3)
    mp.mp.dps = 40
    c = mp.mpf(3) ** (1 - mp.log(2) / mp.log(3))
    f = lambda x: 1.5 * (mp.log(abs((mp.mpf(1) / 3 - x) / x)) + mp.log(abs((1 - x) / (mp.mpf(2) / 3 - x)))) - c
    ref = float(mp.findroot(f, 0.6))
    _, zp = cantor.locate_points(1, Interval(Fraction(1, 3), Fraction(2, 3)))
    assert zp == pytest.approx(ref, abs=1e-12)
    assert zp == pytest.approx(0.6013023267481159, abs=1e-12)


def test_roots_interior_and_close():
    for n in range(1, 7):
        for a in cantor.locate_all(n):
            assert a.gap.left < a.z < a.gap.right
            assert a.gap.left < a.z_prime < a.gap.right
            assert a.closeness < 0.5
            assert abs(a.residual_z) < 1e-9 * cantor.target_value(a.gap)


def test_masses_formula():
    for a in cantor.locate_all(4):
        assert a.s == 2 * float(a.gap.length) ** (2 - cantor.DIM)


def test_gap_simple_ratio_is_four():
    # w(3G) = 2^(1-k) and s_G = 2 |G|^(2 - d) give w(3G) s_G / |G|^2 = 4 on level-k gaps
    _, _, atoms = cantor.build_sigma_pair(6)
    assert np.allclose(cantor.gap_simple_ratios(6, atoms), 4.0, rtol=1e-12)


def test_divergence_one_per_level():
    _, _, atoms = cantor.build_sigma_pair(6)
    table = cantor.divergence_table(6, atoms, prime=True)
    assert np.allclose(table, np.arange(1, 7), rtol=1e-10)
    zero = cantor.divergence_table(6, atoms, prime=False)
    assert max(zero) < 1e-12


def test_pivotal_grows_and_energy_vanishes():
    sigma, _, _ = cantor.build_sigma_pair(6)
    w = cantor.cantor_weight(6)
    piv, en = cantor.pivotal_partial_sums(6, sigma, w)
    inc = np.diff(piv)
    assert np.all(inc[1:] >= 0.2)
    assert all(e == 0.0 for e in en)


def test_symmetry_and_derivative():
    _, _, atoms = cantor.build_sigma_pair(5)
    assert cantor.symmetry_defect(atoms) < 1e-12
    assert cantor.derivative_check(5, atoms) >= 0.25


def test_example_report_depth_four():
    rep = cantor.example_report(4)
    assert rep["gap_simple_ratio"]["min"] == pytest.approx(4.0)
    assert rep["mass_formula_defect"] == 0.0
    assert rep["testing_forward"] > 0 and rep["testing_dual"] > 0
