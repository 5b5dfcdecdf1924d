import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from twoweight.errors import DivergentTail
from twoweight.measure import (DensityPiece, FunctionPiece, Interval, Weight, complement,
                               first_moment, integrate, mass, restrict)

atoms_st = st.lists(st.tuples(st.floats(-5, 5, allow_nan=False), st.floats(0.01, 3)),
                    min_size=1, max_size=12, unique_by=lambda t: t[0])


def test_interval_rejects_empty():
    with pytest.raises(ValueError):
        Interval(1, 1)


def test_interval_children_exact():
    a, b = Interval(Fraction(0), Fraction(1)).children()
    assert a.right == b.left == Fraction(1, 2)


def test_polynomial_mass_matches_quad():
    w = Weight(pieces=[DensityPiece(Interval(0, 2), (1.0, 0.5, 0.0, 0.25))])
    for lo, hi in [(0, 2), (0.3, 1.7), (-1, 0.5), (1.9, 5)]:
        ref = sint.quad(lambda x: 1 + 0.5 * x + 0.25 * x ** 3, max(lo, 0), min(hi, 2))[0]
        assert mass(w, Interval(lo, hi)) == pytest.approx(ref, rel=1e-13, abs=1e-15)


def test_function_piece_mass():
    w = Weight(pieces=[FunctionPiece(Interval(0, Fraction(1, 3)), "x_over_log_squared")])
    # scipy's quad loses ~1e-9 near the log singularity; mpmath is the oracle here
    mp.mp.dps = 30
    ref = float(mp.quad(lambda x: x / mp.log(x) ** 2, [0, mp.mpf(1) / 1000, mp.mpf(1) / 3]))
    assert mass(w, Interval(0, 1)) == pytest.approx(ref, rel=1e-10)


def test_unbounded_constant_piece():
    w = Weight(pieces=[DensityPiece(Interval(1, math.inf), (2.0,))])
    assert mass(w, Interval(0, 4)) == pytest.approx(6.0)
    with pytest.raises(DivergentTail):
        DensityPiece(Interval(0, math.inf), (1.0, 1.0))


def test_negative_density_rejected():
    with pytest.raises(ValueError):
        DensityPiece(Interval(0, 1), (-1.0, 3.0))


def test_atom_endpoint_conventions():
    w = Weight.from_atoms([0.0, 1.0], [1.0, 2.0])
    I = Interval(0, 1)
    assert mass(w, I) == 3.0
    assert mass(w, I, closed_left=False) == 2.0
    assert mass(w, I, closed_right=False) == 1.0


@given(atoms_st)
def test_serialization_roundtrip(atoms):
    w = Weight(atoms=atoms, pieces=[DensityPiece(Interval(Fraction(1, 3), 2), (0.5, 1.0))])
    v = Weight.loads(w.dumps())
    assert v == w
    assert mass(v, Interval(-6, 6)) == pytest.approx(mass(w, Interval(-6, 6)))


@given(atoms_st, st.floats(-4, 4), st.floats(0.1, 4))
def test_mass_additive(atoms, a, L):
    w = Weight(atoms=atoms, pieces=[DensityPiece(Interval(-1, 1), (1.0, 0.0, 1.0))])
    m = a + L / 3
    whole = mass(w, Interval(a, a + L))
    parts = mass(w, Interval(a, m), closed_right=False) + mass(w, Interval(m, a + L))
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-14)


@given(atoms_st)
def test_integrate_linear_against_atoms(atoms):
    w = Weight(atoms=atoms)
    ref = sum(x * m for x, m in atoms)
    assert integrate(w, lambda x: x, Interval(-6, 6)) == pytest.approx(ref, abs=1e-12)


def test_first_moment_variance():
    w = Weight.lebesgue(0, 1)
    m, var = first_moment(w, Interval(0, 1))[:2]
    assert var == pytest.approx(1 / 12, rel=1e-12)


def test_restrict_and_complement():
    w = Weight(atoms=[(0.5, 1.0), (2.0, 1.0)], pieces=[DensityPiece(Interval(0, 3), (1.0,))])
    r = restrict(w, [Interval(0, 1)])
    assert mass(r, Interval(-10, 10)) == pytest.approx(2.0)
    pieces = complement(Interval(0, 3), Interval(1, 2))
    assert sum(float(p.length) for p in pieces) == pytest.approx(2.0)
