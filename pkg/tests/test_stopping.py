import numpy as np
import pytest

from twoweight.acceptance import stopping_instance
from twoweight.errors import NotAdmissible
from twoweight.haar import HaarExpansion
from twoweight.measure import Interval, Weight, mass
from twoweight.stopping import (PairCollection, build_stopping_data, cz_properties,
                                dyadic_energy_constant, energy_stopping_children,
                                evaluate_stopping_form, quasi_orthogonality_check,
                                stopping_form_size)
from twoweight.transforms import TruncationSpec, hard_kernel

ROOT = Interval(0.0, 1.0)


@pytest.mark.parametrize("seed", range(8))
def test_cz_properties(seed):
    sd, ex = stopping_instance(np.random.default_rng(seed), depth=6)
    props = cz_properties(sd, ex)
    assert props["root_in_tree"] and props["averages_controlled"] and props["alpha_monotone"]
    assert props["carleson_le_2"]
    lhs, rhs = quasi_orthogonality_check(sd, ex)
    assert lhs <= 64 * rhs


def test_average_jump_triggers_stop():
    sigma = Weight.from_atoms([0.1, 0.9], [1.0, 0.001])
    f = lambda x: np.where(np.asarray(x) > 0.5, 1e5, 1.0)
    ex = HaarExpansion(sigma, f, ROOT, 3)
    sd = build_stopping_data(ex, sigma, sigma, 1.0, energy=False)
    assert sd.reason[(0, 0)] == "root"
    assert "average" in sd.reason.values()
    assert sd.carleson_constant() <= 2


def test_energy_stopping_empty_for_large_H():
    rng = np.random.default_rng(0)
    sigma = Weight.from_atoms(np.sort(rng.uniform(0, 1, 10)), np.ones(10))
    w = Weight.from_atoms(np.sort(rng.uniform(0, 1, 10)), np.ones(10))
    # only sigma-null intervals can qualify when H is huge; they cost nothing in the Carleson sum
    es = energy_stopping_children(ROOT, sigma, w, H=1e6)
    assert es.sigma_fraction == 0.0
    assert all(mass(sigma, I) == 0 for I in es.intervals)
    E = dyadic_energy_constant(sigma, w, ROOT, 6)
    assert E > 0


def _brute_form(pairs, sigma, w, fvals, gvals, spec):
    """Direct evaluation from martingale differences of atom values."""
    sx, sm = sigma.atom_x, sigma.atom_m
    wx, wm = w.atom_x, w.atom_m

    def avg(x, m, v, I):
        sel = (x >= float(I.left)) & (x < float(I.right))
        return np.sum(m[sel] * v[sel]) / np.sum(m[sel]) if np.any(sel) else 0.0

    total = 0.0
    for Q1, Q2 in pairs:
        t = Q1.children()[0] if Q2.right <= Q1.children()[0].right else Q1.children()[1]
        e_f = avg(sx, sm, fvals, t) - avg(sx, sm, fvals, Q1)
        kids = Q2.children()
        keep = ~((sx >= float(t.left)) & (sx < float(t.right)))
        for y, m, g in zip(wx, wm, gvals):
            if not float(Q2.left) <= y < float(Q2.right):
                continue
            c = kids[0] if y < float(kids[0].right) else kids[1]
            dg = avg(wx, wm, gvals, c) - avg(wx, wm, gvals, Q2)
            total += e_f * m * dg * np.sum(sm[keep] * hard_kernel(sx[keep] - y, spec))
    return total


def test_stopping_form_matches_brute_force():
    rng = np.random.default_rng(4)
    sigma = Weight.from_atoms(np.sort(rng.uniform(0, 1, 12)), rng.uniform(0.5, 1, 12))
    w = Weight.from_atoms(np.sort(rng.uniform(0, 1, 12)), rng.uniform(0.5, 1, 12))
    fv, gv = rng.normal(size=12), rng.normal(size=12)
    f = lambda x: fv[np.searchsorted(sigma.atom_x, np.asarray(x))]
    g = lambda x: gv[np.searchsorted(w.atom_x, np.asarray(x))]
    fe, ge = HaarExpansion(sigma, f, ROOT, 6), HaarExpansion(w, g, ROOT, 6)
    pairs = [(Interval(0.0, 1.0), Interval(0.0, 0.25)), (Interval(0.0, 1.0), Interval(0.75, 1.0)),
             (Interval(0.0, 0.5), Interval(0.25, 0.375))]
    Q = PairCollection(pairs, ROOT)
    spec = TruncationSpec(1e-9, 10.0)
    got = evaluate_stopping_form(Q, fe, ge, spec)
    assert got == pytest.approx(_brute_form(pairs, sigma, w, fv, gv, spec), rel=1e-10, abs=1e-12)
    assert stopping_form_size(Q, sigma, w) >= 0


def test_pair_collection_admissibility():
    Q = PairCollection([(Interval(0.0, 0.5), Interval(0.0, 0.5))], ROOT)
    with pytest.raises(NotAdmissible):
        stopping_form_size(Q, Weight.lebesgue(0, 1), Weight.lebesgue(0, 1))
