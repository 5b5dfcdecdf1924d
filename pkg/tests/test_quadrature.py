import math

import pytest
from scipy import integrate as sint

from twoweight.errors import BudgetExceeded
from twoweight.quadrature import QuadratureBudget, adaptive_quad, graded_points


@pytest.mark.parametrize("g,a,b", [
    (math.sin, 0.0, math.pi),
    (lambda x: math.exp(-x * x), -3.0, 2.0),
    (lambda x: abs(x - 0.3) ** 0.5, 0.0, 1.0),
])
def test_against_quadpack(g, a, b):
    ref = sint.quad(g, a, b, points=[0.3] if a < 0.3 < b else None, epsabs=1e-14)[0]
    val, err = adaptive_quad(lambda x: [g(t) for t in x] if hasattr(x, "__len__") else g(x), a, b,
                             breakpoints=[0.3])
    assert val == pytest.approx(ref, abs=1e-11)
    assert err < 1e-9


def test_infinite_range():
    val, _ = adaptive_quad(lambda x: 1 / (1 + x * x), 0.0, math.inf)
    assert val == pytest.approx(math.pi / 2, rel=1e-11)


def test_empty_range():
    assert adaptive_quad(lambda x: x, 1.0, 1.0) == (0.0, 0.0)


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        adaptive_quad(lambda x: abs(x) ** -0.99, -1.0, 1.0, QuadratureBudget(1e-14, 5))


def test_graded_points_cluster():
    pts = graded_points(0.0, 1.0, 0.5, 1e-6)
    near = [p for p in pts if abs(p - 0.5) < 1e-3]
    assert len(near) >= 5
    assert all(0.0 < p < 1.0 for p in pts)
