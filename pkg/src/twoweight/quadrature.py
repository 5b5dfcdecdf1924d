"""Adaptive Gauss-Legendre panel quadrature.

Each panel is evaluated with an n-point and a 2n-point rule; the difference is
the panel's error estimate. The worst panel is bisected until the summed
estimate drops below ``abs_tol``.
"""

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded, SingularEvaluation

_ORDER = 10


@lru_cache(maxsize=8)
def _rule(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True)
class QuadratureBudget:
    abs_tol: float = 1e-12
    max_subdivisions: int = 20000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")


DEFAULT_BUDGET = QuadratureBudget()


def _panel(g, a, b):
    xs, ws = _rule(_ORDER)
    xl, wl = _rule(2 * _ORDER)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = np.concatenate([mid + half * xs, mid + half * xl])
    vals = np.asarray(g(nodes), dtype=float)
    if vals.shape != nodes.shape:
        vals = np.array([float(g(t)) for t in nodes])
    if not np.all(np.isfinite(vals)):
        raise SingularEvaluation("integrand not finite on panel", a=a, b=b)
    coarse = half * np.dot(ws, vals[:_ORDER])
    fine = half * np.dot(wl, vals[_ORDER:])
    return fine, abs(fine - coarse)


def _finite_map(g, a, b):
    """Map an unbounded range onto a finite one."""
    if math.isfinite(a) and math.isfinite(b):
        return g, a, b
    if math.isfinite(a):
        def h(s):
            s = np.asarray(s, dtype=float)
            return g(a + s / (1 - s)) / (1 - s) ** 2
        return h, 0.0, 1.0
    if math.isfinite(b):
        def h(s):
            s = np.asarray(s, dtype=float)
            return g(b - s / (1 - s)) / (1 - s) ** 2
        return h, 0.0, 1.0

    def h(s):
        s = np.asarray(s, dtype=float)
        return g(s / (1 - s * s)) * (1 + s * s) / (1 - s * s) ** 2
    return h, -1.0, 1.0


def adaptive_quad(g, a, b, budget=DEFAULT_BUDGET, breakpoints=()):
    """Integrate g over [a, b]; returns (value, error_estimate).

    ``breakpoints`` seed the initial panels (kinks, graded refinement points).
    Unbounded ranges are mapped to finite ones before any breakpoints apply.
    """
    a, b = float(a), float(b)
    if not a < b:
        return 0.0, 0.0
    if not (math.isfinite(a) and math.isfinite(b)):
        g, a, b = _finite_map(g, a, b)
        breakpoints = ()
    cuts = sorted({float(p) for p in breakpoints if a < float(p) < b})
    edges = [a] + cuts + [b]
    heap = []
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _panel(g, lo, hi)
        total += v
        err += e
        heapq.heappush(heap, (-e, lo, hi, v))
    count = len(heap)
    while err > budget.abs_tol:
        if count >= budget.max_subdivisions:
            raise BudgetExceeded("quadrature budget exhausted", a=a, b=b, error=err,
                                 abs_tol=budget.abs_tol)
        negerr, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # panel cannot be split further in floating point
            heapq.heappush(heap, (0.0, lo, hi, v))
            err += negerr
            continue
        v1, e1 = _panel(g, lo, mid)
        v2, e2 = _panel(g, mid, hi)
        total += v1 + v2 - v
        err += e1 + e2 + negerr
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        count += 1
    return total, err


def graded_points(a, b, centre, scale, ratio=2.0):
    """Points centre +- scale*ratio**k inside (a, b); refines around a near-singular feature."""
    pts = []
    if scale <= 0 or not math.isfinite(scale):
        return pts
    for sign in (-1.0, 1.0):
        step = scale
        while True:
            p = centre + sign * step
            if (sign > 0 and p >= b) or (sign < 0 and p <= a):
                break
            pts.append(p)
            step *= ratio
    if a < centre < b:
        pts.append(centre)
    return pts
