"""Shifted dyadic grids, triadic grids, goodness, and tree navigation.

Level n intervals have length base**n. For a dyadic grid with bits omega the
level-n shift is s_n = sum_{min_level <= j < n} 2^j omega_j, so an interval is
[s_n + k 2^n, s_n + (k+1) 2^n]. Triadic grids are never shifted.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np

from .errors import MixedGrids, UndeterminedAtBoundary, WindowTooLarge
from .measure import Interval

MAX_INTERVALS = 2_000_000


@dataclass(frozen=True)
class GridSpec:
    omega: tuple = ()          # sorted ((level, bit), ...); missing levels read as 0
    min_level: int = -8
    max_level: int = 0
    base: int = 2
    window: Interval = Interval(Fraction(0), Fraction(1))

    def __post_init__(self):
        if self.min_level > self.max_level:
            raise ValueError("min_level > max_level")
        if self.base not in (2, 3):
            raise ValueError("base must be 2 or 3")
        if self.base == 3 and any(b for _, b in self.omega):
            raise ValueError("triadic grids are unshifted")
        om = tuple(sorted((int(k), int(b)) for k, b in dict(self.omega).items()))
        if any(b not in (0, 1) for _, b in om):
            raise ValueError("omega bits must be 0 or 1")
        object.__setattr__(self, "omega", om)

    @classmethod
    def from_bits(cls, bits: Dict[int, int], min_level, max_level, window=None):
        kw = {} if window is None else {"window": window}
        return cls(omega=tuple(bits.items()), min_level=min_level, max_level=max_level, **kw)

    @classmethod
    def triadic(cls, depth, window=None):
        kw = {} if window is None else {"window": window}
        return cls(min_level=-depth, max_level=0, base=3, **kw)

    def bit(self, k):
        return dict(self.omega).get(k, 0)

    def length(self, level):
        return Fraction(self.base) ** level

    def shift(self, level):
        return _shift(self, level)


@lru_cache(maxsize=65536)
def _shift(spec, level):
    if spec.base == 3:
        return Fraction(0)
    bits = dict(spec.omega)
    return sum((Fraction(2) ** j * bits.get(j, 0) for j in range(spec.min_level, level)),
               Fraction(0))


@dataclass(frozen=True, order=True)
class DyadicInterval:
    level: int
    index: int
    grid: GridSpec = field(compare=False, repr=False)

    @property
    def left(self):
        return self.grid.shift(self.level) + self.index * self.grid.length(self.level)

    @property
    def right(self):
        return self.left + self.grid.length(self.level)

    @property
    def interval(self):
        return Interval(self.left, self.right)

    @property
    def length(self):
        return self.grid.length(self.level)

    def parent(self):
        if self.level >= self.grid.max_level:
            return None
        up = self.level + 1
        k = math.floor((self.left - self.grid.shift(up)) / self.grid.length(up))
        return DyadicInterval(up, k, self.grid)

    def children(self):
        if self.level <= self.grid.min_level:
            return ()
        down = self.level - 1
        k0 = (self.left - self.grid.shift(down)) / self.grid.length(down)
        assert k0.denominator == 1
        k0 = int(k0)
        return tuple(DyadicInterval(down, k0 + i, self.grid) for i in range(self.grid.base))

    def ancestor(self, level):
        J = self
        while J is not None and J.level < level:
            J = J.parent()
        return J

    def contains(self, other):
        return self.left <= other.left and other.right <= self.right

    def __hash__(self):
        return hash((self.level, self.index, self.grid))

    def __eq__(self, other):
        return (isinstance(other, DyadicInterval) and self.level == other.level
                and self.index == other.index and self.grid == other.grid)

    def __repr__(self):
        return f"D{self.level}[{self.left}, {self.right}]"


@dataclass(frozen=True)
class GoodnessParams:
    epsilon: float = 0.25
    r: int = 4

    def __post_init__(self):
        # the proofs use 0 < eps <= 1/4; wider values are allowed for statistics
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.r < 1:
            raise ValueError("r must be a positive integer")


class GridFamily:
    """All grid intervals meeting the window, level by level, with links."""

    def __init__(self, spec: GridSpec, max_intervals=MAX_INTERVALS):
        self.spec = spec
        self.levels: Dict[int, List[DyadicInterval]] = {}
        total = 0
        a, b = spec.window.left, spec.window.right
        for lev in range(spec.max_level, spec.min_level - 1, -1):
            L = spec.length(lev)
            s = spec.shift(lev)
            k0 = math.floor((a - s) / L)
            k1 = math.ceil((b - s) / L)
            total += k1 - k0
            if total > max_intervals:
                raise WindowTooLarge("grid exceeds interval cap", cap=max_intervals)
            self.levels[lev] = [DyadicInterval(lev, k, spec) for k in range(k0, k1)]

    def __iter__(self):
        for lev in sorted(self.levels, reverse=True):
            yield from self.levels[lev]

    def __len__(self):
        return sum(len(v) for v in self.levels.values())

    def containing(self, x, level):
        s = self.spec
        k = math.floor((Fraction(x) - s.shift(level)) / s.length(level))
        return DyadicInterval(level, k, s)


def build_grid(spec: GridSpec, max_intervals=MAX_INTERVALS) -> GridFamily:
    return GridFamily(spec, max_intervals)


def classify_good(I: DyadicInterval, params: GoodnessParams) -> bool:
    """(eps, r)-goodness relative to the ancestors present in the grid window."""
    g = I.grid
    first = I.level + params.r - 1
    if first > g.max_level:
        raise UndeterminedAtBoundary("no ancestor of the required size in the window",
                                     level=I.level, needed=first, max_level=g.max_level)
    eps = params.epsilon
    logb = math.log(g.base)
    J = I.ancestor(first)
    while J is not None:
        # min over the children of I of dist(child, dJ) equals dist(I, dJ)
        d = min(I.left - J.left, J.right - I.right)
        thresh = math.exp(logb * (eps * I.level + (1 - eps) * J.level))
        if float(d) < thresh:
            return False
        J = J.parent()
    return True


def bad_indicator_from_bits(bits, params: GoodnessParams):
    """Badness of the level-0 interval at index 0 given shift bits omega_0.. omega_{T-1}."""
    bits = np.asarray(bits, dtype=np.int64)
    T = len(bits)
    eps = params.epsilon
    s = 0
    for t in range(1, T + 1):
        s += int(bits[t - 1]) << (t - 1)
        if t < params.r - 1:
            continue
        size = 1 << t
        off = (-s) % size
        d = min(off, size - 1 - off)
        if d < 2.0 ** ((1 - eps) * t):
            return True
    return False


@dataclass(frozen=True)
class BadEstimate:
    estimate: float
    stderr: float
    trials: int
    top_level: int


def estimate_bad_probability(params: GoodnessParams, trials: int, seed: int, top_level=60):
    """Monte Carlo P(fixed-length interval is bad); stream per (seed, trial)."""
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if top_level > 62:
        raise ValueError("top_level limited to 62 for exact integer offsets")
    bad = 0
    for i in range(trials):
        bits = np.random.default_rng([seed, i]).integers(0, 2, size=top_level)
        bad += bad_indicator_from_bits(bits, params)
    p = bad / trials
    return BadEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / trials), trials, top_level)


def parent_in_collection(I: DyadicInterval, F, t: int) -> Optional[DyadicInterval]:
    """t-fold minimal enclosing member of F; t=0 allows I itself."""
    F = list(F)
    for J in F:
        if J.grid != I.grid:
            raise MixedGrids("collection spans several grids")
    cur = I
    for step in range(max(t, 1)):
        strict = t > 0
        best = None
        for J in F:
            if J.contains(cur) and (not strict or J != cur):
                if best is None or J.length < best.length:
                    best = J
        if best is None:
            return None
        cur = best
    return cur


def endpoint_levels(x, spec: GridSpec):
    """Levels at which x is a grid endpoint (exact)."""
    x = Fraction(x)
    out = []
    for lev in range(spec.min_level, spec.max_level + 1):
        q = (x - spec.shift(lev)) / spec.length(lev)
        if q.denominator == 1:
            out.append(lev)
    return out


def admissible(grid, w) -> bool:
    """No atom of w sits exactly on an endpoint of the grid."""
    spec = grid.spec if isinstance(grid, GridFamily) else grid
    return all(not endpoint_levels(x, spec) for x, _ in w.atoms)
