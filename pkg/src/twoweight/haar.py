"""Weighted Haar functions, expansions, and the energy functional.

Intervals below a root I0 are addressed as (level, k): level l has 2**l
children of I0 of length |I0| 2**-l. All statistics (masses, integrals of f,
first moments) are accumulated on the leaves and summed upward, so atoms are
handled by exact sums and polynomial pieces in closed form.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Optional

import numpy as np

from .errors import NotAdmissible, ZeroMass
from .measure import Interval, Weight, _eval, first_moment, mass
from .quadrature import DEFAULT_BUDGET, adaptive_quad


@dataclass(frozen=True)
class HaarFunction:
    interval: Interval
    left_value: float
    right_value: float
    degenerate: bool = False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.interval.as_floats()
        c = float(self.interval.center)
        v = np.where(x < c, self.left_value, self.right_value)
        v = np.where((x < a) | (x > b), 0.0, v)
        return float(v) if v.ndim == 0 else v


def _node_interval(root, level, k):
    L = root.length / (2 ** level) if isinstance(root.length, float) else Fraction(root.length) / 2 ** level
    return Interval(root.left + k * L, root.left + (k + 1) * L)


def _edges(root, depth):
    n = 2 ** depth
    if isinstance(root.left, float) or isinstance(root.right, float):
        return [root.left + (root.right - root.left) * i / n for i in range(n + 1)]
    a, b = Fraction(root.left), Fraction(root.right)
    return [a + (b - a) * Fraction(i, n) for i in range(n + 1)]


def check_admissible_tree(w, root, depth):
    """Raise NotAdmissible if an atom sits on an endpoint of the dyadic tree below root."""
    if not w.atoms:
        return
    edges = _edges(root, depth)
    fe = np.array([float(e) for e in edges])
    ax = w.atom_x
    idx = np.searchsorted(fe, ax)
    for j, i in enumerate(idx):
        for cand in (i - 1, i):
            if 0 <= cand < len(edges) and fe[cand] == ax[j] and w.atoms[j][0] == edges[cand]:
                raise NotAdmissible("atom on a dyadic endpoint", atom=w.atoms[j][0])


class DyadicTreeStats:
    """Per-node mass and integrals over the dyadic subtree of ``root``.

    ``M[l][k]`` is w(I_{l,k}); ``F[l][k]`` is int_I f dw; ``X[l][k]`` is int_I x dw.
    """

    def __init__(self, w: Weight, root: Interval, depth: int, f: Optional[Callable] = None,
                 budget=DEFAULT_BUDGET, check=True):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if check:
            check_admissible_tree(w, root, depth)
        self.w, self.root, self.depth = w, root, depth
        edges = _edges(root, depth)
        fe = np.array([float(e) for e in edges])
        self.edges = fe
        n = 2 ** depth
        lm = np.zeros(n)
        lx = np.zeros(n)
        lf = np.zeros(n) if f is not None else None
        lf2 = np.zeros(n) if f is not None else None
        lo, hi = w.atom_slice(root)
        if hi > lo:
            ax, am = w.atom_x[lo:hi], w.atom_m[lo:hi]
            leaf = np.clip(np.searchsorted(fe, ax, side="right") - 1, 0, n - 1)
            np.add.at(lm, leaf, am)
            np.add.at(lx, leaf, am * ax)
            if f is not None:
                fv = _eval(f, ax)
                np.add.at(lf, leaf, am * fv)
                np.add.at(lf2, leaf, am * fv * fv)
        if w.poly:
            lm += w.poly_masses_between(fe[:-1], fe[1:], 0)
            lx += w.poly_masses_between(fe[:-1], fe[1:], 1)
        for p in w.pieces:
            need_f = f is not None
            if not need_f and not hasattr(p, "name"):
                continue
            a, b = p.interval.as_floats()
            i0 = max(0, int(np.searchsorted(fe, a, side="right")) - 1)
            i1 = min(n, int(np.searchsorted(fe, b, side="left")))
            for i in range(i0, i1):
                s, t = max(a, fe[i]), min(b, fe[i + 1])
                if not s < t:
                    continue
                if hasattr(p, "name"):
                    lm[i] += adaptive_quad(p, s, t, budget)[0]
                    lx[i] += adaptive_quad(lambda y, p=p: y * p(y), s, t, budget)[0]
                if need_f:
                    lf[i] += adaptive_quad(lambda y, p=p: _eval(f, y) * p(y), s, t, budget)[0]
                    lf2[i] += adaptive_quad(lambda y, p=p: _eval(f, y) ** 2 * p(y), s, t, budget)[0]
        self.M = self._up(lm)
        self.X = self._up(lx)
        self.F = self._up(lf) if f is not None else None
        self.F2 = self._up(lf2) if f is not None else None

    def _up(self, leaf):
        levels = [None] * (self.depth + 1)
        levels[self.depth] = leaf
        for l in range(self.depth - 1, -1, -1):
            levels[l] = levels[l + 1][0::2] + levels[l + 1][1::2]
        return levels

    def interval(self, level, k):
        return _node_interval(self.root, level, k)

    def haar_scale(self, level):
        """sqrt(m- m+/m) per node of ``level`` (0 where degenerate)."""
        mm, mp = self.M[level + 1][0::2], self.M[level + 1][1::2]
        m = mm + mp
        ok = (mm > 0) & (mp > 0)
        c = np.zeros_like(m)
        c[ok] = np.sqrt(mm[ok] * mp[ok] / m[ok])
        return c, ok

    def child_means(self, arr, level):
        mm, mp = self.M[level + 1][0::2], self.M[level + 1][1::2]
        with np.errstate(divide="ignore", invalid="ignore"):
            em = np.where(mm > 0, arr[level + 1][0::2] / np.where(mm > 0, mm, 1), 0.0)
            ep = np.where(mp > 0, arr[level + 1][1::2] / np.where(mp > 0, mp, 1), 0.0)
        return em, ep

    def x_coefficients(self, level):
        """<x, h_I> for every node at ``level``."""
        c, ok = self.haar_scale(level)
        em, ep = self.child_means(self.X, level)
        return np.where(ok, c * (ep - em), 0.0)

    def x_coeff_sums(self):
        """S[l][k] = sum over J inside I_{l,k} (resolved) of <x, h_J>^2."""
        S = [None] * (self.depth + 1)
        S[self.depth] = np.zeros(2 ** self.depth)
        for l in range(self.depth - 1, -1, -1):
            S[l] = self.x_coefficients(l) ** 2 + S[l + 1][0::2] + S[l + 1][1::2]
        return S


def haar_function(w: Weight, I: Interval) -> HaarFunction:
    """h_I^w with <x, h> >= 0; degenerate (zero) when a child has no mass."""
    check_admissible_tree(w, I, 1)
    Im, Ip = I.children()
    mm = mass(w, Im, True, False)
    mp = mass(w, Ip, True, True)
    if not (mm > 0 and mp > 0):
        return HaarFunction(I, 0.0, 0.0, True)
    c = math.sqrt(mm * mp / (mm + mp))
    return HaarFunction(I, -c / mm, c / mp, False)


class HaarExpansion:
    """Haar coefficients of f in L^2(w) on the dyadic tree of I0 to ``depth``."""

    def __init__(self, w: Weight, f: Callable, I0: Interval, depth: int, grid=None,
                 budget=DEFAULT_BUDGET):
        self.weight, self.f, self.root, self.depth, self.grid = w, f, I0, depth, grid
        self.stats = st = DyadicTreeStats(w, I0, depth, f, budget)
        total = st.M[0][0]
        self.mean_term = st.F[0][0] / total if total > 0 else 0.0
        self.coef = []
        self.scale = []
        self.ok = []
        for l in range(depth):
            c, ok = st.haar_scale(l)
            em, ep = st.child_means(st.F, l)
            self.coef.append(np.where(ok, c * (ep - em), 0.0))
            self.scale.append(c)
            self.ok.append(ok)

    @property
    def coefficients(self) -> Dict[Interval, float]:
        out = {}
        for l in range(self.depth):
            for k in np.nonzero(self.ok[l])[0]:
                out[self.stats.interval(l, int(k))] = float(self.coef[l][k])
        return out

    def node_of(self, I: Interval):
        """(level, k) of a tree interval, or None."""
        ratio = self.root.length / I.length
        level = round(math.log2(float(ratio)))
        if level < 0 or level > self.depth:
            return None
        k = round(float((I.left - self.root.left) / I.length))
        if self.stats.interval(level, k) != I and not (
                math.isclose(float(self.stats.interval(level, k).left), float(I.left))
                and math.isclose(float(self.stats.interval(level, k).right), float(I.right))):
            return None
        return level, k

    def coefficient(self, I: Interval):
        nk = self.node_of(I)
        if nk is None or nk[0] >= self.depth:
            return 0.0
        return float(self.coef[nk[0]][nk[1]])

    def haar(self, level, k) -> HaarFunction:
        I = self.stats.interval(level, k)
        if not self.ok[level][k]:
            return HaarFunction(I, 0.0, 0.0, True)
        c = self.scale[level][k]
        mm = self.stats.M[level + 1][2 * k]
        mp = self.stats.M[level + 1][2 * k + 1]
        return HaarFunction(I, -c / mm, c / mp, False)

    def average(self, level, k):
        m = self.stats.M[level][k]
        return self.stats.F[level][k] / m if m > 0 else 0.0

    def abs_average(self, level, k):
        """E_I |f| for the leaf-resolved f (piecewise constant on leaves)."""
        m = self.stats.M[level][k]
        if not m > 0:
            return 0.0
        span = 2 ** (self.depth - level)
        leaf = self.stats.F[self.depth][k * span:(k + 1) * span]
        return float(np.sum(np.abs(leaf))) / m

    def leaf_of(self, x):
        fe = self.stats.edges
        return np.clip(np.searchsorted(fe, np.asarray(x, dtype=float), side="right") - 1,
                       0, 2 ** self.depth - 1)

    def delta(self, level, k, x):
        """Martingale difference Delta_I f at x."""
        return self.coef[level][k] * self.haar(level, k)(x)

    def reconstruct(self, x):
        """mean + sum of all resolved Delta_I f at x (equals E_leaf f)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        leaf = self.leaf_of(x)
        out = np.full(x.shape, self.mean_term)
        for l in range(self.depth):
            k = leaf >> (self.depth - l)
            h = np.array([self.haar(l, int(kk))(xx) for kk, xx in zip(k, x)])
            out += self.coef[l][k] * h
        return out

    def telescoped_average(self, level, k):
        """E_{I0} f + sum over strict ancestors I of J of E_J Delta_I f."""
        val = self.mean_term
        for l in range(level):
            a = k >> (level - l)
            side_right = (k >> (level - l - 1)) & 1
            h = self.haar(l, a)
            val += self.coef[l][a] * (h.right_value if side_right else h.left_value)
        return val

    def norm_squared(self):
        """int_{I0} f^2 dw."""
        return float(self.stats.F2[0][0])


def haar_transform(w: Weight, f: Callable, I0: Interval, depth: int, grid=None,
                   budget=DEFAULT_BUDGET) -> HaarExpansion:
    return HaarExpansion(w, f, I0, depth, grid, budget)


def _trivial(w, I):
    lo, hi = w.atom_slice(I)
    has_density = any(p.interval.intersect(I) is not None for p in w.pieces)
    return not has_density and hi - lo <= 1


def energy_squared(w: Weight, I: Interval, depth: Optional[int] = 8) -> float:
    """E(w,I)^2 = |I|^-2 sum_{J in I} <x, h_J>^2 (resolved to ``depth``).

    ``depth=None`` gives the fully resolved limit |I|^-2 int_I (x - E x)^2 dw.
    """
    m = mass(w, I)
    if not m > 0:
        raise ZeroMass("energy on a null interval", interval=I)
    if _trivial(w, I):
        return 0.0
    L2 = float(I.length) ** 2
    if depth is None:
        return first_moment(w, I)[1] / L2
    # atoms on interior tree endpoints are assigned to the right-hand cell; that only
    # matters when they share a cell with other mass, where it is a convention
    st = DyadicTreeStats(w, I, depth, check=False)
    return float(st.x_coeff_sums()[0][0]) / L2


def energy(w: Weight, I: Interval, depth: Optional[int] = 8) -> float:
    return math.sqrt(energy_squared(w, I, depth))


def haar_x_coefficient(w: Weight, J: Interval) -> float:
    """<x, h_J^w>_w (nonnegative by the sign convention)."""
    st = DyadicTreeStats(w, J, 1)
    return float(st.x_coefficients(0)[0])
