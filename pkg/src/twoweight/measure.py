"""Weights on the line: atoms plus density pieces, with closed-form integrals.

A weight is a finite list of atoms (position, mass) and a finite list of
density pieces. Polynomial pieces (degree <= 3, coefficients in the global
variable x) are integrated in closed form; named function pieces fall back to
adaptive quadrature. Positions and endpoints may be ``Fraction`` so that
admissibility checks against grids are exact.
"""

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Callable

import numpy as np

from .errors import DivergentTail, OverlappingKeepSet, SingularEvaluation, ZeroMass
from .quadrature import DEFAULT_BUDGET, adaptive_quad

INF = math.inf


def _half(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v) / 2
    return v / 2


@dataclass(frozen=True, order=True)
class Interval:
    left: Real
    right: Real

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError(f"empty interval [{self.left}, {self.right}]")

    @property
    def length(self):
        return self.right - self.left

    @property
    def center(self):
        if math.isinf(self.left) or math.isinf(self.right):
            raise ValueError("unbounded interval has no centre")
        return _half(self.left + self.right)

    @property
    def bounded(self):
        return math.isfinite(self.left) and math.isfinite(self.right)

    def children(self):
        c = self.center
        return Interval(self.left, c), Interval(c, self.right)

    def contains(self, x, closed_left=True, closed_right=True):
        lo = self.left <= x if closed_left else self.left < x
        hi = x <= self.right if closed_right else x < self.right
        return lo and hi

    def contains_interval(self, other):
        return self.left <= other.left and other.right <= self.right

    def intersect(self, other):
        lo = max(self.left, other.left)
        hi = min(self.right, other.right)
        return Interval(lo, hi) if lo < hi else None

    def dilate(self, k):
        """Concentric interval k times as long (3I for k=3)."""
        c = self.center
        h = _half(self.length) * k
        return Interval(c - h, c + h)

    def distance_to(self, x):
        if x < self.left:
            return self.left - x
        if x > self.right:
            return x - self.right
        return 0

    def as_floats(self):
        return float(self.left), float(self.right)

    def __repr__(self):
        return f"[{self.left}, {self.right}]"


@dataclass(frozen=True)
class DensityPiece:
    """Polynomial density sum_k coeffs[k] x^k on ``interval``."""

    interval: Interval
    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if not 1 <= len(c) <= 4:
            raise ValueError("density polynomial must have degree <= 3")
        object.__setattr__(self, "coeffs", c)
        a, b = self.interval.as_floats()
        if not self.interval.bounded and any(v != 0 for v in c[1:]):
            raise DivergentTail("unbounded density pieces must be constant", interval=self.interval)
        if not self.interval.bounded:
            if c[0] < 0:
                raise ValueError("density negative on piece")
            return
        pts = [a, b]
        deriv = np.polynomial.polynomial.polyder(np.array(c))
        if len(deriv) > 1 and np.any(deriv != 0):
            for r in np.roots(deriv[::-1]):
                if abs(r.imag) < 1e-14 and a < r.real < b:
                    pts.append(r.real)
        vals = np.polynomial.polynomial.polyval(np.array(pts), np.array(c))
        scale = max(1.0, float(np.max(np.abs(vals))))
        if np.min(vals) < -1e-12 * scale:
            raise ValueError(f"density negative on piece {self.interval}")

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), np.array(self.coeffs))


def _x_over_log_squared(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x / np.log(x) ** 2
    return np.where(x > 0, out, 0.0)


# Named non-polynomial densities; a name makes the piece serializable.
DENSITIES = {"x_over_log_squared": _x_over_log_squared}


@dataclass(frozen=True)
class FunctionPiece:
    """Non-polynomial density on a bounded interval, integrated adaptively."""

    interval: Interval
    name: str
    density: Callable = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.interval.bounded:
            raise DivergentTail("function pieces must be bounded", interval=self.interval)
        if self.density is None:
            if self.name not in DENSITIES:
                raise ValueError(f"unknown density {self.name!r}")
            object.__setattr__(self, "density", DENSITIES[self.name])

    def __call__(self, x):
        return self.density(np.asarray(x, dtype=float))


def power_integrals(lo, hi, n):
    """Column j holds int_lo^hi x^j dx for j < n, using a cancellation-free form."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = hi - lo
    out = np.empty(lo.shape + (n,))
    # hi^{j+1} - lo^{j+1} = (hi - lo) * sum_i hi^i lo^{j-i}
    s = np.ones_like(lo)
    hp = np.ones_like(lo)
    for j in range(n):
        if j > 0:
            hp = hp * hi
            s = s * lo + hp
        out[..., j] = d * s / (j + 1)
    return out


class Weight:
    """Immutable weight: atoms plus density pieces."""

    def __init__(self, atoms=(), pieces=(), label=""):
        pairs = []
        for pos, m in atoms:
            if not m > 0:
                raise ValueError("atom masses must be positive")
            if not math.isfinite(float(pos)):
                raise ValueError("atom positions must be finite")
            pairs.append((pos, m))
        pairs.sort(key=lambda p: p[0])
        for (p, _), (q, _) in zip(pairs, pairs[1:]):
            if p == q:
                raise ValueError(f"duplicate atom at {p}")
        pieces = sorted(pieces, key=lambda p: p.interval.left)
        for p, q in zip(pieces, pieces[1:]):
            if q.interval.left < p.interval.right:
                raise ValueError("density pieces overlap")
        self.atoms = tuple(pairs)
        self.pieces = tuple(pieces)
        self.label = label
        self._pos = tuple(p for p, _ in pairs)
        self.atom_x = np.array([float(p) for p in self._pos], dtype=float)
        self.atom_m = np.array([float(m) for _, m in pairs], dtype=float)
        self._cum = np.concatenate([[0.0], np.cumsum(self.atom_m)])
        poly = [p for p in pieces if isinstance(p, DensityPiece)]
        self.poly = tuple(poly)
        self.funcs = tuple(p for p in pieces if isinstance(p, FunctionPiece))
        self.poly_a = np.array([float(p.interval.left) for p in poly])
        self.poly_b = np.array([float(p.interval.right) for p in poly])
        self.poly_c = np.zeros((len(poly), 4))
        for i, p in enumerate(poly):
            self.poly_c[i, : len(p.coeffs)] = p.coeffs

    # constructors -----------------------------------------------------
    @classmethod
    def from_atoms(cls, positions, masses, label=""):
        return cls(atoms=list(zip(positions, masses)), label=label)

    @classmethod
    def lebesgue(cls, a, b, density=1.0, label="lebesgue"):
        return cls(pieces=[DensityPiece(Interval(a, b), (density,))], label=label)

    @property
    def is_atomic(self):
        return not self.pieces

    @property
    def n_atoms(self):
        return len(self.atoms)

    def __eq__(self, other):
        return (isinstance(other, Weight) and self.atoms == other.atoms
                and self.pieces == other.pieces)

    def __hash__(self):
        return hash((self.atoms, self.pieces))

    def __repr__(self):
        return f"Weight({self.label!r}, atoms={len(self.atoms)}, pieces={len(self.pieces)})"

    # atom lookups -----------------------------------------------------
    def atom_slice(self, I, closed_left=True, closed_right=True):
        """Index range of atoms in I, by exact comparison."""
        lo = (bisect.bisect_left if closed_left else bisect.bisect_right)(self._pos, I.left)
        hi = (bisect.bisect_right if closed_right else bisect.bisect_left)(self._pos, I.right)
        return lo, max(lo, hi)

    def atom_masses_between(self, lefts, rights):
        """Vectorized atom mass of closed intervals [lefts, rights] (float comparison)."""
        i = np.searchsorted(self.atom_x, lefts, side="left")
        j = np.searchsorted(self.atom_x, rights, side="right")
        return self._cum[np.maximum(i, j)] - self._cum[i]

    def poly_masses_between(self, lefts, rights, moment=0):
        """Vectorized int x^moment dw over density pieces, for many intervals."""
        lefts = np.atleast_1d(np.asarray(lefts, dtype=float))
        rights = np.atleast_1d(np.asarray(rights, dtype=float))
        out = np.zeros(lefts.shape)
        if not self.poly:
            return out
        fin = np.isfinite(self.poly_a) & np.isfinite(self.poly_b)
        if fin.any():
            a, b, c = self.poly_a[fin], self.poly_b[fin], self.poly_c[fin]
            step = max(1, 1_000_000 // len(a))
            for s in range(0, len(lefts), step):
                lo = np.clip(lefts[s:s + step, None], a, b)
                hi = np.maximum(np.clip(rights[s:s + step, None], a, b), lo)
                pw = power_integrals(lo, hi, 4 + moment)[..., moment:moment + 4]
                out[s:s + step] += np.einsum("ipk,pk->i", pw, c)
        for k in np.flatnonzero(~fin):
            a, b = self.poly_a[k], self.poly_b[k]
            lo = np.clip(lefts, a, b)
            hi = np.maximum(np.clip(rights, a, b), lo)
            sel = hi > lo
            if not np.any(sel):
                continue
            if np.any(np.isinf(lo[sel]) | np.isinf(hi[sel])):
                if moment or self.poly_c[k, 0] > 0:
                    raise DivergentTail("infinite mass on unbounded piece")
            pw = power_integrals(lo[sel], hi[sel], 4 + moment)
            out[sel] += pw[:, moment:moment + 4] @ self.poly_c[k]
        return out

    def masses_between(self, lefts, rights):
        """Closed-interval masses for arrays of endpoints (atoms by float comparison)."""
        lefts = np.atleast_1d(np.asarray(lefts, dtype=float))
        rights = np.atleast_1d(np.asarray(rights, dtype=float))
        out = self.atom_masses_between(lefts, rights) if self.atoms else np.zeros(lefts.shape)
        out = out + self.poly_masses_between(lefts, rights)
        for p in self.funcs:
            for i in range(len(lefts)):
                J = _clip(p.interval, lefts[i], rights[i])
                if J is not None:
                    out[i] += adaptive_quad(p, J[0], J[1], DEFAULT_BUDGET)[0]
        return out

    # serialization ----------------------------------------------------
    def to_dict(self):
        pieces = []
        for p in self.pieces:
            d = {"left": _enc(p.interval.left), "right": _enc(p.interval.right)}
            if isinstance(p, DensityPiece):
                d["coeffs"] = list(p.coeffs)
            else:
                d["density"] = p.name
            pieces.append(d)
        return {
            "schema": "twoweight.weight/1",
            "label": self.label,
            "atoms": [[_enc(x), _enc(m)] for x, m in self.atoms],
            "pieces": pieces,
        }

    @classmethod
    def from_dict(cls, d):
        atoms = [(_dec(x), _dec(m)) for x, m in d.get("atoms", [])]
        pieces = []
        for p in d.get("pieces", []):
            I = Interval(_dec(p["left"]), _dec(p["right"]))
            if "coeffs" in p:
                pieces.append(DensityPiece(I, tuple(p["coeffs"])))
            else:
                pieces.append(FunctionPiece(I, p["density"]))
        return cls(atoms=atoms, pieces=pieces, label=d.get("label", ""))

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def _enc(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else v.numerator
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _dec(v):
    if isinstance(v, str):
        if v in ("inf", "-inf"):
            return float(v)
        return Fraction(v)
    return v


def _clip(I, lo, hi):
    a = max(float(I.left), float(lo))
    b = min(float(I.right), float(hi))
    return (a, b) if a < b else None


def mass(w, I, closed_left=True, closed_right=True):
    """w(I) with explicit endpoint inclusion for atoms."""
    lo, hi = w.atom_slice(I, closed_left, closed_right)
    total = float(np.sum(w.atom_m[lo:hi])) if hi > lo else 0.0
    if w.poly:
        total += float(w.poly_masses_between([float(I.left)], [float(I.right)])[0])
    for p in w.funcs:
        J = _clip(p.interval, I.left, I.right)
        if J is not None:
            total += adaptive_quad(p, J[0], J[1], DEFAULT_BUDGET)[0]
    return total


def _eval(f, xs):
    xs = np.asarray(xs, dtype=float)
    try:
        v = np.asarray(f(xs), dtype=float)
        if v.shape == xs.shape:
            return v
        if v.shape == ():
            return np.full(xs.shape, float(v))
    except (TypeError, ValueError):
        pass
    return np.array([float(f(t)) for t in xs])


def integrate_with_error(w, f, I, budget=DEFAULT_BUDGET, closed_left=True, closed_right=True):
    """(int_I f dw, error estimate). Atoms are summed exactly."""
    lo, hi = w.atom_slice(I, closed_left, closed_right)
    total = 0.0
    if hi > lo:
        vals = _eval(f, w.atom_x[lo:hi])
        if not np.all(np.isfinite(vals)):
            raise SingularEvaluation("integrand not finite at an atom")
        total = float(np.dot(vals, w.atom_m[lo:hi]))
    err = 0.0
    for p in w.pieces:
        J = _clip(p.interval, I.left, I.right)
        if J is None:
            continue
        g = (lambda xs, p=p: _eval(f, xs) * p(xs))
        v, e = adaptive_quad(g, J[0], J[1], budget)
        total += v
        err += e
    return total, err


def integrate(w, f, I, budget=DEFAULT_BUDGET, closed_left=True, closed_right=True):
    return integrate_with_error(w, f, I, budget, closed_left, closed_right)[0]


def restrict(w, keep, closed=True, label=None):
    """w on the union of ``keep``; atoms on a kept interval's endpoint stay iff ``closed``."""
    keep = sorted(keep)
    for a, b in zip(keep, keep[1:]):
        if b.left < a.right:
            raise OverlappingKeepSet("keep intervals overlap", first=a, second=b)
    atoms = []
    seen = set()
    for K in keep:
        lo, hi = w.atom_slice(K, closed, closed)
        for i in range(lo, hi):
            if i not in seen:
                seen.add(i)
                atoms.append(w.atoms[i])
    pieces = []
    for p in w.pieces:
        for K in keep:
            J = p.interval.intersect(K)
            if J is None:
                continue
            if isinstance(p, DensityPiece):
                pieces.append(DensityPiece(J, p.coeffs))
            else:
                pieces.append(FunctionPiece(J, p.name, p.density))
    return Weight(atoms=atoms, pieces=pieces, label=w.label if label is None else label)


def complement(I0, I):
    """Pieces of I0 outside the interior of I (the holed interval I0 - I)."""
    out = []
    if I0.left < I.left:
        out.append(Interval(I0.left, min(I.left, I0.right)))
    if I.right < I0.right:
        out.append(Interval(max(I.right, I0.left), I0.right))
    return [J for J in out if J.left < J.right]


def first_moment(w, I):
    """(mean, unnormalized centered second moment) of w on I."""
    lo, hi = w.atom_slice(I)
    m0 = m1 = 0.0
    xs = w.atom_x[lo:hi]
    ms = w.atom_m[lo:hi]
    m0 += float(ms.sum())
    m1 += float(np.dot(ms, xs))
    a, b = float(I.left), float(I.right)
    if w.poly:
        m0 += float(w.poly_masses_between([a], [b], 0)[0])
        m1 += float(w.poly_masses_between([a], [b], 1)[0])
    for p in w.funcs:
        J = _clip(p.interval, a, b)
        if J is not None:
            m0 += adaptive_quad(p, *J)[0]
            m1 += adaptive_quad(lambda t, p=p: t * p(t), *J)[0]
    if not m0 > 0:
        raise ZeroMass("first_moment on a null interval", interval=I)
    mean = m1 / m0
    # second moment about the mean, computed directly to avoid cancellation
    c2 = float(np.dot(ms, (xs - mean) ** 2))
    for k in range(len(w.poly)):
        lo_, hi_ = max(a, w.poly_a[k]), min(b, w.poly_b[k])
        if lo_ < hi_:
            c = w.poly_c[k]
            # shift the polynomial to u = x - mean and integrate u^2 q(u)
            q = shift_poly(c, mean)
            pw = power_integrals(np.array([lo_ - mean]), np.array([hi_ - mean]), 6)[0]
            c2 += float(pw[2:6] @ q)
    for p in w.funcs:
        J = _clip(p.interval, a, b)
        if J is not None:
            c2 += adaptive_quad(lambda t, p=p: (t - mean) ** 2 * p(t), *J)[0]
    return mean, c2


def shift_poly(c, x0):
    """Coefficients q with sum q_k u^k = sum c_k (x0 + u)^k."""
    q = np.zeros(4)
    for k in range(4):
        for j in range(k + 1):
            q[j] += c[k] * math.comb(k, j) * x0 ** (k - j)
    return q
