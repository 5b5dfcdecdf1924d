"""Truncated Hilbert transforms, averaging, Poisson averages and extensions.

Conventions: H(f w)(x) = int f(y) K(y - x) dw(y), with K(u) = 1/u on
alpha < |u| < beta (hard) or the C^1 convex minorant of 1/u (smooth).
For polynomial density pieces every integral here is closed form.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AtomOnCut, DivergentTail, PreconditionViolated
from .measure import Interval, Weight, _eval, power_integrals, shift_poly
from .quadrature import DEFAULT_BUDGET, adaptive_quad, graded_points


@dataclass(frozen=True)
class TruncationSpec:
    alpha: float
    beta: float
    mode: str = "hard"

    def __post_init__(self):
        if not 0 < self.alpha < self.beta:
            raise ValueError("need 0 < alpha < beta")
        if self.mode not in ("hard", "smooth"):
            raise ValueError("mode is 'hard' or 'smooth'")

    def branches(self):
        """(u1, u2, kind, A, B): K(u) = 1/u for kind 'inv', A + B u for 'lin'."""
        a, b = self.alpha, self.beta
        if self.mode == "hard":
            return [(a, b, "inv", 0, 0), (-b, -a, "inv", 0, 0)]
        return [
            (0.0, a, "lin", 2 / a, -1 / a ** 2),
            (a, b, "inv", 0, 0),
            (b, 2 * b, "lin", 2 / b, -1 / b ** 2),
            (-a, 0.0, "lin", -2 / a, -1 / a ** 2),
            (-b, -a, "inv", 0, 0),
            (-2 * b, -b, "lin", -2 / b, -1 / b ** 2),
        ]

    def cuts(self):
        a, b = self.alpha, self.beta
        return (a, b, 2 * b) if self.mode == "smooth" else (a, b)


@dataclass(frozen=True)
class UpperHalfPlaneMeasure:
    points: tuple = ()   # ((x, t, mass), ...)

    def __post_init__(self):
        pts = tuple((float(x), float(t), float(m)) for x, t, m in self.points)
        for _, t, m in pts:
            if not (t > 0 and m > 0):
                raise ValueError("points need t > 0 and mass > 0")
        object.__setattr__(self, "points", pts)

    @property
    def x(self):
        return np.array([p[0] for p in self.points])

    @property
    def t(self):
        return np.array([p[1] for p in self.points])

    @property
    def m(self):
        return np.array([p[2] for p in self.points])

    def in_box(self, I: Interval, enlarge=1):
        """Mask of points in the Carleson box over I (enlarge=3 gives 3I x [0,|I|])."""
        if not self.points:
            return np.zeros(0, dtype=bool)
        L = float(I.length)
        c = float(I.left) + L / 2
        h = enlarge * L / 2
        x = self.x
        return (x >= c - h) & (x < c + h) & (self.t <= L)

    def box_mass(self, I: Interval, weight=None):
        mask = self.in_box(I)
        w = self.m if weight is None else self.m * weight(self.x, self.t)
        return float(np.sum(w[mask]))


def smooth_kernel(y, spec: TruncationSpec):
    """Odd C^1 convex minorant kernel; vectorized."""
    a, b = spec.alpha, spec.beta
    y = np.asarray(y, dtype=float)
    u = np.abs(y)
    with np.errstate(divide="ignore", over="ignore"):
        inv = np.where(u > 0, 1.0 / np.where(u > 0, u, 1.0), 0.0)
    k = np.where(u < a, -u / a ** 2 + 2 / a,
                 np.where(u <= b, inv, np.where(u < 2 * b, -u / b ** 2 + 2 / b, 0.0)))
    k = np.sign(y) * k
    return float(k) if k.ndim == 0 else k


def hard_kernel(y, spec: TruncationSpec):
    y = np.asarray(y, dtype=float)
    u = np.abs(y)
    inside = (u > spec.alpha) & (u < spec.beta)
    k = np.where(inside, 1.0 / np.where(inside, y, 1.0), 0.0)
    return float(k) if k.ndim == 0 else k


def kernel(y, spec: TruncationSpec):
    return smooth_kernel(y, spec) if spec.mode == "smooth" else hard_kernel(y, spec)


def _poly_hilbert(c, a, b, xs, spec):
    """int_a^b p(y) K(y - x) dy for each x, p given by global coefficients c."""
    xs = np.asarray(xs, dtype=float)
    q = np.zeros(xs.shape + (4,))
    for k in range(4):
        if c[k] != 0:
            for j in range(k + 1):
                q[:, j] += c[k] * math.comb(k, j) * xs ** (k - j)
    out = np.zeros(xs.shape)
    ua, ub = a - xs, b - xs
    for u1, u2, kind, A, B in spec.branches():
        lo = np.maximum(ua, u1)
        hi = np.minimum(ub, u2)
        sel = hi > lo
        if not np.any(sel):
            continue
        lo, hi, qs = lo[sel], hi[sel], q[sel]
        pw = power_integrals(lo, hi, 6)
        if kind == "inv":
            val = qs[:, 0] * np.log(hi / lo) + np.einsum("ij,ij->i", qs[:, 1:], pw[:, 0:3])
        else:
            val = A * np.einsum("ij,ij->i", qs, pw[:, 0:4]) + B * np.einsum("ij,ij->i", qs, pw[:, 1:5])
        out[sel] += val
    return out


def _check_cuts(dist, spec, xs):
    if spec.mode != "hard":
        return
    for c in (spec.alpha, spec.beta):
        if np.any(dist == c):
            raise AtomOnCut("atom at distance exactly alpha or beta", cut=c)


def truncated_hilbert(w: Weight, f, x, spec: TruncationSpec, budget=DEFAULT_BUDGET,
                      support: Optional[Interval] = None):
    """H_{alpha,beta}(f w)(x) for scalar or array x.

    f is None (f = 1), a callable, or polynomial coefficients (ascending).
    ``support`` restricts w to a closed interval (w 1_I without building a new weight).
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(xs.shape)
    fpoly = tuple(f) if isinstance(f, (tuple, list, np.ndarray)) else None
    fcall = f if callable(f) else None

    if w.atoms:
        if support is None:
            lo, hi = 0, len(w.atoms)
        else:
            lo, hi = w.atom_slice(support)
        if hi > lo:
            ax, am = w.atom_x[lo:hi], w.atom_m[lo:hi]
            if fcall is not None:
                am = am * _eval(fcall, ax)
            elif fpoly is not None:
                am = am * np.polynomial.polynomial.polyval(ax, np.array(fpoly, float))
            step = max(1, 2_000_000 // max(1, len(ax)))
            for s in range(0, len(xs), step):
                u = ax[None, :] - xs[s:s + step, None]
                _check_cuts(np.abs(u), spec, xs)
                out[s:s + step] = kernel(u, spec) @ am

    for p in w.pieces:
        a, b = p.interval.as_floats()
        if support is not None:
            a, b = max(a, float(support.left)), min(b, float(support.right))
        if not a < b:
            continue
        if not (math.isfinite(a) and math.isfinite(b)):
            # kernels vanish beyond 2 beta, so clip to the reach of the evaluation points
            reach = 2 * spec.beta
            a = max(a, float(xs.min()) - reach)
            b = min(b, float(xs.max()) + reach)
            if not a < b:
                continue
        if hasattr(p, "coeffs") and fcall is None:
            c = np.array(p.coeffs)
            if fpoly is not None:
                c = np.polynomial.polynomial.polymul(c, np.array(fpoly, float))
                if len(c) > 4:
                    c = None
            if c is not None:
                cc = np.zeros(4)
                cc[: len(c)] = c
                out += _poly_hilbert(cc, a, b, xs, spec)
                continue
        fn = fcall if fcall is not None else (
            (lambda t: np.polynomial.polynomial.polyval(t, np.array(fpoly, float))) if fpoly else None)
        for i, x0 in enumerate(xs):
            bps = [x0 + s * c for c in spec.cuts() for s in (-1, 1)] + [x0]

            def g(y, x0=x0, p=p):
                val = p(y) * kernel(np.asarray(y) - x0, spec)
                return val * _eval(fn, y) if fn is not None else val
            out[i] += adaptive_quad(g, a, b, budget, bps)[0]
    return float(out[0]) if scalar else out


def averaging_op(w: Weight, f, x, alpha, budget=DEFAULT_BUDGET):
    """(1/(4 alpha)) int_{x-2alpha}^{x+2alpha} f dw."""
    from .measure import integrate, mass
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    I = Interval(x - 2 * alpha, x + 2 * alpha)
    v = mass(w, I) if f is None else integrate(w, f, I, budget)
    return v / (4 * alpha)


def _tail_poly(r, v1, v2, L):
    """int_{v1}^{v2} L sum_k r_k v^{k-2} dv (v2 may be inf only for constant r)."""
    if math.isinf(v2):
        if np.any(r[1:] != 0):
            raise DivergentTail("non-constant density on an unbounded piece")
        return L * r[0] / v1
    val = L * r[0] * (v2 - v1) / (v1 * v2)
    val += L * r[1] * math.log(v2 / v1)
    pw = power_integrals(np.array([v1]), np.array([v2]), 2)[0]
    val += L * (r[2] * pw[0] + r[3] * pw[1])
    return val


_BINOM = np.array([[math.comb(k, j) for j in range(4)] for k in range(4)], dtype=float)


def _shift_many(C, x0):
    """Row-wise shift_poly: q_j = sum_k C_k binom(k, j) x0^(k-j)."""
    e = np.arange(4)[:, None] - np.arange(4)[None, :]
    B = _BINOM * np.where(e >= 0, float(x0) ** np.maximum(e, 0), 0.0)
    return C @ B


def _poly_poisson(a, b, C, lo, hi, L):
    """Closed-form Poisson average over many bounded polynomial pieces at once."""
    total = 0.0
    ia, ib = np.maximum(a, lo), np.minimum(b, hi)
    m = ia < ib
    if m.any():
        total += float(np.sum(power_integrals(ia[m], ib[m], 4) * C[m])) / L
    for side in (1, -1):
        if side == 1:
            ua, ub = np.maximum(a, hi), b
            m = ua < ub
            r = _shift_many(C[m], hi - L)
            v1, v2 = L + (ua[m] - hi), L + (ub[m] - hi)
        else:
            ua, ub = a, np.minimum(b, lo)
            m = ua < ub
            r = _shift_many(C[m], lo + L) * np.array([1, -1, 1, -1])
            v1, v2 = L + (lo - ub[m]), L + (lo - ua[m])
        if not m.any():
            continue
        dv = ub[m] - ua[m]
        pw = power_integrals(v1, v2, 2)
        val = r[:, 0] * dv / (v1 * v2) + r[:, 1] * np.log1p(dv / v1) + r[:, 2] * pw[:, 0] \
            + r[:, 3] * pw[:, 1]
        total += L * float(np.sum(val))
    return total


def _poisson_core(w: Weight, lo, hi, L, h=None, budget=DEFAULT_BUDGET):
    """int h(y) L/(L + dist(y,[lo,hi]))^2 dw(y); lo == hi gives the extension kernel."""
    lo, hi, L = float(lo), float(hi), float(L)
    total = 0.0
    if w.atoms:
        ax = w.atom_x
        d = np.maximum(np.maximum(lo - ax, ax - hi), 0.0)
        vals = w.atom_m * (L / (L + d)) / (L + d)
        if h is not None:
            vals = vals * _eval(h, ax)
        total += float(np.sum(vals))
    fin = None
    if h is None and w.poly:
        fin = np.isfinite(w.poly_a) & np.isfinite(w.poly_b)
        if fin.any():
            total += _poly_poisson(w.poly_a[fin], w.poly_b[fin], w.poly_c[fin], lo, hi, L)
    for p in w.pieces:
        a, b = p.interval.as_floats()
        is_poly = hasattr(p, "coeffs")
        if is_poly and h is None and math.isfinite(a) and math.isfinite(b):
            continue
        if is_poly and h is None:
            c = np.zeros(4)
            c[: len(p.coeffs)] = p.coeffs
            # inside [lo, hi]
            ia, ib = max(a, lo), min(b, hi)
            if ia < ib:
                total += float(power_integrals(np.array([ia]), np.array([ib]), 4)[0] @ c) / L
            # right of hi: v = L + (y - hi), y = hi - L + v
            ra, rb = max(a, hi), b
            if ra < rb:
                r = shift_poly(c, hi - L)
                total += _tail_poly(r, L + (ra - hi), L + (rb - hi), L)
            # left of lo: v = L + (lo - y), y = lo + L - v
            la, lb = a, min(b, lo)
            if la < lb:
                r = shift_poly(c, lo + L) * np.array([1, -1, 1, -1])
                total += _tail_poly(r, L + (lo - lb), L + (lo - la), L)
            continue
        # quadrature path
        fn = (lambda y: _eval(h, y)) if h is not None else (lambda y: np.ones_like(y))

        def g(y, p=p):
            y = np.asarray(y, dtype=float)
            d = np.maximum(np.maximum(lo - y, y - hi), 0.0)
            return p(y) * fn(y) * (L / (L + d)) / (L + d)
        if math.isfinite(a) and math.isfinite(b):
            bps = graded_points(a, b, lo, L) + graded_points(a, b, hi, L)
            total += adaptive_quad(g, a, b, budget, bps)[0]
            continue
        c0 = p.coeffs[0]
        ia, ib = max(a, lo), min(b, hi)
        if ia < ib:
            total += adaptive_quad(g, ia, ib, budget)[0]
        # substitution v = 1/(L + u) turns each tail into a finite integral of h
        if b > hi:
            u0 = max(a, hi) - hi
            if math.isinf(b):
                k = lambda v: c0 * L * fn(hi + 1.0 / np.asarray(v) - L)
                total += adaptive_quad(k, 1e-300, 1.0 / (L + u0), budget)[0]
            else:
                total += adaptive_quad(g, max(a, hi), b, budget)[0]
        if a < lo:
            u0 = lo - min(b, lo)
            if math.isinf(a):
                k = lambda v: c0 * L * fn(lo - 1.0 / np.asarray(v) + L)
                total += adaptive_quad(k, 1e-300, 1.0 / (L + u0), budget)[0]
            else:
                total += adaptive_quad(g, a, min(b, lo), budget)[0]
    return total


def poisson_integral(w: Weight, I: Interval, budget=DEFAULT_BUDGET):
    """P(w, I) = int |I|/(|I| + dist(y, I))^2 dw(y)."""
    return _poisson_core(w, I.left, I.right, I.length, None, budget)


def poisson_extension(w: Weight, h, x, t, budget=DEFAULT_BUDGET):
    """int h(y) t/(t + |x - y|)^2 dw(y); h None means h = 1."""
    if not t > 0:
        raise ValueError("t must be positive")
    return _poisson_core(w, x, x, t, h, budget)


def dual_poisson(mu: UpperHalfPlaneMeasure, x, box: Optional[Interval] = None, enlarge=1):
    """P*(t 1_box mu)(x) = sum over points in the box of m t * t/(t + |x - x_p|)^2."""
    if not mu.points:
        return 0.0 if np.ndim(x) == 0 else np.zeros(np.shape(x))
    px, pt, pm = mu.x, mu.t, mu.m
    if box is not None:
        sel = mu.in_box(box, enlarge)
        px, pt, pm = px[sel], pt[sel], pm[sel]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    val = (pm * pt ** 2 / (pt + np.abs(xs[:, None] - px)) ** 2).sum(axis=1)
    return float(val[0]) if np.ndim(x) == 0 else val


def extension_many(w: Weight, xs, ts, support: Optional[Interval] = None,
                   budget=DEFAULT_BUDGET):
    """P_w(1_support)(x, t) = int_support t/(t + |x - y|)^2 dw(y) at many points."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(xs.shape)
    if w.atoms:
        lo, hi = (0, len(w.atoms)) if support is None else w.atom_slice(support)
        if hi > lo:
            ax, am = w.atom_x[lo:hi], w.atom_m[lo:hi]
            out += (am * ts[:, None] / (ts[:, None] + np.abs(xs[:, None] - ax)) ** 2).sum(axis=1)
    if w.pieces:
        from .measure import restrict
        dens = Weight(pieces=w.pieces)
        if support is not None:
            dens = restrict(dens, [support])
        for i in range(len(xs)):
            out[i] += _poisson_core(dens, xs[i], xs[i], ts[i], None, budget)
    return out


@dataclass(frozen=True)
class GradientCheck:
    C: float
    in_exact_band: bool


def _branch(u, spec):
    if u < spec.alpha:
        return 0
    if u <= spec.beta:
        return 1
    return 2 if u < 2 * spec.beta else 3


def _smooth_difference(v, v_prime, shift, spec):
    """K(v') - K(v) for same-sign v, v' with v - v' = shift, without cancellation."""
    s = 1.0 if v > 0 else -1.0
    u, up = abs(v), abs(v_prime)
    du = -s * shift
    br = _branch(u, spec)
    if v * v_prime <= 0 or br != _branch(up, spec):
        return smooth_kernel(v_prime, spec) - smooth_kernel(v, spec)
    if br == 0:
        return -s * du / spec.alpha ** 2
    if br == 1:
        return -s * du / (u * up)
    if br == 2:
        return -s * du / spec.beta ** 2
    return 0.0


def kernel_gradient_check(x, x_prime, y, spec: TruncationSpec) -> GradientCheck:
    """C = [K(y-x') - K(y-x)] (y-x)(y-x')/(x'-x) for the smooth kernel."""
    if spec.mode != "smooth":
        raise PreconditionViolated("kernel gradient identity uses the smooth kernel")
    if x_prime == x:
        raise PreconditionViolated("x' = x is degenerate")
    if not 2 * abs(x - x_prime) < abs(x - y):
        raise PreconditionViolated("need 2|x - x'| < |x - y|")
    C = _smooth_difference(y - x, y - x_prime, x_prime - x, spec) \
        * (y - x) * (y - x_prime) / (x_prime - x)
    band = 2 * spec.alpha < abs(x - y) < (2 / 3) * spec.beta
    return GradientCheck(float(C), bool(band))


def truncation_ladder(alphas, betas, mode="smooth"):
    """All valid (alpha, beta) pairs from two ladders."""
    return [TruncationSpec(a, b, mode) for a in alphas for b in betas if a < b]


def hilbert_sweep(w: Weight, f, x, ladder, budget=DEFAULT_BUDGET):
    """Values of the truncated transform over a ladder of truncations."""
    return np.array([truncated_hilbert(w, f, x, s, budget) for s in ladder])


def poisson_many(w: Weight, lefts, rights, support: Optional[Interval] = None,
                 budget=DEFAULT_BUDGET):
    """P(w 1_support, I) for many intervals I = [lefts[i], rights[i]]."""
    lefts = np.asarray(lefts, dtype=float)
    rights = np.asarray(rights, dtype=float)
    L = rights - lefts
    out = np.zeros(lefts.shape)
    if w.atoms:
        lo, hi = (0, len(w.atoms)) if support is None else w.atom_slice(support)
        if hi > lo:
            ax, am = w.atom_x[lo:hi], w.atom_m[lo:hi]
            step = max(1, 4_000_000 // max(1, len(ax)))
            for s in range(0, len(lefts), step):
                l, r, LL = lefts[s:s + step, None], rights[s:s + step, None], L[s:s + step, None]
                d = np.maximum(np.maximum(l - ax, ax - r), 0.0)
                out[s:s + step] = (am * (LL / (LL + d)) / (LL + d)).sum(axis=1)
    if w.pieces:
        from .measure import restrict
        dens = Weight(pieces=w.pieces)
        if support is not None:
            dens = restrict(dens, [support])
        for i in range(len(lefts)):
            out[i] += _poisson_core(dens, lefts[i], rights[i], L[i], None, budget)
    return out
