"""Diagnostic constants of a pair of weights over finite interval families.

Every supremum here is a maximum over an explicit finite family, and each
report carries the family descriptor so that nothing is presented as a global
supremum. Ties in the argmax go to the lexicographically smallest interval.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import (AtomOnEndpoint, NonAtomic, PreconditionViolated, SeparationTooSmall,
                     SupportsOverlap, ZeroDenominator)
from .haar import energy_squared, haar_function, haar_x_coefficient
from .measure import Interval, Weight, integrate, mass, restrict
from .quadrature import DEFAULT_BUDGET, adaptive_quad
from .transforms import (TruncationSpec, UpperHalfPlaneMeasure, dual_poisson, extension_many,
                         kernel, poisson_integral, poisson_many, truncated_hilbert)

FULL_HILBERT = TruncationSpec(1e-12, 1e6, "hard")


def _workers():
    try:
        return max(1, int(os.environ.get("TWOWEIGHT_WORKERS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# families and reports

@dataclass(frozen=True)
class IntervalFamily:
    kind: str = "dyadic"          # dyadic | triadic | explicit
    depth: int = 4
    window: Interval = Interval(Fraction(0), Fraction(1))
    intervals: tuple = ()

    def __post_init__(self):
        if self.kind not in ("dyadic", "triadic", "explicit"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.kind == "explicit" and not self.intervals:
            raise ValueError("explicit family needs intervals")

    def members(self) -> List[Interval]:
        if self.kind == "explicit":
            return sorted(set(self.intervals))
        a, L = self.window.left, self.window.length
        out = []
        if self.kind == "dyadic":
            for n in range(self.depth + 1):
                h = L / 2 ** n
                out += [Interval(a + k * h, a + (k + 1) * h) for k in range(2 ** n)]
            return out
        comps, gaps = cantor_intervals(self.depth)
        for lev in comps:
            out += [Interval(a + L * I.left, a + L * I.right) for I in lev]
        for _, G in gaps:
            out.append(Interval(a + L * G.left, a + L * G.right))
        return sorted(set(out))

    def describe(self):
        return {"kind": self.kind, "depth": self.depth,
                "window": [str(self.window.left), str(self.window.right)],
                "size": len(self.members())}


def cantor_intervals(depth):
    """Components of C_n for n = 0..depth and gaps (level, G) for levels 1..depth."""
    comps = [[Interval(Fraction(0), Fraction(1))]]
    gaps = []
    for n in range(1, depth + 1):
        nxt = []
        for K in comps[-1]:
            t = K.length / 3
            nxt += [Interval(K.left, K.left + t), Interval(K.right - t, K.right)]
            gaps.append((n, Interval(K.left + t, K.right - t)))
        comps.append(nxt)
    return comps, gaps


@dataclass
class ConstantsReport:
    per_interval: Dict[Interval, float]
    supremum: float
    argmax: Optional[Interval]
    family: dict
    notes: str = ""
    skipped: List[Interval] = field(default_factory=list)

    def to_dict(self):
        return {
            "supremum": self.supremum,
            "argmax": None if self.argmax is None else [str(self.argmax.left), str(self.argmax.right)],
            "family": self.family,
            "notes": self.notes,
            "skipped": len(self.skipped),
            "per_interval": [[str(I.left), str(I.right), v] for I, v in sorted(self.per_interval.items())],
        }


def make_report(values: Dict[Interval, float], family: dict, notes="", skipped=()):
    if not values:
        return ConstantsReport({}, 0.0, None, family, notes, list(skipped))
    top = max(values.values())
    arg = min(I for I, v in values.items() if v == top)
    return ConstantsReport(dict(values), float(top), arg, family, notes, list(skipped))


def _family(family):
    if isinstance(family, IntervalFamily):
        return family.members(), family.describe()
    members = sorted(set(family))
    return members, {"kind": "explicit", "size": len(members)}


def _ends(members):
    return (np.array([float(I.left) for I in members]),
            np.array([float(I.right) for I in members]))


# ---------------------------------------------------------------------------
# A2 and testing

@dataclass
class A2Reports:
    simple: ConstantsReport
    half: ConstantsReport
    full: ConstantsReport


def a2_constants(sigma: Weight, w: Weight, family) -> A2Reports:
    """Simple, half-Poisson (max of both directions) and full Poisson A2 ratios."""
    members, desc = _family(family)
    lefts, rights = _ends(members)
    L = rights - lefts
    s_m = np.array([mass(sigma, I) for I in members])
    w_m = np.array([mass(w, I) for I in members])
    Ps = poisson_many(sigma, lefts, rights)
    Pw = poisson_many(w, lefts, rights)
    simple = s_m * w_m / L ** 2
    half = np.maximum(Ps * w_m / L, Pw * s_m / L)
    full = Ps * Pw
    return A2Reports(
        make_report(dict(zip(members, simple)), desc, "sigma(I) w(I) / |I|^2"),
        make_report(dict(zip(members, half)), desc,
                    "max of P(sigma,I) w(I)/|I| and P(w,I) sigma(I)/|I|"),
        make_report(dict(zip(members, full)), desc, "P(sigma,I) P(w,I)"),
    )


def hilbert_square_integral(sigma: Weight, w: Weight, I: Interval, spec: TruncationSpec,
                            budget=DEFAULT_BUDGET):
    """int_I H_{alpha,beta}(sigma 1_I)^2 dw."""
    total = 0.0
    lo, hi = w.atom_slice(I)
    if hi > lo:
        hv = truncated_hilbert(sigma, None, w.atom_x[lo:hi], spec, budget, support=I)
        total += float(np.dot(hv ** 2, w.atom_m[lo:hi]))
    il, ir = I.as_floats()
    s0, s1 = sigma.atom_slice(I)
    for p in w.pieces:
        pl, pr = p.interval.as_floats()
        a, b = max(il, pl), min(ir, pr)
        if not a < b:
            continue
        bps = [x for x in sigma.atom_x[s0:s1] if a < x < b]
        g = lambda xs, p=p: truncated_hilbert(sigma, None, xs, spec, budget, support=I) ** 2 * p(xs)
        total += adaptive_quad(g, a, b, budget, bps)[0]
    return total


def testing_constant(sigma: Weight, w: Weight, family, spec: TruncationSpec = FULL_HILBERT,
                     budget=DEFAULT_BUDGET) -> ConstantsReport:
    """sup_I [int_I H(sigma 1_I)^2 dw / sigma(I)]^(1/2), skipping sigma(I) = 0."""
    members, desc = _family(family)
    keep = [I for I in members if mass(sigma, I) > 0]
    kept = set(keep)
    skipped = [I for I in members if I not in kept]
    vals = _map(lambda I: math.sqrt(hilbert_square_integral(sigma, w, I, spec, budget)
                                    / mass(sigma, I)), keep)
    return make_report(dict(zip(keep, vals)), desc,
                       f"testing, truncation {spec.alpha:g}..{spec.beta:g} ({spec.mode})", skipped)


def measured_H(sigma: Weight, w: Weight, family, spec: TruncationSpec = FULL_HILBERT):
    """A2^(1/2) + T with both testing directions, over the family."""
    a2 = a2_constants(sigma, w, family).full.supremum
    t1 = testing_constant(sigma, w, family, spec).supremum
    t2 = testing_constant(w, sigma, family, spec).supremum
    return math.sqrt(a2) + max(t1, t2)


# ---------------------------------------------------------------------------
# energy and pivotal sums

def _check_endpoints(partition, *weights):
    for I in partition:
        for wt in weights:
            for e in (I.left, I.right):
                lo, hi = wt.atom_slice(Interval(e, e + 1), True, False)
                if hi > lo and wt.atoms[lo][0] == e:
                    raise AtomOnEndpoint("partition endpoint carries an atom", point=e)


@dataclass
class EnergyReport:
    ratios: List[float]
    max_ratio: float
    argmax: int
    H: float


def energy_sum(sigma: Weight, w: Weight, partition: Sequence[Interval], depth=None):
    """sum_I P(sigma, I)^2 E(w, I)^2 w(I), with E^2 w(I) = |I|^-2 int_I (x - E_I x)^2 dw."""
    total = 0.0
    for I in partition:
        if mass(w, I) <= 0:
            continue
        total += poisson_integral(sigma, I) ** 2 * energy_squared(w, I, depth)
    return total


def energy_inequality_report(sigma: Weight, w: Weight, I0: Interval, partitions, H: float,
                             depth=None) -> EnergyReport:
    if not H > 0:
        raise ValueError("H must be positive")
    s0 = mass(sigma, I0)
    if not s0 > 0:
        raise ZeroDenominator("sigma(I0) = 0", interval=I0)
    ratios = []
    for part in partitions:
        _check_endpoints(part, sigma, w)
        ratios.append(energy_sum(sigma, w, part, depth) / (H ** 2 * s0))
    k = int(np.argmax(ratios)) if ratios else -1
    return EnergyReport(ratios, max(ratios, default=0.0), k, H)


def random_partition(I0: Interval, pieces: int, rng) -> List[Interval]:
    a, b = float(I0.left), float(I0.right)
    cuts = np.sort(rng.uniform(a, b, size=pieces - 1))
    pts = [a] + list(cuts) + [b]
    return [Interval(s, t) for s, t in zip(pts, pts[1:]) if s < t]


@dataclass
class PivotalReport:
    forward: float
    dual: float


def pivotal_report(sigma: Weight, w: Weight, I0: Interval, partition) -> PivotalReport:
    """forward = sum P(sigma 1_I0, I)^2 w(I) / sigma(I0); dual swaps the weights."""
    _check_endpoints(partition, sigma, w)

    def side(a, b):
        a0 = mass(a, I0)
        if not a0 > 0:
            return 0.0
        lefts, rights = _ends(partition)
        P = poisson_many(a, lefts, rights, support=I0)
        bm = np.array([mass(b, I) for I in partition])
        return float(np.sum(P ** 2 * bm)) / a0
    return PivotalReport(side(sigma, w), side(w, sigma))


# ---------------------------------------------------------------------------
# Hardy inequality

@dataclass
class HardyResult:
    B: float
    N: float
    r_star: Optional[float]


def hardy_constant_and_norm(sigma: Weight, w_hat: Weight) -> HardyResult:
    """B^2 = sup_r sigma((0, r]) w_hat((r, inf)); N = norm of f -> int_{(0,x)} f dsigma.

    The integral runs over y < x strictly; with that convention the test
    function 1_{(0,r]} gives B <= N exactly.
    """
    if not (sigma.is_atomic and w_hat.is_atomic):
        raise NonAtomic("Hardy constants need atomic weights")
    if (sigma.n_atoms and sigma.atom_x.min() <= 0) or (w_hat.n_atoms and w_hat.atom_x.min() <= 0):
        raise PreconditionViolated("atoms must lie in (0, inf)")
    if not sigma.n_atoms or not w_hat.n_atoms:
        return HardyResult(0.0, 0.0, None)
    y, s = sigma.atom_x, sigma.atom_m
    x, m = w_hat.atom_x, w_hat.atom_m
    M = np.sqrt(m)[:, None] * (y[None, :] < x[:, None]) * np.sqrt(s)[None, :]
    N = float(np.linalg.norm(M, 2))
    left = np.cumsum(s)
    right = np.array([m[x > r].sum() for r in y])
    prod = left * right
    j = int(np.argmax(prod))
    return HardyResult(math.sqrt(float(prod[j])), N, float(y[j]))


def random_hardy_instance(rng, max_atoms=20):
    ns, nw = rng.integers(1, max_atoms + 1, size=2)
    pos = rng.permutation(np.arange(1, 4 * max_atoms + 1))[: ns + nw] / 8.0
    sigma = Weight.from_atoms(pos[:ns], rng.uniform(0.05, 2.0, size=ns))
    w_hat = Weight.from_atoms(pos[ns:], rng.uniform(0.05, 2.0, size=nw))
    return sigma, w_hat


# ---------------------------------------------------------------------------
# weak boundedness

@dataclass
class WeakBoundedness:
    value: float
    first: float
    second: float
    r_star: float


def _support_extent(wt: Weight):
    lo, hi = math.inf, -math.inf
    if wt.n_atoms:
        lo, hi = float(wt.atom_x.min()), float(wt.atom_x.max())
    for p in wt.pieces:
        a, b = p.interval.as_floats()
        lo, hi = min(lo, a), max(hi, b)
    return lo, hi


def weak_boundedness_constant(sigma: Weight, w: Weight, a, per_decade=64, r_range=None):
    """sup_r of P(sigma 1_(-inf,a), (a,a+r)) w(a,a+r]/r + P(w 1_(a,inf), (a-r,a)) sigma[a-r,a)/r.

    The second term places the Poisson average on (a-r, a), the mirror image of
    the first; intervals are closed on the side away from a so that atoms at
    distance exactly r count (right limits of the scan).
    """
    a = float(a)
    s_lo, s_hi = _support_extent(sigma)
    w_lo, w_hi = _support_extent(w)
    if s_hi > a or w_lo < a:
        if w_hi <= a and s_lo >= a:
            return weak_boundedness_constant(w, sigma, a, per_decade, r_range)
        raise SupportsOverlap("weights are not separated by a", a=a)
    dists = []
    for wt in (sigma, w):
        dists += [abs(x - a) for x in wt.atom_x if x != a]
        for p in wt.pieces:
            dists += [abs(float(e) - a) for e in (p.interval.left, p.interval.right)
                      if math.isfinite(float(e)) and float(e) != a]
    if r_range is None:
        lo = min(dists) / 100 if dists else 1e-6
        hi = max(dists) * 100 if dists else 1e6
    else:
        lo, hi = r_range
    n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    rs = np.unique(np.concatenate([np.geomspace(lo, hi, n), np.array(dists, dtype=float)]))
    left_s = restrict(sigma, [Interval(-math.inf, a)], closed=False)
    right_w = restrict(w, [Interval(a, math.inf)], closed=False)
    t1 = poisson_many(left_s, np.full(rs.shape, a), a + rs) * \
        np.array([mass(right_w, Interval(a, a + r)) for r in rs]) / rs
    t2 = poisson_many(right_w, a - rs, np.full(rs.shape, a)) * \
        np.array([mass(left_s, Interval(a - r, a)) for r in rs]) / rs
    tot = t1 + t2
    k = int(np.argmax(tot))
    return WeakBoundedness(float(tot[k]), float(t1.max()), float(t2.max()), float(rs[k]))


# ---------------------------------------------------------------------------
# Poisson testing and dyadic positive operators

@dataclass
class PoissonTestingReports:
    forward: ConstantsReport
    dual: ConstantsReport
    forward_dyadic: ConstantsReport
    dual_dyadic: ConstantsReport


def poisson_testing_report(sigma: Weight, mu: UpperHalfPlaneMeasure, family,
                           budget=DEFAULT_BUDGET) -> PoissonTestingReports:
    """Forward int_{I hat} P(sigma 1_I)^2 dmu / sigma(I); dual int_I P*(t 1_{I hat} mu)^2 dsigma
    over int_{I hat} t^2 dmu; the dyadic variants use 3I x [0, |I|]."""
    members, desc = _family(family)
    out = {}
    for enlarge in (1, 3):
        fwd, dual, sk_f, sk_d = {}, {}, [], []
        for I in members:
            sI = mass(sigma, I)
            sel = mu.in_box(I, enlarge) if mu.points else np.zeros(0, bool)
            if not sI > 0:
                sk_f.append(I)
            else:
                if np.any(sel):
                    ext = extension_many(sigma, mu.x[sel], mu.t[sel], support=I, budget=budget)
                    fwd[I] = float(np.dot(ext ** 2, mu.m[sel])) / sI
                else:
                    fwd[I] = 0.0
            box = mu.in_box(I, 1) if mu.points else np.zeros(0, bool)
            den = float(np.dot(mu.t[box] ** 2, mu.m[box])) if np.any(box) else 0.0
            if not den > 0:
                sk_d.append(I)
                continue
            region = I if enlarge == 1 else I.dilate(3)
            g = lambda xs, I=I: dual_poisson(mu, np.asarray(xs, float), I) ** 2
            dual[I] = integrate(sigma, g, region, budget) / den
        tag = "" if enlarge == 1 else " (3I enlarged)"
        out[enlarge] = (make_report(fwd, desc, "forward Poisson testing" + tag, sk_f),
                        make_report(dual, desc, "dual Poisson testing" + tag, sk_d))
    return PoissonTestingReports(out[1][0], out[1][1], out[3][0], out[3][1])


@dataclass
class DyadicPositiveReport:
    norm: float
    testing: float
    dual_testing: float
    testing_linear: float
    dual_testing_linear: float


def _in_hat(I: Interval, x, t):
    return (x >= float(I.left)) & (x < float(I.right)) & (t <= float(I.length))


def dyadic_positive_report(lam: Dict[Interval, float], sigma: Weight,
                           mu: UpperHalfPlaneMeasure, tests=None) -> DyadicPositiveReport:
    """Exact norm of T_sigma f = sum lambda_I int_I f dsigma 1_{I hat} from L^2(sigma) to
    L^2(mu), and the two testing constants (square-rooted and linear)."""
    if not sigma.is_atomic:
        raise NonAtomic("dyadic operator report needs atomic sigma")
    lam = {I: float(v) for I, v in lam.items() if v != 0}
    if not lam or not sigma.n_atoms or not mu.points:
        return DyadicPositiveReport(0.0, 0.0, 0.0, 0.0, 0.0)
    ys, s = sigma.atom_x, sigma.atom_m
    px, pt, pm = mu.x, mu.t, mu.m
    A = np.zeros((len(px), len(ys)))
    for I, v in lam.items():
        inI = (ys >= float(I.left)) & (ys < float(I.right))
        A += v * np.outer(_in_hat(I, px, pt), inI)
    M = np.sqrt(pm)[:, None] * A * np.sqrt(s)[None, :]
    norm = float(np.linalg.norm(M, 2))
    tests = set(lam) if tests is None else set(tests)
    fwd = dual = 0.0
    for I in tests:
        inI = (ys >= float(I.left)) & (ys < float(I.right))
        hat = _in_hat(I, px, pt)
        sI = float(s[inI].sum())
        if sI > 0:
            Tf = A[:, inI] @ s[inI]
            fwd = max(fwd, float(np.dot(Tf[hat] ** 2, pm[hat])) / sI)
        mI = float(pm[hat].sum())
        if mI > 0:
            Tg = A[hat, :].T @ pm[hat]
            dual = max(dual, float(np.dot(Tg[inI] ** 2, s[inI])) / mI)
    return DyadicPositiveReport(norm, math.sqrt(fwd), math.sqrt(dual), fwd, dual)


def dyadic_descendants(lam_keys, min_length):
    """All dyadic subintervals of the keys down to ``min_length``."""
    out = set()
    stack = list(lam_keys)
    while stack:
        I = stack.pop()
        if I in out:
            continue
        out.add(I)
        if I.length / 2 >= min_length:
            stack += list(I.children())
    return out


def random_dyadic_instance(rng, depth=6, n_atoms=30, n_points=30):
    """Random lambda on the dyadic subintervals of [0,1], atoms and points."""
    lam = {}
    for n in range(depth + 1):
        h = Fraction(1, 2 ** n)
        for k in range(2 ** n):
            if rng.random() < 0.3:
                lam[Interval(k * h, (k + 1) * h)] = float(rng.uniform(0, 1))
    na = int(rng.integers(1, n_atoms + 1))
    sigma = Weight.from_atoms(np.sort(rng.choice(np.arange(1, 4096), na, replace=False)) / 4096.0,
                              rng.uniform(0.1, 1.0, na))
    npts = int(rng.integers(1, n_points + 1))
    mu = UpperHalfPlaneMeasure(tuple(
        (float(rng.uniform(0, 1)), float(2.0 ** -rng.uniform(0, depth + 1)), float(rng.uniform(0.1, 1)))
        for _ in range(npts)))
    return lam, sigma, mu


# ---------------------------------------------------------------------------
# Poisson average of random dyadic kernels

@dataclass
class AveragePStats:
    mean: float
    min: float
    max: float
    per_grid_max: float
    stderr: float
    trials: int


def dyadic_kernel(x, y, t, offset):
    """sum over grid intervals I containing x and y with |I| >= t of |I|^-2; grid offset + 2^n Z."""
    x, y, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(t, float))
    n = np.ceil(np.log2(t)).astype(int)
    out = np.zeros(x.shape)
    todo = np.ones(x.shape, dtype=bool)
    for _ in range(200):
        if not todo.any():
            break
        L = np.exp2(n.astype(float))
        same = np.floor((x - offset) / L) == np.floor((y - offset) / L)
        hit = todo & same
        # nested grids: every larger interval also holds both points
        out[hit] = (4.0 / 3.0) / L[hit] ** 2
        todo &= ~same
        n = n + 1
    return out


def poisson_average_check(x, y, t, trials: int, seed) -> AveragePStats:
    """E_D of the dyadic kernel divided by 1/(t^2 + (x-y)^2), per sampled triple."""
    x, y, t = (np.atleast_1d(np.asarray(v, float)) for v in (x, y, t))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    true = 1.0 / (t ** 2 + (x - y) ** 2)
    top = float(np.ceil(np.log2(np.max(np.abs(x) + np.abs(y) + t)))) + 2
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(0, 2.0 ** top, size=trials)
    ratios = np.array([dyadic_kernel(x, y, t, u) / true for u in offsets])
    mean = ratios.mean(axis=0)
    se = ratios.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros_like(mean)
    return AveragePStats(float(mean.mean()), float(mean.min()), float(mean.max()),
                         float(ratios.max()), float(se.mean()), trials)


# ---------------------------------------------------------------------------
# monotonicity principle

@dataclass
class MonotonicityResult:
    lhs: float
    rhs: float
    canonical: float = 0.0    # |<H nu, h>| in the limit alpha -> 0, beta -> inf

    @property
    def ratio(self):
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else math.inf)


def default_ladder(J: Interval, mu: Weight, per_octave=4):
    d_lo, d_hi = _support_extent(mu)
    jl, jr = float(J.left), float(J.right)
    near = max(min(abs(d_lo - jr), abs(jl - d_hi), abs(d_lo - jl), abs(jr - d_hi)), float(J.length))
    far = max(abs(d_lo - jl), abs(d_hi - jr), abs(d_hi - jl), abs(d_lo - jr)) + float(J.length)
    alphas = [float(J.length) * 2.0 ** -k for k in (2, 6, 12)]
    betas = list(np.geomspace(near / 4, 64 * far, int(per_octave * math.log2(256 * far / near)) + 1))
    return [TruncationSpec(a, b, "smooth") for a in alphas for b in betas if a < b]


def monotonicity_check(J: Interval, I: Interval, mu: Weight, w: Weight, nu_signs,
                       r: int = 4, epsilon: float = 0.25, ladder=None) -> MonotonicityResult:
    """lhs = max over truncations of |<H nu, h_J^w>_w|, rhs = P(mu, J) <x/|J|, h_J^w>_w."""
    if not mu.is_atomic:
        raise NonAtomic("nu is built from the atoms of mu")
    if not I.contains_interval(J):
        raise PreconditionViolated("need J inside I")
    if 2 ** r * J.length > I.length:
        raise PreconditionViolated("need 2^r |J| <= |I|")
    lo, hi = mu.atom_slice(I, False, False)
    if hi > lo:
        raise PreconditionViolated("mu must live off the interior of I")
    d = min(J.distance_to(x) for x, _ in mu.atoms)
    if d < 2 ** (r * (1 - epsilon)) * float(J.length):
        raise SeparationTooSmall("mu too close to J", distance=d)
    signs = np.asarray(nu_signs, dtype=float)
    if signs.shape != (mu.n_atoms,) or np.any(np.abs(signs) > 1):
        raise PreconditionViolated("need one sign in [-1, 1] per atom")
    h = haar_function(w, J)
    if h.degenerate:
        return MonotonicityResult(0.0, 0.0)
    ladder = default_ladder(J, mu) if ladder is None else ladder
    nm = signs * mu.atom_m

    def pairing(spec):
        f = lambda xs: kernel(mu.atom_x[None, :] - np.atleast_1d(xs)[:, None], spec) @ nm * h(xs)
        return integrate(w, f, J)
    lhs = max(abs(pairing(s)) for s in ladder)
    far = max(abs(x) for x in mu.atom_x) + abs(float(J.left)) + float(J.length)
    canon = abs(pairing(TruncationSpec(1e-9 * float(J.length), 1e9 * far, "hard")))
    rhs = poisson_integral(mu, J) * haar_x_coefficient(w, J) / float(J.length)
    return MonotonicityResult(float(lhs), float(rhs), float(canon))


# ---------------------------------------------------------------------------
# compactness diagnostics

def half_poisson_at(sigma: Weight, w: Weight, a, lam):
    """max of the four one-sided products at the point a and scale lam, e.g.
    P(sigma 1_[a,inf), [a, a+lam]) w([a-lam, a]) / lam (closed intervals)."""
    a = float(a)
    best = 0.0
    for u, v in ((sigma, w), (w, sigma)):
        right = restrict(u, [Interval(a, math.inf)])
        left = restrict(u, [Interval(-math.inf, a)])
        mv_left = mass(v, Interval(a - lam, a))
        mv_right = mass(v, Interval(a, a + lam))
        if mv_left > 0:
            best = max(best, poisson_integral(right, Interval(a, a + lam)) * mv_left / lam)
        if mv_right > 0:
            best = max(best, poisson_integral(left, Interval(a - lam, a)) * mv_right / lam)
    return best


@dataclass
class HalfPoissonLimit:
    lambdas: List[float]
    values: List[float]
    limit: float
    limit_error: float


def small_scale_half_poisson(sigma: Weight, w: Weight, a, lambdas=None, degree=4):
    """Values of half_poisson_at over a ladder lam -> 0 and their limit, from a
    polynomial fit in h = 1/ln(1/lam) (the convergence is logarithmic in lam)."""
    if lambdas is None:
        lambdas = [10.0 ** -k for k in range(20, 301, 10)]
    vals = [half_poisson_at(sigma, w, a, lam) for lam in lambdas]
    h = np.array([1.0 / math.log(1.0 / lam) for lam in lambdas])
    y = np.array(vals)
    fits = []
    for deg in (degree - 1, degree):
        fits.append(float(np.polynomial.polynomial.polyfit(h, y, deg)[0]))
    return HalfPoissonLimit(list(lambdas), vals, fits[-1], abs(fits[-1] - fits[0]))


def _features(*weights):
    pts = set()
    for wt in weights:
        pts.update(float(x) for x in wt.atom_x)
        for p in wt.pieces:
            pts.update(float(e) for e in (p.interval.left, p.interval.right) if math.isfinite(e))
    return sorted(pts)


def default_family_builder(sigma, w, cap=256):
    feats = _features(sigma, w)

    def inner(Lam, lam):
        out = []
        for k in (1, 2, 3):
            ell = lam * 2.0 ** -k
            for p in feats:
                for s in (p - ell, p - ell / 2, p):
                    if -Lam <= s and s + ell <= Lam and s < s + ell:
                        out.append(Interval(s, s + ell))
            n = min(cap, int(2 * Lam / ell))
            for s in np.linspace(-Lam, Lam - ell, max(n, 1)):
                if float(s) + ell > float(s):
                    out.append(Interval(float(s), float(s) + ell))
        return out

    def outer(Lam, lams):
        out = []
        for ell in sorted(set(list(lams) + [Lam, 4 * Lam])):
            if Lam + ell == Lam:
                continue
            out += [Interval(Lam, Lam + ell), Interval(-Lam - ell, -Lam)]
            for p in feats:
                if p > Lam:
                    out.append(Interval(max(Lam, p - ell / 2), max(Lam, p - ell / 2) + ell))
                if p < -Lam:
                    out.append(Interval(min(-Lam, p + ell / 2) - ell, min(-Lam, p + ell / 2)))
        return out
    return inner, outer


def _product_sup(sigma, w, members):
    if not members:
        return 0.0
    lefts, rights = _ends(members)
    return float(np.max(poisson_many(sigma, lefts, rights) * poisson_many(w, lefts, rights)))


def _testing_sup(sigma, w, members, spec):
    best = 0.0
    for I in members:
        for u, v in ((sigma, w), (w, sigma)):
            uI = mass(u, I)
            if uI > 0:
                best = max(best, hilbert_square_integral(u, v, I, spec) / uI)
    return best


def trend_flag(values, rel=0.1):
    """'decreasing', 'increasing' or 'flat' comparing the last entry with the first."""
    v = [x for x in values if np.isfinite(x)]
    if not v:
        return "n/a"
    if len(v) < 2 or v[0] == v[-1]:
        return "flat"
    base = max(abs(v[0]), 1e-300)
    change = (v[-1] - v[0]) / base
    if change < -rel:
        return "decreasing"
    if change > rel:
        return "increasing"
    return "flat"


@dataclass
class CompactnessTable:
    rows: List[dict]
    flags: Dict[str, str]
    vanishing: Dict[str, Optional[bool]]


def compactness_diagnostics(sigma: Weight, w: Weight, Lambda_ladder, lambda_ladder,
                            family_builder=None, spec: TruncationSpec = FULL_HILBERT,
                            testing=True, vanish_ratio=0.25) -> CompactnessTable:
    """Finite-family versions of the five vanishing conditions and their duals.

    Columns: P1 small-scale Poisson products inside [-L, L]; P2 products outside;
    P3 one-sided products at +-L; S1 and S2 the testing analogues (both
    directions); H0 the small-scale one-sided product at the support features.
    """
    inner, outer = family_builder or default_family_builder(sigma, w)
    lams = sorted(lambda_ladder, reverse=True)
    feats = _features(sigma, w)
    rows = []
    for Lam in sorted(Lambda_ladder):
        box = Interval(-Lam, Lam)
        s0, w0 = restrict(sigma, [box]), restrict(w, [box])
        s1 = restrict(sigma, [Interval(-math.inf, -Lam), Interval(Lam, math.inf)], closed=False)
        w1 = restrict(w, [Interval(-math.inf, -Lam), Interval(Lam, math.inf)], closed=False)
        out_members = outer(Lam, lams)
        p2 = _product_sup(s1, w1, out_members)
        s2 = _testing_sup(s1, w1, out_members, spec) if testing else float("nan")
        for lam in lams:
            members = inner(Lam, lam)
            p1 = _product_sup(s0, w0, members)
            p3 = max(half_poisson_at(sigma, w, Lam, lam), half_poisson_at(sigma, w, -Lam, lam))
            h0 = float(max([half_poisson_at(sigma, w, p, lam) for p in feats if -Lam <= p <= Lam],
                           default=0.0))
            s1v = _testing_sup(s0, w0, members, spec) if testing else float("nan")
            rows.append({"Lambda": Lam, "lambda": lam, "P1": p1, "P2": p2, "P3": p3,
                         "S1": s1v, "S2": s2, "H0": h0})
    flags, vanishing = {}, {}
    big = max(Lambda_ladder)
    for col in ("P1", "S1", "H0"):
        seq = [r[col] for r in rows if r["Lambda"] == big]
        flags[col] = trend_flag(seq)
        vanishing[col] = _vanishes(seq, vanish_ratio)
    for col in ("P2", "S2", "P3"):
        seq = []
        for Lam in sorted(Lambda_ladder):
            vals = [r[col] for r in rows if r["Lambda"] == Lam]
            seq.append(max(vals))
        flags[col] = trend_flag(seq)
        vanishing[col] = _vanishes(seq, vanish_ratio)
    return CompactnessTable(rows, flags, vanishing)


def _vanishes(seq, ratio):
    v = [x for x in seq if np.isfinite(x)]
    if not v:
        return None
    top = max(v)
    return bool(top == 0 or v[-1] <= ratio * top)
