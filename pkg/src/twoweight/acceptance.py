"""The fourteen acceptance criteria as plain functions.

Each returns a CriterionResult carrying the measured quantities, so the
pytest suite and the ``verify-all`` command share one implementation.
Tolerances are the stated ones; nothing is relaxed when a check fails.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import cantor
from .constants import (IntervalFamily, compactness_diagnostics, dyadic_descendants,
                        dyadic_positive_report, hardy_constant_and_norm, measured_H,
                        monotonicity_check, poisson_average_check, random_dyadic_instance,
                        random_hardy_instance, small_scale_half_poisson)
from .grid import GoodnessParams, estimate_bad_probability
from .haar import HaarExpansion
from .measure import DensityPiece, FunctionPiece, Interval, Weight
from .stopping import (build_stopping_data, cz_properties, dyadic_energy_constant,
                       quasi_orthogonality_check)
from .transforms import TruncationSpec, kernel_gradient_check


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    details: dict = field(default_factory=dict)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        keys = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items() if not isinstance(v, (list, dict)))
        return f"[{status}] criterion {self.number:2d} {self.name}: {keys} ({self.seconds:.2f}s)"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _timed(number, name, fn):
    t0 = time.perf_counter()
    passed, details = fn()
    return CriterionResult(number, name, bool(passed), time.perf_counter() - t0, details)


def _atomic(rng, n, lo=0.0, hi=1.0):
    pos = np.sort(rng.uniform(lo, hi, size=n))
    return Weight.from_atoms(pos, rng.uniform(0.1, 1.0, size=n))


# ---------------------------------------------------------------------------

def criterion_1(depth=8):
    def run():
        t0 = time.perf_counter()
        _, _, atoms = cantor.build_sigma_pair(depth)
        ratios = np.array(cantor.gap_simple_ratios(depth, atoms))
        mass_err = max(abs(a.s - 2 * float(a.gap.length) ** (2 - cantor.DIM)) for a in atoms)
        secs = time.perf_counter() - t0
        ratio_err = float(np.max(np.abs(ratios - 2.0)))
        ok = ratio_err <= 1e-12 and mass_err <= 1e-14 and secs < 10
        return ok, {"ratio_min": float(ratios.min()), "ratio_max": float(ratios.max()),
                    "ratio_error": ratio_err, "mass_error": mass_err, "build_seconds": secs}
    return _timed(1, "Cantor calibration", run)


def criterion_2(max_depth=8):
    def run():
        z_c = cantor.locate_points(max_depth, Interval(Fraction(1, 3), Fraction(2, 3)))[0]
        interior = True
        worst = 0.0
        for n in range(1, max_depth + 1):
            for a in cantor.locate_all(n):
                lo, hi = float(a.gap.left), float(a.gap.right)
                interior &= lo < a.z < hi and lo < a.z_prime < hi
                worst = max(worst, a.closeness)
        ok = abs(z_c - 0.5) <= 1e-10 and interior and worst < 0.5
        return ok, {"central_z_error": abs(z_c - 0.5), "all_interior": interior,
                    "max_closeness": worst}
    return _timed(2, "central-gap zero and closeness", run)


def criterion_3(depth=8):
    def run():
        t0 = time.perf_counter()
        _, _, atoms = cantor.build_sigma_pair(depth)
        table = cantor.divergence_table(depth, atoms, prime=True)
        secs = time.perf_counter() - t0
        rel = max(abs(table[N - 1] - N) / N for N in range(2, depth + 1))
        return rel <= 0.02 and secs < 60, {"max_relative_error": rel, "partial_sums": table,
                                            "seconds_build": secs}
    return _timed(3, "sigma' divergence", run)


def criterion_4(depth=8):
    def run():
        sigma, _, _ = cantor.build_sigma_pair(depth)
        w = cantor.cantor_weight(depth)
        piv, energy = cantor.pivotal_partial_sums(depth, sigma, w)
        inc = [piv[N - 1] - piv[N - 2] for N in range(3, depth + 1)]
        ok = min(inc) >= 0.2 and all(e == 0.0 for e in energy)
        return ok, {"min_increment": min(inc), "increments": inc, "max_dual_energy": max(energy)}
    return _timed(4, "pivotal failure", run)


def criterion_5(lo=6, hi=8):
    def run():
        r = {n: cantor.example_report(n) for n in (lo, hi)}
        keys = ("a2_full_sup", "testing_forward", "testing_dual")
        change = {k: abs(r[hi][k] - r[lo][k]) / r[lo][k] for k in keys}
        ok = max(change.values()) <= 0.25
        det = {f"{k}_{n}": r[n][k] for k in keys for n in (lo, hi)}
        det["max_change"] = max(change.values())
        return ok, det
    return _timed(5, "boundedness trends", run)


def criterion_6(instances=100, seed=7):
    def run():
        t0 = time.perf_counter()
        rng = np.random.default_rng(seed)
        viol = 0
        worst = 0.0
        for _ in range(instances):
            s, wh = random_hardy_instance(rng)
            h = hardy_constant_and_norm(s, wh)
            viol += not (h.B <= h.N * (1 + 1e-12) and h.N <= 2 * h.B * (1 + 1e-12))
            if h.B > 0:
                worst = max(worst, h.N / h.B)
        secs = time.perf_counter() - t0
        return viol == 0 and secs < 5, {"violations": viol, "max_N_over_B": worst, "loop_seconds": secs}
    return _timed(6, "Hardy B <= N <= 2B", run)


def criterion_7(instances=100, seed=11, depth=6):
    def run():
        t0 = time.perf_counter()
        rng = np.random.default_rng(seed)
        viol_lo = viol_hi = 0
        worst = 0.0
        for _ in range(instances):
            lam, sigma, mu = random_dyadic_instance(rng, depth)
            tests = dyadic_descendants(lam, Fraction(1, 2 ** depth))
            rep = dyadic_positive_report(lam, sigma, mu, tests)
            T = max(rep.testing, rep.dual_testing)
            viol_lo += T > rep.norm * (1 + 1e-12)
            viol_hi += rep.norm > 8 * T * (1 + 1e-12)
            if T > 0:
                worst = max(worst, rep.norm / T)
        secs = time.perf_counter() - t0
        ok = viol_lo == 0 and viol_hi == 0 and secs < 30
        return ok, {"testing_gt_norm": viol_lo, "norm_gt_8_testing": viol_hi,
                    "max_norm_over_testing": worst, "loop_seconds": secs}
    return _timed(7, "dyadic positive operator", run)


def criterion_8(trials=10_000, seed=2024, epsilon=0.5):
    def run():
        est = {}
        for r in (4, 6, 8):
            est[r] = estimate_bad_probability(GoodnessParams(epsilon, r), trials, seed).estimate
        bound = {r: 4 / epsilon * 2 ** (-epsilon * r) for r in est}
        ok = all(est[r] <= bound[r] for r in est) and est[4] > est[6] > est[8]
        det = {f"p_bad_r{r}": est[r] for r in est}
        det.update({f"bound_r{r}": bound[r] for r in est})
        return ok, det
    return _timed(8, "good/bad statistics", run)


def _haar_checks(w, f, depth):
    root = Interval(0.0, 1.0)
    ex = HaarExpansion(w, f, root, depth)
    st = ex.stats
    leaves = st.M[depth]
    nodes = [(l, k) for l in range(depth) for k in range(1 << l) if ex.ok[l][k]]
    mids = 0.5 * (st.edges[:-1] + st.edges[1:])
    Hm = np.array([ex.haar(l, k)(mids) for l, k in nodes]) if nodes else np.zeros((0, len(mids)))
    gram = (Hm * leaves) @ Hm.T
    ortho = float(np.max(np.abs(gram - np.eye(len(nodes))))) if nodes else 0.0
    mean0 = float(np.max(np.abs(Hm @ leaves))) if nodes else 0.0
    W = st.M[0][0]
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = np.where(leaves > 0, st.F[depth] ** 2 / np.where(leaves > 0, leaves, 1), 0.0).sum()
    planch = abs(ex.mean_term ** 2 * W + sum(float(np.sum(c ** 2)) for c in ex.coef) - proj)
    tele = 0.0
    mart = 0.0
    for l in range(depth + 1):
        for k in range(1 << l):
            if st.M[l][k] > 0:
                tele = max(tele, abs(ex.telescoped_average(l, k) - ex.average(l, k)))
    for l, k in nodes:
        I = st.interval(l, k)
        lo, hi = w.atom_slice(I)
        xs = w.atom_x[lo:hi]
        c = float(I.center)
        e_m, e_p, e_I = ex.average(l + 1, 2 * k), ex.average(l + 1, 2 * k + 1), ex.average(l, k)
        rhs = np.where(xs < c, e_m, e_p) - e_I
        mart = max(mart, float(np.max(np.abs(ex.delta(l, k, xs) - rhs))))
    leaf = ex.leaf_of(w.atom_x)
    leaf_avg = np.array([ex.average(depth, int(j)) for j in leaf])
    recon = float(np.max(np.abs(ex.reconstruct(w.atom_x) - leaf_avg)))
    scale = max(1.0, float(np.max(np.abs(f(w.atom_x)))))
    return {"orthonormality": ortho, "mean_zero": mean0, "plancherel": planch / scale ** 2,
            "telescoping": tele / scale, "martingale": mart / scale, "reconstruction": recon / scale}


def criterion_9(instances=50, seed=5, depth=8):
    def run():
        rng = np.random.default_rng(seed)
        worst = {}
        for _ in range(instances):
            w = _atomic(rng, int(rng.integers(2, 40)))
            coeffs = rng.normal(size=4)
            f = lambda x, c=coeffs: np.cos(3 * c[0] * np.asarray(x)) + c[1] * np.asarray(x) ** 2 + c[2]
            for k, v in _haar_checks(w, f, depth).items():
                worst[k] = max(worst.get(k, 0.0), v)
        return max(worst.values()) <= 1e-10, worst
    return _timed(9, "Haar suite", run)


def stopping_instance(rng, depth=8):
    sigma = _atomic(rng, int(rng.integers(4, 30)))
    w = _atomic(rng, int(rng.integers(4, 30)))
    vals = rng.lognormal(0, 1.5, size=sigma.n_atoms) * rng.choice([-1, 1], size=sigma.n_atoms)
    pos = sigma.atom_x
    f = lambda x: vals[np.clip(np.searchsorted(pos, np.asarray(x, float)), 0, len(pos) - 1)]
    root = Interval(0.0, 1.0)
    H = measured_H(sigma, w, IntervalFamily("dyadic", 5, Interval(0.0, 1.0)))
    C0 = max(1.0, dyadic_energy_constant(sigma, w, root, depth) / H ** 2)
    ex = HaarExpansion(sigma, f, root, depth)
    sd = build_stopping_data(ex, sigma, w, H, C0)
    return sd, ex


def criterion_10(instances=100, seed=13, depth=8):
    def run():
        rng = np.random.default_rng(seed)
        worst_car = worst_q = 0.0
        fails = 0
        for _ in range(instances):
            sd, ex = stopping_instance(rng, depth)
            props = cz_properties(sd, ex)
            lhs, rhs = quasi_orthogonality_check(sd, ex)
            worst_car = max(worst_car, props["carleson_constant"])
            worst_q = max(worst_q, lhs / rhs if rhs > 0 else 0.0)
            fails += not (props["root_in_tree"] and props["averages_controlled"] and props["alpha_monotone"])
        ok = worst_car <= 2.0 and worst_q <= 64 and fails == 0
        return ok, {"max_carleson": worst_car, "max_quasi_ratio": worst_q, "cz_failures": fails}
    return _timed(10, "stopping data", run)


def monotonicity_instance(rng):
    J = Interval(0.0, 1.0)
    I = Interval(-7.5, 8.5)
    w = _atomic(rng, int(rng.integers(2, 10)), 0.0, 1.0)
    k = int(rng.integers(1, 6))
    side = rng.choice([-1, 1], size=k)
    pos = np.where(side > 0, rng.uniform(17, 64, size=k), rng.uniform(-63, -16, size=k))
    mu = Weight.from_atoms(np.sort(pos), rng.uniform(0.1, 1.0, size=k))
    signs = rng.choice([-1.0, 1.0], size=k)
    return J, I, mu, w, signs


def criterion_11(instances=200, seed=17):
    def run():
        rng = np.random.default_rng(seed)
        worst_signed = 0.0
        pos_lo, pos_hi = math.inf, 0.0
        for _ in range(instances):
            J, I, mu, w, signs = monotonicity_instance(rng)
            signed = monotonicity_check(J, I, mu, w, signs)
            plain = monotonicity_check(J, I, mu, w, np.ones(mu.n_atoms))
            if signed.rhs > 0:
                worst_signed = max(worst_signed, signed.lhs / signed.rhs)
            if plain.rhs > 0:
                pos_lo = min(pos_lo, plain.ratio)
                pos_hi = max(pos_hi, plain.ratio)
        ok = worst_signed <= 8 and 0.25 <= pos_lo and pos_hi <= 4
        return ok, {"max_signed_ratio": worst_signed, "positive_ratio_min": pos_lo,
                    "positive_ratio_max": pos_hi}
    return _timed(11, "monotonicity principle", run)


def admissible_triples(rng, n):
    """(x, x', y, spec) with 2|x - x'| < |x - y| and both distances inside the kernel support."""
    out = []
    while len(out) < n:
        alpha = 10 ** rng.uniform(-2, 0)
        beta = alpha * 10 ** rng.uniform(0.7, 3)
        spec = TruncationSpec(alpha, beta, "smooth")
        dist = rng.uniform(0, 2 * beta) * rng.choice([-1, 1])
        x = rng.uniform(-1, 1)
        y = x + dist
        xp = x + rng.uniform(-0.5, 0.5) * abs(dist) * rng.uniform(0, 0.999)
        if xp == x or not 2 * abs(x - xp) < abs(x - y) or abs(y - xp) >= 2 * beta:
            continue
        out.append((x, xp, y, spec))
    return out


def criterion_12(samples=10_000, seed=19):
    def run():
        rng = np.random.default_rng(seed)
        c_min, c_max, band_err = math.inf, -math.inf, 0.0
        outside = 0
        for x, xp, y, spec in admissible_triples(rng, samples):
            g = kernel_gradient_check(x, xp, y, spec)
            c_min, c_max = min(c_min, g.C), max(c_max, g.C)
            outside += not (0 < g.C <= 1 + 1e-12)
            if g.in_exact_band:
                band_err = max(band_err, abs(g.C - 1))
        ok = outside == 0 and band_err <= 1e-12
        return ok, {"C_min": c_min, "C_max": c_max, "outside_0_1": outside, "band_error": band_err}
    return _timed(12, "kernel gradient identity", run)


def criterion_13(grids=1000, points=100, seed=23):
    def run():
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1, 1, points)
        y = np.where(rng.random(points) < 0.5, x + rng.uniform(-0.01, 0.01, points), rng.uniform(-1, 1, points))
        t = 2.0 ** rng.uniform(-10, 0, points)
        st = poisson_average_check(x, y, t, grids, seed)
        ok = st.min >= 1 / 256 and st.max <= 4 and st.per_grid_max <= 4
        return ok, {"mean": st.mean, "min": st.min, "max": st.max, "per_grid_max": st.per_grid_max}
    return _timed(13, "Poisson average of dyadic kernels", run)


def compactness_pairs():
    delta0 = Weight.from_atoms([0], [1], label="delta0")
    s1 = Weight(pieces=[FunctionPiece(Interval(0, Fraction(1, 3)), "x_over_log_squared")],
                label="x/ln^2 x on (0,1/3)")
    s2 = Weight(pieces=[DensityPiece(Interval(1, math.inf), (1.0,))], label="1_(1,inf)")
    return delta0, s1, s2


def criterion_14():
    def run():
        d0, s1, s2 = compactness_pairs()
        lim = small_scale_half_poisson(s1, d0, 0)
        tab1 = compactness_diagnostics(s1, d0, [1.0], [10.0 ** -k for k in (2, 3, 4, 6, 8)],
                                       testing=False)
        tab2 = compactness_diagnostics(s2, d0, [10.0, 100.0], [0.1, 0.01, 0.001], testing=False)
        small = [r["P1"] for r in tab2.rows if r["Lambda"] == 100.0]
        err = abs(lim.limit - 1 / math.log(3))
        ok = (err <= 1e-3 and tab1.vanishing["H0"] is False and min(small) >= 0.5
              and tab2.vanishing["P1"] is False)
        return ok, {"limit": lim.limit, "limit_error": err, "raw_smallest_lambda": lim.values[-1],
                    "example1_vanishing": tab1.vanishing["H0"], "example2_min_product": min(small),
                    "example2_vanishing": tab2.vanishing["P1"]}
    return _timed(14, "compactness diagnostics", run)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
            criterion_13, criterion_14]


def run_all(only=None):
    out = []
    for i, fn in enumerate(CRITERIA, start=1):
        if only is None or i in only:
            out.append(fn())
    return out
