"""Calderon-Zygmund stopping data with energy stopping, pair collections,
the size functional, direct stopping-form evaluation, and the upper
half-plane measure built from Haar coefficients of x.

Tree nodes are (level, k) pairs below the expansion root, as in ``haar``.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import NotAdmissible
from .haar import DyadicTreeStats, HaarExpansion, haar_x_coefficient
from .measure import Interval, Weight, complement, integrate, mass, restrict
from .transforms import (TruncationSpec, UpperHalfPlaneMeasure, poisson_integral, poisson_many,
                         truncated_hilbert)

STOP_FACTOR = 10.0

Node = Tuple[int, int]


def _contains(a: Node, b: Node):
    """Node a contains node b."""
    return b[0] >= a[0] and (b[1] >> (b[0] - a[0])) == a[1]


def _descendants(node: Node, depth: int):
    l, k = node
    for m in range(l + 1, depth + 1):
        span = 1 << (m - l)
        for j in range(k * span, (k + 1) * span):
            yield (m, j)


class _Context:
    """Shared per-root statistics for sigma and w."""

    def __init__(self, sigma: Weight, w: Weight, root: Interval, depth: int, sigma_stats=None):
        self.sigma, self.w, self.root, self.depth = sigma, w, root, depth
        self.sst = sigma_stats or DyadicTreeStats(sigma, root, depth, check=False)
        self.wst = DyadicTreeStats(w, root, depth, check=False)
        self.S = self.wst.x_coeff_sums()
        self.edges = self.sst.edges

    def bounds(self, node):
        l, k = node
        n = 1 << (self.depth - l)
        return self.edges[k * n], self.edges[(k + 1) * n]

    def energy_term(self, nodes, F: Node):
        """P(sigma 1_F, I)^2 |I|^-2 sum_{J in I} <x,h_J>^2 for each node I."""
        lefts = np.array([self.bounds(n)[0] for n in nodes])
        rights = np.array([self.bounds(n)[1] for n in nodes])
        Fl, Fr = self.bounds(F)
        P = poisson_many(self.sigma, lefts, rights, support=Interval(Fl, Fr))
        S = np.array([self.S[l][k] for l, k in nodes])
        return P ** 2 * S / (rights - lefts) ** 2

    def sigma_mass(self, node):
        return self.sst.M[node[0]][node[1]]


def _energy_violators(ctx: _Context, F: Node, H: float, C0: float):
    nodes = list(_descendants(F, ctx.depth))
    if not nodes:
        return set()
    lhs = ctx.energy_term(nodes, F)
    rhs = STOP_FACTOR * C0 * H ** 2 * np.array([ctx.sigma_mass(n) for n in nodes])
    return {n for n, a, b in zip(nodes, lhs, rhs) if a > b}


def _maximal(nodes):
    out = []
    for n in sorted(nodes):
        if not any(_contains(m, n) for m in out):
            out.append(n)
    return out


@dataclass
class EnergyStopping:
    intervals: List[Interval]
    sigma_fraction: float


def energy_stopping_children(I0: Interval, sigma: Weight, w: Weight, H: float, C0: float = 1.0,
                             depth: int = 8) -> EnergyStopping:
    """Maximal I strictly inside I0 with P(sigma 1_I0, I)^2 E(w,I)^2 w(I) > 10 C0 H^2 sigma(I).

    E(w,I)^2 w(I) is taken as |I|^-2 sum_{J in I} <x, h_J>^2 (see the energy module note).
    """
    ctx = _Context(sigma, w, I0, depth)
    chosen = _maximal(_energy_violators(ctx, (0, 0), H, C0))
    total = ctx.sigma_mass((0, 0))
    frac = sum(ctx.sigma_mass(n) for n in chosen) / total if total > 0 else 0.0
    return EnergyStopping([ctx.sst.interval(*n) for n in chosen], frac)


def dyadic_energy_constant(sigma: Weight, w: Weight, root: Interval, depth: int = 8) -> float:
    """max over tree nodes F of (max over dyadic partitions of F into proper subintervals of
    sum P(sigma 1_F, I)^2 E(w,I)^2 w(I)) / sigma(F), by dynamic programming."""
    ctx = _Context(sigma, w, root, depth)
    worst = 0.0
    for l in range(depth):
        for k in range(1 << l):
            F = (l, k)
            sF = ctx.sigma_mass(F)
            if not sF > 0:
                continue
            nodes = list(_descendants(F, depth))
            terms = dict(zip(nodes, ctx.energy_term(nodes, F)))
            best = {}
            for n in sorted(nodes, key=lambda n: -n[0]):
                m, j = n
                kids = [(m + 1, 2 * j), (m + 1, 2 * j + 1)]
                split = sum(best[c] for c in kids) if m < depth else 0.0
                best[n] = max(terms[n], split)
            val = best[(l + 1, 2 * k)] + best[(l + 1, 2 * k + 1)]
            worst = max(worst, val / sF)
    return worst


@dataclass
class StoppingData:
    root: Interval
    depth: int
    alpha: Dict[Node, float]
    parent: Dict[Node, Optional[Node]]
    reason: Dict[Node, str]
    sigma_stats: DyadicTreeStats = field(repr=False)

    @property
    def nodes(self):
        return sorted(self.alpha)

    def interval(self, node):
        return self.sigma_stats.interval(*node)

    @property
    def tree(self):
        return [self.interval(n) for n in self.nodes]

    def stopping_parent(self, node):
        """pi_F I: the minimal tree node containing ``node``."""
        l, k = node
        for m in range(l, -1, -1):
            a = (m, k >> (l - m))
            if a in self.alpha:
                return a
        return None

    def carleson_constant(self):
        """max over nodes S with sigma(S) > 0 of sum_{F in S} sigma(F) / sigma(S)."""
        M = self.sigma_stats.M
        acc = [None] * (self.depth + 1)
        for l in range(self.depth, -1, -1):
            ind = np.zeros(1 << l)
            for (m, k) in self.alpha:
                if m == l:
                    ind[k] = 1.0
            acc[l] = ind * M[l]
            if l < self.depth:
                acc[l] = acc[l] + acc[l + 1][0::2] + acc[l + 1][1::2]
        worst = 0.0
        for l in range(self.depth + 1):
            pos = M[l] > 0
            if np.any(pos):
                worst = max(worst, float(np.max(acc[l][pos] / M[l][pos])))
        return worst

    def to_dict(self):
        return {
            "schema": "twoweight.stopping/1",
            "root": [str(self.root.left), str(self.root.right)],
            "depth": self.depth,
            "nodes": [{"interval": [str(self.interval(n).left), str(self.interval(n).right)],
                       "alpha": self.alpha[n], "reason": self.reason[n]} for n in self.nodes],
        }


def build_stopping_data(expansion: HaarExpansion, sigma: Weight, w: Weight, H_estimate: float,
                        C0: float = 1.0, energy: bool = True) -> StoppingData:
    """Stopping tree for f: children enter on a 10x average jump or as energy violators."""
    if expansion.weight != sigma:
        raise ValueError("expansion must be taken in L^2(sigma)")
    depth = expansion.depth
    ctx = _Context(sigma, w, expansion.root, depth, expansion.stats) if energy else None
    root = (0, 0)
    alpha = {root: expansion.abs_average(0, 0)}
    parent = {root: None}
    reason = {root: "root"}
    queue = [root]
    while queue:
        F = queue.pop(0)
        aF = alpha[F]
        violators = _energy_violators(ctx, F, H_estimate, C0) if energy else set()
        chosen = []
        for n in _descendants(F, depth):
            if any(_contains(c, n) for c in chosen):
                continue
            m = expansion.stats.M[n[0]][n[1]]
            big = m > 0 and expansion.abs_average(*n) >= STOP_FACTOR * aF
            if big or n in violators:
                chosen.append(n)
                avg = expansion.abs_average(*n) if m > 0 else 0.0
                alpha[n] = aF if avg < 2 * aF else avg
                parent[n] = F
                reason[n] = "average" if big else "energy"
                queue.append(n)
    return StoppingData(expansion.root, depth, alpha, parent, reason, expansion.stats)


def cz_properties(sd: StoppingData, expansion: HaarExpansion, rtol=1e-12):
    """The checkable items of the stopping lemma, as named booleans plus the Carleson constant."""
    root_ok = (0, 0) in sd.alpha
    avg_ok = True
    for l in range(sd.depth + 1):
        for k in range(1 << l):
            if expansion.stats.M[l][k] > 0:
                a = sd.alpha[sd.stopping_parent((l, k))]
                if expansion.abs_average(l, k) > STOP_FACTOR * a * (1 + rtol):
                    avg_ok = False
    mono_ok = all(sd.alpha[n] >= sd.alpha[p] * (1 - rtol)
                  for n, p in sd.parent.items() if p is not None)
    car = sd.carleson_constant()
    return {"root_in_tree": root_ok, "averages_controlled": avg_ok, "alpha_monotone": mono_ok,
            "carleson_le_2": car <= 2.0 + 1e-12, "carleson_constant": car}


def quasi_orthogonality_check(sd: StoppingData, expansion: HaarExpansion):
    """(||sum_F alpha(F) 1_F||^2_sigma, ||f||^2_sigma) on the root."""
    D = sd.depth
    v = np.zeros(1 << D)
    for (l, k), a in sd.alpha.items():
        span = 1 << (D - l)
        v[k * span:(k + 1) * span] += a
    lhs = float(np.sum(v ** 2 * expansion.stats.M[D]))
    return lhs, expansion.norm_squared()


# ---------------------------------------------------------------------------
# pair collections

def tree_parent(I: Interval, root: Interval) -> Optional[Interval]:
    if I == root or I.length >= root.length:
        return None
    L = I.length * 2
    k = math.floor((I.left - root.left) / L)
    return Interval(root.left + k * L, root.left + (k + 1) * L)


def child_containing(I: Interval, J: Interval) -> Interval:
    left, right = I.children()
    return left if J.right <= left.right else right


@dataclass(frozen=True)
class PairCollection:
    pairs: tuple
    root: Interval

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((Q1, Q2) for Q1, Q2 in self.pairs))

    @property
    def q2(self):
        return sorted({Q2 for _, Q2 in self.pairs})

    @property
    def q1_tilde(self):
        return sorted({child_containing(Q1, Q2) for Q1, Q2 in self.pairs})


def check_admissible(Q: PairCollection, r: int = 1, energy_intervals: Sequence[Interval] = (),
                     is_good=None):
    """Raise NotAdmissible naming the first violated admissibility item."""
    by_q2 = {}
    for Q1, Q2 in Q.pairs:
        if not (Q.root.contains_interval(Q1) and Q1.contains_interval(Q2)
                and Q1.length >= 2 ** r * Q2.length):
            raise NotAdmissible("pair is not strongly contained", pair=(Q1, Q2))
        if is_good is not None and not (is_good(Q1) and is_good(Q2)):
            raise NotAdmissible("pair member is not good", pair=(Q1, Q2))
        by_q2.setdefault(Q2, set()).add(Q1)
    for Q2, tops in by_q2.items():
        for Q1 in tops:
            # every good tree interval between Q1 and a larger member must be present
            I = tree_parent(Q1, Q.root)
            chain = []
            while I is not None:
                chain.append(I)
                if I in tops:
                    for mid in chain[:-1]:
                        if (is_good is None or is_good(mid)) and mid not in tops:
                            raise NotAdmissible("pairs not convex in Q1", q2=Q2, missing=mid)
                    break
                I = tree_parent(I, Q.root)
    for Q2 in by_q2:
        for S in energy_intervals:
            if S.contains_interval(Q2):
                raise NotAdmissible("Q2 inside an energy stopping interval", q2=Q2, stop=S)


def stopping_form_size(Q: PairCollection, sigma: Weight, w: Weight, r: int = 1,
                       energy_intervals: Sequence[Interval] = ()) -> float:
    """size(Q): square root of the sup over K of P(sigma(I0-K),K)^2/(sigma(K)|K|^2) * tent mass."""
    check_admissible(Q, r, energy_intervals)
    q2 = Q.q2
    coeff = {J: haar_x_coefficient(w, J) ** 2 for J in q2}
    best = 0.0
    for K in sorted(set(Q.q1_tilde) | set(q2)):
        sK = mass(sigma, K)
        if not sK > 0:
            continue
        tent = sum(c for J, c in coeff.items() if K.contains_interval(J))
        if tent == 0:
            continue
        holed = restrict(sigma, complement(Q.root, K), closed=False)
        P = poisson_integral(holed, K)
        best = max(best, P ** 2 / (sK * float(K.length) ** 2) * tent)
    return math.sqrt(best)


def evaluate_stopping_form(Q: PairCollection, f_exp: HaarExpansion, g_exp: HaarExpansion,
                           spec: TruncationSpec) -> float:
    """sum over pairs of E_{Q1~} Delta_{Q1} f * <H_sigma(I0 - Q1~), Delta_{Q2} g>_w."""
    sigma, w = f_exp.weight, g_exp.weight
    total = 0.0
    for Q1, Q2 in Q.pairs:
        n1 = f_exp.node_of(Q1)
        n2 = g_exp.node_of(Q2)
        if n1 is None or n2 is None or n1[0] >= f_exp.depth or n2[0] >= g_exp.depth:
            continue
        fc, gc = f_exp.coef[n1[0]][n1[1]], g_exp.coef[n2[0]][n2[1]]
        if fc == 0 or gc == 0:
            continue
        tilde = child_containing(Q1, Q2)
        h1 = f_exp.haar(*n1)
        side = h1.left_value if tilde.left == Q1.left else h1.right_value
        holed = restrict(sigma, complement(Q.root, tilde), closed=False)
        if holed.n_atoms == 0 and not holed.pieces:
            continue
        h2 = g_exp.haar(*n2)
        inner = integrate(w, lambda x: h2(x) * truncated_hilbert(holed, None, x, spec), Q2)
        total += fc * side * gc * inner
    return total


# ---------------------------------------------------------------------------

def build_upper_half_plane_measure(F_tree: Iterable[Interval], J_star, w: Weight, J_full=None,
                                   depth: int = 8) -> UpperHalfPlaneMeasure:
    """Points (x_J, |J|) with mass sum_{J' in J, J' in J(F)} <x/|J|, h_J'>^2.

    Without ``J_full`` the inner sum runs over every resolved dyadic J' inside J.
    """
    pts = []
    for F in F_tree:
        for J in J_star.get(F, ()):
            L2 = float(J.length) ** 2
            if J_full is None:
                if mass(w, J) <= 0:
                    continue
                st = DyadicTreeStats(w, J, depth, check=False)
                m = float(st.x_coeff_sums()[0][0]) / L2
            else:
                m = sum(haar_x_coefficient(w, Jp) ** 2 for Jp in J_full.get(F, ())
                        if J.contains_interval(Jp)) / L2
            if m > 0:
                pts.append((float(J.center), float(J.length), m))
    return UpperHalfPlaneMeasure(tuple(pts))
