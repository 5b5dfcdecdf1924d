"""Command line front end.

Every subcommand writes one versioned JSON report (and optionally CSV tables)
into ``--out``. Exit status: 0 on success, 2 when a checked invariant fails,
64 for an invalid configuration, 1 for numerical failures.
"""

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import acceptance, cantor
from .constants import (IntervalFamily, a2_constants, compactness_diagnostics,
                        dyadic_descendants, dyadic_positive_report, energy_inequality_report,
                        hardy_constant_and_norm, measured_H, pivotal_report,
                        poisson_testing_report, random_dyadic_instance, random_hardy_instance,
                        random_partition, small_scale_half_poisson, testing_constant)
from .errors import ConfigInvalid, InvariantViolation, NumericError, TwoWeightError
from .grid import GoodnessParams, estimate_bad_probability
from .measure import DensityPiece, FunctionPiece, Interval, Weight
from .report import build_report, write_csv, write_report
from .stopping import build_upper_half_plane_measure
from .transforms import TruncationSpec

BUILTIN_PAIRS = ("cantor", "cantor-prime", "lebesgue", "point-masses", "compact-log",
                 "compact-half-line")


@dataclass
class RunConfig:
    pair: str = "cantor"
    sigma: Optional[str] = None          # weight file (JSON), overrides the pair
    w: Optional[str] = None
    family: dict = field(default_factory=dict)   # kind, depth, window
    truncation: dict = field(default_factory=lambda: {"alpha": 1e-12, "beta": 1e6, "mode": "hard"})
    depth: int = 6
    tol: float = 1e-12
    seed: int = 0
    out: str = "reports"
    csv: bool = False
    random: int = 100
    trials: int = 10_000
    epsilon: float = 0.5
    r: List[int] = field(default_factory=lambda: [4, 6, 8])
    partitions: int = 20
    pieces: int = 8
    lambdas: List[float] = field(default_factory=list)
    Lambdas: List[float] = field(default_factory=list)
    check: bool = False
    only: List[int] = field(default_factory=list)

    def validate(self):
        if self.sigma is None and self.w is None and self.pair not in BUILTIN_PAIRS:
            raise ConfigInvalid(f"unknown pair {self.pair!r}", choices=BUILTIN_PAIRS)
        if (self.sigma is None) != (self.w is None):
            raise ConfigInvalid("give both --sigma and --w, or neither")
        for p in (self.sigma, self.w):
            if p is not None and not Path(p).is_file():
                raise ConfigInvalid(f"weight file {p} does not exist")
        if not 0 <= self.depth <= cantor.MAX_DEPTH:
            raise ConfigInvalid(f"depth must lie in [0, {cantor.MAX_DEPTH}]")
        if not 0 < self.tol <= 1e-3:
            raise ConfigInvalid("tol must lie in (0, 1e-3]")
        if self.random < 1 or self.partitions < 1 or self.pieces < 1:
            raise ConfigInvalid("counts must be positive")
        if self.trials < 100:
            raise ConfigInvalid("trials must be at least 100")
        if not 0 < self.epsilon < 1 or any(r < 1 for r in self.r):
            raise ConfigInvalid("need 0 < epsilon < 1 and r >= 1")
        if any(not x > 0 for x in self.lambdas + self.Lambdas):
            raise ConfigInvalid("scales must be positive")
        if bad := set(self.only) - set(range(1, 15)):
            raise ConfigInvalid(f"no such criteria {sorted(bad)}")
        try:
            self.spec()
            self.interval_family(None)
        except (ValueError, TypeError, KeyError) as e:
            raise ConfigInvalid(f"bad family or truncation: {e}") from e
        return self

    def spec(self):
        t = self.truncation
        return TruncationSpec(float(t.get("alpha", 1e-12)), float(t.get("beta", 1e6)),
                              t.get("mode", "hard"))

    def interval_family(self, default):
        f = dict(self.family)
        if not f and default is not None:
            return default
        win = f.get("window", [0, 1])
        window = Interval(Fraction(str(win[0])), Fraction(str(win[1])))
        return IntervalFamily(f.get("kind", "dyadic"), int(f.get("depth", self.depth)), window)


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigInvalid(f"config file {path} does not exist")
    text = p.read_text()
    try:
        if p.suffix in (".yaml", ".yml"):
            import yaml
            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except Exception as e:
        raise ConfigInvalid(f"cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a mapping")
    unknown = set(data) - {f.name for f in fields(RunConfig)}
    if unknown:
        raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
    return data


# builtin pairs ---------------------------------------------------------------

def builtin_pair(name, depth):
    """(sigma, w, default family) for a named example."""
    if name in ("cantor", "cantor-prime"):
        sigma, sigma_p, _ = cantor.build_sigma_pair(depth)
        s = sigma_p if name == "cantor-prime" else sigma
        return s, cantor.cantor_weight(depth), IntervalFamily("triadic", depth)
    if name == "lebesgue":
        lb = Weight.lebesgue(0, 1)
        return lb, lb, IntervalFamily("dyadic", depth)
    if name == "point-masses":
        fam = IntervalFamily("dyadic", depth, Interval(Fraction(-2), Fraction(2)))
        return Weight.from_atoms([-1], [1], "delta(-1)"), Weight.from_atoms([1], [1], "delta(1)"), fam
    delta0 = Weight.from_atoms([0], [1], label="delta0")
    if name == "compact-log":
        s = Weight(pieces=[FunctionPiece(Interval(0, Fraction(1, 3)), "x_over_log_squared")],
                   label="x/ln^2 x on (0,1/3)")
        return s, delta0, IntervalFamily("dyadic", depth, Interval(Fraction(-1, 2), Fraction(1, 2)))
    if name == "compact-half-line":
        s = Weight(pieces=[DensityPiece(Interval(1, math.inf), (1.0,))], label="1_(1,inf)")
        return s, delta0, IntervalFamily("dyadic", depth, Interval(Fraction(-4), Fraction(4)))
    raise ConfigInvalid(f"unknown pair {name!r}")


def resolve_pair(cfg: RunConfig):
    if cfg.sigma is not None:
        try:
            sigma = Weight.loads(Path(cfg.sigma).read_text())
            w = Weight.loads(Path(cfg.w).read_text())
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigInvalid(f"cannot read weight file: {e}") from e
        return sigma, w, cfg.interval_family(IntervalFamily("dyadic", cfg.depth))
    sigma, w, fam = builtin_pair(cfg.pair, cfg.depth)
    return sigma, w, cfg.interval_family(fam)


# commands --------------------------------------------------------------------

def _table(report, name):
    return [{"table": name, "left": str(I.left), "right": str(I.right), "value": v}
            for I, v in sorted(report.per_interval.items())]


def cmd_a2(cfg):
    sigma, w, fam = resolve_pair(cfg)
    rep = a2_constants(sigma, w, fam)
    res = {"simple": rep.simple, "half": rep.half, "full": rep.full}
    ver = {}
    if cfg.pair in ("cantor", "cantor-prime") and cfg.sigma is None:
        _, _, atoms = cantor.build_sigma_pair(cfg.depth)
        ratios = cantor.gap_simple_ratios(cfg.depth, atoms)
        res["gap_simple_ratios"] = [{"gap": a.gap, "ratio": r} for a, r in zip(atoms, ratios)]
        ver["gap_simple_ratio_is_2"] = all(abs(r - 2) <= cfg.tol for r in ratios)
    rows = _table(rep.simple, "simple") + _table(rep.half, "half") + _table(rep.full, "full")
    return res, ver, rows


def cmd_testing(cfg):
    sigma, w, fam = resolve_pair(cfg)
    spec = cfg.spec()
    fwd = testing_constant(sigma, w, fam, spec)
    dual = testing_constant(w, sigma, fam, spec)
    return {"forward": fwd, "dual": dual}, {}, _table(fwd, "forward") + _table(dual, "dual")


def cmd_energy(cfg):
    sigma, w, fam = resolve_pair(cfg)
    rng = np.random.default_rng(cfg.seed)
    I0 = fam.window
    parts = [random_partition(I0, cfg.pieces, rng) for _ in range(cfg.partitions)]
    H = measured_H(sigma, w, fam, cfg.spec())
    rep = energy_inequality_report(sigma, w, I0, parts, H)
    rows = [{"partition": i, "ratio": r} for i, r in enumerate(rep.ratios)]
    return rep, {"energy_ratio_le_100": rep.max_ratio <= 100}, rows


def cmd_pivotal(cfg):
    sigma, w, fam = resolve_pair(cfg)
    I0 = fam.window
    h = I0.length / 2 ** cfg.depth
    part = [Interval(I0.left + k * h, I0.left + (k + 1) * h) for k in range(2 ** cfg.depth)]
    rep = pivotal_report(sigma, w, I0, part)
    return rep, {}, [{"forward": rep.forward, "dual": rep.dual}]


def cmd_hardy(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(cfg.random):
        s, wh = random_hardy_instance(rng)
        h = hardy_constant_and_norm(s, wh)
        ok = h.B <= h.N * (1 + cfg.tol) and h.N <= 2 * h.B * (1 + cfg.tol)
        rows.append({"instance": i, "B": h.B, "N": h.N, "ok": ok})
    good = sum(r["ok"] for r in rows)
    return ({"instances": cfg.random, "passing": good, "rows": rows},
            {"B_le_N_le_2B": good == cfg.random}, rows)


def cmd_poisson_test(cfg):
    sigma, w, fam = resolve_pair(cfg)
    I0 = fam.window
    J = [I for I in IntervalFamily("dyadic", cfg.depth, I0).members() if I != I0]
    mu = build_upper_half_plane_measure([I0], {I0: J}, w, depth=cfg.depth)
    rep = poisson_testing_report(sigma, mu, fam)
    res = {"mu_points": len(mu.points), "forward": rep.forward, "dual": rep.dual,
           "forward_dyadic": rep.forward_dyadic, "dual_dyadic": rep.dual_dyadic}
    return res, {}, _table(rep.forward, "forward") + _table(rep.dual, "dual")


def cmd_dyadic_norm(cfg):
    rng = np.random.default_rng(cfg.seed)
    d = min(cfg.depth, 6)
    rows = []
    for i in range(cfg.random):
        lam, sigma, mu = random_dyadic_instance(rng, d)
        rep = dyadic_positive_report(lam, sigma, mu, dyadic_descendants(lam, Fraction(1, 2 ** d)))
        T = max(rep.testing, rep.dual_testing)
        rows.append({"instance": i, "norm": rep.norm, "testing": rep.testing,
                     "dual_testing": rep.dual_testing, "testing_le_norm": T <= rep.norm * (1 + cfg.tol),
                     "norm_le_8_testing": rep.norm <= 8 * T * (1 + cfg.tol)})
    ver = {"testing_le_norm": all(r["testing_le_norm"] for r in rows),
           "norm_le_8_testing": all(r["norm_le_8_testing"] for r in rows)}
    worst = max((r["norm"] / max(r["testing"], r["dual_testing"]) for r in rows
                 if max(r["testing"], r["dual_testing"]) > 0), default=0.0)
    return {"instances": cfg.random, "max_norm_over_testing": worst, "rows": rows}, ver, rows


def cmd_grid_stats(cfg):
    rows = []
    for r in cfg.r:
        est = estimate_bad_probability(GoodnessParams(cfg.epsilon, r), cfg.trials, cfg.seed)
        rows.append({"r": r, "epsilon": cfg.epsilon, "p_bad": est.estimate,
                     "bound": 4 / cfg.epsilon * 2 ** (-cfg.epsilon * r), "trials": cfg.trials})
    ver = {"below_bound": all(x["p_bad"] <= x["bound"] for x in rows)}
    ps = [x["p_bad"] for x in sorted(rows, key=lambda x: x["r"])]
    ver["decreasing_in_r"] = all(a > b for a, b in zip(ps, ps[1:]))
    return {"rows": rows}, ver, rows


def cmd_compactness(cfg):
    pair = cfg.pair if cfg.pair.startswith("compact") else "compact-log"
    sigma, w, _ = builtin_pair(pair, cfg.depth) if cfg.sigma is None else resolve_pair(cfg)
    lams = cfg.lambdas or [1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8]
    Lams = cfg.Lambdas or ([1.0] if pair == "compact-log" else [10.0, 100.0])
    tab = compactness_diagnostics(sigma, w, Lams, lams, spec=cfg.spec())
    res = {"pair": pair, "rows": tab.rows, "flags": tab.flags, "vanishing": tab.vanishing}
    if pair == "compact-log":
        lim = small_scale_half_poisson(sigma, w, 0)
        res["half_poisson_limit"] = {"limit": lim.limit, "fit_error": lim.limit_error,
                                     "oracle": 1 / math.log(3), "lambdas": lim.lambdas,
                                     "values": lim.values}
    return res, {}, tab.rows


def cmd_cantor(cfg):
    rep = cantor.example_report(cfg.depth, cfg.tol)
    G0 = Interval(Fraction(1, 3), Fraction(2, 3))
    central = next((a for a in rep["atoms"] if a["gap"] == [str(G0.left), str(G0.right)]), None)
    rep["central_gap"] = central
    ver = {}
    if cfg.check:
        for fn, arg in ((acceptance.criterion_1, cfg.depth), (acceptance.criterion_2, cfg.depth),
                        (acceptance.criterion_3, cfg.depth), (acceptance.criterion_4, cfg.depth)):
            if fn is acceptance.criterion_4 and cfg.depth < 3:
                continue
            c = fn(arg)
            ver[f"criterion_{c.number}"] = c.passed
    return rep, ver, rep["atoms"]


def cmd_verify_all(cfg):
    results = acceptance.run_all(cfg.only or None)
    for r in results:
        print(r.line(), flush=True)
    rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "seconds": r.seconds,
             **{k: v for k, v in r.details.items() if not isinstance(v, (list, dict))}}
            for r in results]
    res = {"criteria": [asdict(r) for r in results]}
    return res, {f"criterion_{r.number}": r.passed for r in results}, rows


COMMANDS = {
    "a2": cmd_a2, "testing": cmd_testing, "energy": cmd_energy, "pivotal": cmd_pivotal,
    "hardy": cmd_hardy, "poisson-test": cmd_poisson_test, "dyadic-norm": cmd_dyadic_norm,
    "grid-stats": cmd_grid_stats, "compactness": cmd_compactness, "cantor": cmd_cantor,
    "verify-all": cmd_verify_all,
}


def execute(command, cfg: RunConfig, timestamp=None):
    """Run one command; returns (report, csv rows). Raises InvariantViolation after writing."""
    cfg.validate()
    res, ver, rows = COMMANDS[command](cfg)
    inputs = {k: v for k, v in asdict(cfg).items() if k not in ("out", "csv")}
    report = build_report(command, inputs, res, ver, timestamp)
    path = write_report(report, cfg.out)
    if cfg.csv:
        write_csv(rows, Path(cfg.out) / f"{command}.csv")
    failed = [k for k, v in ver.items() if not v]
    if failed:
        raise InvariantViolation(f"invariants failed: {', '.join(failed)}", report=str(path))
    return report, path


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML file with RunConfig fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="report directory")
    common.add_argument("--csv", action="store_true", default=None, help="also write a CSV table")
    common.add_argument("--depth", type=int)
    common.add_argument("--pair", help=f"builtin pair: {', '.join(BUILTIN_PAIRS)}")
    common.add_argument("--sigma", help="weight file for sigma")
    common.add_argument("--w", help="weight file for w")

    p = argparse.ArgumentParser(prog="twoweight", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("hardy", "dyadic-norm"):
            sp.add_argument("--random", type=int, help="number of random instances")
        if name == "grid-stats":
            sp.add_argument("--trials", type=int)
            sp.add_argument("--epsilon", type=float)
            sp.add_argument("--r", type=int, nargs="+")
        if name == "energy":
            sp.add_argument("--partitions", type=int)
            sp.add_argument("--pieces", type=int)
        if name == "cantor":
            sp.add_argument("--check", action="store_true", default=None)
        if name == "verify-all":
            sp.add_argument("--only", type=int, nargs="+")
    return p


def config_from_args(args) -> RunConfig:
    data = load_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            data[f.name] = v
    try:
        return RunConfig(**data)
    except TypeError as e:
        raise ConfigInvalid(str(e)) from e


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        _, path = execute(args.command, cfg)
        print(f"report written to {path}")
        return 0
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return 64
    except InvariantViolation as e:
        print(f"invariant violation: {e} ({e.context})", file=sys.stderr)
        return 2
    except (NumericError, TwoWeightError, ArithmeticError) as e:
        ctx = getattr(e, "context", {})
        print(f"numeric error in {args.command}: {type(e).__name__}: {e} {ctx}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
