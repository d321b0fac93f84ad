"""Command-line harness: ``favdown {simulate,rayknight,lemmas,tiecheck,enumerate}``.

Each command builds a :class:`RunConfig` (JSON file first, flags on top),
runs its recipe, and writes a deterministic JSON report plus any CSV tables
into ``--out``.  The exit status is 0 only if every executed gate passed;
SKIPPED gates only warn.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import io as fio
from .branching import Kernel, kernel_mean, sample_patched_profiles
from .oracle import enumerate_walks, solve_hitting, tie_distribution
from .stats import Outcome, SampleSummary, bonferroni, chi_square_two_sample, loglog_slope, wilson_interval
from .walk import count_f_events, sample_downcross_profiles, sample_kd_sizes, sample_tie_outcomes

log = logging.getLogger("favdown")

SCHEMA = "favdown.report/1"
COMMANDS = ("simulate", "rayknight", "lemmas", "tiecheck", "enumerate")
DEFAULT_H_GRID = [4, 8, 16, 32, 64, 128, 256]

_DEFAULTS = {
    "simulate": dict(steps=10**6, replicas=1),
    "rayknight": dict(x=1, h=2, replicas=200_000),
    "lemmas": dict(h_grid=DEFAULT_H_GRID),
    "tiecheck": dict(x=1, h=2, r_total=2, replicas=10**6),
    "enumerate": dict(n=16, replicas=100_000),
}


@dataclass
class RunConfig:
    command: str
    seed: int = 20240101
    replicas: int | None = None
    steps: int | None = None
    step_cap: int = 10**6
    x: int | None = None
    h: int | None = None
    r_total: int | None = None
    window: tuple[int, int] | None = None
    h_grid: list[int] | None = None
    n: int | None = None
    bonferroni_m: int | None = None
    out: str | None = None
    timing: bool = False

    def resolved(self) -> "RunConfig":
        """Fill command defaults and validate."""
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        d = asdict(self)
        for k, v in _DEFAULTS[self.command].items():
            if d[k] is None:
                d[k] = v
        cfg = RunConfig(**d)
        if cfg.command == "rayknight" and cfg.window is None:
            cfg.window = (cfg.x - 8, cfg.x + 8)
        if cfg.window is not None:
            cfg.window = tuple(cfg.window)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.step_cap < 1:
            raise ValueError("step_cap must be >= 1")
        if self.replicas is not None and self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.command == "simulate" and self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.command == "rayknight":
            a, b = self.window
            if not a <= self.x <= b:
                raise ValueError("window must contain x")
            if self.replicas < 10**4:
                raise ValueError("rayknight needs at least 10^4 replicas")
        if self.command == "lemmas" and not all(2 <= h <= 1024 for h in self.h_grid):
            raise ValueError("h_grid must lie in [2, 1024]")
        if self.command == "tiecheck" and not 1 <= self.r_total <= 4:
            raise ValueError("r_total must be in 1..4")
        if self.command == "enumerate" and not 0 <= self.n <= 24:
            raise ValueError("enumeration needs n <= 24")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("timing")
        d.pop("out")
        if d["window"] is not None:
            d["window"] = list(d["window"])
        return d


@dataclass
class Check:
    name: str
    outcome: Outcome
    details: dict = field(default_factory=dict)


@dataclass
class RunReport:
    config: RunConfig
    checks: list[Check] = field(default_factory=list)
    truncation: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    wall_clock: float | None = None

    def add(self, name: str, ok: bool | None, **details) -> Check:
        outcome = Outcome.SKIPPED if ok is None else (Outcome.PASS if ok else Outcome.FAIL)
        c = Check(name, outcome, details)
        self.checks.append(c)
        return c

    @property
    def outcome(self) -> Outcome:
        if any(c.outcome is Outcome.FAIL for c in self.checks):
            return Outcome.FAIL
        return Outcome.PASS

    def to_json(self) -> dict:
        d = {
            "schema": SCHEMA,
            "version": __version__,
            "command": self.config.command,
            "config": self.config.echo(),
            "checks": [{"name": c.name, "outcome": c.outcome.value, "details": c.details} for c in self.checks],
            "truncation": self.truncation,
            "results": self.results,
            "outcome": self.outcome.value,
        }
        if self.wall_clock is not None:
            d["wall_clock"] = self.wall_clock
        return d


def _construction_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**63 - 1), stream]))


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: RunConfig) -> RunReport:
    rep = RunReport(cfg)
    f_counts: dict[int, int] = {}
    d_counts: dict[int, int] = {}
    violations = 0
    identity_ok = True
    per_replica = []
    for r in range(cfg.replicas):
        s = count_f_events(cfg.steps, cfg.seed, replica=r, record_events=cfg.out is not None)
        for k, v in s.f_counts.items():
            f_counts[k] = f_counts.get(k, 0) + v
        for k, v in s.d_counts.items():
            d_counts[k] = d_counts.get(k, 0) + v
        violations += s.prop12_violations
        identity_ok &= sum(s.d_counts.values()) == s.f(4)
        per_replica.append(s)
    summary = {
        "steps": cfg.steps,
        "seed": cfg.seed,
        "f_counts": {str(k): v for k, v in sorted(f_counts.items())},
        "d_counts": [{"x": x, "count": c} for x, c in sorted(d_counts.items())],
        "prop12_violations": violations,
        "truncated": 0,
    }
    rep.results["summary"] = summary
    rep.truncation = {"truncated": 0, "replicas": cfg.replicas}
    rep.add("prop_1_2", violations == 0, violations=violations, steps_checked=cfg.steps * cfg.replicas)
    rep.add("d_sum_equals_f4", identity_ok, f4=f_counts.get(4, 0), d_total=sum(d_counts.values()))
    f3 = f_counts.get(3, 0)
    rep.add("f3_observed", True if f3 >= 1 else None, f3=f3)
    if cfg.out:
        out = Path(cfg.out)
        fio.write_json(summary, out / "summary.json")
        for s in per_replica:
            name = "events.csv" if cfg.replicas == 1 else f"events_r{s.replica}.csv"
            fio.write_events_csv(s.events, out / name)
    return rep


def cmd_rayknight(cfg: RunConfig, construction_h: int | None = None) -> RunReport:
    """Per-site homogeneity tests between walk profiles and the patched construction."""
    rep = RunReport(cfg)
    x, h, window = cfg.x, cfg.h, cfg.window
    walk = sample_downcross_profiles(x, h, window, cfg.replicas, cfg.seed, step_cap=cfg.step_cap)
    rate = walk.n_truncated / cfg.replicas
    rep.truncation = {"walk_truncated": walk.n_truncated, "replicas": cfg.replicas, "rate": rate}
    if rate > 0.01:
        rep.add("rayknight", None, reason=f"truncation rate {rate:.4f} exceeds 1%")
        return rep
    m = cfg.bonferroni_m or (window[1] - window[0] + 1)
    built = sample_patched_profiles(x, construction_h or h, window, cfg.replicas, _construction_rng(cfg.seed, 1))
    sites = site_tests(walk, built)
    adj = bonferroni([t.p_value for t in sites.values()], m)
    rep.results["sites"] = {str(y): dict(t.to_json(), adjusted_p=a) for (y, t), a in zip(sites.items(), adj)}
    rep.add("rayknight", min(adj) > 1e-3, min_adjusted_p=min(adj), bonferroni_m=m)
    wrong = sample_patched_profiles(x, h + 1, window, cfg.replicas, _construction_rng(cfg.seed, 2))
    neg = site_tests(walk, wrong)
    min_neg = min(t.p_value for t in neg.values())
    rep.add("negative_control", min_neg < 1e-6, construction_h=h + 1, min_p=min_neg)
    flag = chi_square_two_sample(SampleSummary.from_values(walk.outside.astype(int)),
                                 SampleSummary.from_values(built.outside.astype(int)), test="outside_support")
    rep.results["outside_support"] = flag.to_json()
    return rep


def site_tests(walk, built) -> dict:
    a, b = walk.window
    return {y: chi_square_two_sample(SampleSummary.from_values(walk.column(y)),
                                     SampleSummary.from_values(built.column(y)), test=f"site {y}")
            for y in range(a, b + 1)}


LEMMA_QUANTITIES = (
    # name, kernel, start(h), attribute
    ("p_sigma_infinite", Kernel.PI, lambda h: h, "p_never"),
    ("p_sigma_infinite_from_h_minus_1", Kernel.PI, lambda h: h - 1, "p_never"),
    ("p_Y_hits_h_exactly", Kernel.PI, lambda h: h, "p_exact_h"),
    ("p_Y_hits_h_exactly_from_h_minus_1", Kernel.PI, lambda h: h - 1, "p_exact_h"),
    ("p_Z_hits_h_exactly", Kernel.RHO, lambda h: h, "p_exact_h"),
    ("p_Z_hits_h_exactly_from_h_minus_1", Kernel.RHO, lambda h: h - 1, "p_exact_h"),
    ("p_R_hits_h_exactly", Kernel.RHO_STAR, lambda h: h, "p_exact_h"),
    ("e_tau", Kernel.RHO, lambda h: h, "e_time"),
    ("e_tau_from_h_minus_1", Kernel.RHO, lambda h: h - 1, "e_time"),
    ("e_tau_prime", Kernel.RHO_STAR, lambda h: h, "e_time"),
)

SLOPE_GATES = {
    "p_Z_hits_h_exactly": (-0.65, -0.40),
    "p_R_hits_h_exactly": (-0.65, -0.40),
    "p_Z_hits_h_exactly_from_h_minus_1": (-0.65, -0.40),
    "p_sigma_infinite": (-0.65, -0.40),
    "e_tau_prime": (0.40, 0.60),
    "e_tau_from_h_minus_1_excess": (-np.inf, 0.60),
}


def lemma_table(h_grid) -> tuple[list, dict]:
    rows = []
    table: dict[str, dict[int, float]] = {}
    defects = []
    for h in h_grid:
        cache = {}
        for name, kernel, start, attr in LEMMA_QUANTITIES:
            key = (kernel, start(h))
            if key not in cache:
                cache[key] = solve_hitting(kernel, h, start(h))
                defects.append(cache[key].mass_defect)
            v = getattr(cache[key], attr)
            table.setdefault(name, {})[h] = v
            rows.append((kernel.value, h, start(h), name, v))
        # excess over the linear part (h - k) = 1 of the expected passage time
        ex = table["e_tau_from_h_minus_1"][h] - 1.0
        table.setdefault("e_tau_from_h_minus_1_excess", {})[h] = ex
        rows.append((Kernel.RHO.value, h, h - 1, "e_tau_from_h_minus_1_excess", ex))
        # optional stopping for the martingale R_t - t
        sol = cache[(Kernel.RHO_STAR, h)]
        table.setdefault("optional_stopping_gap", {})[h] = sol.e_value - h - sol.e_time
    return rows, {"table": table, "max_mass_defect": max(defects)}


def cmd_lemmas(cfg: RunConfig) -> RunReport:
    rep = RunReport(cfg)
    anchors = {
        "p_sigma1_infinite_Y0_1": (solve_hitting(Kernel.PI, 1, 1).p_never, 0.5),
        "p_Z_tau1_eq_1_Z0_1": (solve_hitting(Kernel.RHO, 1, 1).p_exact_h, 3 / 8),
        "e_tau1_prime_R0_1": (solve_hitting(Kernel.RHO_STAR, 1, 1).e_time, 1.0),
    }
    for name, (got, want) in anchors.items():
        rep.add(f"anchor:{name}", abs(got - want) < 1e-12, value=got, expected=want)
    mart = max(max(abs(kernel_mean(Kernel.PI, i) - i), abs(kernel_mean(Kernel.RHO_STAR, i) - (i + 1)))
               for i in range(51))
    rep.add("one_step_martingale", mart < 1e-8, max_error=mart)
    rows, info = lemma_table(cfg.h_grid)
    table = info["table"]
    rep.add("mass_closure", info["max_mass_defect"] < 1e-10, max_defect=info["max_mass_defect"])
    gap = max(abs(v) for v in table["optional_stopping_gap"].values())
    rep.add("optional_stopping", gap < 1e-8, max_gap=gap)
    slopes = {}
    for name, (lo, hi) in SLOPE_GATES.items():
        if len(cfg.h_grid) < 3:
            rep.add(f"slope:{name}", None, reason="fewer than 3 grid points")
            continue
        fit = loglog_slope(table[name])
        slopes[name] = {"slope": fit.slope, "stderr": fit.slope_stderr, "intercept": fit.intercept}
        rep.add(f"slope:{name}", lo <= fit.slope <= hi, slope=fit.slope, window=[lo, hi])
    ratio = {h: table["e_tau_prime"][h] / np.sqrt(h) for h in cfg.h_grid}
    rep.results = {"slopes": slopes, "e_tau_prime_over_sqrt_h": {str(h): v for h, v in ratio.items()},
                   "table": {k: {str(h): v for h, v in d.items()} for k, d in table.items()}}
    if cfg.out:
        fio.write_lemma_csv(rows, Path(cfg.out) / "lemmas.csv")
    return rep


def cmd_tiecheck(cfg: RunConfig) -> RunReport:
    rep = RunReport(cfg)
    x, h, r = cfg.x, cfg.h, cfg.r_total
    exact = tie_distribution(x, h, r_max=12)
    outcomes = sample_tie_outcomes(x, h, cfg.replicas, cfg.seed, step_cap=max(cfg.step_cap, 10**7))
    truncated = int((outcomes < 0).sum())
    valid = cfg.replicas - truncated
    rep.truncation = {"truncated": truncated, "replicas": cfg.replicas, "rate": truncated / cfg.replicas}
    hits = int((outcomes == r).sum())
    lo, hi = wilson_interval(hits, valid, z=3.0)
    p = exact.ties[r]
    rep.add("tie_probability", lo <= p <= hi, exact=p, estimate=hits / valid, interval=[lo, hi],
            successes=hits, trials=valid)
    nf = int((outcomes == 0).sum())
    lo2, hi2 = wilson_interval(nf, valid, z=3.0)
    rep.add("not_favorite_probability", lo2 <= exact.p_not_favorite <= hi2,
            exact=exact.p_not_favorite, estimate=nf / valid, interval=[lo2, hi2])
    rep.add("partition", exact.partition_defect < 1e-5, defect=exact.partition_defect, r_max=12)
    rep.results = {"exact_ties": {str(k): v for k, v in exact.ties.items()},
                   "p_not_favorite": exact.p_not_favorite}
    return rep


def cmd_enumerate(cfg: RunConfig) -> RunReport:
    rep = RunReport(cfg)
    er = enumerate_walks(cfg.n)
    rep.add("identity_d_sum_equals_f4", er.identity_mismatches == 0, mismatching_paths=er.identity_mismatches)
    total = sum(er.kd_counts.values())
    rep.add("exact_total", total == er.denominator, total=total, denominator=er.denominator)
    sizes = sample_kd_sizes(cfg.n, cfg.replicas, cfg.seed)
    mc = np.bincount(sizes, minlength=cfg.n + 2)
    worst = 0.0
    ok = True
    for r in range(len(mc)):
        p = er.kd_counts.get(r, 0) / er.denominator
        est = mc[r] / cfg.replicas
        if p == 0:
            ok &= mc[r] == 0
            continue
        z = abs(est - p) / np.sqrt(p * (1 - p) / cfg.replicas) if p < 1 else 0.0
        worst = max(worst, z)
        ok &= z <= 4.0
    rep.add("monte_carlo_within_4_sigma", bool(ok), worst_z=worst)
    rep.results = {"kd_size": {str(r): [c, er.denominator] for r, c in sorted(er.kd_counts.items())},
                   "expected_f": {str(r): [c, er.denominator] for r, c in sorted(er.f_totals.items())}}
    if cfg.out:
        fio.write_enumeration_csv(er, Path(cfg.out) / "enumeration.csv")
    return rep


RUNNERS = {"simulate": cmd_simulate, "rayknight": cmd_rayknight, "lemmas": cmd_lemmas,
           "tiecheck": cmd_tiecheck, "enumerate": cmd_enumerate}


# ---------------------------------------------------------------------------
# argument handling


def _window(s: str) -> tuple[int, int]:
    a, b = s.split(":")
    return int(a), int(b)


def _grid(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="favdown", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON config; flags override its fields")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--steps", type=int)
        sp.add_argument("--step-cap", type=int, dest="step_cap")
        sp.add_argument("--x", type=int)
        sp.add_argument("--h", type=int)
        sp.add_argument("--r-total", type=int, dest="r_total")
        sp.add_argument("--window", type=_window, help="a:b")
        sp.add_argument("--h-grid", type=_grid, dest="h_grid", help="comma separated")
        sp.add_argument("--n", type=int)
        sp.add_argument("--bonferroni-m", type=int, dest="bonferroni_m")
        sp.add_argument("--out", type=str, help="output directory")
        sp.add_argument("--timing", action="store_true", help="add wall-clock seconds to the report")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = {}
    if args.config:
        base = json.loads(args.config.read_text())
    known = {f.name for f in fields(RunConfig)}
    unknown = set(base) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for k in known:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            base[k] = v
    base["command"] = args.command
    return RunConfig(**base).resolved()


def run(cfg: RunConfig) -> RunReport:
    t0 = time.perf_counter()
    rep = RUNNERS[cfg.command](cfg)
    if cfg.timing:
        rep.wall_clock = time.perf_counter() - t0
    return rep


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ValueError, json.JSONDecodeError, OSError) as e:
        log.error("bad configuration: %s", e)
        return 2
    try:
        rep = run(cfg)
        doc = rep.to_json()
        if cfg.out:
            fio.write_json(doc, Path(cfg.out) / "report.json")
    except OSError as e:
        log.error("I/O failure: %s", e)
        return 3
    sys.stdout.write(fio.dumps(doc))
    for c in rep.checks:
        if c.outcome is Outcome.SKIPPED:
            log.warning("%s skipped: %s", c.name, c.details)
    return 0 if rep.outcome is Outcome.PASS else 1


if __name__ == "__main__":
    sys.exit(main())
