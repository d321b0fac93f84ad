"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s -v``.
"""
from fractions import Fraction

import numpy as np
import pytest

from favdown import cli
from favdown.branching import Kernel, kernel_mean, kernel_prob, kernel_row
from favdown.oracle import convolution_pmf, enumerate_walks, solve_hitting
from favdown.stats import Outcome
from favdown.walk import WalkLedger, advance, brute_force_argmax, make_trackers

SEED = 20240101


@pytest.fixture
def verdict(capsys):
    def _verdict(label, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}  {detail}")
        assert ok, f"{label}: {detail}"
    return _verdict


def failing(report):
    return [(c.name, c.details) for c in report.checks if c.outcome is not Outcome.PASS]


def test_1_kernel_closed_form(verdict):
    err = max(np.abs(convolution_pmf(i, 200) - kernel_row(Kernel.PI, i, 200)).max() for i in range(1, 21))
    shifts = all(
        kernel_prob(Kernel.RHO, i, j) == kernel_prob(Kernel.PI, i + 1, j)
        and kernel_prob(Kernel.RHO_STAR, i, j) == (kernel_prob(Kernel.PI, i, j - 1) if j else 0.0)
        for i in range(0, 51) for j in range(0, 201))
    verdict("1 kernel closed form vs convolution", err < 1e-10 and shifts,
            f"max error {err:.2e}, shift identities exact: {shifts}")


def test_2_criticality_and_martingale(verdict):
    e_pi = max(abs(kernel_mean(Kernel.PI, i) - i) for i in range(51))
    e_rs = max(abs(kernel_mean(Kernel.RHO_STAR, i) - (i + 1)) for i in range(51))
    verdict("2 row means", e_pi < 1e-8 and e_rs < 1e-8, f"PI {e_pi:.2e}, RHO_STAR {e_rs:.2e}")


def test_3_hand_anchors(verdict):
    got = (solve_hitting(Kernel.PI, 1, 1).p_never,
           solve_hitting(Kernel.RHO, 1, 1).p_exact_h,
           solve_hitting(Kernel.RHO_STAR, 1, 1).e_time)
    err = max(abs(g - w) for g, w in zip(got, (0.5, 0.375, 1.0)))
    verdict("3 hand anchors", err < 1e-12, f"values {got}, max error {err:.1e}")


def test_4_decay_exponents(verdict):
    rep = cli.cmd_lemmas(cli.RunConfig("lemmas").resolved())
    slopes = {k: round(v["slope"], 4) for k, v in rep.results["slopes"].items()}
    verdict("4 decay exponents on h = 4..256", not failing(rep) and len(slopes) == 6, f"{slopes}")


@pytest.mark.parametrize("x,h", [(-2, 2), (1, 2), (0, 3)])
def test_5_ray_knight(x, h, verdict):
    cfg = cli.RunConfig("rayknight", seed=SEED, x=x, h=h, replicas=200_000, bonferroni_m=51).resolved()
    assert cfg.window == (x - 8, x + 8)
    rep = cli.cmd_rayknight(cfg)
    checks = {c.name: c for c in rep.checks}
    ok = not failing(rep) and set(checks) == {"rayknight", "negative_control"}
    verdict(f"5 Ray-Knight profile (x={x}, h={h})", ok,
            f"min adjusted p {checks['rayknight'].details.get('min_adjusted_p', float('nan')):.3g}, "
            f"control min p {checks.get('negative_control') and checks['negative_control'].details['min_p']:.2g}, "
            f"truncated {rep.truncation['walk_truncated']}")


@pytest.mark.parametrize("x,h,r", [(1, 2, 2), (-2, 2, 2)])
def test_6_tie_probability(x, h, r, verdict):
    cfg = cli.RunConfig("tiecheck", seed=SEED, x=x, h=h, r_total=r, replicas=10**6).resolved()
    rep = cli.cmd_tiecheck(cfg)
    d = next(c for c in rep.checks if c.name == "tie_probability").details
    verdict(f"6 tie probability (x={x}, h={h}, r={r})", not failing(rep),
            f"exact {d['exact']:.6f} in [{d['interval'][0]:.6f}, {d['interval'][1]:.6f}]")


def test_7_enumeration(verdict):
    rep = cli.cmd_enumerate(cli.RunConfig("enumerate", seed=SEED, n=16, replicas=10**5).resolved())
    hand = enumerate_walks(2).dist_tie_count == {0: Fraction(1, 4), 1: Fraction(1, 2), 2: Fraction(1, 4)}
    z = next(c for c in rep.checks if c.name == "monte_carlo_within_4_sigma").details["worst_z"]
    verdict("7 enumeration n=16", not failing(rep) and hand, f"worst z {z:.2f}, n=2 hand table: {hand}")


def test_8_long_run(verdict):
    rep = cli.cmd_simulate(cli.RunConfig("simulate", seed=SEED, steps=10**8).resolved())
    s = rep.results["summary"]
    ok = s["prop12_violations"] == 0 and s["f_counts"].get("3", 0) >= 1
    verdict("8 long run 10^8 steps", ok and not failing(rep),
            f"violations {s['prop12_violations']}, f(3) {s['f_counts'].get('3', 0)}, "
            f"f(4) {s['f_counts'].get('4', 0)}")


def test_9_tracker_equivalence(verdict):
    rng = np.random.default_rng(SEED)
    mismatches = prefixes = 0
    for _ in range(100):
        steps = rng.choice([-1, 1], size=1000)
        cuts = set(rng.choice(1000, size=100, replace=False).tolist())
        ledger, trackers = WalkLedger(), make_trackers()
        for n, s in enumerate(steps):
            advance(ledger, trackers, int(s))
            if n in cuts:
                prefixes += 1
                mismatches += sum((t.max_value, t.argmax) != brute_force_argmax(ledger, t.statistic)
                                  for t in trackers)
    verdict("9 tracker vs brute force", prefixes == 10**4 and mismatches == 0,
            f"{prefixes} prefixes x 4 statistics, {mismatches} mismatches")
