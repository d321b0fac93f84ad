import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from favdown.branching import (
    CapReached, ChainTrajectory, Family, INFINITE, Kernel, StopRule, Termination, build_profile,
    detect_event, estimate_event, kernel_mean, kernel_prob, kernel_row, kernel_tail, kernel_tails,
    run_chain, run_stop, sample_patched_profiles, sample_step, sample_steps,
)
from favdown.stats import SampleSummary, chi_square_gof


def nb_pmf(m, j):
    # independent closed form: C(m + j - 1, j) 2^{-(m + j)}
    return math.comb(m + j - 1, j) / 2 ** (m + j)


def test_absorbing_state():
    assert kernel_prob(Kernel.PI, 0, 0) == 1.0
    assert all(kernel_prob(Kernel.PI, 0, j) == 0.0 for j in range(1, 10))


def test_single_parent_is_geometric():
    for j in range(30):
        assert kernel_prob(Kernel.PI, 1, j) == pytest.approx(2.0 ** -(1 + j), rel=1e-13)


def test_two_parents():
    assert kernel_prob(Kernel.PI, 2, 1) == pytest.approx(0.25, rel=1e-14)


@given(st.integers(0, 60), st.integers(0, 120))
def test_shift_identities(i, j):
    assert kernel_prob(Kernel.RHO, i, j) == kernel_prob(Kernel.PI, i + 1, j)
    want = kernel_prob(Kernel.PI, i, j - 1) if j >= 1 else 0.0
    assert kernel_prob(Kernel.RHO_STAR, i, j) == want


@given(st.sampled_from(list(Kernel)), st.integers(0, 40), st.integers(0, 80))
def test_row_matches_pointwise(kernel, i, jmax):
    row = kernel_row(kernel, i, jmax)
    exact = np.array([kernel_prob(kernel, i, j) for j in range(jmax + 1)])
    assert np.allclose(row, exact, rtol=1e-11, atol=1e-300)


@given(st.integers(1, 30), st.integers(0, 40))
def test_pointwise_matches_combinatorial_form(m, j):
    assert kernel_prob(Kernel.PI, m, j) == pytest.approx(nb_pmf(m, j), rel=1e-11)


@pytest.mark.parametrize("kernel", list(Kernel))
def test_rows_close_with_tail(kernel):
    for i in range(51):
        for h in (1, 5, 40, 200):
            head = kernel_row(kernel, i, h - 1).sum()
            assert abs(head + kernel_tail(kernel, i, h) - 1.0) < 1e-12


def test_tail_examples():
    for h in range(0, 40):
        assert kernel_tail(Kernel.PI, 1, h) == pytest.approx(2.0 ** -h, rel=1e-12)
    assert kernel_tail(Kernel.PI, 0, 1) == 0.0
    assert all(kernel_tail(Kernel.RHO_STAR, i, 1) == 1.0 for i in range(20))


def test_deep_tail_is_not_cancelled():
    # 1 - head would be 0 in double precision here
    t = kernel_tail(Kernel.PI, 2, 80)
    assert 0 < t < 1e-20
    assert t == pytest.approx(sum(nb_pmf(2, j) for j in range(80, 400)), rel=1e-10)


def test_vector_tails():
    states = np.arange(0, 30)
    for k in Kernel:
        got = kernel_tails(k, states, 7)
        assert np.allclose(got, [kernel_tail(k, int(i), 7) for i in states], rtol=1e-14)


@pytest.mark.parametrize("i", range(0, 51, 7))
def test_means(i):
    assert abs(kernel_mean(Kernel.PI, i) - i) < 1e-8
    assert abs(kernel_mean(Kernel.RHO, i) - (i + 1)) < 1e-8
    assert abs(kernel_mean(Kernel.RHO_STAR, i) - (i + 1)) < 1e-8


def test_sampler_support(rng):
    assert all(sample_step(Kernel.PI, 0, rng) == 0 for _ in range(50))
    assert all(sample_step(Kernel.RHO_STAR, i, rng) >= 1 for i in range(20))
    assert np.all(sample_steps(Kernel.PI, np.zeros(100, dtype=int), rng) == 0)


@pytest.mark.parametrize("method", ["reference", "nbinom"])
@pytest.mark.parametrize("kernel,i", [(Kernel.PI, 1), (Kernel.PI, 3), (Kernel.PI, 10),
                                      (Kernel.RHO, 3), (Kernel.RHO_STAR, 3)])
def test_sampler_matches_pmf(kernel, i, method):
    rng = np.random.default_rng(hash((kernel.value, i, method)) % 2**32)
    draws = [sample_step(kernel, i, rng, method) for _ in range(20_000)]
    pmf = {j: p for j, p in enumerate(kernel_row(kernel, i, 400)) if p > 0}
    assert chi_square_gof(SampleSummary.from_values(draws), pmf).p_value > 1e-3


def test_vector_sampler_matches_pmf(rng):
    draws = sample_steps(Kernel.PI, np.full(10**6, 3), rng)
    pmf = {j: p for j, p in enumerate(kernel_row(Kernel.PI, 3, 400)) if p > 0}
    assert chi_square_gof(SampleSummary.from_values(draws), pmf).p_value > 1e-3


def test_run_stop_anchors(rng):
    n = 40_000
    never = sum(run_stop(Kernel.PI, 1, StopRule.SIGMA, 1, 10**4, rng)[0].time == INFINITE for _ in range(n))
    assert abs(never / n - 0.5) < 4 * math.sqrt(0.25 / n)
    exact = sum(run_stop(Kernel.RHO, 1, StopRule.TAU, 1, 10**4, rng)[0].value_at_stop == 1 for _ in range(n))
    assert abs(exact / n - 3 / 8) < 4 * math.sqrt(0.375 * 0.625 / n)
    assert all(run_stop(Kernel.RHO_STAR, 1, StopRule.TAU_PRIME, 1, 5, rng)[0].time == 1 for _ in range(200))


def test_run_stop_rules(rng):
    with pytest.raises(ValueError):
        run_stop(Kernel.RHO, 3, StopRule.SIGMA, 4, 10, rng)
    out, traj = run_stop(Kernel.RHO_STAR, 2, StopRule.THETA_PRIME, 3, 10, rng)
    assert out.time == 0 and traj.terminated_by is Termination.STOPPED
    out, traj = run_stop(Kernel.RHO, 1, StopRule.TAU, 10**6, 3, rng)
    assert out.capped and out.time is None and traj.terminated_by is Termination.CAP


def test_run_chain_extinction(rng):
    traj = run_chain(Kernel.PI, 3, rng)
    assert traj.terminated_by is Termination.EXTINCT and traj.states[-1] == 0
    assert all(s > 0 for s in traj.states[:-1])
    fixed = run_chain(Kernel.RHO, 2, rng, steps=5)
    assert fixed.length == 5 and fixed.terminated_by is Termination.HORIZON


def test_detect_event_examples():
    t = ChainTrajectory(Kernel.PI, 4, [4, 0], Termination.EXTINCT)
    assert detect_event(t, Family.A, 5, 0)
    b = ChainTrajectory(Kernel.RHO_STAR, 5, [5], Termination.HORIZON)
    assert detect_event(b, Family.B, 5, 0, horizon=0)
    assert not detect_event(b, Family.B, 5, 1, horizon=0)
    y = ChainTrajectory(Kernel.PI, 2, [2, 3, 3, 1, 0], Termination.EXTINCT)
    assert detect_event(y, Family.A, 3, 2) and not detect_event(y, Family.A, 2, 0)


def test_detect_event_rejects_capped():
    t = ChainTrajectory(Kernel.PI, 4, [4, 5, 6], Termination.CAP)
    with pytest.raises(CapReached):
        detect_event(t, Family.A, 5, 0)
    with pytest.raises(ValueError):
        detect_event(t, Family.D, 5, 0, horizon=2)


def test_family_parse():
    assert Family.parse("A'") is Family.A_PRIME and Family.parse("D") is Family.D
    with pytest.raises(ValueError):
        Family.parse("Q")


@pytest.mark.parametrize("x,h", [(-3, 2), (-1, 3), (0, 2), (2, 3)])
@pytest.mark.parametrize("variant", ["corrected", "literal"])
def test_profiles_are_consistent_and_anchored(x, h, variant, rng):
    for _ in range(200):
        prof = build_profile(x, h, rng, variant=variant)
        assert prof.consistent()
        assert prof.at(x) == h
        lo, hi = prof.support
        assert lo <= x <= hi and not prof.capped
        if x <= -1:
            # the walk must pass down through every site of [x, -1]
            assert all(prof.at(y) >= 1 for y in range(x, 0))


def test_zero_anchor_variants(rng):
    # the literal construction has no Z segment at x = 0 and starts the left
    # tail from h - 1; the corrected one takes one Z step to reach site -1
    lit = build_profile(0, 3, rng, variant="literal")
    assert list(lit.segments["Z"]) == []
    cor = build_profile(0, 3, rng, variant="corrected")
    assert list(cor.segments["Z"]) == [-1]
    assert cor.segments["Y'"][-1] == cor.segments["Z"][-1]


def test_batch_construction_matches_single_profiles():
    rng = np.random.default_rng(0)
    window = (-4, 4)
    batch = sample_patched_profiles(1, 2, window, 20_000, rng)
    singles = [build_profile(1, 2, rng) for _ in range(20_000)]
    from favdown.stats import chi_square_two_sample
    for y in range(-4, 5):
        a = SampleSummary.from_values(batch.column(y))
        b = SampleSummary.from_values([p.at(y) for p in singles])
        assert chi_square_two_sample(a, b).p_value > 1e-4


def test_event_monte_carlo_matches_exact(rng):
    from favdown.oracle import event_probs
    table = event_probs(Family.A, 3, 2, start=2)
    for p in (0, 1):
        est = estimate_event(Family.A, 3, p, 2, 20_000, rng)
        q = table.probs[p]
        assert est.n_capped == 0
        assert abs(est.n_true / est.n_samples - q) < 3.5 * math.sqrt(q * (1 - q) / est.n_samples)
