"""Exact ground truth: path enumeration, convolutions and absorbing-chain solves.

All chain quantities are obtained by dense linear algebra on the states
below the threshold; the region ``[h, inf)`` is lumped through the kernel
tails, so nothing is truncated except the explicitly reported overshoot tail.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .branching import Family, Kernel, kernel_row, kernel_tail, kernel_tails

MAX_ENUM_N = 24
OVERSHOOT_TAIL = 1e-13


# ---------------------------------------------------------------------------
# enumeration


@dataclass
class EnumerationReport:
    """Exact path counts over all ``2**n`` walks; probabilities are count / 2**n."""
    n: int
    kd_counts: dict[int, int]                 # r -> #paths with #K_D(n) = r
    f_totals: dict[int, int]                  # r -> sum over paths of f(r) up to n
    marginal_counts: dict[tuple[int, int], int]  # (y, k) -> #paths with xi_D(y, n) = k
    identity_mismatches: int                  # paths where sum_x d(x) != f(4)

    @property
    def denominator(self) -> int:
        return 2 ** self.n

    @property
    def dist_tie_count(self) -> dict[int, Fraction]:
        return {r: Fraction(c, self.denominator) for r, c in self.kd_counts.items()}

    @property
    def expected_f(self) -> dict[int, Fraction]:
        return {r: Fraction(c, self.denominator) for r, c in self.f_totals.items()}

    @property
    def marginals(self) -> dict[tuple[int, int], Fraction]:
        return {k: Fraction(c, self.denominator) for k, c in self.marginal_counts.items()}

    def rows(self):
        """(statistic, key, numerator, denominator) rows for CSV export."""
        d = self.denominator
        for r, c in sorted(self.kd_counts.items()):
            yield "kd_size", str(r), c, d
        for r, c in sorted(self.f_totals.items()):
            yield "expected_f", str(r), c, d
        for (y, k), c in sorted(self.marginal_counts.items()):
            yield "down_marginal", f"{y}:{k}", c, d


def enumerate_walks(n: int) -> EnumerationReport:
    if not 0 <= n <= MAX_ENUM_N:
        raise ValueError(f"enumeration limited to n <= {MAX_ENUM_N}")
    kd, ft, marg, mism = _kernels.enumerate_paths(n)
    kd_counts = {r: int(c) for r, c in enumerate(kd) if c}
    f_totals = {r: int(c) for r, c in enumerate(ft) if c}
    marginals = {(y - n, k): int(marg[y, k]) for y, k in zip(*np.nonzero(marg))}
    return EnumerationReport(n, kd_counts, f_totals, marginals, int(mism))


# ---------------------------------------------------------------------------
# offspring convolution


def convolution_pmf(i: int, jmax: int) -> np.ndarray:
    """pmf on 0..jmax of the sum of ``i`` geometric(1/2) variables, by repeated convolution."""
    if i < 1:
        raise ValueError("i must be >= 1")
    geo = 0.5 ** np.arange(1, jmax + 2)
    out = geo.copy()
    for _ in range(i - 1):
        out = np.convolve(out, geo)[:jmax + 1]
    return out


# ---------------------------------------------------------------------------
# first passage above a level


def _transient(kernel: Kernel, h: int) -> np.ndarray:
    # PI: 0 is absorbing (sigma = infinity); the immigration chains recur from 0
    first = 1 if kernel is Kernel.PI else 0
    return np.arange(first, h)


def _overshoot_bound(kernel: Kernel, top: int, h: int) -> int:
    u = max(h, top + kernel.shift)
    step = max(8, int(4 * np.sqrt(top + 1)))
    while kernel_tail(kernel, top, u + 1) > OVERSHOOT_TAIL:
        u += step
    return u


@dataclass
class HittingSolution:
    """First entrance into ``[h, inf)`` at times ``n >= 1`` from ``start``."""
    kernel: Kernel
    h: int
    start: int
    p_never: float
    overshoot_pmf: dict[int, float]
    truncation_mass: float
    e_time: float                   # inf when p_never > 0
    e_value: float                  # E(value at stop; stop < inf), truncated part excluded
    visits: np.ndarray = field(repr=False, default=None)   # expected visits to transient states

    @property
    def p_exact_h(self) -> float:
        return self.overshoot_pmf.get(self.h, 0.0)

    def p_at_least(self, u: int) -> float:
        return sum(p for v, p in self.overshoot_pmf.items() if v >= u) + self.truncation_mass

    @property
    def mass_defect(self) -> float:
        return abs(1.0 - self.p_never - sum(self.overshoot_pmf.values()) - self.truncation_mass)

    def expected_time(self) -> float:
        if self.p_never > 0:
            raise ValueError("stopping time is infinite with positive probability")
        return self.e_time


def solve_hitting(kernel: Kernel, h: int, start: int) -> HittingSolution:
    """Exact law of the first passage to ``[h, inf)`` for one chain.

    Solves ``v (I - Q) = K(start, T)`` for the expected visits ``v`` to the
    transient states ``T``, then accumulates absorption and overshoot masses
    through ``v``.
    """
    if not 1 <= h <= 1024:
        raise ValueError("h must be in [1, 1024]")
    if start < 0:
        raise ValueError("start must be >= 0")
    T = _transient(kernel, h)
    top = max(h - 1, start)
    U = _overshoot_bound(kernel, top, h)
    rows = np.array([kernel_row(kernel, i, U) for i in T]).reshape(len(T), U + 1)
    srow = kernel_row(kernel, start, U)
    if len(T):
        Q = rows[:, T]
        v = np.linalg.solve((np.eye(len(T)) - Q).T, srow[T])
    else:
        v = np.zeros(0)
    over = srow[h:] + v @ rows[:, h:]
    trunc = kernel_tail(kernel, start, U + 1) + v @ kernel_tails(kernel, T, U + 1)
    p_never = 0.0
    if kernel is Kernel.PI:
        p_never = srow[0] + v @ rows[:, 0]
    e_time = np.inf if p_never > 0 else 1.0 + v.sum()
    us = np.arange(h, U + 1)
    return HittingSolution(kernel, h, start, float(p_never),
                           {int(u): float(p) for u, p in zip(us, over)},
                           float(trunc), float(e_time), float(us @ over), v)


@dataclass
class TwoSidedSolution:
    """R chain stopped at ``tau'_h`` (>= h, n >= 1) or ``theta'_u`` (<= u, n >= 0)."""
    h: int
    u: int
    start: int
    p_low_first: float      # P(theta'_u <= tau'_h)
    e_time: float           # E(tau'_h ^ theta'_u)
    e_value: float          # E(R at that time), up to the truncated overshoot tail
    truncation_mass: float


def solve_two_sided(h: int, u: int, start: int) -> TwoSidedSolution:
    if not 0 <= u < h:
        raise ValueError("need 0 <= u < h")
    if start <= u:
        return TwoSidedSolution(h, u, start, 1.0, 0.0, float(start), 0.0)
    k = Kernel.RHO_STAR
    T = np.arange(u + 1, h)
    U = _overshoot_bound(k, max(h - 1, start), h)
    rows = np.array([kernel_row(k, i, U) for i in T]).reshape(len(T), U + 1)
    srow = kernel_row(k, start, U)
    v = np.linalg.solve((np.eye(len(T)) - rows[:, T]).T, srow[T]) if len(T) else np.zeros(0)
    low = srow[:u + 1] + v @ rows[:, :u + 1]
    high = srow[h:] + v @ rows[:, h:]
    trunc = kernel_tail(k, start, U + 1) + v @ kernel_tails(k, T, U + 1)
    e_val = np.arange(u + 1) @ low + np.arange(h, U + 1) @ high
    return TwoSidedSolution(h, u, start, float(low.sum()), float(1.0 + v.sum()), float(e_val), float(trunc))


# ---------------------------------------------------------------------------
# event-family probabilities


@dataclass
class EventProbTable:
    family: Family
    h: int
    start: int
    horizon: int | None
    probs: dict[int, float]                         # p -> P(max <= h, #visits to h = p)
    joint: dict[tuple[int, int], float] | None      # (p, endpoint) for B and D
    exceed_mass: float                              # P(max > h)
    overflow_mass: float                            # P(max <= h, #visits > p_max)

    @property
    def mass_defect(self) -> float:
        return abs(1.0 - sum(self.probs.values()) - self.exceed_mass - self.overflow_mass)


def extinction_event_probs(h: int, p_max: int, starts) -> np.ndarray:
    """``out[p, k] = P(max_{n>=1} Y_n <= h, #{n >= 1: Y_n = h} = p | Y_0 = starts[k])`` for PI chains."""
    starts = np.atleast_1d(starts)
    jmax = h
    inner = np.arange(1, h)
    P_inner = np.array([kernel_row(Kernel.PI, i, jmax) for i in inner]).reshape(len(inner), jmax + 1)
    A = np.eye(len(inner)) - P_inner[:, 1:h]
    row_h = kernel_row(Kernel.PI, h, jmax)
    S = np.array([kernel_row(Kernel.PI, int(s), jmax) for s in starts])
    out = np.zeros((p_max + 1, len(starts)))
    a_prev_h = 0.0
    for p in range(p_max + 1):
        rhs = P_inner[:, h] * a_prev_h + (P_inner[:, 0] if p == 0 else 0.0)
        a_in = np.linalg.solve(A, rhs) if len(inner) else np.zeros(0)

        def from_row(row):
            return (row[0] if p == 0 else 0.0) + row[h] * a_prev_h + row[1:h] @ a_in

        out[p] = [from_row(r) for r in S]
        a_prev_h = from_row(row_h)
    return out


def event_probs(family: Family | str, h: int, p_max: int, start: int,
                horizon: int | None = None) -> EventProbTable:
    """Exact probabilities of ``{max <= h, #visits to h = p}`` for ``p <= p_max``.

    A, A', C and C' inspect a PI chain at every ``n >= 1`` (it is absorbed
    at 0); B and D inspect ``n = 1..horizon`` of a RHO_STAR resp. RHO chain
    and also report the joint law with the endpoint value.
    """
    family = Family.parse(family) if isinstance(family, str) else family
    if not 1 <= h <= 64 or not 0 <= p_max <= 16:
        raise ValueError("need 1 <= h <= 64 and 0 <= p_max <= 16")
    if not family.finite:
        probs = extinction_event_probs(h, p_max, [start])[:, 0]
        exceed = 1.0 - solve_hitting(Kernel.PI, h + 1, start).p_never
        return EventProbTable(family, h, start, None, {p: float(v) for p, v in enumerate(probs)},
                              None, float(exceed), _overflow(h, p_max, start))
    if horizon is None or horizon < 0:
        raise ValueError("B and D need a horizon >= 0")
    if not 0 <= start <= h:
        raise ValueError("B and D start inside [0, h]")
    return _finite_event_probs(family, h, p_max, start, horizon)


def _overflow(h: int, p_max: int, start: int) -> float:
    """P(max <= h and more than p_max visits to h), by the strong Markov property."""
    g_s = solve_hitting(Kernel.PI, h, start).p_exact_h
    g_h = solve_hitting(Kernel.PI, h, h).p_exact_h
    stay = solve_hitting(Kernel.PI, h + 1, h).p_never
    return g_s * g_h ** p_max * stay


def _finite_event_probs(family: Family, h: int, p_max: int, start: int, horizon: int) -> EventProbTable:
    k = family.kernel
    M = np.array([kernel_row(k, i, h) for i in range(h + 1)])
    tails = kernel_tails(k, np.arange(h + 1), h + 1)
    dist = np.zeros((p_max + 1, h + 1))
    dist[0, start] = 1.0
    exceed = overflow = 0.0
    for _ in range(horizon):
        exceed += float((dist @ tails).sum())
        nxt = dist @ M
        dist = np.zeros_like(dist)
        dist[:, :h] = nxt[:, :h]
        dist[1:, h] = nxt[:-1, h]
        overflow += nxt[-1, h]
    joint = {(p, l): float(dist[p, l]) for p in range(p_max + 1) for l in range(h + 1) if dist[p, l] > 0}
    probs = {p: float(dist[p].sum()) for p in range(p_max + 1)}
    return EventProbTable(family, h, start, horizon, probs, joint, float(exceed), float(overflow))


# ---------------------------------------------------------------------------
# tie probabilities at T_D(x, h)


@dataclass
class TieDecomposition:
    """Law of the favorite-set size seen from ``x`` at ``T_D(x, h)``.

    ``ties[r]`` is P(x in K_D, #K_D = r); ``p_not_favorite`` is P(some site
    exceeds h), computed from the exceedance masses rather than from ``ties``.
    """
    x: int
    h: int
    variant: str
    ties: dict[int, float]
    p_not_favorite: float

    @property
    def partition_defect(self) -> float:
        return abs(1.0 - self.p_not_favorite - sum(self.ties.values()))


def _pieces(x: int, h: int, p_max: int, variant: str):
    """(near-side counts by p, far-side joint (q, l), far-tail counts by (r, l), no-exceed masses)."""
    if x <= -1:
        near_start, far_family, far_start, horizon = h - 1, Family.B, h, -x - 1
        shift = 0
    else:
        near_start, far_family, far_start, horizon = h, Family.D, h - 1, x
        shift = 1 if variant == "corrected" else 0
    near = extinction_event_probs(h, p_max, [near_start])[:, 0]
    far = _finite_event_probs(far_family, h, p_max, far_start, horizon)
    tail_starts = np.arange(h + 1) + shift
    tail = extinction_event_probs(h, p_max, tail_starts)
    return near, far, tail, tail_starts, near_start


def tie_distribution(x: int, h: int, r_max: int = 4, variant: str = "corrected") -> TieDecomposition:
    """Exact ``P(x in K_D(T_D(x, h)), #K_D(T_D(x, h)) = r)`` for ``r = 1..r_max``.

    The downcrossing profile at ``T_D(x, h)`` splits into three independent
    pieces glued at an endpoint ``l``: a PI chain on the far side of ``x``,
    a finite immigration chain between ``x`` and the origin ending in ``l``,
    and a PI chain beyond the origin started from ``l`` (``x <= -1``) or
    ``l + 1`` (``x >= 0``, ``corrected``).  Ties with ``x`` are sites equal to
    ``h`` with nothing above; counts from the three pieces add up to
    ``r - 1``.
    """
    if not 1 <= h <= 32 or r_max < 1:
        raise ValueError("need 1 <= h <= 32 and r_max >= 1")
    p_max = r_max - 1
    near, far, tail, tail_starts, near_start = _pieces(x, h, p_max, variant)
    ties = {}
    for r_total in range(1, r_max + 1):
        total = 0.0
        for p in range(r_total):
            for q in range(r_total - p):
                r = r_total - 1 - p - q
                for l in range(h + 1):
                    total += near[p] * far.joint.get((q, l), 0.0) * tail[r, l]
        ties[r_total] = float(total)
    # P(all pieces stay <= h) from exceedance masses alone
    stay_near = solve_hitting(Kernel.PI, h + 1, near_start).p_never
    stay_tail = np.array([solve_hitting(Kernel.PI, h + 1, int(s)).p_never for s in tail_starts])
    # endpoint law on the no-exceed event, visits to h unrestricted
    end = _endpoint_no_exceed(far.family, h, far.start, far.horizon)
    p_fav = stay_near * float(end @ stay_tail)
    return TieDecomposition(x, h, variant, ties, 1.0 - p_fav)


def _endpoint_no_exceed(family: Family, h: int, start: int, horizon: int) -> np.ndarray:
    k = family.kernel
    M = np.array([kernel_row(k, i, h) for i in range(h + 1)])
    dist = np.zeros(h + 1)
    dist[start] = 1.0
    for _ in range(horizon):
        dist = dist @ M
    return dist


def tie_probability(x: int, h: int, r_total: int, variant: str = "corrected") -> float:
    """Exact ``P(x in K_D(T_D(x, h)), #K_D(T_D(x, h)) = r_total)``."""
    if not 1 <= r_total <= 4:
        raise ValueError("r_total must be in 1..4")
    return tie_distribution(x, h, r_total, variant).ties[r_total]
