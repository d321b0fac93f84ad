"""Geometric(1/2) branching chains and the patched Ray-Knight profiles.

Three kernels drive everything:

* ``PI``       critical Galton-Watson, ``Y_{n+1} = sum_{i<=Y_n} X_i``
* ``RHO``      immigrant before branching, ``Z_{n+1} = sum_{i<=Z_n+1} X_i``
* ``RHO_STAR`` immigrant after branching, ``R_{n+1} = 1 + sum_{i<=R_n} X_i``

with ``X_i`` i.i.d. geometric on {0, 1, ...} with mean 1.  Row ``i`` of PI is
the negative binomial law NB(i, 1/2).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

_LOG2 = math.log(2.0)


class Kernel(enum.Enum):
    PI = "pi"
    RHO = "rho"
    RHO_STAR = "rho_star"

    def parents(self, i: int) -> int:
        """Number of geometric offspring summed from state ``i``."""
        return i + 1 if self is Kernel.RHO else i

    @property
    def shift(self) -> int:
        return 1 if self is Kernel.RHO_STAR else 0


def _pi_logpmf(i: int, j: int) -> float:
    return math.lgamma(i + j) - math.lgamma(i) - math.lgamma(j + 1) - (i + j) * _LOG2


def kernel_prob(kernel: Kernel, i: int, j: int) -> float:
    """Exact transition probability ``kernel(i, j)``; zero off the support."""
    if i < 0 or j < 0:
        raise ValueError("states are nonnegative")
    m = kernel.parents(i)
    j -= kernel.shift
    if j < 0:
        return 0.0
    if m == 0:
        return 1.0 if j == 0 else 0.0
    return math.exp(_pi_logpmf(m, j))


def kernel_row(kernel: Kernel, i: int, jmax: int) -> np.ndarray:
    """``kernel(i, j)`` for ``j = 0..jmax``.

    Uses the ratio ``PI(m, j+1) / PI(m, j) = (m + j) / (2 (j + 1))``,
    accumulated in log space so large rows do not underflow.
    """
    out = np.zeros(jmax + 1)
    m = kernel.parents(i)
    s = kernel.shift
    if jmax < s:
        return out
    n = jmax + 1 - s
    if m == 0:
        out[s] = 1.0
        return out
    j = np.arange(n - 1, dtype=float)
    logs = np.empty(n)
    logs[0] = -m * _LOG2
    logs[1:] = np.log((m + j) / (2.0 * (j + 1.0)))
    out[s:] = np.exp(np.cumsum(logs))
    return out


def kernel_tail(kernel: Kernel, i: int, h: int) -> float:
    """P(next state >= h | current state i).

    Evaluated as a regularized incomplete beta function,
    ``P(NB(m, 1/2) >= k) = I_{1/2}(k, m)``, never as ``1 - head``.
    """
    if i < 0:
        raise ValueError("states are nonnegative")
    k = h - kernel.shift
    if k <= 0:
        return 1.0
    m = kernel.parents(i)
    if m == 0:
        return 0.0
    return float(betainc(k, m, 0.5))


def kernel_tails(kernel: Kernel, states: np.ndarray, h: int) -> np.ndarray:
    """Vectorized :func:`kernel_tail` over an array of current states."""
    states = np.asarray(states)
    k = h - kernel.shift
    if k <= 0:
        return np.ones(states.shape)
    m = states + (1 if kernel is Kernel.RHO else 0)
    out = np.zeros(states.shape)
    pos = m > 0
    out[pos] = betainc(k, m[pos], 0.5)
    return out


def kernel_mean(kernel: Kernel, i: int) -> float:
    """Row mean as ``sum_{h >= 1} P(J >= h)``, summed until the tail is < 1e-18."""
    total = 0.0
    h = 1
    while True:
        t = kernel_tail(kernel, i, h)
        if t < 1e-18 and h > i + 2:
            return total
        total += t
        h += 1


# ---------------------------------------------------------------------------
# sampling


def sample_step(kernel: Kernel, i: int, rng: np.random.Generator, method: str = "reference") -> int:
    """One transition from state ``i``.

    ``reference`` sums the geometric offspring one by one; ``nbinom`` draws
    the negative binomial total directly.
    """
    m = kernel.parents(i)
    if m == 0:
        total = 0
    elif method == "reference":
        total = int(rng.geometric(0.5, size=m).sum()) - m
    elif method == "nbinom":
        total = int(rng.negative_binomial(m, 0.5))
    else:
        raise ValueError(f"unknown method {method!r}")
    return total + kernel.shift


def sample_steps(kernel: Kernel, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized ``nbinom`` transition for an array of states."""
    m = np.asarray(states, dtype=np.int64) + (1 if kernel is Kernel.RHO else 0)
    out = np.zeros(m.shape, dtype=np.int64)
    pos = m > 0
    if pos.any():
        out[pos] = rng.negative_binomial(m[pos], 0.5)
    return out + kernel.shift


class Termination(enum.Enum):
    EXTINCT = "extinct"
    HORIZON = "horizon"
    STOPPED = "stopped"
    CAP = "cap"


@dataclass
class ChainTrajectory:
    kernel: Kernel
    start: int
    states: list[int]
    terminated_by: Termination

    @property
    def length(self) -> int:
        return len(self.states) - 1


class CapReached(Exception):
    """A trajectory hit its generation cap before the question was decided."""


def run_chain(kernel: Kernel, start: int, rng: np.random.Generator, steps: int | None = None,
              cap: int = 10**6, method: str = "nbinom") -> ChainTrajectory:
    """Run ``steps`` transitions, or until extinction when ``steps`` is None.

    Extinction only terminates PI chains (0 is absorbing only there).
    """
    states = [start]
    x = start
    limit = cap if steps is None else min(steps, cap)
    for _ in range(limit):
        if steps is None and kernel is Kernel.PI and x == 0:
            return ChainTrajectory(kernel, start, states, Termination.EXTINCT)
        x = sample_step(kernel, x, rng, method)
        states.append(x)
    if steps is None:
        if kernel is Kernel.PI and x == 0:
            return ChainTrajectory(kernel, start, states, Termination.EXTINCT)
        return ChainTrajectory(kernel, start, states, Termination.CAP)
    if len(states) - 1 < steps:
        return ChainTrajectory(kernel, start, states, Termination.CAP)
    return ChainTrajectory(kernel, start, states, Termination.HORIZON)


class StopRule(enum.Enum):
    SIGMA = "sigma"            # first n >= 1 with Y_n >= h; infinite on extinction
    TAU = "tau"                # first n >= 1 with Z_n >= h
    TAU_PRIME = "tau_prime"    # first n >= 1 with R_n >= h
    THETA_PRIME = "theta_prime"  # first n >= 0 with R_n <= u


_RULE_KERNEL = {
    StopRule.SIGMA: Kernel.PI,
    StopRule.TAU: Kernel.RHO,
    StopRule.TAU_PRIME: Kernel.RHO_STAR,
    StopRule.THETA_PRIME: Kernel.RHO_STAR,
}

INFINITE = math.inf


@dataclass
class StopOutcome:
    time: float                 # an int, INFINITE, or None when the cap bound
    value_at_stop: int | None
    capped: bool = False


def run_stop(kernel: Kernel, start: int, stop: StopRule, param: int, cap: int,
             rng: np.random.Generator, method: str = "reference") -> tuple[StopOutcome, ChainTrajectory]:
    """Simulate until the stopping time ``stop`` with level ``param``."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if _RULE_KERNEL[stop] is not kernel:
        raise ValueError(f"{stop.name} is defined for {_RULE_KERNEL[stop].name} chains")
    states = [start]
    x = start
    if stop is StopRule.THETA_PRIME and x <= param:
        return StopOutcome(0, x), ChainTrajectory(kernel, start, states, Termination.STOPPED)
    for n in range(1, cap + 1):
        x = sample_step(kernel, x, rng, method)
        states.append(x)
        if stop is StopRule.THETA_PRIME:
            if x <= param:
                return StopOutcome(n, x), ChainTrajectory(kernel, start, states, Termination.STOPPED)
        elif x >= param:
            return StopOutcome(n, x), ChainTrajectory(kernel, start, states, Termination.STOPPED)
        elif stop is StopRule.SIGMA and x == 0:
            return StopOutcome(INFINITE, None), ChainTrajectory(kernel, start, states, Termination.EXTINCT)
    return StopOutcome(None, None, capped=True), ChainTrajectory(kernel, start, states, Termination.CAP)


# ---------------------------------------------------------------------------
# event families


class Family(enum.Enum):
    A = "A"
    A_PRIME = "A'"
    B = "B"
    C = "C"
    C_PRIME = "C'"
    D = "D"

    @property
    def kernel(self) -> Kernel:
        return {Family.B: Kernel.RHO_STAR, Family.D: Kernel.RHO}.get(self, Kernel.PI)

    @property
    def finite(self) -> bool:
        """B and D look at indices 1..horizon; the rest at all n >= 1."""
        return self in (Family.B, Family.D)

    @classmethod
    def parse(cls, s: str) -> "Family":
        for f in cls:
            if s in (f.value, f.name):
                return f
        raise ValueError(f"unknown family {s!r}")


def detect_event(traj: ChainTrajectory, family: Family, h: int, p: int,
                 horizon: int | None = None) -> bool:
    """Whether ``max X_n <= h`` and ``#{n : X_n = h} = p`` over the family's range."""
    if traj.kernel is not family.kernel:
        raise ValueError(f"{family.value} needs a {family.kernel.name} trajectory")
    if family.finite:
        if horizon is None:
            raise ValueError("B and D need a horizon")
        if traj.length < horizon:
            raise CapReached(f"trajectory of length {traj.length} < horizon {horizon}")
        window = traj.states[1:horizon + 1]
    else:
        if traj.terminated_by is not Termination.EXTINCT:
            raise CapReached("trajectory not run to extinction")
        window = traj.states[1:]
    return max(window, default=0) <= h and window.count(h) == p


@dataclass
class EventSample:
    family: Family
    h: int
    p: int
    start: int
    horizon: int | None
    n_samples: int
    n_true: int
    n_capped: int

    def to_json(self) -> dict:
        return {"family": self.family.value, "h": self.h, "p": self.p, "start": self.start,
                "horizon": self.horizon, "n_samples": self.n_samples,
                "n_true": self.n_true, "n_capped": self.n_capped}


def estimate_event(family: Family, h: int, p: int, start: int, n: int, rng: np.random.Generator,
                   horizon: int | None = None, cap: int = 10**6) -> EventSample:
    hits = capped = 0
    for _ in range(n):
        steps = horizon if family.finite else None
        traj = run_chain(family.kernel, start, rng, steps=steps, cap=cap)
        try:
            hits += detect_event(traj, family, h, p, horizon)
        except CapReached:
            capped += 1
    return EventSample(family, h, p, start, horizon, n, hits, capped)


# ---------------------------------------------------------------------------
# patched profiles

VARIANTS = ("corrected", "literal")


@dataclass
class PatchedProfile:
    """One realization of the patched profile around anchor ``x`` at level ``h``.

    ``segments`` maps a segment name to ``{site: value}``; ``values`` is
    their union.  Sites shared by two segments must carry the same value.
    """
    x: int
    h: int
    variant: str
    segments: dict[str, dict[int, int]] = field(default_factory=dict)
    capped: bool = False

    @property
    def values(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for seg in self.segments.values():
            out.update(seg)
        return out

    def at(self, y: int) -> int:
        return self.values.get(y, 0)

    def consistent(self) -> bool:
        seen: dict[int, int] = {}
        for seg in self.segments.values():
            for y, v in seg.items():
                if seen.setdefault(y, v) != v:
                    return False
        return True

    @property
    def support(self) -> tuple[int, int]:
        nz = [y for y, v in self.values.items() if v]
        return min(nz), max(nz)


def _segment(traj: ChainTrajectory, site0: int, direction: int, first: int = 0) -> dict[int, int]:
    return {site0 + direction * n: v for n, v in enumerate(traj.states) if n >= first}


def build_profile(x: int, h: int, rng: np.random.Generator, cap: int = 10**6,
                  variant: str = "corrected", method: str = "nbinom") -> PatchedProfile:
    """Sample the patched profile whose law is that of ``y -> xi_D(y, T_D(x, h))``.

    For ``x <= -1``: a PI chain from ``h - 1`` running left of ``x``, a
    RHO_STAR chain from ``h`` over ``[x, -1]``, and a PI chain started from
    the RHO_STAR endpoint running right from ``-1``.

    For ``x >= 0``: a PI chain from ``h`` running right from ``x``, a RHO
    chain from ``h - 1`` running left, and a PI chain running left of it.
    In the ``corrected`` variant the RHO chain makes ``x + 1`` steps (sites
    ``x-1 .. -1``) and the left PI chain starts from its value at ``-1``.
    The ``literal`` variant stops the RHO chain at site 0 and starts the left
    PI chain from the site-0 value; it is kept as a negative control, since
    a walk leaving 0 downward before reaching x shows it undercounts.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    prof = PatchedProfile(x, h, variant)
    if x <= -1:
        r = run_chain(Kernel.RHO_STAR, h, rng, steps=-x - 1, method=method)
        y_left = run_chain(Kernel.PI, h - 1, rng, cap=cap, method=method)
        y_right = run_chain(Kernel.PI, r.states[-1], rng, cap=cap, method=method)
        prof.segments["Y"] = _segment(y_left, x, -1, first=1)
        prof.segments["R"] = _segment(r, x, +1)
        prof.segments["Y'"] = _segment(y_right, -1, +1)
        tails = (y_left, y_right)
    else:
        y_right = run_chain(Kernel.PI, h, rng, cap=cap, method=method)
        prof.segments["Y"] = _segment(y_right, x, +1)
        if variant == "corrected":
            z = run_chain(Kernel.RHO, h - 1, rng, steps=x + 1, method=method)
            y_left = run_chain(Kernel.PI, z.states[-1], rng, cap=cap, method=method)
            prof.segments["Z"] = _segment(z, x, -1, first=1)
            prof.segments["Y'"] = _segment(y_left, -1, -1)
        else:
            z = run_chain(Kernel.RHO, h - 1, rng, steps=x, method=method)
            y_left = run_chain(Kernel.PI, z.states[-1], rng, cap=cap, method=method)
            prof.segments["Z"] = _segment(z, x, -1, first=1)
            prof.segments["Y'"] = _segment(y_left, 0, -1, first=0 if x > 0 else 1)
        tails = (y_left, y_right)
    prof.capped = any(t.terminated_by is Termination.CAP for t in tails)
    return prof


def _chain_batch(kernel: Kernel, starts: np.ndarray, steps: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((steps + 1, len(starts)), dtype=np.int64)
    out[0] = starts
    for n in range(steps):
        out[n + 1] = sample_steps(kernel, out[n], rng)
    return out


@dataclass
class ConstructionBatch:
    x: int
    h: int
    window: tuple[int, int]
    values: np.ndarray      # (n, b - a + 1)
    outside: np.ndarray     # (n,) bool

    def column(self, y: int) -> np.ndarray:
        return self.values[:, y - self.window[0]]


def sample_patched_profiles(x: int, h: int, window: tuple[int, int], n: int,
                            rng: np.random.Generator, variant: str = "corrected") -> ConstructionBatch:
    """Window marginals of ``n`` patched profiles, vectorized over replicas.

    Chains are run one site past each window edge (and through any middle
    segment), which decides the outside-support flag exactly: the outer
    segments are PI chains, absorbed at 0.
    """
    a, b = window
    if not a <= x <= b:
        raise ValueError("window must contain x")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    lo, hi = min(a - 1, x - 1, -2), max(b + 1, x + 1, 1)
    prof = np.zeros((n, hi - lo + 1), dtype=np.int64)

    def put(sites, vals):
        prof[:, np.asarray(sites) - lo] = vals.T

    if x <= -1:
        r = _chain_batch(Kernel.RHO_STAR, np.full(n, h), -x - 1, rng)
        put(range(x, 0), r)
        left = _chain_batch(Kernel.PI, np.full(n, h - 1), x - lo, rng)
        put(range(x - 1, lo - 1, -1), left[1:])
        right = _chain_batch(Kernel.PI, r[-1], hi + 1, rng)
        put(range(-1, hi + 1), right)
    else:
        right = _chain_batch(Kernel.PI, np.full(n, h), hi - x, rng)
        put(range(x, hi + 1), right)
        if variant == "corrected":
            z = _chain_batch(Kernel.RHO, np.full(n, h - 1), x + 1, rng)
            put(range(x - 1, -2, -1), z[1:])
            left = _chain_batch(Kernel.PI, z[-1], -1 - lo, rng)
            put(range(-1, lo - 1, -1), left)
        else:
            z = _chain_batch(Kernel.RHO, np.full(n, h - 1), x, rng)
            if x > 0:
                put(range(x - 1, -1, -1), z[1:])
            left = _chain_batch(Kernel.PI, z[-1], -lo, rng)
            put(range(-1, lo - 1, -1), left[1:])
    inside = prof[:, a - lo:b - lo + 1]
    outside = (prof[:, :a - lo] > 0).any(axis=1) | (prof[:, b - lo + 1:] > 0).any(axis=1)
    return ConstructionBatch(x, h, (a, b), inside.copy(), outside)
