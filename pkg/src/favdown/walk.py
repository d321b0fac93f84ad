"""Crossing local times of the simple symmetric walk and favorite-set trackers.

Sites are plain ints.  A :class:`WalkLedger` stores upcrossing and
downcrossing counts sparsely; edge local time ``L(x) = up[x] + down[x-1]``
and site local time are derived on demand.  Trackers follow one statistic
incrementally: counters only grow by one, so the argmax can change only at
the key that was just touched.

The reference implementations here are plain Python.  Long runs and large
replica batches go through the numba kernels in :mod:`favdown._kernels`,
which consume the same step streams (:mod:`favdown.rng`).
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .rng import StepStream, chunked_steps, mix_seeds


class Statistic(enum.Enum):
    DOWN = "down"        # xi_D(x, n), sites
    SITE = "site"        # xi(x, n) = xi_U + xi_D, sites
    EDGE = "edge"        # L(x, n) = xi_U(x) + xi_D(x - 1), edges
    ONESIDE = "oneside"  # max(xi_U, xi_D), sites


@dataclass
class WalkLedger:
    n: int = 0
    position: int = 0
    up: defaultdict = field(default_factory=lambda: defaultdict(int))
    down: defaultdict = field(default_factory=lambda: defaultdict(int))

    def edge_local_time(self, x: int) -> int:
        return self.up.get(x, 0) + self.down.get(x - 1, 0)

    def site_local_time(self, x: int) -> int:
        return self.up.get(x, 0) + self.down.get(x, 0)

    def oneside_local_time(self, x: int) -> int:
        return max(self.up.get(x, 0), self.down.get(x, 0))

    def value(self, statistic: Statistic, key: int) -> int:
        if statistic is Statistic.DOWN:
            return self.down.get(key, 0)
        if statistic is Statistic.SITE:
            return self.site_local_time(key)
        if statistic is Statistic.EDGE:
            return self.edge_local_time(key)
        return self.oneside_local_time(key)

    def keys(self, statistic: Statistic) -> set[int]:
        """Every site (or edge) whose statistic may be nonzero."""
        if statistic is Statistic.DOWN:
            return set(self.down)
        if statistic is Statistic.EDGE:
            return set(self.up) | {y + 1 for y in self.down}
        return set(self.up) | set(self.down)


@dataclass
class FavoriteTracker:
    """Running (max value, argmax set) of one statistic.

    Before the statistic is positive anywhere the argmax is empty.
    """
    statistic: Statistic
    max_value: int = 0
    argmax: set = field(default_factory=set)

    def touch(self, ledger: WalkLedger, key: int) -> None:
        v = ledger.value(self.statistic, key)
        if v > self.max_value:
            self.max_value = v
            self.argmax = {key}
        elif v == self.max_value and v > 0:
            self.argmax.add(key)


@dataclass(frozen=True)
class EventRecord:
    """A downcrossing step landing on a favorite downcrossing site."""
    n: int
    x: int
    r: int
    kind: str = "NEW_FAVORITE_DOWN"


def make_trackers(*stats: Statistic) -> list[FavoriteTracker]:
    stats = stats or tuple(Statistic)
    return [FavoriteTracker(s) for s in stats]


def advance(ledger: WalkLedger, trackers: list[FavoriteTracker], step: int | None = None,
            rng: StepStream | None = None) -> EventRecord | None:
    """Apply one step to ``ledger`` and ``trackers`` in place.

    Either ``step`` (+1/-1) or ``rng`` must be given.  An event is returned
    when the step is a downcrossing onto a site of K_D(n); this needs a DOWN
    tracker among ``trackers``.
    """
    if step is None:
        if rng is None:
            raise ValueError("need a step or an rng")
        step = rng.next_step()
    if step not in (1, -1):
        raise ValueError(f"step must be +1 or -1, got {step!r}")
    ledger.n += 1
    if step == 1:
        ledger.position += 1
        x = ledger.position
        ledger.up[x] += 1
        edge = x
    else:
        ledger.position -= 1
        x = ledger.position
        ledger.down[x] += 1
        edge = x + 1

    event = None
    for tr in trackers:
        if tr.statistic is Statistic.EDGE:
            tr.touch(ledger, edge)
        elif tr.statistic is Statistic.DOWN:
            if step == -1:
                tr.touch(ledger, x)
                if x in tr.argmax:
                    event = EventRecord(ledger.n, x, len(tr.argmax))
        else:
            tr.touch(ledger, x)
    return event


def brute_force_argmax(ledger: WalkLedger, statistic: Statistic) -> tuple[int, set[int]]:
    best = 0
    arg: set[int] = set()
    for k in ledger.keys(statistic):
        v = ledger.value(statistic, k)
        if v > best:
            best, arg = v, {k}
        elif v == best and v > 0:
            arg.add(k)
    return best, arg


def check_prop_1_2(ledger: WalkLedger) -> bool:
    """Every favorite edge x has x - 1 among the favorite downcrossing sites.

    While no downcrossing has happened every site ties at zero, so K_D is all
    of Z and the statement holds vacuously.
    """
    dmax, kd = brute_force_argmax(ledger, Statistic.DOWN)
    if dmax == 0:
        return True
    _, edges = brute_force_argmax(ledger, Statistic.EDGE)
    return all(x - 1 in kd for x in edges)


def prop_1_2_from_trackers(down: FavoriteTracker, edge: FavoriteTracker) -> bool:
    if down.max_value == 0:
        return True
    return all(x - 1 in down.argmax for x in edge.argmax)


def run_path(steps) -> tuple[WalkLedger, list[FavoriteTracker], list[EventRecord]]:
    """Replay an explicit +-1 path with all four trackers."""
    ledger = WalkLedger()
    trackers = make_trackers()
    events = []
    for s in steps:
        ev = advance(ledger, trackers, int(s))
        if ev is not None:
            events.append(ev)
    return ledger, trackers, events


# ---------------------------------------------------------------------------
# inverse local times and profiles


@dataclass
class InverseTime:
    time: int | None            # None when truncated
    ledger: WalkLedger

    @property
    def truncated(self) -> bool:
        return self.time is None


def inverse_down_time(x: int, k: int, step_cap: int, rng: StepStream) -> InverseTime:
    """Run until the k-th downcrossing of ``x`` (T_D(x, k)) or ``step_cap`` steps."""
    if k < 1 or step_cap < 1:
        raise ValueError("need k >= 1 and step_cap >= 1")
    ledger = WalkLedger()
    while ledger.n < step_cap:
        block = rng.take(min(4096, step_cap - ledger.n))
        for i, s in enumerate(block):
            advance(ledger, (), int(s))
            if s < 0 and ledger.position == x and ledger.down[x] == k:
                rng.position -= len(block) - i - 1  # hand back unused steps
                return InverseTime(ledger.n, ledger)
    return InverseTime(None, ledger)


@dataclass
class DowncrossProfile:
    x: int
    h: int
    window: tuple[int, int]
    values: np.ndarray          # xi_D(y, T_D(x, h)) for y = a..b
    outside: bool               # some nonzero count lies outside the window
    truncated: bool = False

    def at(self, y: int) -> int:
        return int(self.values[y - self.window[0]])


def downcross_profile(x: int, h: int, window: tuple[int, int], step_cap: int,
                      rng: StepStream) -> DowncrossProfile:
    a, b = window
    if not a <= x <= b:
        raise ValueError("window must contain x")
    res = inverse_down_time(x, h, step_cap, rng)
    vals = np.array([res.ledger.down.get(y, 0) for y in range(a, b + 1)], dtype=np.int64)
    outside = any(c > 0 and not a <= y <= b for y, c in res.ledger.down.items())
    return DowncrossProfile(x, h, (a, b), vals, outside, res.truncated)


def replica_keys(seed: int, n: int, first: int = 0) -> np.ndarray:
    return mix_seeds(seed, np.arange(first, first + n, dtype=np.uint64))


def sample_inverse_down_times(x: int, k: int, step_cap: int, n: int, seed: int) -> np.ndarray:
    """T_D(x, k) for replicas 0..n-1 of ``seed``; -1 marks truncation."""
    return _kernels.inverse_down_time_batch(replica_keys(seed, n), x, k, step_cap)


@dataclass
class ProfileBatch:
    x: int
    h: int
    window: tuple[int, int]
    values: np.ndarray          # (n_ok, b - a + 1)
    outside: np.ndarray         # (n_ok,) bool
    n_truncated: int

    @property
    def sites(self) -> range:
        return range(self.window[0], self.window[1] + 1)

    def column(self, y: int) -> np.ndarray:
        return self.values[:, y - self.window[0]]


def sample_downcross_profiles(x: int, h: int, window: tuple[int, int], n: int, seed: int,
                              step_cap: int = 10**6, collapse: bool | None = None) -> ProfileBatch:
    """Windowed profiles xi_D(., T_D(x, h)) for ``n`` replicas.

    ``collapse`` (default when the window holds 0) folds excursions beyond
    the window into two sticky exterior states, which leaves the window
    marginals and the outside-support flag exact while bounding run time.
    """
    a, b = window
    if not a <= x <= b:
        raise ValueError("window must contain x")
    if collapse is None:
        collapse = a <= 0 <= b
    if collapse and not a <= 0 <= b:
        raise ValueError("collapsed sampling needs 0 inside the window")
    half = step_cap + 2 if not collapse else 1
    vals, flag, status = _kernels.profile_batch(replica_keys(seed, n), x, h, a, b,
                                                step_cap, collapse, half)
    ok = status == 0
    return ProfileBatch(x, h, (a, b), vals[ok], flag[ok].astype(bool), int((~ok).sum()))


def sample_tie_outcomes(x: int, h: int, n: int, seed: int, step_cap: int = 10**7,
                        half: int = 1 << 15, first: int = 0) -> np.ndarray:
    """Per replica: #K_D(T_D(x, h)) if x is favorite, 0 if not, -1 if truncated."""
    return _kernels.tie_batch(replica_keys(seed, n, first), x, h, step_cap, half)


def sample_kd_sizes(nsteps: int, n: int, seed: int) -> np.ndarray:
    """#K_D(nsteps) for ``n`` independent walks."""
    return _kernels.kd_size_batch(replica_keys(seed, n), nsteps)


# ---------------------------------------------------------------------------
# f(r) event counting


@dataclass
class FEventSummary:
    steps: int
    seed: int
    replica: int
    f_counts: dict[int, int]
    d_counts: dict[int, int]            # d(x) to the horizon (r = 4 events)
    prop12_violations: int
    truncated: int = 0
    events: np.ndarray | None = None    # (k, 3) rows n, x, r
    final_position: int = 0

    def f(self, r: int) -> int:
        return self.f_counts.get(r, 0)

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "seed": self.seed,
            "f_counts": {str(r): c for r, c in sorted(self.f_counts.items())},
            "d_counts": [{"x": x, "count": c} for x, c in sorted(self.d_counts.items())],
            "prop12_violations": self.prop12_violations,
            "truncated": self.truncated,
        }


def count_f_events_reference(steps: int, seed: int, replica: int = 0) -> FEventSummary:
    """Pure-Python f(r)/d(x) counter with a Prop. 1.2 check after every step."""
    rng = StepStream(seed, replica)
    ledger = WalkLedger()
    down = FavoriteTracker(Statistic.DOWN)
    edge = FavoriteTracker(Statistic.EDGE)
    f_counts: dict[int, int] = defaultdict(int)
    d_counts: dict[int, int] = defaultdict(int)
    events = []
    viol = 0
    for s in rng.take(steps):
        ev = advance(ledger, [down, edge], int(s))
        if ev is not None:
            f_counts[ev.r] += 1
            if ev.r == 4:
                d_counts[ev.x] += 1
            events.append((ev.n, ev.x, ev.r))
        if not prop_1_2_from_trackers(down, edge):
            viol += 1
    return FEventSummary(steps, seed, replica, dict(f_counts), dict(d_counts), viol,
                         events=np.array(events, dtype=np.int64).reshape(-1, 3),
                         final_position=ledger.position)


def count_f_events(steps: int, seed: int, replica: int = 0, record_events: bool = False,
                   chunk: int = 1 << 20) -> FEventSummary:
    """f(r) counts and d(x) counts for the first ``steps`` steps of a replica.

    Runs the dense numba ledger; the arrays are re-centred and widened
    whenever the walk could leave them within the next chunk.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    half = 1 << 12
    up = np.zeros(2 * half + 1, dtype=np.int64)
    down = np.zeros_like(up)
    d4 = np.zeros_like(up)
    elist = np.zeros_like(up)
    fcounts = np.zeros(2 * half + 2, dtype=np.int64)
    st = np.zeros(8, dtype=np.int64)
    ev_parts = []
    for block in chunked_steps(seed, replica, steps, chunk):
        need = abs(int(st[1])) + len(block) + 2
        if need >= half:
            new_half = max(2 * half, need + 1)
            grow = new_half - half
            up, down, d4 = (np.pad(arr, grow) for arr in (up, down, d4))
            # elist holds edge ids, not site-indexed counts
            elist = np.pad(elist, (0, 2 * grow))
            fcounts = np.pad(fcounts, (0, len(up) + 1 - len(fcounts)))
            half = new_half
        ev = np.empty((len(block) if record_events else 0, 3), dtype=np.int64)
        st[7] = 0
        _kernels.f_event_chunk(block, up, down, d4, fcounts, half, st, elist, ev, record_events)
        if record_events:
            ev_parts.append(ev[:st[7]].copy())
    f_counts = {int(r): int(c) for r, c in enumerate(fcounts) if c}
    nz = np.nonzero(d4)[0]
    d_counts = {int(i - half): int(d4[i]) for i in nz}
    events = np.concatenate(ev_parts) if record_events else None
    return FEventSummary(steps, seed, replica, f_counts, d_counts, int(st[6]),
                         events=events, final_position=int(st[1]))
