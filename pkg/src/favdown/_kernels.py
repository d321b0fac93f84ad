"""numba kernels behind the walk fast paths and the enumeration oracle.

Each kernel has a pure-Python counterpart in :mod:`favdown.walk` or
:mod:`favdown.oracle`; the test suite checks them against each other.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_ONE = np.uint64(1)


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def stream_word(key, k):
    return mix64(key + np.uint64(k + 1) * _GOLDEN)


@njit(cache=True)
def f_event_chunk(steps, up, down, d4, fcounts, off, st, elist, ev, record):
    """Advance a dense walk ledger over ``steps``.

    ``st`` holds [n, pos, dmax, dcount, lmax, ecount, violations, n_events].
    Arrays are indexed by ``site + off``; the caller guarantees headroom.
    """
    n = st[0]
    pos = st[1]
    dmax = st[2]
    dcount = st[3]
    lmax = st[4]
    ecount = st[5]
    viol = st[6]
    nev = st[7]
    for t in range(steps.shape[0]):
        n += 1
        if steps[t] > 0:
            pos += 1
            up[pos + off] += 1
            edge = pos
        else:
            pos -= 1
            i = pos + off
            down[i] += 1
            edge = pos + 1
            v = down[i]
            if v > dmax:
                dmax = v
                dcount = 1
            elif v == dmax:
                dcount += 1
            if v == dmax:
                fcounts[dcount] += 1
                if dcount == 4:
                    d4[i] += 1
                if record:
                    ev[nev, 0] = n
                    ev[nev, 1] = pos
                    ev[nev, 2] = dcount
                    nev += 1
        lv = up[edge + off] + down[edge - 1 + off]
        if lv > lmax:
            lmax = lv
            elist[0] = edge
            ecount = 1
        elif lv == lmax:
            elist[ecount] = edge
            ecount += 1
        if dmax > 0:
            for e in range(ecount):
                if down[elist[e] - 1 + off] != dmax:
                    viol += 1
                    break
    st[0] = n
    st[1] = pos
    st[2] = dmax
    st[3] = dcount
    st[4] = lmax
    st[5] = ecount
    st[6] = viol
    st[7] = nev


@njit(cache=True)
def inverse_down_time_batch(keys, x, k, cap):
    """T_D(x, k) per replica, -1 where ``cap`` steps pass first."""
    out = np.empty(keys.shape[0], dtype=np.int64)
    for r in range(keys.shape[0]):
        key = keys[r]
        pos = 0
        count = 0
        res = -1
        w = np.uint64(0)
        for n in range(cap):
            b = n & 63
            if b == 0:
                w = stream_word(key, n >> 6)
            if (w >> np.uint64(b)) & _ONE:
                pos += 1
            else:
                pos -= 1
                if pos == x:
                    count += 1
                    if count == k:
                        res = n + 1
                        break
        out[r] = res
    return out


@njit(cache=True)
def profile_batch(keys, x, h, a, b, cap, collapse, half):
    """Windowed downcrossing profiles at T_D(x, h).

    With ``collapse`` the excursions beyond the window are folded into two
    sticky exterior states (requires a <= 0 <= b); the window marginals are
    exact and ``cap`` practically never binds.  Otherwise the full walk runs
    on a dense array of half-width ``half``.

    Returns (values[n_rep, b-a+1], outside_flag[n_rep], status[n_rep]) with
    status 0 = ok, 1 = truncated.
    """
    nrep = keys.shape[0]
    width = b - a + 1
    vals = np.zeros((nrep, width), dtype=np.int32)
    flag = np.zeros(nrep, dtype=np.uint8)
    status = np.zeros(nrep, dtype=np.uint8)
    full = np.zeros(2 * half + 1, dtype=np.int32)
    for r in range(nrep):
        key = keys[r]
        pos = 0
        w = np.uint64(0)
        lo = 0
        hi = 0
        done = False
        fl = 0
        if collapse:
            for n in range(cap):
                bit = n & 63
                if bit == 0:
                    w = stream_word(key, n >> 6)
                s = (w >> np.uint64(bit)) & _ONE
                if pos > b:
                    if s:
                        fl = 1
                    else:
                        pos = b
                        vals[r, b - a] += 1
                        if b == x and vals[r, b - a] == h:
                            done = True
                            break
                elif pos < a:
                    if s:
                        pos = a
                else:
                    if s:
                        pos += 1
                    else:
                        pos -= 1
                        if pos < a:
                            fl = 1
                        else:
                            vals[r, pos - a] += 1
                            if pos == x and vals[r, pos - a] == h:
                                done = True
                                break
        else:
            for n in range(cap):
                bit = n & 63
                if bit == 0:
                    w = stream_word(key, n >> 6)
                if (w >> np.uint64(bit)) & _ONE:
                    pos += 1
                    if pos >= half:
                        break
                else:
                    pos -= 1
                    if pos <= -half:
                        break
                    full[pos + half] += 1
                    if pos < lo:
                        lo = pos
                    if pos == x and full[pos + half] == h:
                        done = True
                        break
                if pos > hi:
                    hi = pos
            for y in range(lo, hi + 1):
                c = full[y + half]
                if c != 0:
                    if y < a or y > b:
                        fl = 1
                    else:
                        vals[r, y - a] = c
                    full[y + half] = 0
        flag[r] = fl
        if not done:
            status[r] = 1
    return vals, flag, status


@njit(cache=True)
def tie_batch(keys, x, h, cap, half):
    """Outcome at T_D(x, h) per replica.

    r >= 1: x is a favorite downcrossing site tied with r - 1 others;
    0: some site exceeded h first, so x is not a favorite at T_D(x, h);
    -1: truncated (cap or array edge).
    """
    nrep = keys.shape[0]
    out = np.empty(nrep, dtype=np.int64)
    down = np.zeros(2 * half + 1, dtype=np.int32)
    for r in range(nrep):
        key = keys[r]
        pos = 0
        lo = 0
        hi = 0
        res = -1
        w = np.uint64(0)
        for n in range(cap):
            bit = n & 63
            if bit == 0:
                w = stream_word(key, n >> 6)
            if (w >> np.uint64(bit)) & _ONE:
                pos += 1
                if pos >= half:
                    break
                if pos > hi:
                    hi = pos
            else:
                pos -= 1
                if pos <= -half:
                    break
                if pos < lo:
                    lo = pos
                v = down[pos + half] + 1
                down[pos + half] = v
                if v > h:
                    res = 0
                    break
                if pos == x and v == h:
                    c = 0
                    for y in range(lo, hi + 1):
                        if down[y + half] == h:
                            c += 1
                    res = c
                    break
        for y in range(lo, hi + 1):
            down[y + half] = 0
        out[r] = res
    return out


@njit(cache=True)
def kd_size_batch(keys, nsteps):
    """#K_D(nsteps) per replica (0 before the first downcrossing)."""
    nrep = keys.shape[0]
    out = np.empty(nrep, dtype=np.int64)
    down = np.zeros(2 * nsteps + 3, dtype=np.int32)
    off = nsteps + 1
    for r in range(nrep):
        key = keys[r]
        pos = 0
        dmax = 0
        dcount = 0
        w = np.uint64(0)
        for n in range(nsteps):
            bit = n & 63
            if bit == 0:
                w = stream_word(key, n >> 6)
            if (w >> np.uint64(bit)) & _ONE:
                pos += 1
            else:
                pos -= 1
                v = down[pos + off] + 1
                down[pos + off] = v
                if v > dmax:
                    dmax = v
                    dcount = 1
                elif v == dmax:
                    dcount += 1
        out[r] = dcount
        down[:] = 0
    return out


@njit(cache=True)
def enumerate_paths(n):
    """Exhaustive pass over all 2**n step sequences.

    Returns integer path counts: kd_hist[r] (#K_D(n) = r), f_tot[r] (sum of
    f(r) events), marg[y + n, k] (xi_D(y, n) = k), and the number of paths
    where the tracker-based d(x) total differs from a brute-force f(4) count.
    """
    width = 2 * n + 3
    off = n + 1
    down = np.zeros(width, dtype=np.int64)
    kd_hist = np.zeros(n + 2, dtype=np.int64)
    f_tot = np.zeros(n + 2, dtype=np.int64)
    marg = np.zeros((2 * n + 1, n + 1), dtype=np.int64)
    mismatches = 0
    for mask in range(1 << n):
        pos = 0
        dmax = 0
        dcount = 0
        d4_total = 0
        f4_brute = 0
        for t in range(n):
            if (mask >> t) & 1:
                pos += 1
            else:
                pos -= 1
                i = pos + off
                down[i] += 1
                v = down[i]
                if v > dmax:
                    dmax = v
                    dcount = 1
                elif v == dmax:
                    dcount += 1
                if v == dmax:
                    f_tot[dcount] += 1
                    if dcount == 4:
                        d4_total += 1
                # brute-force recount of K_D(t + 1)
                m = 0
                c = 0
                for j in range(width):
                    if down[j] > m:
                        m = down[j]
                        c = 1
                    elif down[j] == m and m > 0:
                        c += 1
                if down[i] == m and c == 4:
                    f4_brute += 1
        kd_hist[dcount] += 1
        for y in range(-n, n + 1):
            marg[y + n, down[y + off]] += 1
        if d4_total != f4_brute:
            mismatches += 1
        down[:] = 0
    return kd_hist, f_tot, marg, mismatches
