"""Compiled inner loops for per-cube exact evaluations."""
import numpy as np
from numba import njit

BRACKET = 0
DOUBLE = 1


@njit(cache=True, nogil=True)
def _gather(Wi, n, N, a0, a1, s, buf):
    if n == 1:
        for t in range(s):
            buf[t] = Wi[a0 + t]
    else:
        for t in range(s):
            row = (a0 + t) * N + a1
            for u in range(s):
                buf[t * s + u] = Wi[row + u]


@njit(cache=True, nogil=True)
def _inner(x, vol, pinv, kind):
    """Per-weight factor on one cube from its cell values ``x`` (sorted in place).

    bracket: max_k x_k^{-1} (mass of the k smallest cells)^{1 - 1/p}
    double:  max_k |first k cells| (mass of the k smallest cells)^{-1/p}
    """
    x.sort()
    c = 0.0
    best = 0.0
    for k in range(x.size):
        c += x[k] * vol
        if kind == BRACKET:
            v = c ** (1.0 - pinv) / x[k]
        else:
            v = (k + 1) * vol * c ** (-pinv)
        if v > best:
            best = v
    return best


@njit(cache=True, nogil=True)
def eval_cube(W, n, N, a0, a1, s, vol, pinvs, kind):
    """Product over weights of the per-weight factor divided by |Q|^m."""
    m = W.shape[0]
    size = s ** n
    buf = np.empty(size)
    qvol = size * vol
    out = 1.0
    for i in range(m):
        _gather(W[i], n, N, a0, a1, s, buf)
        out *= _inner(buf, vol, pinvs[i], kind) / qvol
    return out


@njit(cache=True, nogil=True)
def branch_and_bound(W, n, N, a0s, a1s, sides, ub, nu_fac, vol, pinvs, kind, best):
    """Exact maximum of nu_fac * eval_cube over candidates sorted by ``ub`` descending.

    ``ub`` bounds the candidate's value from above; the scan stops once the
    bound, padded for rounding, falls below the best exact value.
    """
    arg = -1
    for c in range(ub.size):
        if ub[c] * (1.0 + 1e-10) < best:
            break
        v = nu_fac[c] * eval_cube(W, n, N, a0s[c], a1s[c], sides[c], vol, pinvs, kind)
        if v > best:
            best = v
            arg = c
    return best, arg


@njit(cache=True, nogil=True)
def fujii_wilson_1d(w):
    """max over intervals Q of (1/w(Q)) int_Q M(w chi_Q), cell-sup semantics.

    Intervals are [a, e) in cell units. Extending e by one cell adds the
    intervals [a', e+1); cell c in Q sees those with a' <= c + 1.
    """
    N = w.size
    best = 0.0
    m = np.empty(N)
    pm = np.empty(N)
    for a in range(N):
        mass = 0.0
        prev_all = 0.0  # max average over intervals [a', e) with a <= a' < e
        for e in range(a, N):
            mass += w[e]
            # averages of [a', e+1) for a' = a..e, prefix max over a'
            tail = 0.0
            for t in range(e, a - 1, -1):
                tail += w[t]
                pm[t - a] = tail / (e + 1 - t)
            for t in range(1, e - a + 1):
                if pm[t - 1] > pm[t]:
                    pm[t] = pm[t - 1]
            m[e] = prev_all
            for c in range(a, e + 1):
                idx = min(c + 1, e) - a
                if pm[idx] > m[c]:
                    m[c] = pm[idx]
            prev_all = pm[e - a]
            tot = 0.0
            for c in range(a, e + 1):
                tot += m[c]
            v = tot / mass
            if v > best:
                best = v
    return best


@njit(cache=True, nogil=True)
def _factor_bounds(B, C, taus, floor, J, lo, hi, vol, pinv, kind, exact):
    """Lower and upper bounds of one weight's factor on one cube from level sums.

    B[j], C[j]: mass and count of the cube's cells with value <= taus[j];
    floor[j]: smallest value in the band (taus[j-1], taus[j]]. With ``exact``
    every band holds a single value and both bounds equal the factor.
    """
    lb = 0.0
    ub = 0.0
    j0 = 0
    while j0 < J - 1 and taus[j0] < lo:
        j0 += 1
    if kind == BRACKET:
        e = 1.0 - pinv
        for j in range(j0, J):
            m = B[j] ** e
            t = taus[j] if taus[j] < hi else hi
            v = m / t
            if v > lb:
                lb = v
            den = floor[j] if floor[j] > lo else lo
            v = m / den
            if v > ub:
                ub = v
            if taus[j] >= hi:
                break
        return lb, ub
    for j in range(j0, J):
        v = C[j] * vol * B[j] ** (-pinv)
        if v > lb:
            lb = v
        if v > ub:
            ub = v
        cp = C[j - 1] if j > 0 else 0.0
        bp = B[j - 1] if j > 0 else 0.0
        if C[j] > cp:
            # k vol (bp + (k - cp) tp vol)^{-1/p} is quasi-convex in k
            tp = floor[j] if floor[j] > lo else lo
            f1 = (cp + 1.0) * vol * (bp + tp * vol) ** (-pinv)
            f2 = C[j] * vol * (bp + (C[j] - cp) * tp * vol) ** (-pinv)
            if f1 > ub:
                ub = f1
            if f2 > ub:
                ub = f2
            if exact and f1 > lb:
                lb = f1
        if taus[j] >= hi:
            break
    return lb, ub


@njit(cache=True, nogil=True)
def factor_bounds_many(Bm, Cm, taus, floor, J, lo, hi, vol, pinv, kind, exact):
    """_factor_bounds for each row of Bm/Cm."""
    n = Bm.shape[0]
    L = np.empty(n)
    U = np.empty(n)
    for c in range(n):
        L[c], U[c] = _factor_bounds(Bm[c], Cm[c], taus, floor, J, lo[c], hi[c], vol, pinv,
                                    kind, exact)
    return L, U


SUPER = 256
BLOCK = 16


@njit(cache=True, nogil=True)
def _cheap_factor(A, lo, hi, s, vol, pinv, kind):
    """O(1) upper bound of one weight's factor on a cube of ``s`` cells from
    its mass ``A``, minimum and maximum."""
    e = 1.0 - pinv
    qv = s * vol
    if kind == BRACKET:
        u1 = A ** e / lo
        u2 = qv ** e * lo ** (-pinv)
        return u1 if u1 < u2 else u2
    # prefix of k cells has mass >= max(k lo vol, A - (s - k) hi vol); the
    # bound increases up to the crossing k* and is quasi-convex after it
    full = qv * A ** (-pinv)
    if hi <= lo:
        return full
    ks = (s * hi * vol - A) / ((hi - lo) * vol)
    if ks < 1.0:
        ks = 1.0
    if ks > s:
        ks = s
    u = (ks * vol) ** e * lo ** (-pinv)
    return u if u > full else full


@njit(cache=True, nogil=True)
def _range_bound(c, k, mass, cnt, x0, vol, pinv, kind):
    """Bound of the factor over prefixes ending inside a rank range whose
    present cells have total ``mass``, count ``cnt`` and values >= x0,
    given ``c``, ``k`` for the prefix before the range."""
    if kind == BRACKET:
        return (c + mass) ** (1.0 - pinv) / x0
    # j cells into the range: (k + j) vol (c + j x0 vol)^{-1/p}, quasi-convex in j
    f1 = (k + 1.0) * vol * (c + x0 * vol) ** (-pinv)
    f2 = (k + cnt) * vol * (c + cnt * x0 * vol) ** (-pinv)
    return f1 if f1 > f2 else f2


@njit(cache=True, nogil=True)
def _scan_factor(xg, present, smass, scnt, bmass, bcnt, N, vol, pinv, kind, bar):
    """Exact per-weight factor by a prefix scan over present ranks, or a value
    <= bar when the factor cannot exceed ``bar``. Rank ranges whose bound
    cannot beat the running maximum are skipped whole."""
    e = 1.0 - pinv
    best = 0.0
    c = 0.0
    k = 0.0
    for S in range(smass.size):
        if scnt[S] == 0:
            continue
        r0 = S * SUPER
        lim = bar if bar > best else best
        if _range_bound(c, k, smass[S], scnt[S], xg[r0], vol, pinv, kind) <= lim:
            c += smass[S]
            k += scnt[S]
            continue
        for b in range(r0 // BLOCK, min((r0 + SUPER) // BLOCK, bmass.size)):
            if bcnt[b] == 0:
                continue
            q0 = b * BLOCK
            lim = bar if bar > best else best
            if _range_bound(c, k, bmass[b], bcnt[b], xg[q0], vol, pinv, kind) <= lim:
                c += bmass[b]
                k += bcnt[b]
                continue
            for r in range(q0, min(q0 + BLOCK, N)):
                if not present[r]:
                    continue
                c += xg[r] * vol
                k += 1.0
                if kind == BRACKET:
                    v = c ** e / xg[r]
                else:
                    v = k * vol * c ** (-pinv)
                if v > best:
                    best = v
    return best


GROUP = 0.03


@njit(cache=True, nogil=True)
def _add(i, x, r, vol, sign, present, smass, scnt, bmass, bcnt):
    present[i, r] = sign > 0
    smass[i, r // SUPER] += sign * x * vol
    scnt[i, r // SUPER] += sign
    bmass[i, r // BLOCK] += sign * x * vol
    bcnt[i, r // BLOCK] += sign


@njit(cache=True, nogil=True)
def restricted_1d(W, nu, pinvs, p, vol, kind, slack):
    """Exact max over intervals of nu(Q)^{1/p} prod_i F_i(Q) / |Q|^m.

    Both factor kinds grow with the interval, so for a fixed left end the
    lengths in [s_lo, s_hi] are bounded together by nu and F at s_hi over
    |Q| at s_lo. Groups that survive are evaluated length by length: an O(1)
    bound gates each interval and a ranged prefix scan over value ranks
    computes F exactly. Returns (best, start, length).
    """
    m, N = W.shape
    rank = np.empty((m, N), dtype=np.int64)
    xg = np.empty((m, N))
    for i in range(m):
        order = np.argsort(W[i], kind="mergesort")
        for r in range(N):
            rank[i, order[r]] = r
            xg[i, r] = W[i, order[r]]
    ns = (N + SUPER - 1) // SUPER
    nb = (N + BLOCK - 1) // BLOCK
    present = np.zeros((m, N), dtype=np.bool_)
    smass = np.zeros((m, ns))
    scnt = np.zeros((m, ns))
    bmass = np.zeros((m, nb))
    bcnt = np.zeros((m, nb))
    A = np.zeros((m, N + 1))
    lo = np.empty((m, N + 1))
    hi = np.empty((m, N + 1))
    nus = np.zeros(N + 1)
    ub = np.empty(m)
    best = 0.0
    ba, bs = 0, 1
    for a in range(N):
        present[:, :] = False
        smass[:, :] = 0.0
        scnt[:, :] = 0.0
        bmass[:, :] = 0.0
        bcnt[:, :] = 0.0
        for i in range(m):
            lo[i, 0] = np.inf
            hi[i, 0] = 0.0
        smax = N - a
        s_lo = 1
        while s_lo <= smax:
            s_hi = max(s_lo, int(s_lo * (1.0 + GROUP)))
            if s_hi > smax:
                s_hi = smax
            for s in range(s_lo, s_hi + 1):
                e = a + s - 1
                nus[s] = nus[s - 1] + nu[e]
                for i in range(m):
                    x = W[i, e]
                    _add(i, x, rank[i, e], vol, 1.0, present, smass, scnt, bmass, bcnt)
                    A[i, s] = A[i, s - 1] + x * vol
                    lo[i, s] = x if x < lo[i, s - 1] else lo[i, s - 1]
                    hi[i, s] = x if x > hi[i, s - 1] else hi[i, s - 1]
            # group bound
            qlo = (s_lo * vol) ** m
            qhi = (s_hi * vol) ** m
            nf = (nus[s_hi] * vol) ** (1.0 / p)
            U = nf / qlo
            for i in range(m):
                ub[i] = _cheap_factor(A[i, s_hi], lo[i, s_hi], hi[i, s_hi], s_hi, vol, pinvs[i], kind)
                U *= ub[i]
            if U <= best * (1.0 + slack):
                s_lo = s_hi + 1
                continue
            G = nf
            for i in range(m):
                rest = 1.0
                for j in range(i + 1, m):
                    rest *= ub[j]
                bar = best * (1.0 + slack) * qlo / (G * rest)
                f = _scan_factor(xg[i], present[i], smass[i], scnt[i], bmass[i], bcnt[i],
                                 N, vol, pinvs[i], kind, bar)
                if f <= bar:
                    G = 0.0
                    break
                G *= f
            if G / qhi > best and G > 0.0:
                best = G / qhi
                ba, bs = a, s_hi
            if G / qlo <= best * (1.0 + slack) or s_hi == s_lo:
                s_lo = s_hi + 1
                continue
            # per-length pass over [s_lo, s_hi - 1]
            for s in range(s_hi, s_lo - 1, -1):
                e = a + s - 1
                for i in range(m):
                    _add(i, W[i, e], rank[i, e], vol, -1.0, present, smass, scnt, bmass, bcnt)
            for s in range(s_lo, s_hi):
                e = a + s - 1
                for i in range(m):
                    _add(i, W[i, e], rank[i, e], vol, 1.0, present, smass, scnt, bmass, bcnt)
                qm = (s * vol) ** m
                nf = (nus[s] * vol) ** (1.0 / p)
                U = nf / qm
                for i in range(m):
                    ub[i] = _cheap_factor(A[i, s], lo[i, s], hi[i, s], s, vol, pinvs[i], kind)
                    U *= ub[i]
                if U <= best * (1.0 + slack):
                    continue
                val = nf / qm
                for i in range(m):
                    rest = 1.0
                    for j in range(i + 1, m):
                        rest *= ub[j]
                    bar = best * (1.0 + slack) / (val * rest)
                    f = _scan_factor(xg[i], present[i], smass[i], scnt[i], bmass[i],
                                     bcnt[i], N, vol, pinvs[i], kind, bar)
                    if f <= bar:
                        val = 0.0
                        break
                    val *= f
                if val > best:
                    best = val
                    ba, bs = a, s
            e = a + s_hi - 1
            for i in range(m):
                _add(i, W[i, e], rank[i, e], vol, 1.0, present, smass, scnt, bmass, bcnt)
            s_lo = s_hi + 1
    return best, ba, bs


@njit(cache=True, nogil=True)
def _prefix(x):
    """Neumaier-compensated prefix sums as (hi, lo) pairs."""
    N = x.size
    hi = np.zeros(N + 1)
    lo = np.zeros(N + 1)
    s = 0.0
    c = 0.0
    for i in range(N):
        t = s + x[i]
        if abs(s) >= abs(x[i]):
            c += (s - t) + x[i]
        else:
            c += (x[i] - t) + s
        s = t
        hi[i + 1] = s
        lo[i + 1] = c
    return hi, lo


@njit(cache=True, nogil=True)
def uncentered_1d(f, base):
    """Cell-sup of the (base-weighted) average over intervals inside the window
    whose closure meets the cell. An interval containing cell c splits at c + 1
    into two pieces whose averages bracket its own, so only intervals that end
    at c or c + 1, or start at c or c + 1, need to be scanned."""
    N = f.size
    fh, fl = _prefix(f)
    bh, bl = _prefix(base)
    E = np.full(N + 1, -np.inf)
    S = np.full(N + 1, -np.inf)
    for a in range(N):
        for b in range(a + 1, N + 1):
            den = (bh[b] - bh[a]) + (bl[b] - bl[a])
            avg = ((fh[b] - fh[a]) + (fl[b] - fl[a])) / den
            if avg > E[b]:
                E[b] = avg
            if avg > S[a]:
                S[a] = avg
    out = np.empty(N)
    for c in range(N):
        out[c] = max(max(E[c], E[c + 1]), max(S[c], S[c + 1]))
    return out


@njit(cache=True, nogil=True)
def uncentered_1d_product(F, base):
    """Cell-sup of prod_i (base-weighted average of F[i]) over intervals inside
    the window whose closure meets the cell; F[i] holds the numerator densities.
    For each length s, a monotone deque gives the max over starts in [c - s, c + 1]."""
    m, N = F.shape
    his = np.zeros((m, N + 1))
    los = np.zeros((m, N + 1))
    for i in range(m):
        h, l = _prefix(F[i])
        his[i] = h
        los[i] = l
    bh, bl = _prefix(base)
    out = np.zeros(N)
    A = np.empty(N)
    dq = np.empty(N, dtype=np.int64)
    for s in range(1, N + 1):
        n_a = N - s + 1
        for a in range(n_a):
            den = (bh[a + s] - bh[a]) + (bl[a + s] - bl[a])
            v = 1.0
            for i in range(m):
                v *= ((his[i, a + s] - his[i, a]) + (los[i, a + s] - los[i, a])) / den
            A[a] = v
        head = 0
        tail = 0
        nxt = 0
        for c in range(N):
            hi = min(c + 1, n_a - 1)
            while nxt <= hi:
                while tail > head and A[dq[tail - 1]] <= A[nxt]:
                    tail -= 1
                dq[tail] = nxt
                tail += 1
                nxt += 1
            lo = c - s
            while head < tail and dq[head] < lo:
                head += 1
            if head < tail and A[dq[head]] > out[c]:
                out[c] = A[dq[head]]
    return out
