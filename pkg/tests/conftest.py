import itertools

import mpmath as mp
import numpy as np
from hypothesis import HealthCheck, settings

settings.register_profile("lab", deadline=None, derandomize=True, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


def lattice_intervals(N):
    """All (start, length) pairs of cell intervals in a 1D window of N cells."""
    for s in range(1, N + 1):
        for a in range(N - s + 1):
            yield a, s


def brute_maximal_1d(x, h=1.0):
    """Uncentered cell-sup maximal function: max over intervals touching the cell."""
    N = x.size
    out = np.zeros(N)
    for a, s in lattice_intervals(N):
        avg = x[a:a + s].sum() / s
        lo, hi = max(a - 1, 0), min(a + s + 1, N)
        out[lo:hi] = np.maximum(out[lo:hi], avg)
    return out


def brute_restricted_1d(x, p, vol, kind):
    """Restricted weak-type constant by sorting every interval."""
    best = 0.0
    for a, s in lattice_intervals(x.size):
        y = np.sort(x[a:a + s])
        c = np.cumsum(y) * vol
        if kind == "bracket":
            inner = np.max(c ** (1 - 1 / p) / y)
        else:
            inner = np.max(np.arange(1, s + 1) * vol * c ** (-1 / p))
        best = max(best, (y.sum() * vol) ** (1 / p) * inner / (s * vol))
    return best


def brute_restricted_2d(x, p, vol, kind):
    N = x.shape[0]
    best = 0.0
    for s in range(1, N + 1):
        for a, b in itertools.product(range(N - s + 1), repeat=2):
            y = np.sort(x[a:a + s, b:b + s].ravel())
            c = np.cumsum(y) * vol
            if kind == "bracket":
                inner = np.max(c ** (1 - 1 / p) / y)
            else:
                inner = np.max(np.arange(1, y.size + 1) * vol * c ** (-1 / p))
            best = max(best, (y.sum() * vol) ** (1 / p) * inner / (y.size * vol))
    return best


def subset_max(values, masses, score):
    """max of score(mask) over non-empty subsets."""
    n = len(values)
    best = -np.inf
    for bits in range(1, 2 ** n):
        mask = np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)
        best = max(best, score(mask))
    return best


def brute_centered_1d(xs):
    N = xs[0].size
    out = np.zeros(N)
    for c in range(N):
        for t in range(N + 1):
            lo, hi = max(c - t, 0), min(c + t + 1, N)
            v = 1.0
            for x in xs:
                v *= x[lo:hi].sum() / (2 * t + 1)
            out[c] = max(out[c], v)
    return out


def brute_maximal_2d(x):
    N = x.shape[0]
    out = np.zeros_like(x)
    for s in range(1, N + 1):
        for a in range(N - s + 1):
            for b in range(N - s + 1):
                avg = x[a:a + s, b:b + s].sum() / s ** 2
                sl = (slice(max(a - 1, 0), a + s + 1), slice(max(b - 1, 0), b + s + 1))
                out[sl] = np.maximum(out[sl], avg)
    return out


def mp_script_E(n, r, p, A, B, c_n):
    """50-digit evaluation of the chain, written out from the formula."""
    mp.mp.dps = 50
    n, r, p, A, B, c_n = (mp.mpf(x) for x in (n, r, p, A, B, c_n))
    if r == 1:
        r, B = mp.mpf(2), mp.sqrt(B)
    cpn = (2 * p - 1) ** (2 * p - 1) * c_n
    D = p * mp.log(2 ** n * p * A, 2)
    qp = 2 ** (n + 2) * r * cpn * A ** (2 * p)
    base = 2 ** (n + 5) * r * cpn * A ** (2 * p) * mp.mpf(40) ** (5 * D)
    logC = (mp.log(2 ** (2 + n * r) * (2 * r - 1) ** (4 * r - 2) * r ** r * B ** (5 * r))
            + qp * mp.log(base))
    if p == 1:
        return n * mp.log(24) + mp.log(A) + logC
    return mp.log(4 * mp.mpf(24) ** n * p / (p - 1) * A) + logC / p


# acceptance criteria: one pass/fail line each in the terminal summary

ACCEPTANCE = {}
CRITERIA = range(1, 12)


def record(number: int, ok: bool, detail: str = ""):
    ACCEPTANCE[number] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in CRITERIA:
        if k not in ACCEPTANCE:
            terminalreporter.write_line(f"criterion {k}: NOT RUN")
            continue
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
