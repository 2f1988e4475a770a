"""Side-by-side sweep over all lattice cubes of a window.

For each side s the sweep yields, for every cube position, the sums of the
requested arrays and the minima/maxima of others. Sums are grown by adding
one strip of non-negative cells at a time, so no differences of large
partial sums (and no cancellation) ever occur.
"""
from __future__ import annotations

import numpy as np


class _Sums1D:
    def __init__(self, x):
        self.x = x
        self.S = x.copy()

    def step(self, s):
        self.S = self.S[:-1] + self.x[s - 1:]


class _Sums2D:
    def __init__(self, x):
        self.x = x
        self.S = x.copy()
        self.R = x.copy()   # row strips: width-s windows along axis 1
        self.C = x.copy()   # column strips: height-(s-1) windows along axis 0

    def step(self, s):
        N = self.x.shape[0]
        self.R = self.R[:, :-1] + self.x[:, s - 1:]
        self.S = (self.S[:-1, :-1] + self.R[s - 1:, :]) + self.C[:N - s + 1, s - 1:]
        self.C = self.C[:-1, :] + self.x[s - 1:, :]


class _Ext1D:
    def __init__(self, x, op):
        self.x, self.op = x, op
        self.S = x.copy()

    def step(self, s):
        self.S = self.op(self.S[:-1], self.x[s - 1:])


class _Ext2D:
    def __init__(self, x, op):
        self.x, self.op = x, op
        self.S = x.copy()
        self.R = x.copy()
        self.C = x.copy()

    def step(self, s):
        N, op = self.x.shape[0], self.op
        self.R = op(self.R[:, :-1], self.x[:, s - 1:])
        self.S = op(op(self.S[:-1, :-1], self.R[s - 1:, :]), self.C[:N - s + 1, s - 1:])
        self.C = op(self.C[:-1, :], self.x[s - 1:, :])


def sweep(sums=(), mins=(), maxs=()):
    """Yield ``(s, sums, mins, maxs)`` for s = 1..N.

    Entry ``[a]`` (or ``[a0, a1]``) of each array refers to the cube with
    lowest cell index ``a`` and side ``s`` cells.
    """
    arrays = [np.asarray(x, dtype=np.float64) for x in (*sums, *mins, *maxs)]
    if not arrays:
        return
    n = arrays[0].ndim
    N = arrays[0].shape[0]
    S = _Sums1D if n == 1 else _Sums2D
    E = _Ext1D if n == 1 else _Ext2D
    acc_s = [S(np.asarray(x, dtype=np.float64)) for x in sums]
    acc_lo = [E(np.asarray(x, dtype=np.float64), np.minimum) for x in mins]
    acc_hi = [E(np.asarray(x, dtype=np.float64), np.maximum) for x in maxs]
    for s in range(1, N + 1):
        if s > 1:
            for a in (*acc_s, *acc_lo, *acc_hi):
                a.step(s)
        yield s, [a.S for a in acc_s], [a.S for a in acc_lo], [a.S for a in acc_hi]
