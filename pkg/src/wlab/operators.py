"""Discrete maximal operators under the cell-sup convention.

Uncentered: a cell receives the largest average over lattice cubes inside the
window whose closure meets the closure of the cell. Centered: cubes of side
(2t+1)h concentric with the cell, zero outside the window. Dyadic and sparse
variants are computed exactly on the sub-cell lattice (side h/3) and reduced
to cells by taking the maximum over the sub-cells of each cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import maximum_filter, maximum_filter1d

from . import _kernels
from .errors import DimensionMismatch
from .grid import SUB, Window, _as_alpha, _index_range, shift_sign
from .lorentz import GridFunction, norm_p1


@dataclass(frozen=True, eq=False)
class MaximalVariant:
    kind: str
    alpha: tuple | None = None
    base: GridFunction | None = None
    family: object | None = None


def uncentered() -> MaximalVariant:
    return MaximalVariant("uncentered")


def centered() -> MaximalVariant:
    return MaximalVariant("centered")


def dyadic(alpha=0) -> MaximalVariant:
    return MaximalVariant("dyadic", alpha=alpha)


def weighted(u: GridFunction) -> MaximalVariant:
    return MaximalVariant("weighted", base=u)


def weighted_centered(u: GridFunction) -> MaximalVariant:
    return MaximalVariant("weighted_centered", base=u)


def weighted_dyadic(u: GridFunction, alpha=0) -> MaximalVariant:
    return MaximalVariant("weighted_dyadic", alpha=alpha, base=u)


def sparse(S) -> MaximalVariant:
    return MaximalVariant("sparse", family=S)


# uncentered lattice sweep

def _touching_max(A: np.ndarray, s: int, N: int) -> np.ndarray:
    """G[c] = max of A[a] over cube corners a in [c - s, c + 1] (per axis)."""
    n = A.ndim
    X = np.full((N,) * n, -np.inf)
    X[tuple(slice(0, N - s + 1) for _ in range(n))] = A
    # a window of s + 2 entries starting at c - s
    size, origin = s + 2, math.ceil(s / 2) - 1
    if n == 1:
        return maximum_filter1d(X, size, mode="constant", cval=-np.inf, origin=origin)
    return maximum_filter(X, size=(size, size), mode="constant", cval=-np.inf,
                          origin=(origin, origin))


def _strip_sums(arrays):
    from ._sweep import sweep
    return sweep(sums=arrays)


def uncentered_values(fs: Sequence[np.ndarray], base: np.ndarray | None = None) -> np.ndarray:
    """Cell-sup of prod_i (average of f_i over Q), averages against ``base`` if given."""
    fs = [np.asarray(f, dtype=np.float64) for f in fs]
    n, N = fs[0].ndim, fs[0].shape[0]
    if n == 1:
        b = np.ones(N) if base is None else np.asarray(base, dtype=np.float64)
        nums = [f if base is None else f * b for f in fs]
        if len(fs) == 1:
            return _kernels.uncentered_1d(nums[0], b)
        return _kernels.uncentered_1d_product(np.stack(nums), b)
    arrays = fs if base is None else [f * base for f in fs] + [base]
    out = np.zeros(fs[0].shape)
    for s, S, _, _ in _strip_sums(arrays):
        if base is None:
            c = s ** n
            A = S[0] / c
            for Si in S[1:]:
                A = A * (Si / c)
        else:
            A = S[0] / S[-1]
            for Si in S[1:-1]:
                A = A * (Si / S[-1])
        np.maximum(out, _touching_max(A, s, N), out=out)
    return out


# centered sweep

def _centered_sums_1d(x, N):
    xp = np.concatenate([np.zeros(N), x, np.zeros(N)])
    S = x.copy()
    c = np.arange(N)
    yield 0, S
    for t in range(1, N + 1):
        S = S + xp[N + c - t] + xp[N + c + t]
        yield t, S


def _centered_sums_2d(x, N):
    xp = np.zeros((3 * N, 3 * N))
    xp[N:2 * N, N:2 * N] = x
    c = np.arange(N)
    S = x.copy()
    R = xp[:, N:2 * N].copy()          # rows of xp, column windows of width 2t+1
    C = xp[N:2 * N, :].copy()          # row windows of height 2t-1, all columns
    yield 0, S
    for t in range(1, N + 1):
        R = R + xp[:, N + c - t] + xp[:, N + c + t]
        S = S + C[:, N + c - t] + C[:, N + c + t] + R[N + c - t, :] + R[N + c + t, :]
        C = C + xp[N + c - t, :] + xp[N + c + t, :]
        yield t, S


def centered_values(fs: Sequence[np.ndarray], base: np.ndarray | None = None) -> np.ndarray:
    """Cell-sup over concentric cubes of prod_i averages.

    Unweighted: cubes may leave the window (zero outside, full volume in the
    denominator). Weighted: only cubes inside the window.
    """
    fs = [np.asarray(f, dtype=np.float64) for f in fs]
    n, N = fs[0].ndim, fs[0].shape[0]
    gen = _centered_sums_1d if n == 1 else _centered_sums_2d
    arrays = fs if base is None else [f * base for f in fs] + [base]
    streams = [gen(a, N) for a in arrays]
    out = np.zeros(fs[0].shape)
    idx = np.arange(N)
    room = np.minimum(idx, N - 1 - idx)
    if n == 2:
        room = np.minimum.outer(room, room)
    for step in zip(*streams):
        t = step[0][0]
        S = [st[1] for st in step]
        if base is None:
            c = (2 * t + 1) ** n
            A = S[0] / c
            for Si in S[1:]:
                A = A * (Si / c)
        else:
            if t > N // 2:
                break
            A = S[0] / S[-1]
            for Si in S[1:-1]:
                A = A * (Si / S[-1])
            A = np.where(room >= t, A, 0.0)
        np.maximum(out, A, out=out)
    return out


# dyadic sweeps on the sub-cell lattice

def to_subcells(x: np.ndarray) -> np.ndarray:
    for ax in range(x.ndim):
        x = np.repeat(x, SUB, axis=ax)
    return x


def subcells_to_cells(y: np.ndarray) -> np.ndarray:
    if y.ndim == 1:
        return y.reshape(-1, SUB).max(axis=1)
    N = y.shape[0] // SUB
    return y.reshape(N, SUB, N, SUB).max(axis=(1, 3))


def _scale_layout(window: Window, alpha: tuple, k: int):
    """Per axis: (first cube start, cube count, side) in sub-cells from the window start."""
    side = SUB * 2 ** (k + window.K)
    out = []
    for a in alpha:
        r = _index_range(k, a, window.L)
        lo = side * r.start + int(shift_sign(k) * a * side) + window.sub_offset
        out.append((lo, len(r), side))
    return out


def _block_sums(y: np.ndarray, layout) -> np.ndarray:
    """Sums of ``y`` (zero-padded) over the cubes of one scale."""
    n, M = y.ndim, y.shape[0]
    pads = []
    for lo, cnt, side in layout:
        pads.append((max(0, -lo), max(0, lo + cnt * side - M)))
    yp = np.pad(y, pads)
    sl = tuple(slice(lo + pl, lo + pl + cnt * side) for (lo, cnt, side), (pl, _) in zip(layout, pads))
    yp = yp[sl]
    if n == 1:
        (_, cnt, side), = layout
        return yp.reshape(cnt, side).sum(axis=1)
    (_, c0, s0), (_, c1, s1) = layout
    return yp.reshape(c0, s0, c1, s1).sum(axis=(1, 3))


def _expand(vals: np.ndarray, layout, M: int) -> np.ndarray:
    """Paint per-cube values back onto the window's sub-cells."""
    out = vals
    for ax, (lo, cnt, side) in enumerate(layout):
        out = np.repeat(out, side, axis=ax)
        start = -lo
        out = np.take(out, np.arange(start, start + M), axis=ax)
    return out


def _inside(layout, M: int):
    masks = []
    for lo, cnt, side in layout:
        starts = lo + side * np.arange(cnt)
        masks.append((starts >= 0) & (starts + side <= M))
    if len(masks) == 1:
        return masks[0]
    return np.logical_and.outer(masks[0], masks[1])


def dyadic_subcells(f, window: Window, alpha=0, base=None) -> np.ndarray:
    """sup over cubes of D_alpha containing each sub-cell of the average of f.

    With ``base`` the average is taken against the base weight and only cubes
    inside the window are used.
    """
    alpha = _as_alpha(alpha, window.n)
    y = to_subcells(np.asarray(f, dtype=np.float64))
    M = y.shape[0]
    b = None if base is None else to_subcells(np.asarray(base, dtype=np.float64))
    out = np.zeros(y.shape)
    for k in range(-window.K, window.L + 3):
        layout = _scale_layout(window, alpha, k)
        if b is None:
            vol = float(np.prod([side for _, _, side in layout]))
            avg = _block_sums(y, layout) / vol
        else:
            inside = _inside(layout, M)
            if not inside.any():
                continue
            bs = _block_sums(b, layout)
            avg = np.where(inside, _block_sums(y * b, layout) / np.where(inside, bs, 1.0), 0.0)
        np.maximum(out, _expand(avg, layout, M), out=out)
    return out


def sparse_maximal_subcells(f, family) -> np.ndarray:
    """sup over cubes Q of the family containing each sub-cell of prod_i avg_Q f_i."""
    fs = f if isinstance(f, (list, tuple)) else [f]
    window = family.window
    ys = [to_subcells(np.asarray(getattr(g, "values", g), dtype=np.float64)) for g in fs]
    out = np.zeros(ys[0].shape)
    for sl, vol in family.cube_regions():
        val = 1.0
        for y in ys:
            val *= math.fsum(y[sl].ravel()) / vol
        np.maximum(out[sl], val, out=out[sl])
    return out


def _values(f):
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=np.float64)


def maximal(f, variant: MaximalVariant | None = None, resolution: str = "cell"):
    """Apply a maximal operator. Returns a GridFunction, or the sub-cell array
    when ``resolution="subcell"`` (dyadic and sparse variants)."""
    variant = variant or uncentered()
    window = f.window
    x = _values(f)
    kind = variant.kind
    base = None if variant.base is None else _values(variant.base)
    if base is not None and variant.base.window != window:
        raise DimensionMismatch("base weight lives on another window")
    if kind in ("uncentered", "weighted"):
        vals = uncentered_values([x], base)
    elif kind in ("centered", "weighted_centered"):
        vals = centered_values([x], base)
    elif kind in ("dyadic", "weighted_dyadic", "sparse"):
        if kind == "sparse":
            sub = sparse_maximal_subcells(x, variant.family)
        else:
            sub = dyadic_subcells(x, window, variant.alpha or 0, base)
        if resolution == "subcell":
            return sub
        vals = subcells_to_cells(sub)
    else:
        raise ValueError(f"unknown maximal variant {kind!r}")
    if resolution == "subcell":
        return to_subcells(vals)
    return GridFunction(window, vals)


def _check_vec(f_vec):
    f_vec = list(f_vec)
    win = f_vec[0].window
    if any(g.window != win for g in f_vec):
        raise DimensionMismatch("inputs live on different windows")
    return f_vec, win


def product_maximal(f_vec, variant: MaximalVariant | None = None) -> GridFunction:
    """prod_i M f_i, cellwise."""
    f_vec, win = _check_vec(f_vec)
    out = np.ones(win.shape)
    for g in f_vec:
        out = out * maximal(g, variant).values
    return GridFunction(win, out)


def multilinear_maximal(f_vec, centered: bool = False) -> GridFunction:
    """One shared cube per candidate: sup_Q prod_i avg_Q f_i."""
    f_vec, win = _check_vec(f_vec)
    xs = [g.values for g in f_vec]
    vals = centered_values(xs) if centered else uncentered_values(xs)
    return GridFunction(win, vals)


def n_theta(f_vec, wv, P, theta: float) -> GridFunction:
    """Cell-sup of nu(Q)^{-theta/p} prod_i ||f_i chi_Q||_{L^{p_i,1}(w_i)}^theta.

    Brute force over lattice cubes; meant for small windows.
    """
    from .errors import BadExponent
    if not theta > 0:
        raise BadExponent(f"theta must be positive, got {theta}")
    f_vec, win = _check_vec(f_vec)
    nu = wv.target(P)
    p = P.p
    N, n, vol = win.N, win.n, win.cell_volume
    xs = [g.values for g in f_vec]
    ws = [w.values for w in wv.weights]
    out = np.zeros(win.shape)
    for s in range(1, N + 1):
        A = np.zeros((N - s + 1,) * n)
        for a in np.ndindex(*A.shape):
            sl = tuple(slice(ai, ai + s) for ai in a)
            val = (math.fsum(nu.values[sl].ravel()) * vol) ** (-theta / p)
            for x, w, q in zip(xs, ws, P.p_list):
                val *= norm_p1(x[sl], w[sl] * vol, q) ** theta
            A[a] = val
        np.maximum(out, _touching_max(A, s, N), out=out)
    return GridFunction(win, out)
