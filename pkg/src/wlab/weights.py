"""Weight-class constants, each an exact maximum over all lattice cubes.

Cubes range over every lattice cube contained in the window. Essential
infima and suprema over a cube are minima and maxima of cell values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._sweep import sweep
from .errors import BadExponent, DimensionMismatch
from .grid import LatticeCube, Window
from .lorentz import GridFunction


def conjugate(p: float) -> float:
    return math.inf if p == 1 else p / (p - 1)


@dataclass(frozen=True)
class ExponentTuple:
    """Exponents (p_1, ..., p_m) with 1/p = sum 1/p_i plus optional auxiliaries."""

    p_list: tuple
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        pl = tuple(float(p) for p in self.p_list)
        if not pl or any(not (1 <= p < math.inf) for p in pl):
            raise BadExponent(f"each p_i must lie in [1, inf), got {self.p_list}")
        object.__setattr__(self, "p_list", pl)

    @property
    def m(self) -> int:
        return len(self.p_list)

    @property
    def p(self) -> float:
        return 1.0 / math.fsum(1.0 / q for q in self.p_list)

    @property
    def conjugates(self) -> tuple:
        return tuple(conjugate(q) for q in self.p_list)

    def __getattr__(self, name):
        aux = self.__dict__.get("aux", {})
        if name in aux:
            return aux[name]
        raise AttributeError(name)


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Weights (w_1, ..., w_m) and an optional target weight nu."""

    weights: tuple
    nu: GridFunction | None = None

    def __post_init__(self):
        ws = tuple(self.weights)
        if not ws:
            raise DimensionMismatch("weight vector is empty")
        win = ws[0].window
        for w in (*ws, *([self.nu] if self.nu is not None else [])):
            if w.window != win:
                raise DimensionMismatch("weights live on different windows")
            if not w.is_weight:
                raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "weights", ws)

    @property
    def window(self) -> Window:
        return self.weights[0].window

    def target(self, P: ExponentTuple) -> GridFunction:
        """nu if given, else prod w_i^{p/p_i}."""
        if self.nu is not None:
            return self.nu
        if len(self.weights) != P.m:
            raise DimensionMismatch("weight count differs from exponent count")
        p = P.p
        vals = np.ones(self.window.shape)
        for w, q in zip(self.weights, P.p_list):
            vals = vals * w.values ** (p / q)
        return GridFunction(self.window, vals)


def _vals(w) -> np.ndarray:
    v = w.values if isinstance(w, GridFunction) else np.asarray(w, dtype=np.float64)
    if np.any(v <= 0):
        raise ValueError("weights must be strictly positive")
    return v


def _count(s: int, n: int) -> int:
    return s ** n


def a1_constant(w) -> float:
    """sup_Q (average of w over Q) / min_Q w."""
    x = _vals(w)
    best = 0.0
    for s, (S,), (lo,), _ in sweep(sums=[x], mins=[x]):
        best = max(best, float(np.max(S / _count(s, x.ndim) / lo)))
    return best


def ap_constant(w, p: float) -> float:
    """sup_Q (avg w)(avg w^{1-p'})^{p-1}, p > 1."""
    if not p > 1:
        raise BadExponent(f"A_p needs p > 1, got {p}")
    x = _vals(w)
    y = x ** (1.0 - conjugate(p))
    best = 0.0
    for s, (Sx, Sy), _, _ in sweep(sums=[x, y]):
        c = _count(s, x.ndim)
        best = max(best, float(np.max((Sx / c) * (Sy / c) ** (p - 1.0))))
    return best


def rh_constant(w, s_exp: float) -> float:
    """sup_Q (avg w^s)^{1/s} / avg w, s > 1."""
    if not s_exp > 1:
        raise BadExponent(f"RH_s needs s > 1, got {s_exp}")
    x = _vals(w)
    y = x ** s_exp
    best = 0.0
    for s, (Sx, Sy), _, _ in sweep(sums=[x, y]):
        c = _count(s, x.ndim)
        best = max(best, float(np.max((Sy / c) ** (1.0 / s_exp) / (Sx / c))))
    return best


def rh_inf(w) -> float:
    """sup_Q max_Q w / avg w."""
    x = _vals(w)
    best = 0.0
    for s, (S,), _, (hi,) in sweep(sums=[x], maxs=[x]):
        best = max(best, float(np.max(hi * _count(s, x.ndim) / S)))
    return best


def rh_inf_weighted(g, w) -> float:
    """sup_Q (max_Q g) w(Q) / int_Q g w; with g = v^{-eps} this is [v^{-eps}]_{RH_inf(w)}."""
    gx, wx = _vals(g), _vals(w)
    best = 0.0
    for _, (Sw, Sgw), _, (hi,) in sweep(sums=[wx, gx * wx], maxs=[gx]):
        best = max(best, float(np.max(hi * Sw / Sgw)))
    return best


def base_weighted_constants(v, u, p: float) -> float:
    """[v]_{A_p(u)} for p > 1, [v]_{A_1(u)} for p = 1 (averages taken against u)."""
    if not p >= 1:
        raise BadExponent(f"need p >= 1, got {p}")
    vx, ux = _vals(v), _vals(u)
    best = 0.0
    if p == 1:
        for _, (Su, Svu), (lo,), _ in sweep(sums=[ux, vx * ux], mins=[vx]):
            best = max(best, float(np.max(Svu / Su / lo)))
        return best
    y = vx ** (1.0 - conjugate(p)) * ux
    for _, (Su, Svu, Sy), _, _ in sweep(sums=[ux, vx * ux, y]):
        best = max(best, float(np.max((Svu / Su) * (Sy / Su) ** (p - 1.0))))
    return best


def multilinear_ap(wv: WeightVector, P: ExponentTuple) -> float:
    """Classical sup_Q (avg nu)^{1/p} prod (avg w_i^{1-p_i'})^{1/p_i'}, min w_i at p_i = 1."""
    ws = [_vals(w) for w in wv.weights]
    nu = _vals(wv.target(P))
    p = P.p
    strong = [i for i, q in enumerate(P.p_list) if q > 1]
    sums = [nu] + [ws[i] ** (1.0 - conjugate(P.p_list[i])) for i in strong]
    mins = [ws[i] for i, q in enumerate(P.p_list) if q == 1]
    best = 0.0
    for s, S, lo, _ in sweep(sums=sums, mins=mins):
        c = _count(s, nu.ndim)
        val = (S[0] / c) ** (1.0 / p)
        for k, i in enumerate(strong):
            val = val * (S[k + 1] / c) ** (1.0 / conjugate(P.p_list[i]))
        for m_ in lo:
            val = val / m_
        best = max(best, float(np.max(val)))
    return best


# restricted weak type constants

@dataclass(frozen=True)
class CubeMax:
    """A maximum over lattice cubes with the cube attaining it."""

    value: float
    cube: LatticeCube


LEVEL_RATIO = 1.05
MAX_LEVELS = 64
TIE_SLACK = 1e-13


def _levels(x: np.ndarray) -> tuple:
    """Thresholds for level sums: the distinct values of ``x`` when there are at
    most MAX_LEVELS of them (bounds are then exact), else a geometric ladder.

    Returns (taus, floors, exact) where floors[j] is the smallest value of
    ``x`` in the band (taus[j-1], taus[j]].
    """
    vals = np.unique(x)
    if vals.size <= MAX_LEVELS:
        return vals, vals.copy(), True
    lo, hi = float(vals[0]), float(vals[-1])
    J = int(min(MAX_LEVELS, math.ceil(math.log(hi / lo) / math.log(LEVEL_RATIO))))
    t = lo * (hi / lo) ** (np.arange(J + 1) / J)
    t[0], t[-1] = lo, hi
    t = np.unique(t)
    idx = np.searchsorted(vals, t, side="left")
    prev = np.concatenate([[0], np.searchsorted(vals, t[:-1], side="right")])
    floors = vals[np.minimum(prev, idx)]
    return t, floors, False


def _bounds_2d(ws, nu, p_list, p, levels, kind, window: Window):
    """Per-cube bounds by sweeping level sums; returns flat candidate arrays."""
    n, vol = window.n, window.cell_volume
    sums = [nu]
    layout = []
    for w, (t, _, _) in zip(ws, levels):
        b0 = len(sums)
        sums += [w * (w <= tj) for tj in t]
        c0 = len(sums)
        sums += [(w <= tj).astype(np.float64) for tj in t]
        layout.append((b0, c0))
    out = {k: [] for k in ("lb", "ub", "a0", "a1", "s", "nf")}
    pinvs = [1.0 / q for q in p_list]
    for s, S, lo, hi in sweep(sums=sums, mins=list(ws), maxs=list(ws)):
        qv = _count(s, n) * vol
        nf = (S[0] * vol) ** (1.0 / p)
        lb, ub = nf.ravel().copy(), nf.ravel().copy()
        for i, (t, fl, ex) in enumerate(levels):
            b0, c0 = layout[i]
            J = len(t)
            Bm = np.stack([S[b0 + j].ravel() * vol for j in range(J)], axis=1)
            Cm = np.stack([S[c0 + j].ravel() for j in range(J)], axis=1)
            lo_i, hi_i = lo[i].ravel(), hi[i].ravel()
            l, u = _kernels.factor_bounds_many(
                Bm, Cm, t, fl, J, np.ascontiguousarray(lo_i), np.ascontiguousarray(hi_i),
                vol, pinvs[i], kind, ex)
            lb *= l / qv
            ub *= u / qv
        idx = np.unravel_index(np.arange(lb.size), nf.shape)
        out["lb"].append(lb)
        out["ub"].append(ub)
        out["a0"].append(idx[0])
        out["a1"].append(idx[1])
        out["s"].append(np.full(lb.size, s))
        out["nf"].append(nf.ravel())
    return [np.concatenate(out[k]) for k in ("lb", "ub", "a0", "a1", "s", "nf")]


def _restricted(ws, nu, p_list, kind, window: Window) -> CubeMax:
    """Exact sup_Q nu(Q)^{1/p} prod_i F_i(Q), F_i the per-weight factor of ``kind``.

    In 1D a compiled scan grows intervals from each left end over value
    ranks, pruning whole length groups and single intervals by upper bounds.
    In 2D threshold-level sums bound each cube's value from both sides within
    LEVEL_RATIO (the lower bounds are attained values) and cubes whose upper
    bound beats the best lower bound are evaluated exactly by sorting.
    """
    n, N, vol = window.n, window.N, window.cell_volume
    p = 1.0 / math.fsum(1.0 / q for q in p_list)
    pinvs = np.array([1.0 / q for q in p_list])
    if n == 1:
        best, a, s = _kernels.restricted_1d(
            np.stack(ws), np.ascontiguousarray(nu), pinvs, p, vol, kind, TIE_SLACK)
        return CubeMax(float(best), LatticeCube((int(a) - window.offset,), int(s)))
    levels = [_levels(w) for w in ws]
    lb, ub, a0, a1, sd, nf = _bounds_2d(ws, nu, p_list, p, levels, kind, window)
    jb = int(np.argmax(lb))
    best_lb = float(lb[jb])
    sel = np.flatnonzero(ub > best_lb * (1.0 + TIE_SLACK))
    order = sel[np.argsort(-ub[sel], kind="stable")]
    W = np.stack([w.ravel() for w in ws])
    best, arg = _kernels.branch_and_bound(
        W, n, N, a0[order], a1[order], sd[order], ub[order], nf[order], vol, pinvs, kind,
        best_lb)
    j = jb if arg < 0 else int(order[arg])
    o = window.offset
    corner = (int(a0[j]) - o, int(a1[j]) - o)
    return CubeMax(float(best), LatticeCube(corner, int(sd[j])))


def _window_of(w) -> Window:
    if not isinstance(w, GridFunction):
        raise TypeError("restricted weak constants need GridFunction inputs")
    return w.window


def apr_bracket_max(w, p: float) -> CubeMax:
    if not p >= 1:
        raise BadExponent(f"A_p^R needs p >= 1, got {p}")
    x = _vals(w)
    win = _window_of(w)
    if x.min() == x.max():
        # every cube of a constant weight scores exactly 1
        return CubeMax(1.0, LatticeCube((-win.offset,) * win.n, win.N))
    return _restricted([x], x, (float(p),), _kernels.BRACKET, win)


def apr_bracket(w, p: float) -> float:
    """[w]_{A_p^R} = sup_Q w(Q)^{1/p} ||chi_Q w^{-1}||_{L^{p',inf}(w)} / |Q|; equals [w]_{A_1} at p = 1."""
    if p == 1:
        return a1_constant(w)
    return apr_bracket_max(w, p).value


def apr_double(w, p: float) -> float:
    """||w||_{A_p^R} = sup_Q sup_{E in Q} (|E|/|Q|)(w(Q)/w(E))^{1/p}."""
    if not p >= 1:
        raise BadExponent(f"A_p^R needs p >= 1, got {p}")
    x = _vals(w)
    if x.min() == x.max():
        return 1.0
    return _restricted([x], x, (float(p),), _kernels.DOUBLE, _window_of(w)).value


def multilinear_apr_max(wv: WeightVector, P: ExponentTuple, variant: str = "bracket") -> CubeMax:
    if len(wv.weights) != P.m:
        raise DimensionMismatch("weight count differs from exponent count")
    kind = {"bracket": _kernels.BRACKET, "double_bar": _kernels.DOUBLE}[variant]
    ws = [_vals(w) for w in wv.weights]
    return _restricted(ws, _vals(wv.target(P)), P.p_list, kind, wv.window)


def multilinear_apr(wv: WeightVector, P: ExponentTuple, variant: str = "bracket") -> float:
    """[w, nu]_{A_P^R} (bracket) or ||w, nu||_{A_P^R} (double_bar)."""
    return multilinear_apr_max(wv, P, variant).value


def weak_norm_on_cube(w: np.ndarray, p: float, vol: float) -> tuple:
    """||chi_Q w^{-1}||_{L^{p',inf}(w)} on the cells ``w`` of one cube, with the
    optimal sub-level set as a boolean mask over those cells."""
    flat = w.ravel()
    order = np.argsort(flat, kind="stable")
    x = flat[order]
    mass = np.cumsum(x) * vol
    if p == 1:
        k = int(np.searchsorted(x, x[0], side="right"))
        vals = None
        val = 1.0 / x[0]
    else:
        vals = mass ** (1.0 - 1.0 / p) / x
        k = int(np.argmax(vals)) + 1
        val = float(vals[k - 1])
    mask = np.zeros(flat.size, dtype=bool)
    mask[order[:k]] = True
    return val, mask.reshape(w.shape)


def fujii_wilson(w) -> float:
    """sup_Q (1/w(Q)) int_Q M(w chi_Q), with M the cell-sup lattice maximal operator."""
    x = _vals(w)
    if x.ndim == 1:
        return float(_kernels.fujii_wilson_1d(x))
    from .operators import uncentered_values

    # in 2D a cube meeting Q can cut it in a non-cube rectangle, so the
    # maximal function is taken over the full window
    best = 0.0
    N = x.shape[0]
    for s in range(1, N + 1):
        for a0 in range(N - s + 1):
            for a1 in range(N - s + 1):
                g = np.zeros_like(x)
                g[a0:a0 + s, a1:a1 + s] = x[a0:a0 + s, a1:a1 + s]
                mg = uncentered_values([g])[a0:a0 + s, a1:a1 + s]
                best = max(best, math.fsum(mg.ravel()) / math.fsum(g.ravel()))
    return best


R_GRID = (1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0)


def smallest_ap_exponent(u, bound: float, grid=R_GRID):
    """Smallest r on the grid with [u]_{A_r} <= bound, or None.

    [u]_{A_r} is non-increasing in r, so the answer is a threshold on the grid.
    """
    for r in sorted(grid):
        val = ap_constant(u, r)
        if val <= bound:
            return r, val
    return None
