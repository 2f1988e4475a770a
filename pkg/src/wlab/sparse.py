"""Sparse cube families: stopping-time construction, sparse operators and
max-flow certificates of sparseness.

All geometry is on the sub-cell lattice (side h/3), where every shifted
dyadic cube of side at least h has integer bounds. Disjoint sets E_Q are
stored as runs of flattened sub-cell indices inside the family's frame (the
bounding box of its cubes); each run carries the fraction of every sub-cell
in it that belongs to E_Q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .errors import CoverNotFound, DimensionMismatch
from .grid import (SUB, DyadicCube, Window, _as_alpha, containing_cube,
                   shift_sign)
from .lorentz import GridFunction
from .operators import subcells_to_cells, to_subcells


def _fraction_str(x: Fraction) -> str:
    return str(Fraction(x))


@dataclass(eq=False)
class SparseFamily:
    window: Window
    alpha: tuple
    cubes: list
    eta: Fraction = Fraction(1, 2)
    assignment: list | None = None

    def __post_init__(self):
        self.alpha = _as_alpha(self.alpha, self.window.n)
        self.eta = Fraction(self.eta).limit_denominator(10 ** 4)
        for Q in self.cubes:
            if Q.k < -self.window.K:
                raise ValueError("cubes must have side at least one cell")

    def sub_bounds(self) -> list:
        return [Q.sub_bounds(self.window.K) for Q in self.cubes]

    def frame(self) -> tuple:
        """(lower corner, shape) of the cubes' bounding box in absolute sub-cells."""
        b = self.sub_bounds()
        n = self.window.n
        lo = tuple(min(q[i][0] for q in b) for i in range(n))
        hi = tuple(max(q[i][1] for q in b) for i in range(n))
        return lo, tuple(h - l for l, h in zip(lo, hi))

    def cube_regions(self):
        """For cubes meeting the window: (sub-cell slice of the window, cube volume in sub-cells)."""
        off, M = self.window.sub_offset, SUB * self.window.N
        for bounds in self.sub_bounds():
            sl, vol = [], 1
            for a, b in bounds:
                lo, hi = max(a + off, 0), min(b + off, M)
                if hi <= lo:
                    break
                sl.append(slice(lo, hi))
                vol *= b - a
            else:
                yield tuple(sl), vol

    def to_dict(self) -> dict:
        d = {
            "window": self.window.to_dict(),
            "alpha": [_fraction_str(a) for a in self.alpha],
            "eta": _fraction_str(self.eta),
            "cubes": [Q.to_dict() for Q in self.cubes],
            "assignment": None,
        }
        if self.assignment is not None:
            d["assignment"] = [[[int(a), int(b), _fraction_str(f)] for a, b, f in runs]
                               for runs in self.assignment]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SparseFamily":
        w = d["window"]
        window = Window(w["n"], w["K"], w["L"])
        alpha = tuple(Fraction(a) for a in d["alpha"])
        cubes = [DyadicCube(alpha, c["k"], tuple(c["j"])) for c in d["cubes"]]
        asg = d.get("assignment")
        if asg is not None:
            asg = [[(a, b, Fraction(f)) for a, b, f in runs] for runs in asg]
        return cls(window, alpha, cubes, Fraction(d["eta"]), asg)


@dataclass
class Certificate:
    assignment: list
    ok: bool = field(default=True, init=False)


@dataclass
class Refutation:
    cubes: list
    demand: Fraction
    area: Fraction
    ok: bool = field(default=False, init=False)


# stopping-time construction

def _cube_at(alpha, k, lower_sub, K) -> DyadicCube:
    t = Fraction(2) ** k
    s = shift_sign(k)
    j = []
    for x, a in zip(lower_sub, alpha):
        ji = Fraction(x, SUB * 2 ** K) / t - s * a
        assert ji.denominator == 1
        j.append(int(ji))
    return DyadicCube(alpha, k, tuple(j))


def _mask_runs(mask: np.ndarray, base: np.ndarray) -> list:
    """Runs of consecutive flat frame indices ``base[mask]``."""
    idx = np.sort(base[mask].ravel())
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) != 1)
    starts = np.r_[idx[0], idx[breaks + 1]]
    stops = np.r_[idx[breaks] + 1, idx[-1] + 1]
    return [(int(a), int(b), Fraction(1)) for a, b in zip(starts, stops)]


def _tree(y, alpha, root, K, lam, off, M):
    """Stopping tree under ``root``: (cube, lower sub-cell corner, E_Q mask) triples."""
    n = y.ndim
    rb = root.sub_bounds(K)
    flo = tuple(a for a, _ in rb)
    side = rb[0][1] - rb[0][0]
    Y = np.zeros((side,) * n)
    src = tuple(slice(max(a + off, 0), min(b + off, M)) for a, b in rb)
    dst = tuple(slice(s.start - (a + off), s.stop - (a + off)) for s, (a, _) in zip(src, rb))
    Y[dst] = y[src]
    out = []
    stack = [(root, (0,) * n)]
    while stack:
        Q, qlo = stack.pop()
        qs = SUB * 2 ** (Q.k + K)
        YQ = Y[tuple(slice(a, a + qs) for a in qlo)]
        thresh = lam * math.fsum(YQ.ravel()) / qs ** n
        taken = np.zeros(YQ.shape, dtype=bool)
        kids = []
        for kk in range(Q.k - 1, -K - 1, -1):
            b = SUB * 2 ** (kk + K)
            c = qs // b
            if n == 1:
                sums = YQ.reshape(c, b).sum(axis=1)
                cov = taken[::b]
            else:
                sums = YQ.reshape(c, b, c, b).sum(axis=(1, 3))
                cov = taken[::b, ::b]
            hit = (sums / b ** n > thresh) & ~cov
            for idx in zip(*np.nonzero(hit)):
                lo = tuple(q + i * b for q, i in zip(qlo, idx))
                taken[tuple(slice(i * b, (i + 1) * b) for i in idx)] = True
                kids.append((kk, lo))
        out.append((Q, tuple(q + f for q, f in zip(qlo, flo)), ~taken))
        for kk, lo in reversed(kids):
            absl = tuple(l + a for l, a in zip(lo, flo))
            stack.append((_cube_at(alpha, kk, absl, K), lo))
    return out


def _covered(Q: DyadicCube, K: int, off: int, M: int) -> int:
    """Number of window sub-cells inside Q."""
    out = 1
    for a, b in Q.sub_bounds(K):
        out *= max(0, min(b + off, M) - max(a + off, 0))
    return out


def cz_sparse_decompose(f, alpha=0, lam: float = 2.0) -> SparseFamily:
    """Stopping-time family of f on the grid D_alpha.

    For every cube T of the top scale 2^(L+2) meeting the support, the tree
    starts at the smallest grid cube R inside T containing the support in T.
    The children of Q are the maximal grid cubes S inside Q with
    avg_S f > lam * avg_Q f, and E_Q is Q minus its children. Ancestors of R
    up to T join the family when they reach window cells the cubes below them
    miss; their E_P is P minus the kept cube below.
    """
    window = f.window
    n, K = window.n, window.K
    alpha = _as_alpha(alpha, n)
    eta = Fraction(1) - 1 / Fraction(lam).limit_denominator(10 ** 4)
    y = to_subcells(f.values)
    if not np.any(y > 0):
        return SparseFamily(window, alpha, [], eta, [])
    off, M = window.sub_offset, SUB * window.N
    unit = SUB * 2 ** K
    top = window.L + 2
    t = SUB * 2 ** (top + K)
    # top-scale cubes meeting the support, grouped by index vector
    sgn = shift_sign(top)
    nz = np.argwhere(y > 0)
    shift = [int(sgn * a * t) for a in alpha]
    jj = np.stack([(nz[:, i] - off - shift[i]) // t for i in range(n)], axis=1)
    pieces = []
    for jrow in np.unique(jj, axis=0):
        T = DyadicCube(alpha, top, tuple(int(v) for v in jrow))
        pts = nz[np.all(jj == jrow, axis=1)]
        box = [(Fraction(int(pts[:, i].min()) - off, unit),
                Fraction(int(pts[:, i].max()) + 1 - off, unit)) for i in range(n)]
        root = None
        for k in range(-K, top + 1):
            root = containing_cube(alpha, k, box)
            if root is not None:
                break
        if root is None:
            raise CoverNotFound(f"no cube of the grid with shift {alpha} contains the support")
        tb = T.sub_bounds(K)
        ymask = np.zeros_like(y)
        sl = tuple(slice(max(a + off, 0), min(b + off, M)) for a, b in tb)
        ymask[sl] = y[sl]
        chain = []
        P, below = root, root
        while P.k < top:
            P = containing_cube(alpha, P.k + 1, P.bounds())
            if _covered(P, K, off, M) > _covered(below, K, off, M):
                chain.append((P, below))
                below = P
        for P, child in reversed(chain):
            pb, cb = P.sub_bounds(K), child.sub_bounds(K)
            mask = np.ones((pb[0][1] - pb[0][0],) * n, dtype=bool)
            mask[tuple(slice(c0 - p0, c1 - p0) for (p0, _), (c0, c1) in zip(pb, cb))] = False
            pieces.append((P, tuple(a for a, _ in pb), mask))
        pieces.extend(_tree(ymask, alpha, root, K, lam, off, M))
    cubes = [Q for Q, _, _ in pieces]
    family = SparseFamily(window, alpha, cubes, eta, None)
    lo, shape = family.frame()
    flat = np.arange(int(np.prod(shape))).reshape(shape)
    family.assignment = []
    for Q, qlo, mask in pieces:
        region = tuple(slice(a - l, a - l + s) for a, l, s in zip(qlo, lo, mask.shape))
        family.assignment.append(_mask_runs(mask, flat[region]))
    return family


# sparse operator

def sparse_operator(S: SparseFamily, f_vec, resolution: str = "cell"):
    """sum over Q in S of prod_i avg_Q f_i times chi_Q.

    ``resolution="subcell"`` returns the exact sub-cell array; the default
    returns the cell-sup GridFunction.
    """
    if isinstance(f_vec, GridFunction):
        f_vec = [f_vec]
    if any(g.window != S.window for g in f_vec):
        raise DimensionMismatch("inputs and family live on different windows")
    ys = [to_subcells(g.values) for g in f_vec]
    out = np.zeros(ys[0].shape)
    for sl, vol in S.cube_regions():
        val = 1.0
        for y in ys:
            val *= math.fsum(y[sl].ravel()) / vol
        out[sl] += val
    if resolution == "subcell":
        return out
    return GridFunction(S.window, subcells_to_cells(out))


# certificates

def _atoms(S: SparseFamily):
    """Group frame sub-cells by the set of cubes containing them."""
    lo, shape = S.frame()
    rng = np.random.default_rng(20240607)
    h1 = np.zeros(shape, dtype=np.uint64)
    h2 = np.zeros(shape, dtype=np.uint64)
    regions = []
    for bounds in S.sub_bounds():
        sl = tuple(slice(a - l, b - l) for (a, b), l in zip(bounds, lo))
        regions.append(sl)
        k1, k2 = rng.integers(1, 2 ** 63, size=2, dtype=np.uint64)
        h1[sl] += k1
        h2[sl] += k2
    key = np.stack([h1.ravel(), h2.ravel()], axis=1)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(shape)
    return regions, inv


def check_assignment(S: SparseFamily, assignment: list, eta=None) -> bool:
    """Exact check: pieces inside their cube, total per sub-cell at most 1,
    and each cube receives at least eta |Q|."""
    eta = S.eta if eta is None else Fraction(eta).limit_denominator(10 ** 4)
    lo, shape = S.frame()
    used = {}
    flat = np.arange(int(np.prod(shape))).reshape(shape)
    for bounds, runs in zip(S.sub_bounds(), assignment):
        sl = tuple(slice(a - l, b - l) for (a, b), l in zip(bounds, lo))
        inside = set()
        got = Fraction(0)
        members = flat[sl]
        first, last = int(members.min()), int(members.max())
        for a, b, frac in runs:
            if not (first <= a and b - 1 <= last):
                return False
            cells_ = np.arange(a, b)
            if not inside:
                inside = set(members.ravel().tolist())
            if any(c not in inside for c in cells_.tolist()):
                return False
            for c in cells_.tolist():
                used[c] = used.get(c, Fraction(0)) + frac
            got += frac * (b - a)
        vol = (bounds[0][1] - bounds[0][0]) ** len(bounds)
        if got < eta * vol:
            return False
    return all(v <= 1 for v in used.values())


def verify_sparse(S: SparseFamily, eta=None):
    """Decide whether disjoint E_Q in Q with |E_Q| >= eta |Q| exist.

    Max flow on source -> cube (demand eta|Q|) -> atom -> sink (atom area),
    where atoms are groups of sub-cells lying in the same cubes. Returns a
    Certificate with an explicit assignment or a Refutation naming a set of
    cubes whose demand exceeds the area of their union.
    """
    eta = S.eta if eta is None else Fraction(eta).limit_denominator(10 ** 4)
    C = len(S.cubes)
    if C == 0:
        return Certificate([])
    regions, inv = _atoms(S)
    A = int(inv.max()) + 1
    area = np.bincount(inv.ravel(), minlength=A)
    a_num, b_den = eta.numerator, eta.denominator
    vols = [int(np.prod([r.stop - r.start for r in sl])) for sl in regions]
    demand = [a_num * v for v in vols]
    big = sum(demand) + 1
    if big >= 2 ** 31 or int(area.max()) * b_den >= 2 ** 31:
        raise OverflowError("capacities exceed the flow solver's integer range")
    src, snk = 0, 1 + C + A
    rows, cols, caps = [], [], []
    members = []
    for i, sl in enumerate(regions):
        rows.append(src); cols.append(1 + i); caps.append(demand[i])
        at = np.unique(inv[sl])
        members.append(at)
        rows.extend([1 + i] * at.size); cols.extend((1 + C + at).tolist()); caps.extend([big] * at.size)
    for t in range(A):
        rows.append(1 + C + t); cols.append(snk); caps.append(int(area[t]) * b_den)
    # the zero-signature atom holds frame cells outside every cube; it has no
    # incoming edges so it never carries flow
    G = csr_matrix((np.array(caps, dtype=np.int32), (rows, cols)), shape=(snk + 1, snk + 1))
    res = maximum_flow(G, src, snk)
    F = res.flow.tocsr()
    if res.flow_value == sum(demand):
        return Certificate(_assignment_from_flow(S, F, members, inv, C, b_den))
    # residual reachability from the source
    R = (G - F).tocsr()
    R.data = np.maximum(R.data, 0)
    back = F.T.tocsr()
    seen = np.zeros(snk + 1, dtype=bool)
    seen[src] = True
    todo = [src]
    while todo:
        u = todo.pop()
        for M_ in (R, back):
            row = slice(M_.indptr[u], M_.indptr[u + 1])
            for v, c in zip(M_.indices[row], M_.data[row]):
                if c > 0 and not seen[v]:
                    seen[v] = True
                    todo.append(v)
    bad = [i for i in range(C) if seen[1 + i]]
    union = np.zeros(inv.shape, dtype=bool)
    for i in bad:
        union[regions[i]] = True
    unit = (SUB * 2 ** S.window.K) ** S.window.n
    return Refutation([S.cubes[i] for i in bad],
                      sum((eta * vols[i] for i in bad), Fraction(0)) / unit,
                      Fraction(int(union.sum()), unit))


def _assignment_from_flow(S, F, members, inv, C, b_den) -> list:
    """Split each atom's sub-cells among the cubes sending flow into it."""
    flat_atoms = inv.ravel()
    order = np.argsort(flat_atoms, kind="stable")
    starts = np.searchsorted(flat_atoms[order], np.arange(int(flat_atoms.max()) + 2))
    cursor = {}
    out = []
    for i in range(C):
        runs = []
        row = F.getrow(1 + i)
        for col, val in zip(row.indices, row.data):
            if val <= 0:
                continue
            t = col - 1 - C
            cellz = order[starts[t]:starts[t + 1]]
            pos, used = cursor.get(t, (0, Fraction(0)))
            need = Fraction(int(val), b_den)
            while need > 0:
                take = min(need, 1 - used)
                runs.append((int(cellz[pos]), int(cellz[pos]) + 1, take))
                need -= take
                used += take
                if used == 1:
                    pos, used = pos + 1, Fraction(0)
            cursor[t] = (pos, used)
        out.append(_merge_runs(runs))
    return out


def _merge_runs(runs: list) -> list:
    runs.sort()
    merged = []
    for a, b, f in runs:
        if merged and merged[-1][1] == a and merged[-1][2] == f:
            merged[-1] = (merged[-1][0], b, f)
        else:
            merged.append((a, b, f))
    return merged
