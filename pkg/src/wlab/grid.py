"""Dyadic lattice geometry: windows, cells, shifted dyadic grids and the
one-third covering trick.

Coordinates are kept exact. Lattice cubes live on the cell lattice (integer
multiples of the cell side ``h = 2**-K``); shifted dyadic cubes have endpoints
on the finer lattice of multiples of ``h/3``, which we call sub-cells.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, CoverNotFound

MAX_CELLS = 2 ** 22
SUB = 3  # sub-cells per cell along each axis

ZERO = Fraction(0)
THIRD = Fraction(1, 3)


@dataclass(frozen=True)
class Window:
    """The box [-2^L, 2^L)^n split into cells of side 2^-K."""

    n: int = 1
    K: int = 4
    L: int = 6
    max_cells: int = MAX_CELLS

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ConfigError(f"window dimension must be 1 or 2, got {self.n}")
        if self.K < 0 or self.L < 0:
            raise ConfigError("window exponents K and L must be non-negative")
        if self.size > self.max_cells:
            raise ConfigError(
                f"window has {self.size} cells, above the limit {self.max_cells}")

    @property
    def N(self) -> int:
        """Cells per axis."""
        return 2 ** (self.L + 1 + self.K)

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def h(self) -> float:
        return 2.0 ** -self.K

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def offset(self) -> int:
        """Array index of the cell whose left corner is the origin."""
        return 2 ** (self.L + self.K)

    @property
    def sub_offset(self) -> int:
        return SUB * self.offset

    def edges(self) -> np.ndarray:
        """Left endpoints of the cells along one axis."""
        return (np.arange(self.N) - self.offset) * self.h

    def centers(self) -> np.ndarray:
        return self.edges() + 0.5 * self.h

    def mesh(self) -> tuple:
        """Cell-center coordinate arrays, one per axis, each of ``shape``."""
        c = self.centers()
        if self.n == 1:
            return (c,)
        return tuple(np.meshgrid(c, c, indexing="ij"))

    def with_K(self, K: int) -> "Window":
        return Window(self.n, K, self.L, self.max_cells)

    def to_dict(self) -> dict:
        return {"n": self.n, "K": self.K, "L": self.L}


@dataclass(frozen=True)
class LatticeCube:
    """A cube with corner and side on the cell lattice, in units of the cell side."""

    corner: tuple
    side: int

    def bounds(self, window: Window) -> list:
        h = Fraction(1, 2 ** window.K)
        return [(c * h, (c + self.side) * h) for c in self.corner]

    def index_slices(self, window: Window) -> tuple:
        o = window.offset
        return tuple(slice(c + o, c + o + self.side) for c in self.corner)

    def inside(self, window: Window) -> bool:
        o = window.offset
        return all(-o <= c and c + self.side <= o for c in self.corner)


def cells(window: Window) -> list:
    """All cells of the window as unit lattice cubes, in lexicographic order."""
    o = window.offset
    rng = range(-o, o)
    return [LatticeCube(tuple(c), 1) for c in itertools.product(rng, repeat=window.n)]


def lattice_cubes(window: Window) -> Iterator[LatticeCube]:
    """Every lattice cube contained in the window (small windows only)."""
    o, N = window.offset, window.N
    for s in range(1, N + 1):
        for start in itertools.product(range(N - s + 1), repeat=window.n):
            yield LatticeCube(tuple(a - o for a in start), s)


def shift_sign(k: int) -> int:
    """Sign of the shift at scale k; alternating so that each grid is nested."""
    return 1 if k % 2 else -1


def _as_alpha(alpha, n: int) -> tuple:
    if isinstance(alpha, (int, float, Fraction, str)):
        alpha = (alpha,) * n
    out = tuple(Fraction(a).limit_denominator(3) for a in alpha)
    if len(out) != n or any(a not in (ZERO, THIRD) for a in out):
        raise ConfigError(f"shift entries must be 0 or 1/3, got {alpha}")
    return out


def all_shifts(n: int) -> list:
    """Shift vectors in {0, 1/3}^n, the zero shift first."""
    return [tuple(a) for a in itertools.product((ZERO, THIRD), repeat=n)]


@dataclass(frozen=True)
class DyadicCube:
    """The cube 2^k ([0,1)^n + j + sign(k) alpha) of the shifted grid D_alpha."""

    alpha: tuple
    k: int
    j: tuple

    @property
    def n(self) -> int:
        return len(self.j)

    @property
    def side(self) -> Fraction:
        return Fraction(2) ** self.k

    def bounds(self) -> list:
        s, t = shift_sign(self.k), Fraction(2) ** self.k
        return [(t * (j + s * a), t * (j + 1 + s * a)) for j, a in zip(self.j, self.alpha)]

    def sub_bounds(self, K: int) -> list:
        """Integer bounds in units of h/3 (exact for k >= -K)."""
        scale = SUB * 2 ** K
        out = []
        for lo, hi in self.bounds():
            a, b = lo * scale, hi * scale
            assert a.denominator == 1 and b.denominator == 1
            out.append((int(a), int(b)))
        return out

    def contains(self, other: "DyadicCube") -> bool:
        return all(a <= c and d <= b for (a, b), (c, d) in zip(self.bounds(), other.bounds()))

    def volume(self) -> Fraction:
        return self.side ** self.n

    def to_dict(self) -> dict:
        return {"k": self.k, "j": list(self.j)}


def _index_range(k: int, a: Fraction, L: int) -> range:
    """Indices j whose scale-k interval meets (-2^L, 2^L) in positive length."""
    s, t = shift_sign(k), Fraction(2) ** k
    e = Fraction(2) ** L / t
    jmin = math.floor(-e - 1 - s * a) + 1
    jmax = math.ceil(e - s * a) - 1
    return range(jmin, jmax + 1)


def scales(window: Window) -> range:
    """Enumerated scales: sides 2^-K up to 2^(L+2)."""
    return range(-window.K, window.L + 3)


def enumerate_dyadic(window: Window, alpha) -> list:
    """All cubes of D_alpha with side in [2^-K, 2^(L+2)] meeting the window."""
    alpha = _as_alpha(alpha, window.n)
    out = []
    for k in scales(window):
        ranges = [_index_range(k, a, window.L) for a in alpha]
        out.extend(DyadicCube(alpha, k, tuple(j)) for j in itertools.product(*ranges))
    return out


def containing_cube(alpha: tuple, k: int, bounds: Sequence) -> DyadicCube | None:
    """The scale-k cube of D_alpha containing the box ``bounds``, if one does."""
    s, t = shift_sign(k), Fraction(2) ** k
    j = []
    for (lo, hi), a in zip(bounds, alpha):
        ji = math.floor(lo / t - s * a)
        if hi > t * (ji + 1 + s * a):
            return None
        j.append(ji)
    return DyadicCube(alpha, k, tuple(j))


def third_trick_cover(window: Window, Q: LatticeCube) -> tuple:
    """Smallest shifted dyadic cube containing Q, searched over all shifts.

    Returns ``(alpha, cube)``. Among covers of equal side the zero shift wins,
    then the lexicographically first shift.
    """
    bounds = Q.bounds(window)
    k0 = math.ceil(math.log2(Q.side)) - window.K
    for k in range(k0, window.L + 3):
        for alpha in all_shifts(window.n):
            cube = containing_cube(alpha, k, bounds)
            if cube is not None:
                return alpha, cube
    raise CoverNotFound(f"no cover for {Q} with side at most 2^{window.L + 2}")
