"""Grid functions, distribution functions, rearrangements and exact
Lorentz and Lebesgue quasi-norms for piecewise-constant data.

Every norm takes ``f`` and a measure ``nu``. ``f`` may be a GridFunction or a
plain array. ``nu`` may be ``None`` (Lebesgue measure), a GridFunction
(a density, so cell masses are density times cell volume) or a plain array of
cell masses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadExponent, DimensionMismatch, NegativeLevel
from .grid import Window


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Non-negative piecewise-constant function, one value per window cell."""

    window: Window
    values: np.ndarray

    def __post_init__(self):
        v = np.abs(np.asarray(self.values, dtype=np.float64))
        if v.shape != self.window.shape:
            v = v.reshape(self.window.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, window: Window, c: float = 1.0) -> "GridFunction":
        return cls(window, np.full(window.shape, float(c)))

    @classmethod
    def indicator(cls, window: Window, mask) -> "GridFunction":
        return cls(window, np.asarray(mask, dtype=np.float64))

    @property
    def is_weight(self) -> bool:
        return bool(np.all(self.values > 0))

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.window != self.window:
                raise DimensionMismatch("grid functions live on different windows")
            return other.values
        return other

    def __mul__(self, other) -> "GridFunction":
        return GridFunction(self.window, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "GridFunction":
        return GridFunction(self.window, self.values / self._other(other))

    def __add__(self, other) -> "GridFunction":
        return GridFunction(self.window, self.values + self._other(other))

    __radd__ = __add__

    def __pow__(self, a: float) -> "GridFunction":
        return GridFunction(self.window, self.values ** a)

    def reciprocal(self) -> "GridFunction":
        return GridFunction(self.window, 1.0 / self.values)

    def integral(self) -> float:
        return math.fsum(self.values.ravel()) * self.window.cell_volume


def as_values(f) -> np.ndarray:
    if isinstance(f, GridFunction):
        return f.values.ravel()
    return np.abs(np.asarray(f, dtype=np.float64)).ravel()


def as_masses(f, nu) -> np.ndarray:
    """Cell masses of the measure ``nu`` aligned with ``f``."""
    if nu is None:
        vol = f.window.cell_volume if isinstance(f, GridFunction) else 1.0
        return np.full(as_values(f).size, vol)
    if isinstance(nu, GridFunction):
        return nu.values.ravel() * nu.window.cell_volume
    m = np.asarray(nu, dtype=np.float64).ravel()
    if np.any(m < 0):
        raise ValueError("cell masses must be non-negative")
    return m


def _pairs(f, nu):
    v, m = as_values(f), as_masses(f, nu)
    if v.size != m.size:
        raise DimensionMismatch("function and measure have different lengths")
    keep = (v > 0) & (m > 0)
    return v[keep], m[keep]


def _check_p(p, allow_small=False):
    if not (p > 0) or (p < 1 and not allow_small):
        raise BadExponent(f"exponent p={p} outside the admissible range")


def distribution(f, nu=None, t: float = 0.0) -> float:
    """nu({f > t}), summed exactly over cells."""
    if t < 0:
        raise NegativeLevel(f"level must be non-negative, got {t}")
    v, m = _pairs(f, nu)
    return math.fsum(m[v > t])


@dataclass(frozen=True)
class StepProfile:
    """Decreasing rearrangement as a step function.

    ``levels[i]`` is the value of f* on [masses[i-1], masses[i]) with
    masses[-1] = 0; f* vanishes beyond the last mass.
    """

    levels: np.ndarray
    masses: np.ndarray

    def __call__(self, t):
        i = np.searchsorted(self.masses, np.asarray(t, dtype=np.float64), side="right")
        ext = np.append(self.levels, 0.0)
        return ext[i]

    @property
    def support(self) -> float:
        return float(self.masses[-1]) if self.masses.size else 0.0


def _grouped(f, nu):
    """Distinct positive levels (descending) with their mass and cumulative mass."""
    v, m = _pairs(f, nu)
    if v.size == 0:
        e = np.zeros(0)
        return e, e, e
    order = np.argsort(-v, kind="stable")
    v, m = v[order], m[order]
    starts = np.flatnonzero(np.r_[True, v[1:] != v[:-1]])
    levels = v[starts]
    mass = np.add.reduceat(m.astype(np.longdouble), starts)
    cum = np.cumsum(mass)
    return levels, mass.astype(np.float64), cum.astype(np.float64)


def rearrangement(f, nu=None) -> StepProfile:
    levels, _, cum = _grouped(f, nu)
    return StepProfile(levels, cum)


def norm_p1(f, nu=None, p: float = 1.0, allow_small: bool = False) -> float:
    """L^{p,1}(nu) norm: p * sum over levels of lambda^{1/p} times level gaps."""
    _check_p(p, allow_small)
    levels, _, cum = _grouped(f, nu)
    if levels.size == 0:
        return 0.0
    gaps = levels - np.append(levels[1:], 0.0)
    return p * math.fsum(gaps * cum ** (1.0 / p))


def norm_pinf(f, nu=None, p: float = 1.0) -> float:
    """L^{p,infinity}(nu) quasi-norm: max over levels v of v * nu(f >= v)^{1/p}."""
    _check_p(p, allow_small=True)
    if math.isinf(p):
        return norm_lebesgue(f, nu, math.inf)
    levels, _, cum = _grouped(f, nu)
    if levels.size == 0:
        return 0.0
    return float(np.max(levels * cum ** (1.0 / p)))


def norm_lebesgue(f, nu=None, p: float = 1.0) -> float:
    if not p > 0:
        raise BadExponent(f"exponent p={p} must be positive")
    v, m = _pairs(f, nu)
    if v.size == 0:
        return 0.0
    top = float(v.max())
    if math.isinf(p) or top == 0:
        return top
    # scale by the max so tiny values do not underflow under the power
    return top * math.fsum((v / top) ** p * m) ** (1.0 / p)


def norm_triple(f, nu=None, p: float = 2.0, r: float = 1.0) -> float:
    """sup over sets E of finite positive measure of
    nu(E)^{1/p - 1/r} (int_E f^r dnu)^{1/r}.

    The supremum is attained on a super-level set, so only level-set prefixes
    are scanned.
    """
    if not (0 < r < p):
        raise BadExponent(f"need 0 < r < p, got p={p}, r={r}")
    levels, mass, cum = _grouped(f, nu)
    if levels.size == 0:
        return 0.0
    top = float(levels.max())
    mom = np.cumsum(((levels / top) ** r).astype(np.longdouble) * mass).astype(np.float64)
    return top * float(np.max(cum ** (1.0 / p - 1.0 / r) * mom ** (1.0 / r)))
