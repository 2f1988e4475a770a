"""Explicit constant formulas, evaluated in the log domain.

The chained constants overflow binary64 by hundreds of orders of magnitude
for moderate inputs, so every formula is assembled as a sum of logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadExponent, ConfigError, MissingInput

LN2, LN24, LN40 = math.log(2.0), math.log(24.0), math.log(40.0)


@dataclass(frozen=True)
class ConstantsConfig:
    """``c_n`` bounds the A_1 constant of (Mf)^delta by c_n/(1-delta); ``c_npe`` is
    the interpolation constant of the sparse bound. Neither has a published
    value; defaults are stand-ins and reports using ``c_npe`` carry a warning."""

    n: int = 1
    c_n: float | None = None
    c_npe: float = 1.0
    c_npe_is_default: bool = True
    precision: int = 50

    def __post_init__(self):
        if self.c_n is None:
            object.__setattr__(self, "c_n", 2.0 * 3.0 ** self.n)
        if self.c_n < 1:
            raise ConfigError(f"c_n must be at least 1, got {self.c_n}")
        if self.c_npe <= 0:
            raise ConfigError("c_npe must be positive")

    def c_pn(self, p: float) -> float:
        return (2 * p - 1) ** (2 * p - 1) * self.c_n


@dataclass(frozen=True, order=True)
class LogValue:
    """A positive number stored as its natural logarithm."""

    log: float

    @classmethod
    def of(cls, x: float) -> "LogValue":
        if not x > 0:
            raise ValueError("LogValue needs a positive number")
        return cls(math.log(x))

    def __mul__(self, other):
        other = other if isinstance(other, LogValue) else LogValue.of(other)
        return LogValue(self.log + other.log)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = other if isinstance(other, LogValue) else LogValue.of(other)
        return LogValue(self.log - other.log)

    def __pow__(self, a: float):
        return LogValue(self.log * a)

    def __add__(self, other):
        other = other if isinstance(other, LogValue) else LogValue.of(other)
        return LogValue(float(np.logaddexp(self.log, other.log)))

    __radd__ = __add__

    @property
    def log10(self) -> float:
        return self.log / math.log(10.0)

    @property
    def value(self) -> float:
        return math.exp(self.log) if self.log < 709.0 else math.inf

    def bounds(self, x: float, rtol: float = 1e-9) -> bool:
        """x <= self up to a relative slack."""
        return x <= 0 or math.log(x) <= self.log + math.log1p(rtol)


# c_{m,n,p}

def _golden(f, a, b, tol=1e-12, it=200):
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(it):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def c_mnp(m: int, n: int, p: float, cfg: ConstantsConfig | None = None) -> tuple:
    """inf over delta of (c_n / (1 - delta))^{mp/delta}; returns (value, argmin delta).

    Dense grid of 10^4 points in [1e-6, 1 - 1e-6] followed by golden-section
    refinement around the best grid point.
    """
    if m < 1 or p < 1:
        raise BadExponent(f"need m >= 1 and p >= 1, got m={m}, p={p}")
    cfg = cfg or ConstantsConfig(n=n)
    lo, hi = 1e-6, 1 - 1e-6
    lc = math.log(cfg.c_n)

    def logf(d):
        return m * p / d * (lc - math.log1p(-d))

    grid = np.linspace(lo, hi, 10 ** 4)
    vals = m * p / grid * (lc - np.log1p(-grid))
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    d, v = _golden(logf, a, b)
    if vals[i] < v:
        d, v = float(grid[i]), float(vals[i])
    return math.exp(v), d


# script E chain

def _check_AB(A, B):
    if A < 1 - 1e-9 or B < 1 - 1e-9:
        raise BadExponent(f"weight constants must be at least 1, got A={A}, B={B}")
    return max(A, 1.0), max(B, 1.0)


def log_C_rp(n: int, r: float, p: float, A: float, B: float, cfg: ConstantsConfig) -> float:
    """log of C^n_{r,p}(A, B) for r > 1."""
    A, B = _check_AB(A, B)
    cpn = cfg.c_pn(p)
    D = p * math.log2(2 ** n * p * A)
    qp = 2 ** (n + 2) * r * cpn * A ** (2 * p)
    inner = (n + 5) * LN2 + math.log(r) + math.log(cpn) + 2 * p * math.log(A) + 5 * D * LN40
    return ((2 + n * r) * LN2 + (4 * r - 2) * math.log(2 * r - 1) + r * math.log(r)
            + 5 * r * math.log(B) + qp * inner)


def script_E(n: int, r: float, p: float, A: float, B: float,
             cfg: ConstantsConfig | None = None) -> LogValue:
    """E^n_{r,p}(A, B) with A = [u]_{A_p^R} (or [u]_{A_1} at p = 1) and
    B = [uv^p]_{A_r^R}; at r = 1, B is [uv^p]_{A_1} and the r = 2 chain is used
    with B replaced by its square root."""
    cfg = cfg or ConstantsConfig(n=n)
    if not (r >= 1 and p >= 1):
        raise BadExponent(f"need r >= 1 and p >= 1, got r={r}, p={p}")
    A, B = _check_AB(A, B)
    if r == 1:
        r, B = 2.0, math.sqrt(B)
    lc = log_C_rp(n, r, p, A, B, cfg)
    if p == 1:
        return LogValue(n * LN24 + math.log(A) + lc)
    pc = p / (p - 1)
    return LogValue(2 * LN2 + n * LN24 + math.log(pc) + math.log(A) + lc / p)


# theorem-level constants

THEOREMS = ("sawyer", "prodhl", "msawyer", "sparsemax", "dyadic_Cuv", "dualsawyer")


def _need(inputs: dict, *keys):
    for k in keys:
        if k not in inputs:
            raise MissingInput(f"missing input {k!r}")
    return [inputs[k] for k in keys]


def _by_r(B) -> dict:
    if isinstance(B, dict):
        return {float(k): float(v) for k, v in B.items()}
    r, b = B
    return {float(r): float(b)}


def _sawyer(n, p, A, B, cfg) -> LogValue:
    table = _by_r(B)
    if not table:
        raise MissingInput("no measured [uv^p]_{A_r^R} values supplied")
    return min(script_E(n, r, p, A, b, cfg) for r, b in table.items())


def _sparsemax(n, p, eps, eta, W, rh, cfg) -> LogValue:
    if not (0 < eps <= 1 and eps < p):
        raise BadExponent(f"need 0 < eps <= 1 and eps < p, got eps={eps}, p={p}")
    table = _by_r(W)
    best = None
    for r, Wr in table.items():
        lg = (math.log(p / (p - eps)) + r * (n * math.log(3.0) - math.log(eta) + math.log(Wr))
              + math.log(cfg.c_npe) + (1 - eps / p) * math.log(rh)) / eps
        best = lg if best is None else min(best, lg)
    return LogValue(best)


def theorem_constants(theorem: str, inputs: dict, cfg: ConstantsConfig | None = None) -> LogValue:
    """Theoretical constant of a theorem from measured weight constants.

    sawyer:     p, A, B = {r: [uv^p]_{A_r^R}} (r = 1 entries hold [uv^p]_{A_1})
    dyadic_Cuv: p, r, A, B
    prodhl, msawyer: p_list, A_list, B_list (one {s: value} table per weight)
    sparsemax:  p, eps, eta, W = {r: ||w v^-eps||_{A_r^R}}, rh = [v^-eps]_{RH_inf(w)}
    dualsawyer: p, sawyer = {...}, sparsemax = {...} (inputs of those ids)
    """
    cfg = cfg or ConstantsConfig()
    n = inputs.get("n", cfg.n)
    if theorem == "sawyer":
        p, A, B = _need(inputs, "p", "A", "B")
        return _sawyer(n, float(p), float(A), B, cfg)
    if theorem == "dyadic_Cuv":
        p, r, A, B = _need(inputs, "p", "r", "A", "B")
        return LogValue(log_C_rp(n, float(r), float(p), float(A), float(B), cfg))
    if theorem in ("prodhl", "msawyer"):
        pl, Al, Bl = _need(inputs, "p_list", "A_list", "B_list")
        if not (len(pl) == len(Al) == len(Bl)):
            raise MissingInput("p_list, A_list and B_list differ in length")
        m = len(pl)
        p = 1.0 / math.fsum(1.0 / q for q in pl)
        out = LogValue((m + 1) * LN2 - math.log(2 ** p - 1) / p)
        for q, A, B in zip(pl, Al, Bl):
            out = out * _sawyer(n, float(q), float(A), B, cfg)
        return out
    if theorem == "sparsemax":
        p, eps, eta, W, rh = _need(inputs, "p", "eps", "eta", "W", "rh")
        return _sparsemax(n, float(p), float(eps), float(eta), W, float(rh), cfg)
    if theorem == "dualsawyer":
        p, sw, sm = _need(inputs, "p", "sawyer", "sparsemax")
        p = float(p)
        if not p > 1:
            raise BadExponent(f"the dual estimate needs p > 1, got {p}")
        c35 = theorem_constants("sawyer", {"n": n, **sw}, cfg)
        c45 = theorem_constants("sparsemax", {"n": n, **sm}, cfg)
        return LogValue(LN2 + n * LN24 + n * LN2 + math.log(p)) * c45 * c35
    raise ConfigError(f"unknown theorem id {theorem!r}")
