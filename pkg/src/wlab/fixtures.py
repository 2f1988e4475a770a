"""Weight and function builders from JSON-style specs, and seeded random
function families.

Weight spec kinds: ``ones``, ``step`` (values in equal contiguous blocks along
the first axis), ``power`` (|x|^a with exact cell averages, a tensor product
in 2D), ``mh`` ((M h)^exponent for a function spec h), ``product`` (of
factor specs) and ``values`` (raw cell values). Any spec may carry an
``exponent`` applied last (for ``mh`` it is the power of M h).

Function spec kinds: ``indicator`` (a box given by ``interval`` in 1D or
``box`` in 2D), ``step``, ``power_bump`` (|x - center|^a on |x - center| < radius,
exact averages), ``mh`` and ``values``.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .grid import Window
from .lorentz import GridFunction


def _kind(spec) -> str:
    if isinstance(spec, str):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"spec needs a 'kind': {spec!r}")
    return spec["kind"]


def _power_averages_1d(window: Window, a: float, center: float = 0.0) -> np.ndarray:
    """Exact cell averages of |x - center|^a, a > -1."""
    if a <= -1:
        raise ConfigError(f"|x|^a is not locally integrable for a={a}")
    e = np.append(window.edges(), window.edges()[-1] + window.h) - center
    F = np.sign(e) * np.abs(e) ** (a + 1) / (a + 1)
    return np.diff(F) / window.h


def _tensor(window: Window, v1: np.ndarray) -> np.ndarray:
    if window.n == 1:
        return v1
    return np.multiply.outer(v1, v1)


def _blocks(window: Window, values) -> np.ndarray:
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise ConfigError("step values must be a non-empty list")
    idx = (np.arange(window.N) * vals.size) // window.N
    v1 = vals[idx]
    if window.n == 1:
        return v1
    return np.repeat(v1[:, None], window.N, axis=1)


def _raw(window: Window, values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.size != window.size:
        raise ConfigError(f"expected {window.size} values, got {v.size}")
    return v.reshape(window.shape)


def _box_mask(window: Window, box) -> np.ndarray:
    """Cells whose centers lie in the half-open box."""
    masks = []
    c = window.centers()
    for lo, hi in box:
        masks.append((c >= lo) & (c < hi))
    if window.n == 1:
        return masks[0]
    return np.logical_and.outer(masks[0], masks[1])


def build_function(spec, window: Window) -> GridFunction:
    k = _kind(spec)
    if k == "indicator":
        box = spec.get("box") or [spec["interval"]]
        if len(box) != window.n:
            raise ConfigError("indicator box dimension differs from the window")
        vals = _box_mask(window, box).astype(np.float64)
    elif k == "step":
        vals = _blocks(window, spec["values"])
    elif k == "values":
        vals = _raw(window, spec["values"])
    elif k == "power_bump":
        a, R, c = float(spec["a"]), float(spec.get("radius", 1.0)), float(spec.get("center", 0.0))
        v1 = _power_averages_1d(window, a, c)
        inside = np.abs(window.centers() - c) < R
        v1 = np.where(inside, v1, 0.0)
        vals = _tensor(window, v1)
    elif k == "mh":
        from .operators import maximal
        h = build_function(spec["h"], window)
        vals = maximal(h).values
    else:
        raise ConfigError(f"unknown function kind {k!r}")
    out = GridFunction(window, vals)
    if isinstance(spec, dict) and "exponent" in spec:
        out = out ** float(spec["exponent"])
    return out


def build_weight(spec, window: Window) -> GridFunction:
    k = _kind(spec)
    if k == "ones":
        vals = np.ones(window.shape)
    elif k == "step":
        vals = _blocks(window, spec["values"])
    elif k == "values":
        vals = _raw(window, spec["values"])
    elif k == "power":
        vals = _tensor(window, _power_averages_1d(window, float(spec["a"])))
    elif k == "mh":
        from .operators import maximal
        h = build_function(spec["h"], window)
        if not np.any(h.values > 0):
            raise ConfigError("mh weight needs a non-zero h")
        vals = maximal(h).values
    elif k == "product":
        vals = np.ones(window.shape)
        for f in spec["factors"]:
            vals = vals * build_weight(f, window).values
    else:
        raise ConfigError(f"unknown weight kind {k!r}")
    if isinstance(spec, dict) and "exponent" in spec:
        vals = vals ** float(spec["exponent"])
    w = GridFunction(window, vals)
    if not w.is_weight:
        raise ConfigError(f"weight spec {spec!r} is not strictly positive")
    return w


# random families

def _random_dyadic_union(window: Window, rng) -> np.ndarray:
    N, n = window.N, window.n
    mask = np.zeros(window.shape, dtype=bool)
    for _ in range(int(rng.integers(1, 4))):
        s = 2 ** int(rng.integers(0, max(1, int(math.log2(N)) - 1)))
        corner = [int(rng.integers(0, N // s)) * s for _ in range(n)]
        mask[tuple(slice(c, c + s) for c in corner)] = True
    return mask.astype(np.float64)


def _random_step(window: Window, rng) -> np.ndarray:
    N, n = window.N, window.n
    vals = np.zeros(window.shape)
    a = int(rng.integers(0, N - 1))
    b = int(rng.integers(a + 1, min(N, a + max(2, N // 4)) + 1))
    levels = rng.integers(1, 9, size=int(rng.integers(1, 5))).astype(np.float64)
    seg = levels[(np.arange(b - a) * levels.size) // (b - a)]
    if n == 1:
        vals[a:b] = seg
    else:
        c = int(rng.integers(0, N - (b - a) + 1))
        vals[a:b, c:c + (b - a)] = seg[:, None]
    return vals


def _random_bump(window: Window, rng) -> np.ndarray:
    a = float(rng.uniform(-0.9, 1.0))
    R = float(2.0 ** rng.integers(-window.K, window.L))
    c = float(rng.integers(-window.offset // 2, window.offset // 2)) * window.h
    return build_function({"kind": "power_bump", "a": a, "radius": R, "center": c}, window).values


def _random_mh(window: Window, rng) -> np.ndarray:
    from .operators import maximal
    h = GridFunction(window, _random_dyadic_union(window, rng))
    mh = maximal(h).values
    cut = _random_dyadic_union(window, rng) + h.values
    return mh * (cut > 0)


RANDOM_KINDS = {
    "dyadic_union": _random_dyadic_union,
    "step": _random_step,
    "bump": _random_bump,
    "mh": _random_mh,
}


def random_functions(window: Window, count: int, seed: int,
                     kinds=("dyadic_union", "step", "bump", "mh")) -> list:
    """``count`` non-zero functions cycling through ``kinds``; ids are stable."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        vals = RANDOM_KINDS[kind](window, rng)
        if not np.any(vals > 0):
            vals[(window.offset,) * window.n] = 1.0
        out.append((f"{kind}-{i:03d}", GridFunction(window, vals)))
    return out


def random_indicators(window: Window, count: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        if rng.random() < 0.5:
            vals = _random_dyadic_union(window, rng)
        else:
            vals = (rng.random(window.shape) < rng.uniform(0.05, 0.5)).astype(np.float64)
            if not vals.any():
                vals.flat[0] = 1.0
        out.append((f"set-{i:03d}", GridFunction(window, vals)))
    return out


def random_weight(window: Window, rng, kind: str = "step") -> GridFunction:
    """A random positive weight of the given kind."""
    if kind == "step":
        levels = rng.uniform(0.2, 5.0, size=int(rng.integers(2, 9)))
        return build_weight({"kind": "step", "values": levels.tolist()}, window)
    if kind == "power":
        return build_weight({"kind": "power", "a": float(rng.uniform(-0.8, 1.5))}, window)
    if kind == "mh":
        h = {"kind": "values", "values": _random_dyadic_union(window, rng).ravel().tolist()}
        return build_weight({"kind": "mh", "h": h, "exponent": float(rng.uniform(-1, 1))}, window)
    if kind == "lognormal":
        return GridFunction(window, np.exp(rng.normal(0, 1, size=window.shape)))
    raise ConfigError(f"unknown random weight kind {kind!r}")
