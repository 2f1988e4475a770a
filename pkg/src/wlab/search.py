"""Derivative-free extremal search over parametric weight families, and
sharpness scans of the theoretical constants."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fixtures
from .errors import BadExponent, ConfigError, DegenerateFamily
from .grid import Window
from .lorentz import GridFunction, norm_p1, norm_pinf, norm_triple
from .operators import multilinear_maximal, n_theta
from .verify import (ExperimentSpec, check_msawyer, check_prodhl, check_sawyer,
                     check_sparse_domination, run_experiment, stopping_family)
from .weights import ExponentTuple, WeightVector, multilinear_apr

MIN_BUDGET = 50
FAMILY_KINDS = ("constant", "power", "step", "mh_product", "mixed")


def _bumps(window: Window, count: int) -> list:
    """Fixed disjoint unit indicators h_i used by the (M h_i)^s families."""
    out = []
    for i in range(count):
        lo = float(i - count // 2)
        box = [[lo, lo + 1.0]] * window.n
        out.append(fixtures.build_function({"kind": "indicator", "box": box}, window))
    return out


@dataclass
class ParamFamily:
    """``count`` weights built from a point of the box [lower, upper].

    kinds: ``constant`` (no parameters, all weights 1), ``power`` (|x|^{a_i}),
    ``step`` (``levels`` log-levels per weight), ``mh_product`` ((M h_i)^{s_i}
    with fixed unit indicators h_i) and ``mixed`` (|x|^{a_i} (M h_i)^{s_i}).
    """

    kind: str
    count: int
    lower: tuple = ()
    upper: tuple = ()
    levels: int = 2

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ConfigError(f"unknown family kind {self.kind!r}")
        if not self.lower and not self.upper:
            lo, hi = self.default_box()
            self.lower, self.upper = lo, hi
        self.lower = tuple(float(x) for x in self.lower)
        self.upper = tuple(float(x) for x in self.upper)
        if len(self.lower) != self.dim or len(self.upper) != self.dim:
            raise ConfigError(f"{self.kind} family with {self.count} weights needs a "
                              f"{self.dim}-dimensional box")
        if any(a > b for a, b in zip(self.lower, self.upper)):
            raise ConfigError("box lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        per = {"constant": 0, "power": 1, "step": self.levels, "mh_product": 1, "mixed": 2}
        return per[self.kind] * self.count

    def default_box(self) -> tuple:
        per = {"constant": ((), ()), "power": ((-0.9,), (0.9,)),
               "step": ((-2.0,) * self.levels, (2.0,) * self.levels),
               "mh_product": ((-1.0,), (1.0,)), "mixed": ((-0.9, -1.0), (0.9, 1.0))}
        lo, hi = per[self.kind]
        return lo * self.count, hi * self.count

    def build(self, params, window: Window) -> list:
        x = np.asarray(params, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ConfigError(f"expected {self.dim} parameters, got {x.size}")
        k = self.kind
        if k == "constant":
            ws = [GridFunction.constant(window, 1.0) for _ in range(self.count)]
        elif k == "power":
            ws = [fixtures.build_weight({"kind": "power", "a": float(a)}, window) for a in x]
        elif k == "step":
            ws = [fixtures.build_weight({"kind": "step", "values": np.exp(row).tolist()}, window)
                  for row in x.reshape(self.count, self.levels)]
        else:
            hs = _bumps(window, self.count)
            from .operators import maximal
            ws = []
            for i, h in enumerate(hs):
                if k == "mh_product":
                    a, s = 0.0, x[i]
                else:
                    a, s = x[2 * i], x[2 * i + 1]
                with np.errstate(over="ignore", divide="ignore"):
                    vals = maximal(h).values ** s
                if a != 0.0:
                    vals = vals * fixtures._tensor(window, fixtures._power_averages_1d(window, a))
                if not (np.all(np.isfinite(vals)) and np.all(vals > 0)):
                    raise DegenerateFamily(f"{k} family gives a degenerate weight at {x.tolist()}")
                ws.append(GridFunction(window, vals))
        for w in ws:
            if not w.is_weight:
                raise DegenerateFamily(f"{k} family gives a non-positive weight at {x.tolist()}")
        return ws

    def to_dict(self) -> dict:
        return {"kind": self.kind, "count": self.count, "levels": self.levels,
                "lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamFamily":
        try:
            return cls(kind=d["kind"], count=int(d["count"]), lower=tuple(d.get("lower", ())),
                       upper=tuple(d.get("upper", ())), levels=int(d.get("levels", 2)))
        except KeyError as exc:
            raise ConfigError(f"missing field 'family.{exc.args[0]}'") from exc


# objectives

@dataclass
class Objective:
    """Ratio of an inequality over fixed inputs, as a function of the weights.

    ``roles`` is the number of weights the family must supply; ``constant``
    gives the theoretical LogValue at a weight tuple, or None.
    """

    id: str
    roles: int
    ratio: object
    constant: object = None


def _p(opts) -> float:
    if "p" not in opts:
        raise ConfigError("missing field 'options.p'")
    return float(opts["p"])


def _P(opts) -> ExponentTuple:
    if "p_list" not in opts:
        raise ConfigError("missing field 'options.p_list'")
    return ExponentTuple(tuple(opts["p_list"]))


def _pairs(window, opts, m):
    n = int(opts.get("samples", 8))
    seed = int(opts.get("input_seed", 0))
    cols = [fixtures.random_functions(window, n, seed + 1000 * i) for i in range(m)]
    return [(f"vec-{k:03d}", tuple(c[k][1] for c in cols)) for k in range(n)]


def _singles(window, opts):
    return fixtures.random_functions(window, int(opts.get("samples", 8)),
                                     int(opts.get("input_seed", 0)))


def _sawyer_obj(opts, window):
    p, fam = _p(opts), _singles(window, opts)

    def ratio(ws):
        return check_sawyer(ws[0], ws[1], p, fam, theoretical=False).empirical_C

    def constant(ws):
        return check_sawyer(ws[0], ws[1], p, fam).theoretical
    return Objective("sawyer", 2, ratio, constant)


def _prodhl_obj(opts, window):
    P = _P(opts)
    fam = _pairs(window, opts, P.m)

    def ratio(ws):
        return check_prodhl(ws, P, fam, theoretical=False).empirical_C

    def constant(ws):
        return check_prodhl(ws, P, fam).theoretical
    return Objective("prodhl", P.m, ratio, constant)


def _msawyer_obj(opts, window):
    P = _P(opts)
    fam = _pairs(window, opts, P.m)

    def ratio(ws):
        return check_msawyer(ws[:-1], ws[-1], P, fam, theoretical=False).empirical_C

    def constant(ws):
        return check_msawyer(ws[:-1], ws[-1], P, fam).theoretical
    return Objective("msawyer", P.m + 1, ratio, constant)


def _sparse_obj(opts, window):
    P = _P(opts)
    eps = float(opts.get("eps", 0.5))
    fam = _pairs(window, opts, P.m)

    def ratio(ws):
        return check_sparse_domination(stopping_family, ws[1], ws[0], P, eps, fam,
                                       theoretical=False).empirical_C

    def constant(ws):
        return check_sparse_domination(stopping_family, ws[1], ws[0], P, eps, fam).theoretical
    return Objective("sparse", 2, ratio, constant)


def _kolmogorov_obj(opts, window):
    p = _p(opts)
    r = float(opts.get("r", 1.0))
    if not 0 < r < p:
        raise BadExponent(f"need 0 < r < p, got p={p}, r={r}")
    fam = _singles(window, opts)
    c = (p / (p - r)) ** (1.0 / r)

    def ratio(ws):
        return max(c * norm_pinf(f, ws[0], p) / norm_triple(f, ws[0], p, r) for _, f in fam)
    return Objective("kolmogorov_slack", 1, ratio)


def _conjecture_obj(opts, window):
    """Weights (w_1, ..., w_m, nu, v) with nu independent of w. The ratio is
    ||calM(f)/v||_{L^{p,inf}(nu v^p)} / (prod ||f_i|| [w, nu]); with ``theta``
    set, calM is replaced by (N^theta)^{1/theta} and the bracket is dropped."""
    P = _P(opts)
    m, p = P.m, P.p
    theta = opts.get("theta")
    fam = _pairs(window, opts, m)

    def ratio(ws):
        w, nu, v = ws[:m], ws[m], ws[m + 1]
        wv = WeightVector(tuple(w), nu)
        target = nu * v ** p
        if theta is None:
            norm = multilinear_apr(wv, P)
            if not (math.isfinite(norm) and norm > 0):
                raise DegenerateFamily("weight tuple fails the restricted-class screen")
        best = 0.0
        for _, f_vec in fam:
            if theta is None:
                lhs = norm_pinf(multilinear_maximal(f_vec) / v, target, p) / norm
            else:
                lhs = norm_pinf(n_theta(f_vec, wv, P, float(theta)) ** (1.0 / float(theta)) / v,
                                target, p)
            rhs = math.prod(norm_p1(g, wi, q) for g, wi, q in zip(f_vec, w, P.p_list))
            best = max(best, lhs / rhs)
        return best
    return Objective("conjecture", m + 2, ratio)


OBJECTIVES = {
    "sawyer": _sawyer_obj,
    "prodhl": _prodhl_obj,
    "msawyer": _msawyer_obj,
    "sparse": _sparse_obj,
    "kolmogorov_slack": _kolmogorov_obj,
    "conjecture": _conjecture_obj,
}


def make_objective(objective_id: str, options: dict, window: Window) -> Objective:
    if objective_id not in OBJECTIVES:
        raise ConfigError(f"unknown objective {objective_id!r}")
    return OBJECTIVES[objective_id](dict(options), window)


# pattern search

@dataclass
class SearchResult:
    objective: str
    family: dict
    window: dict
    options: dict
    seed: int
    budget: int
    restarts: int
    best_params: list
    best_ratio: float
    best_restart: int
    evaluations: int
    trace: list
    theoretical_log10_C: float | None = None
    violation: dict | None = None

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "objective", "family", "window", "options", "seed", "budget", "restarts",
            "best_params", "best_ratio", "best_restart", "evaluations",
            "theoretical_log10_C")}
        d["trace"] = [{"restart": r, "eval": i, "params": x, "ratio": v}
                      for r, i, x, v in self.trace]
        if self.violation is not None:
            d["VIOLATION"] = self.violation
        return d

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["restart", "eval"] + [f"x{i}" for i in range(len(self.best_params))]
                   + ["ratio"])
        for r, i, x, v in self.trace:
            w.writerow([r, i] + [repr(t) for t in x] + [repr(v)])
        return buf.getvalue()


def _pattern_search(f, lower, upper, x0, budget, tol=1e-6):
    """Coordinate polling with step halving inside the box. Returns the best
    point, its value and the (params, value) trace of fresh evaluations."""
    lower, upper = np.asarray(lower), np.asarray(upper)
    width = upper - lower
    cache, trace = {}, []

    def ev(x):
        key = tuple(float(t) for t in x)
        if key not in cache:
            cache[key] = float(f(np.array(key)))
            trace.append((list(key), cache[key]))
        return cache[key]

    x = np.clip(np.asarray(x0, dtype=np.float64), lower, upper)
    fx = ev(x)
    step = width / 4.0
    while len(trace) < budget and np.any(step > tol * np.maximum(width, 1e-300)):
        improved = False
        for i in range(x.size):
            if step[i] <= tol * width[i]:
                continue
            for sgn in (1.0, -1.0):
                if len(trace) >= budget:
                    break
                y = x.copy()
                y[i] = min(max(x[i] + sgn * step[i], lower[i]), upper[i])
                if y[i] == x[i]:
                    continue
                fy = ev(y)
                if fy > fx:
                    x, fx, improved = y, fy, True
                    break
        if not improved:
            step = step / 2.0
    return x, fx, trace


def maximize_ratio(objective_id: str, family: ParamFamily, budget: int = 200,
                   restarts: int = 3, seed: int = 0, window: Window | None = None,
                   options: dict | None = None, threads: int = 1) -> SearchResult:
    """Maximize the objective over the family box from seeded starts.

    Restart 0 starts at the box center, the rest uniformly at random. The
    budget (fresh evaluations) is split evenly over restarts.
    """
    if budget < MIN_BUDGET:
        raise ConfigError(f"field 'budget' must be at least {MIN_BUDGET}, got {budget}")
    if restarts < 1:
        raise ConfigError("field 'restarts' must be positive")
    window = window or Window(1, 4, 6)
    options = dict(options or {})
    obj = make_objective(objective_id, options, window)
    if family.count != obj.roles:
        raise ConfigError(f"objective {objective_id} needs {obj.roles} weights, "
                          f"family has {family.count}")

    def f(x):
        return obj.ratio(family.build(x, window))

    lower, upper = np.array(family.lower), np.array(family.upper)
    if family.dim == 0:
        runs = [(np.zeros(0), f(np.zeros(0)), [([], f(np.zeros(0)))])]
        restarts_used = 1
    else:
        starts = [(lower + upper) / 2.0]
        for r in range(1, restarts):
            rng = np.random.default_rng([seed, r])
            starts.append(rng.uniform(lower, upper))
        shares = [budget // restarts + (1 if r < budget % restarts else 0)
                  for r in range(restarts)]

        def run(r):
            return _pattern_search(f, lower, upper, starts[r], shares[r])
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                runs = list(pool.map(run, range(restarts)))
        else:
            runs = [run(r) for r in range(restarts)]
        restarts_used = restarts
    best_r = max(range(len(runs)), key=lambda r: (runs[r][1], -r))
    bx, bv = runs[best_r][0], runs[best_r][1]
    trace = [(r, i, x, v) for r, (_, _, tr) in enumerate(runs) for i, (x, v) in enumerate(tr)]
    res = SearchResult(objective=objective_id, family=family.to_dict(), window=window.to_dict(),
                       options=options, seed=seed, budget=budget, restarts=restarts_used,
                       best_params=[float(t) for t in bx], best_ratio=float(bv),
                       best_restart=best_r, evaluations=len(trace), trace=trace)
    if obj.constant is not None:
        ws = family.build(bx, window)
        C = obj.constant(ws)
        res.theoretical_log10_C = C.log10
        if not C.bounds(bv, 1e-9):
            res.violation = {
                "objective": objective_id, "ratio": float(bv), "theoretical_log10_C": C.log10,
                "window": window.to_dict(), "options": options, "family": family.to_dict(),
                "params": res.best_params,
                "weights": [w.values.ravel().tolist() for w in ws],
            }
    return res


def reevaluate(result: SearchResult) -> float:
    """The objective at the reported best parameters."""
    w = result.window
    window = Window(w["n"], w["K"], w["L"])
    fam = ParamFamily.from_dict(result.family)
    obj = make_objective(result.objective, result.options, window)
    return obj.ratio(fam.build(result.best_params, window))


# sharpness scans

SCAN_COLUMNS = ("theorem", "exponents", "family", "empirical_C", "theoretical_log10_C",
                "log10_gap")


def sharpness_scan(theorem: str, exponent_grid, families: dict, window: Window | None = None,
                   samples: int = 10, seed: int = 0) -> str:
    """CSV of empirical vs theoretical constants, one row per (exponents, family).

    ``exponent_grid`` holds exponents dicts ({"p": ...} or {"p_list": ...});
    ``families`` maps an id to a list of weight specs.
    """
    if theorem not in ("sawyer", "prodhl", "msawyer", "dualsawyer"):
        raise ConfigError(f"theorem {theorem!r} has no theoretical constant to scan")
    window = window or Window(1, 4, 6)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(SCAN_COLUMNS)
    for ex in exponent_grid:
        ex = dict(ex)
        if theorem == "dualsawyer":
            ex.setdefault("eps", 1.0)
        for fid in sorted(families):
            spec = ExperimentSpec.from_dict({
                "id": f"{theorem}-{fid}", "theorem": theorem, "window": window.to_dict(),
                "exponents": ex, "weights": families[fid], "samples": samples, "seed": seed})
            rep = run_experiment(spec)
            emp = rep.empirical_C
            tl = rep.theoretical.log10
            gap = tl - math.log10(emp) if emp > 0 else math.inf
            label = ";".join(f"{k}={v}" for k, v in sorted(ex.items()))
            w.writerow([theorem, label, fid, repr(emp), repr(tl), repr(gap)])
    return buf.getvalue()
