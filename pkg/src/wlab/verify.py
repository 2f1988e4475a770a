"""Experiment harness: LHS/RHS ratios of weighted inequalities over input
families, compared with log-domain theoretical constants."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fixtures
from .constants import ConstantsConfig, LogValue, theorem_constants
from .errors import BadExponent, ConfigError, UncertifiedFamily
from .grid import Window
from .lorentz import GridFunction, norm_p1, norm_pinf
from .operators import maximal, multilinear_maximal
from .sparse import SparseFamily, cz_sparse_decompose, sparse_operator, verify_sparse
from .weights import (ExponentTuple, WeightVector, a1_constant, apr_bracket, apr_bracket_max,
                      apr_double, conjugate, multilinear_apr_max, rh_inf_weighted,
                      weak_norm_on_cube)

RTOL = 1e-9
DEFAULT_CAP = 1e6
CSV_COLUMNS = ("theorem", "input_id", "lhs", "rhs", "ratio", "empirical_C",
               "theoretical_log10_C", "pass")


@dataclass
class Row:
    input_id: str
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    def to_dict(self) -> dict:
        return {"input_id": self.input_id, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio}


@dataclass
class RatioReport:
    """Per-input ratios with the theoretical constant or a cap.

    ``checks`` holds named side conditions (chain inequalities, the
    characterization direction, ...); all must hold for the report to pass.
    """

    theorem: str
    experiment_id: str
    rows: list
    theoretical: LogValue | None = None
    cap: float | None = None
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    runtime: float = 0.0

    @property
    def empirical_C(self) -> float:
        return max((r.ratio for r in self.rows), default=0.0)

    @property
    def witness(self) -> str | None:
        if not self.rows:
            return None
        return max(self.rows, key=lambda r: r.ratio).input_id

    def row_ok(self, row: Row) -> bool:
        x = row.ratio
        if not math.isfinite(x):
            return False
        if self.theoretical is not None:
            return self.theoretical.bounds(x, RTOL)
        if self.cap is not None:
            return x <= self.cap * (1 + RTOL)
        return True

    @property
    def violations(self) -> list:
        return [r for r in self.rows if not self.row_ok(r)]

    @property
    def passed(self) -> bool:
        return not self.violations and all(self.checks.values())

    def to_dict(self) -> dict:
        """JSON-ready form; runtime is left out so reports are reproducible."""
        d = {
            "experiment_id": self.experiment_id,
            "theorem": self.theorem,
            "pass": self.passed,
            "empirical_C": self.empirical_C,
            "theoretical_log10_C": None if self.theoretical is None else self.theoretical.log10,
            "cap": self.cap,
            "witness": self.witness,
            "checks": dict(sorted(self.checks.items())),
            "details": self.details,
            "warnings": list(self.warnings),
            "rows": [r.to_dict() for r in self.rows],
        }
        if not self.passed:
            d["VIOLATION"] = {
                "rows": [r.to_dict() for r in self.violations],
                "failed_checks": sorted(k for k, v in self.checks.items() if not v),
            }
        return d

    def csv_rows(self) -> list:
        tl = "" if self.theoretical is None else repr(self.theoretical.log10)
        emp = repr(self.empirical_C)
        return [[self.theorem, r.input_id, repr(r.lhs), repr(r.rhs), repr(r.ratio), emp, tl,
                 "1" if self.row_ok(r) else "0"] for r in self.rows]


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        w.writerows(rep.csv_rows())
    return buf.getvalue()


def _nonempty(family):
    family = list(family)
    if not family:
        raise ConfigError("input family is empty")
    return family


def cube_mask(cube, window: Window) -> np.ndarray:
    m = np.zeros(window.shape, dtype=bool)
    m[cube.index_slices(window)] = True
    return m


def _is_one(w) -> bool:
    return bool(np.all(w.values == 1.0))


def _r_table(w, r_grid) -> dict:
    """{r: [w]_{A_r^R}} with [w]_{A_1} in the r = 1 slot."""
    return {float(r): (a1_constant(w) if r == 1 else apr_bracket(w, r)) for r in r_grid}


def _A(u, p) -> float:
    return a1_constant(u) if p == 1 else apr_bracket(u, p)


# single-variable Sawyer estimate

def check_sawyer(u, v, p: float, family, r_grid=(1, 2), cfg=None, theoretical=True,
                 cap=None, experiment_id="sawyer") -> RatioReport:
    """||Mf/v||_{L^{p,inf}(uv^p)} / ||f||_{L^{p,1}(u)} over the family."""
    family = _nonempty(family)
    cfg = cfg or ConstantsConfig(n=u.window.n)
    w = u * v ** p
    rows = []
    for fid, f in family:
        lhs = norm_pinf(maximal(f) / v, w, p)
        rows.append(Row(fid, lhs, norm_p1(f, u, p)))
    rep = RatioReport("sawyer", experiment_id, rows, cap=cap)
    A = _A(u, p)
    rep.details["A"] = A
    if theoretical:
        B = _r_table(w, r_grid)
        rep.details["B"] = {repr(k): b for k, b in B.items()}
        rep.theoretical = theorem_constants("sawyer", {"p": p, "A": A, "B": B}, cfg)
    if _is_one(v):
        n = u.window.n
        classical = 2 ** n * 72 ** (n / p) * A
        rep.details["classical_cap"] = classical
        rep.checks["classical_cap"] = rep.empirical_C <= classical * (1 + RTOL)
    return rep


# counterexample to dropping the A_inf hypothesis

def counterexample_ratio(p: float, L: int, K: int) -> float:
    """||h/v||_{L^{p,inf}(v^p)} / ||h||_{L^{p,inf}} with h = |x|^{-1/p} off (-1, 1),
    v = h + chi_{(-1,1)}, u = 1, h by exact cell averages."""
    win = Window(1, K, L)
    c = win.centers()
    hv = fixtures._power_averages_1d(win, -1.0 / p)
    outside = np.abs(c) >= 1
    h = GridFunction(win, np.where(outside, hv, 0.0))
    v = GridFunction(win, np.where(outside, hv, 1.0))
    return norm_pinf(h / v, v ** p, p) / norm_pinf(h, None, p)


def counterexample_control(p: float, L: int, K: int) -> float:
    """The same ratio with v = 1; identically 1."""
    win = Window(1, K, L)
    hv = fixtures._power_averages_1d(win, -1.0 / p)
    h = GridFunction(win, np.where(np.abs(win.centers()) >= 1, hv, 0.0))
    return norm_pinf(h, None, p) / norm_pinf(h, None, p)


def counterexample_closed_form(p: float, L: int) -> float:
    """Continuum value (L ln 2)^{1/p} (1 - 2^{-L})^{-1/p} of the ratio above."""
    return (L * math.log(2.0) / (1.0 - 2.0 ** -L)) ** (1.0 / p)


def check_counterexample(p: float = 2.0, L_list=(4, 6, 8, 10, 12), K: int = 6,
                         tol: float = 0.05, experiment_id="counterexample") -> RatioReport:
    """Growth table of the ratio in L, against the closed form and a v = 1 control."""
    if not p > 1:
        raise BadExponent(f"the growth table needs p > 1, got {p}")
    rows, table = [], []
    for L in L_list:
        r = counterexample_ratio(p, L, K)
        ref = counterexample_closed_form(p, L)
        rows.append(Row(f"L={L}", r, 1.0))
        table.append({"L": L, "ratio": r, "closed_form": ref, "rel_err": abs(r / ref - 1)})
    rep = RatioReport("counterexample", experiment_id, rows, cap=math.inf)
    ratios = [t["ratio"] for t in table]
    rep.checks["strictly_increasing"] = all(b > a for a, b in zip(ratios, ratios[1:]))
    rep.checks["closed_form"] = all(t["rel_err"] <= tol for t in table)
    control = [counterexample_control(p, L, K) for L in L_list]
    rep.details["control_v1"] = control
    rep.checks["control_v1"] = all(abs(c - 1.0) <= 1e-12 for c in control)
    rep.details["table"] = table
    rep.details["K"] = K
    return rep


# product and multi-variable estimates

def _tilde(f_vec, i, maxes):
    """prod_{j != i} (M f_j)^{-1}; cells where some M f_j vanishes get weight 1."""
    out = np.ones(f_vec[0].window.shape)
    for j, mf in enumerate(maxes):
        if j != i:
            out = out * np.where(mf > 0, 1.0 / np.where(mf > 0, mf, 1.0), 1.0)
    return GridFunction(f_vec[0].window, out)


def _multi(theorem, ws, v, P: ExponentTuple, family, s_grid, cfg, theoretical, cap,
           experiment_id) -> RatioReport:
    family = _nonempty(family)
    win = ws[0].window
    cfg = cfg or ConstantsConfig(n=win.n)
    wv = WeightVector(tuple(ws))
    nu = wv.target(P)
    p = P.p
    base = nu * v ** p
    rows = []
    Bsup = [dict.fromkeys((float(s) for s in s_grid), 1.0) for _ in ws]
    chain = True
    for fid, f_vec in family:
        maxes = [maximal(g).values for g in f_vec]
        mt = GridFunction(win, np.prod(maxes, axis=0))
        lhs2 = norm_pinf(mt / v, base, p)
        lhs1 = norm_pinf(multilinear_maximal(f_vec) / v, base, p)
        chain &= lhs1 <= lhs2 * (1 + RTOL)
        rhs = math.prod(norm_p1(g, w, q) for g, w, q in zip(f_vec, ws, P.p_list))
        rows.append(Row(fid, lhs2, rhs))
        if theoretical:
            for i, (w, q) in enumerate(zip(ws, P.p_list)):
                wi = w * (_tilde(f_vec, i, maxes) * v) ** q
                for s in Bsup[i]:
                    b = a1_constant(wi) if s == 1 else apr_bracket(wi, s)
                    Bsup[i][s] = max(Bsup[i][s], b)
    rep = RatioReport(theorem, experiment_id, rows, cap=cap)
    rep.checks["chain"] = bool(chain)
    if theoretical:
        A = [_A(w, q) for w, q in zip(ws, P.p_list)]
        rep.details["A_list"] = A
        rep.details["B_list"] = [{repr(k): b for k, b in B.items()} for B in Bsup]
        rep.theoretical = theorem_constants(
            theorem, {"p_list": list(P.p_list), "A_list": A, "B_list": Bsup}, cfg)
    return rep


def check_prodhl(ws, P, family, s_grid=(1,), cfg=None, theoretical=True, cap=None,
                 experiment_id="prodhl") -> RatioReport:
    """||M^x(f)||_{L^{p,inf}(nu_w)} / prod ||f_i||_{L^{p_i,1}(w_i)}, with the chain
    through the multi-variable maximal operator."""
    P = P if isinstance(P, ExponentTuple) else ExponentTuple(tuple(P))
    v = GridFunction.constant(ws[0].window, 1.0)
    return _multi("prodhl", ws, v, P, family, s_grid, cfg, theoretical, cap, experiment_id)


def check_msawyer(ws, v, P, family, s_grid=(1,), cfg=None, theoretical=True, cap=None,
                  experiment_id="msawyer") -> RatioReport:
    """||M^x(f)/v||_{L^{p,inf}(nu_w v^p)} / prod ||f_i||_{L^{p_i,1}(w_i)}; the chain
    ||calM(f)/v|| <= ||M^x(f)/v|| is a side check."""
    P = P if isinstance(P, ExponentTuple) else ExponentTuple(tuple(P))
    return _multi("msawyer", ws, v, P, family, s_grid, cfg, theoretical, cap, experiment_id)


# sparse operators against the multi-variable maximal operator

def stopping_family(f_vec, alpha=0, lam=2.0) -> SparseFamily:
    """Stopping-time family of the sum of the inputs."""
    total = f_vec[0]
    for g in f_vec[1:]:
        total = total + g
    return cz_sparse_decompose(total, alpha, lam)


def check_sparse_domination(S, v, w, P, eps: float, family, r_grid=(1, 2), cfg=None,
                            theoretical=True, cap=None,
                            experiment_id="sparse") -> RatioReport:
    """||A_S(f)/v||_{L^{p,inf}(w)} / ||calM(f)/v||_{L^{p,inf}(w)}.

    ``S`` is a SparseFamily or a callable building one from each input; every
    family must carry a max-flow certificate at its eta.
    """
    family = _nonempty(family)
    P = P if isinstance(P, ExponentTuple) else ExponentTuple(tuple(P))
    p = P.p
    if not (0 < eps <= 1 and eps < p):
        raise BadExponent(f"need 0 < eps <= 1 and eps < p, got eps={eps}, p={p}")
    win = w.window
    cfg = cfg or ConstantsConfig(n=win.n)
    rows, etas = [], set()
    for fid, f_vec in family:
        fam = S(f_vec) if callable(S) else S
        cert = verify_sparse(fam)
        if not cert.ok:
            raise UncertifiedFamily(
                f"family for {fid} is not {fam.eta}-sparse: demand {cert.demand} "
                f"exceeds area {cert.area}")
        etas.add(fam.eta)
        lhs = norm_pinf(sparse_operator(fam, f_vec) / v, w, p)
        rhs = norm_pinf(multilinear_maximal(f_vec) / v, w, p)
        rows.append(Row(fid, lhs, rhs))
    rep = RatioReport("sparsemax", experiment_id, rows, cap=cap)
    if theoretical:
        Wt = w * v ** (-eps)
        W = {float(r): (a1_constant(Wt) if r == 1 else apr_double(Wt, r)) for r in r_grid}
        rh = rh_inf_weighted(v ** (-eps), w)
        eta = float(min(etas))
        rep.details.update({"W": {repr(k): b for k, b in W.items()}, "rh": rh, "eta": eta})
        rep.theoretical = theorem_constants(
            "sparsemax", {"p": p, "eps": eps, "eta": eta, "W": W, "rh": rh}, cfg)
        if cfg.c_npe_is_default:
            rep.warnings.append("c_npe uses its default stand-in value")
    return rep


# dual estimate and the characterization of A_p^R

def dual_ratio(f, u, v, p: float) -> Row:
    """||M(f u v^{p-1})/u||_{L^{p',inf}(u)} over ||f||_{L^{p',1}(uv^p)}."""
    pc = conjugate(p)
    lhs = norm_pinf(maximal(f * u * v ** (p - 1)) / u, u, pc)
    return lhs, norm_p1(f, u * v ** p, pc)


def check_dual_sawyer(u, v, p: float, eps: float, family, char_family=(), r_grid=(1, 2),
                      cfg=None, theoretical=True, cap=None, tol=0.05,
                      experiment_id="dualsawyer") -> RatioReport:
    """Dual ratio table plus the characterization direction
    apr_bracket(u, p) <= p' * char_sup * (1 + tol), where char_sup is the sup of
    the dual ratio with v = 1 over characteristic inputs (always including the
    indicator of the cube attaining [u]_{A_p^R})."""
    if not p > 1:
        raise BadExponent(f"the dual estimate needs p > 1, got {p}")
    if not 0 < eps <= 1:
        raise BadExponent(f"need 0 < eps <= 1, got eps={eps}")
    family = _nonempty(family)
    win = u.window
    cfg = cfg or ConstantsConfig(n=win.n)
    rows = [Row(fid, *dual_ratio(f, u, v, p)) for fid, f in family]
    rep = RatioReport("dualsawyer", experiment_id, rows, cap=cap)
    best = apr_bracket_max(u, p)
    one = GridFunction.constant(win, 1.0)
    chars = [("argmax-cube", GridFunction.indicator(win, cube_mask(best.cube, win)))] + list(char_family)
    char_sup, char_wit = 0.0, None
    for cid, chi in chars:
        lhs, rhs = dual_ratio(chi, u, one, p)
        if rhs > 0 and lhs / rhs > char_sup:
            char_sup, char_wit = lhs / rhs, cid
    pc = conjugate(p)
    rep.details.update({"apr_bracket": best.value, "char_sup": char_sup,
                        "char_witness": char_wit, "p_conjugate": pc})
    rep.checks["characterization"] = best.value <= pc * char_sup * (1 + tol)
    if theoretical:
        w = u * v ** p
        A = best.value
        B = _r_table(w, r_grid)
        Wt = u * v ** (p - eps)
        W = {float(r): (a1_constant(Wt) if r == 1 else apr_double(Wt, r)) for r in r_grid}
        rh = rh_inf_weighted(v ** (-eps), w)
        rep.details.update({"A": A, "B": {repr(k): b for k, b in B.items()},
                            "W": {repr(k): b for k, b in W.items()}, "rh": rh})
        rep.theoretical = theorem_constants("dualsawyer", {
            "p": p, "sawyer": {"p": p, "A": A, "B": B},
            "sparsemax": {"p": p, "eps": eps, "eta": 0.5, "W": W, "rh": rh}}, cfg)
        if cfg.c_npe_is_default:
            rep.warnings.append("c_npe uses its default stand-in value")
    return rep


# multilinear characterization

def greedy_witness(wv: WeightVector, P: ExponentTuple):
    """Indicators of the ascending-weight prefix sets realizing
    ||chi_Q w_i^{-1}||_{L^{p_i',inf}(w_i)} on the cube attaining the bracket."""
    best = multilinear_apr_max(wv, P, "bracket")
    win = wv.window
    sl = best.cube.index_slices(win)
    out = []
    for w, q in zip(wv.weights, P.p_list):
        _, sub = weak_norm_on_cube(w.values[sl], q, win.cell_volume)
        m = np.zeros(win.shape, dtype=bool)
        m[sl] = sub
        out.append(GridFunction.indicator(win, m))
    return best, out


def check_multilinear_characterization(wv: WeightVector, P, char_family, gamma=1.05,
                                       experiment_id="multilinear") -> RatioReport:
    """Upper: sup over characteristic inputs of ||calM(chi)||_{L^{p,inf}(nu)} /
    prod ||chi_i||_{L^{p_i,1}(w_i)} <= 2^{nm} 72^{n/p} [w, nu]. Lower: the greedy
    witness through the centered operator gives at least
    [w, nu] / (gamma^m prod p_i 3^{nm})."""
    P = P if isinstance(P, ExponentTuple) else ExponentTuple(tuple(P))
    win = wv.window
    n, m, p = win.n, P.m, P.p
    nu = wv.target(P)
    best, wit = greedy_witness(wv, P)
    bracket = best.value
    upper = 2 ** (n * m) * 72 ** (n / p) * bracket
    rows = []
    for fid, chis in [("witness", wit)] + list(char_family):
        lhs = norm_pinf(multilinear_maximal(chis), nu, p)
        rhs = math.prod(norm_p1(c, w, q) for c, w, q in zip(chis, wv.weights, P.p_list))
        rows.append(Row(fid, lhs, rhs))
    rep = RatioReport("multilinear", experiment_id, rows, cap=upper)
    lw = norm_pinf(multilinear_maximal(wit, centered=True), nu, p)
    rw = math.prod(norm_p1(c, w, q) for c, w, q in zip(wit, wv.weights, P.p_list))
    lower_emp = lw / rw
    lower = bracket / (gamma ** m * math.prod(P.p_list) * 3 ** (n * m))
    rep.details.update({"bracket": bracket, "upper_cap": upper, "lower_bound": lower,
                        "witness_ratio_centered": lower_emp,
                        "cube": {"corner": list(best.cube.corner), "side": best.cube.side}})
    rep.checks["lower"] = lower_emp >= lower * (1 - RTOL)
    return rep


# experiment specs

THEOREM_IDS = ("sawyer", "sawyer_open", "counterexample", "prodhl", "msawyer", "sparse",
               "dualsawyer", "multilinear")


def _get(d: dict, path: str):
    cur = d
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise ConfigError(f"missing field '{path}'")
        cur = cur[part]
    return cur


@dataclass
class ExperimentSpec:
    """One experiment: theorem id, window, exponents, weight and function specs,
    sample count and seed. ``options`` carries per-theorem knobs."""

    id: str
    theorem: str
    window: Window
    exponents: dict
    weights: list
    functions: list | None = None
    samples: int = 25
    seed: int = 0
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, defaults: dict | None = None) -> "ExperimentSpec":
        d = {**(defaults or {}), **d}
        theorem = _get(d, "theorem")
        if theorem not in THEOREM_IDS:
            raise ConfigError(f"unknown theorem id {theorem!r}")
        wd = d.get("window", {})
        try:
            window = Window(int(wd.get("n", 1)), int(wd.get("K", 4)), int(wd.get("L", 6)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad window: {exc}") from exc
        spec = cls(id=str(d.get("id", theorem)), theorem=theorem, window=window,
                   exponents=dict(d.get("exponents", {})), weights=list(d.get("weights", [])),
                   functions=d.get("functions"), samples=int(d.get("samples", 25)),
                   seed=int(d.get("seed", 0)), options=dict(d.get("options", {})))
        spec.validate(d)
        return spec

    def validate(self, raw: dict):
        need = {
            "sawyer": ["exponents.p"], "sawyer_open": ["exponents.p"],
            "counterexample": ["exponents.p"],
            "prodhl": ["exponents.p_list"], "msawyer": ["exponents.p_list"],
            "sparse": ["exponents.p_list", "exponents.eps"],
            "dualsawyer": ["exponents.p", "exponents.eps"],
            "multilinear": ["exponents.p_list"],
        }[self.theorem]
        for path in need:
            _get(raw, path)
        nweights = {"sawyer": 2, "sawyer_open": 2, "counterexample": 0, "dualsawyer": 2,
                    "sparse": 2}.get(self.theorem)
        if self.theorem in ("prodhl", "multilinear"):
            nweights = len(self.exponents["p_list"])
        if self.theorem == "msawyer":
            nweights = len(self.exponents["p_list"]) + 1
        if len(self.weights) != nweights:
            raise ConfigError(f"field 'weights' needs {nweights} specs for {self.theorem}")
        if self.samples < 0:
            raise ConfigError("field 'samples' must be non-negative")

    def to_dict(self) -> dict:
        return {"id": self.id, "theorem": self.theorem, "window": self.window.to_dict(),
                "exponents": self.exponents, "weights": self.weights,
                "functions": self.functions, "samples": self.samples, "seed": self.seed,
                "options": self.options}

    # families

    def single_family(self, seed_offset: int = 0) -> list:
        if self.functions:
            return [(f"fn-{i:03d}", fixtures.build_function(s, self.window))
                    for i, s in enumerate(self.functions)]
        return fixtures.random_functions(self.window, self.samples, self.seed + seed_offset)

    def vector_family(self, m: int) -> list:
        cols = [self.single_family(seed_offset=1000 * i) for i in range(m)]
        return [(f"vec-{k:03d}", tuple(c[k][1] for c in cols)) for k in range(len(cols[0]))]


def run_experiment(spec: ExperimentSpec, cfg: ConstantsConfig | None = None) -> RatioReport:
    t0 = time.perf_counter()
    win = spec.window
    cfg = cfg or ConstantsConfig(n=win.n)
    if cfg.n != win.n:
        cfg = ConstantsConfig(n=win.n, c_n=cfg.c_n, c_npe=cfg.c_npe,
                              c_npe_is_default=cfg.c_npe_is_default)
    ex, opt = spec.exponents, spec.options
    ws = [fixtures.build_weight(s, win) for s in spec.weights]
    th = spec.theorem
    if th in ("sawyer", "sawyer_open"):
        rep = check_sawyer(ws[0], ws[1], float(ex["p"]), spec.single_family(),
                           r_grid=tuple(opt.get("r_grid", (1, 2))), cfg=cfg,
                           theoretical=th == "sawyer",
                           cap=math.inf if th == "sawyer_open" else None,
                           experiment_id=spec.id)
        rep.theorem = th
    elif th == "counterexample":
        rep = check_counterexample(float(ex["p"]), tuple(opt.get("L_list", (4, 6, 8, 10, 12))),
                                   int(opt.get("K", win.K)), experiment_id=spec.id)
    elif th in ("prodhl", "msawyer"):
        P = ExponentTuple(tuple(ex["p_list"]))
        fam = spec.vector_family(P.m)
        if th == "prodhl":
            rep = check_prodhl(ws, P, fam, tuple(opt.get("s_grid", (1,))), cfg,
                               experiment_id=spec.id)
        else:
            rep = check_msawyer(ws[:-1], ws[-1], P, fam, tuple(opt.get("s_grid", (1,))), cfg,
                                experiment_id=spec.id)
    elif th == "sparse":
        P = ExponentTuple(tuple(ex["p_list"]))
        rep = check_sparse_domination(stopping_family, ws[1], ws[0], P, float(ex["eps"]),
                                      spec.vector_family(P.m),
                                      r_grid=tuple(opt.get("r_grid", (1, 2))), cfg=cfg,
                                      experiment_id=spec.id)
    elif th == "dualsawyer":
        chars = fixtures.random_indicators(win, int(opt.get("char_samples", 10)), spec.seed + 7)
        rep = check_dual_sawyer(ws[0], ws[1], float(ex["p"]), float(ex["eps"]),
                                spec.single_family(), chars,
                                r_grid=tuple(opt.get("r_grid", (1, 2))), cfg=cfg,
                                experiment_id=spec.id)
    elif th == "multilinear":
        P = ExponentTuple(tuple(ex["p_list"]))
        cols = [fixtures.random_indicators(win, spec.samples, spec.seed + 1000 * i)
                for i in range(P.m)]
        chars = [(f"sets-{k:03d}", tuple(c[k][1] for c in cols)) for k in range(spec.samples)]
        rep = check_multilinear_characterization(WeightVector(tuple(ws)), P, chars,
                                                 experiment_id=spec.id)
    else:
        raise ConfigError(f"unknown theorem id {th!r}")
    shift = opt.get("constant_shift_log10")
    if shift is not None and rep.theoretical is not None:
        rep.theoretical = LogValue(rep.theoretical.log + float(shift) * math.log(10.0))
        rep.details["constant_shift_log10"] = float(shift)
    rep.runtime = time.perf_counter() - t0
    return rep


def expand_config(config: dict, window_override: dict | None = None,
                  seed: int | None = None) -> list:
    """A config holds one experiment or an ``experiments`` list with shared
    top-level defaults; overrides win over file values."""
    if "experiments" in config:
        defaults = {k: v for k, v in config.items() if k != "experiments"}
        raw = [dict(e) for e in config["experiments"]]
    else:
        defaults, raw = {}, [dict(config)]
    out = []
    for e in raw:
        merged = {**defaults, **e}
        if window_override:
            merged["window"] = {**merged.get("window", {}), **window_override}
        if seed is not None:
            merged["seed"] = seed
        out.append(ExperimentSpec.from_dict(merged))
    ids = [s.id for s in out]
    if len(set(ids)) != len(ids):
        raise ConfigError("experiment ids must be unique")
    return out


def run_experiments(specs, threads: int = 1, cfg: ConstantsConfig | None = None) -> list:
    """Map experiments over a thread pool; results come back sorted by id."""
    specs = sorted(specs, key=lambda s: s.id)
    if threads <= 1:
        reports = [run_experiment(s, cfg) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(lambda s: run_experiment(s, cfg), specs))
    return sorted(reports, key=lambda r: r.experiment_id)


# bundled suites

def _sawyer_fixtures() -> dict:
    ind = lambda a, b: {"kind": "indicator", "interval": [a, b]}
    return {
        "step": [{"kind": "step", "values": [1, 4, 2, 8]}, {"kind": "step", "values": [2, 1, 3, 1]}],
        "power": [{"kind": "power", "a": 0.5}, {"kind": "mh", "h": ind(0, 1), "exponent": -1}],
        "mh": [{"kind": "mh", "h": ind(-1, 0), "exponent": 0.5},
               {"kind": "mh", "h": ind(2, 3), "exponent": -0.5}],
    }


def paper_core() -> dict:
    """Every check at n = 1, K = 4, L = 6 with 25 inputs each."""
    ind = lambda a, b: {"kind": "indicator", "interval": [a, b]}
    mh = lambda a, b, s: {"kind": "mh", "h": ind(a, b), "exponent": s}
    exps = []
    for fam, ws in _sawyer_fixtures().items():
        for p in (1, 1.5, 2, 3):
            exps.append({"id": f"sawyer-{fam}-p{p}", "theorem": "sawyer",
                         "exponents": {"p": p}, "weights": ws})
    exps.append({"id": "counterexample-p2", "theorem": "counterexample", "exponents": {"p": 2},
                 "options": {"K": 6, "L_list": [4, 6, 8, 10, 12]}})
    exps += [
        {"id": "prodhl-step-power", "theorem": "prodhl", "exponents": {"p_list": [2, 2]},
         "weights": [{"kind": "step", "values": [1, 3]}, {"kind": "power", "a": -0.5}]},
        {"id": "prodhl-mh", "theorem": "prodhl", "exponents": {"p_list": [1, 2]},
         "weights": [mh(-1, 0, 0.5), mh(1, 2, -0.5)]},
        # w_i = (M h_i)^{(1 - p_i)/m}, v = nu_w^{-1/p}
        {"id": "msawyer-mh-fixture", "theorem": "msawyer", "exponents": {"p_list": [2, 2]},
         "weights": [mh(-1, 0, -0.5), mh(1, 2, -0.5),
                     {"kind": "product", "factors": [mh(-1, 0, 0.5), mh(1, 2, 0.5)]}]},
        {"id": "msawyer-mh-v", "theorem": "msawyer", "exponents": {"p_list": [2, 2]},
         "weights": ["ones", {"kind": "step", "values": [1, 2]}, mh(0, 1, -1)]},
        {"id": "sparse-ones", "theorem": "sparse", "exponents": {"p_list": [2, 2], "eps": 0.5},
         "weights": ["ones", "ones"]},
        {"id": "sparse-weighted", "theorem": "sparse", "exponents": {"p_list": [2, 2], "eps": 0.5},
         "weights": [{"kind": "step", "values": [1, 2, 4, 2]}, mh(0, 1, -0.5)]},
        {"id": "dualsawyer-step", "theorem": "dualsawyer", "exponents": {"p": 2, "eps": 1},
         "weights": [{"kind": "step", "values": [1, 2]}, "ones"]},
        # u in A_1, v = u^{-1/p}
        {"id": "dualsawyer-a1", "theorem": "dualsawyer", "exponents": {"p": 2, "eps": 1},
         "weights": [mh(0, 1, 0.5), mh(0, 1, -0.25)]},
    ]
    for pl in ([1, 1], [2, 2], [1, 2]):
        exps.append({"id": f"multilinear-{pl[0]}{pl[1]}", "theorem": "multilinear",
                     "exponents": {"p_list": pl},
                     "weights": [{"kind": "step", "values": [1, 3, 2]}, {"kind": "power", "a": 0.5}]})
    exps.append({"id": "sawyer-open-power", "theorem": "sawyer_open", "exponents": {"p": 2},
                 "weights": ["ones", {"kind": "power", "a": -0.5}]})
    return {"window": {"n": 1, "K": 4, "L": 6}, "samples": 25, "seed": 0, "experiments": exps}


SUITES = {"paper-core": paper_core}
