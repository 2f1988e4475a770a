"""Acceptance criteria at desk scale (n = 1, K = 4, L = 6 unless a test says
otherwise). Each test records one pass/fail line for the terminal summary."""
import json
import math
from fractions import Fraction as Fr

import numpy as np
import pytest

from conftest import (brute_centered_1d, brute_maximal_1d, brute_maximal_2d, lattice_intervals,
                      mp_script_E, record)
from wlab.cli import EXIT_OK, main
from wlab.constants import ConstantsConfig, script_E
from wlab.fixtures import random_functions, random_indicators, random_weight
from wlab.grid import LatticeCube, Window, all_shifts, lattice_cubes, third_trick_cover
from wlab.lorentz import GridFunction, norm_pinf, norm_triple
from wlab.operators import centered, dyadic, maximal
from wlab.sparse import cz_sparse_decompose, sparse_operator, verify_sparse
from wlab.verify import (check_dual_sawyer, check_multilinear_characterization,
                         counterexample_ratio)
from wlab.weights import (ExponentTuple, WeightVector, a1_constant, ap_constant, apr_bracket,
                          apr_double, base_weighted_constants, fujii_wilson, multilinear_ap,
                          multilinear_apr, rh_constant, rh_inf, rh_inf_weighted)

DESK = Window(1, 4, 6)
TOL = 1e-12
KINDS = ("step", "power", "mh", "lognormal")


def le(a, b, tol=TOL):
    return np.all(np.asarray(a) <= np.asarray(b) * (1 + tol))


def weights(window, count, seed, kinds=KINDS):
    rng = np.random.default_rng(seed)
    return [random_weight(window, rng, kinds[i % len(kinds)]) for i in range(count)]


def subset_masks(k):
    bits = np.arange(1, 2 ** k)[:, None] >> np.arange(k)
    return (bits & 1).astype(bool)


# 1

def test_unit_weight_identities():
    one = GridFunction.constant(DESK, 1.0)
    wv = WeightVector((one, one))
    P = ExponentTuple((2, 2))
    vals = {
        "A_1": a1_constant(one), "A_p": ap_constant(one, 2),
        "A_p^R bracket": apr_bracket(one, 2), "A_p^R double": apr_double(one, 2),
        "RH_s": rh_constant(one, 2), "RH_inf": rh_inf(one), "Fujii-Wilson": fujii_wilson(one),
        "RH_inf weighted": rh_inf_weighted(one, one),
        "A_p base weighted": base_weighted_constants(one, one, 2),
        "A_1 base weighted": base_weighted_constants(one, one, 1),
        "multilinear bracket": multilinear_apr(wv, P, "bracket"),
        "multilinear double": multilinear_apr(wv, P, "double_bar"),
        "multilinear classical": multilinear_ap(wv, P),
    }
    bad = {k: v for k, v in vals.items() if abs(v - 1) > TOL}
    record(1, not bad, f"{len(vals)} constants" + (f", off: {bad}" if bad else ""))
    assert not bad


# 2

def triple_oracle(v, m, p, r):
    masks = subset_masks(v.size)
    mass = masks @ m
    s = masks @ (v ** r * m)
    return float(np.max(mass ** (1 / p - 1 / r) * s ** (1 / r)))


def test_kolmogorov_sandwich():
    rng = np.random.default_rng(2)
    fails, oracle_checked = [], 0
    for k in range(150):
        size = int(rng.integers(1, 17)) if k % 2 == 0 else int(rng.integers(17, 513))
        if k % 3 == 0:
            v = rng.choice([0.0, 0.5, 1.0, 2.0, 3.5], size=size)
        else:
            v = rng.exponential(1.0, size=size)
        m = rng.uniform(0.1, 3.0, size=size)
        p = float(rng.uniform(1.0, 4.0))
        r = float(p * rng.uniform(0.1, 0.9))
        lo, mid = norm_pinf(v, m, p), norm_triple(v, m, p, r)
        hi = (p / (p - r)) ** (1 / r) * lo
        ok = le(lo, mid) and le(mid, hi)
        if size <= 16:
            oracle_checked += 1
            ok = ok and abs(mid - triple_oracle(v, m, p, r)) <= TOL * max(mid, 1e-300)
        if not ok:
            fails.append(k)
    record(2, not fails, f"150 configurations, {oracle_checked} against the subset oracle"
           + (f", failing {fails}" if fails else ""))
    assert not fails


# 3

def cover_ok(window, Q):
    _, cube = third_trick_cover(window, Q)
    inside = all(a <= lo and hi <= b for (lo, hi), (a, b) in zip(Q.bounds(window), cube.bounds()))
    return inside and cube.side <= 6 * Fr(Q.side, 2 ** window.K)


def test_one_third_trick():
    fails = []
    count = 0
    for K in range(4):
        for L in range(3):
            w = Window(1, K, L)
            for Q in lattice_cubes(w):
                count += 1
                if not cover_ok(w, Q):
                    fails.append((w, Q))
    rng = np.random.default_rng(3)
    for _ in range(200):
        w = Window(2, int(rng.integers(0, 3)), int(rng.integers(0, 3)))
        s = int(rng.integers(1, w.N + 1))
        corner = tuple(int(c) - w.offset for c in rng.integers(0, w.N - s + 1, size=2))
        if not cover_ok(w, LatticeCube(corner, s)):
            fails.append((w, corner, s))
    point = []
    for win, seed in ((DESK, 30), (Window(2, 2, 2), 31)):
        for fid, f in random_functions(win, 15, seed):
            total = sum(maximal(f, dyadic(a)).values for a in all_shifts(win.n))
            if not le(maximal(f).values, 6 ** win.n * total):
                point.append(fid)
    ok = not fails and not point
    record(3, ok, f"{count} cubes exhaustive in 1D, 200 random in 2D, 30 functions pointwise"
           + (f", cover failures {fails[:3]}, pointwise failures {point}" if not ok else ""))
    assert ok


# 4

def test_sparse_machinery():
    fails = []
    for fid, f in random_functions(DESK, 30, 4):
        total = np.zeros(DESK.shape)
        for a in all_shifts(1):
            S = cz_sparse_decompose(f, a, 2.0)
            if not verify_sparse(S, Fr(1, 2)).ok:
                fails.append((fid, a, "certificate"))
            Md = maximal(f, dyadic(a), resolution="subcell")
            As = sparse_operator(S, [f], resolution="subcell")
            if not le(Md, 2 * As):
                fails.append((fid, a, "dyadic"))
            total = total + sparse_operator(S, [f]).values
        if not le(maximal(f).values, 2 * 12 * total):
            fails.append((fid, "maximal"))
    record(4, not fails, "30 functions x 2 shifts" + (f", failing {fails[:5]}" if fails else ""))
    assert not fails


# 5

def double_oracle_1d(x, p):
    best = 0.0
    for a, s in lattice_intervals(x.size):
        y = x[a:a + s]
        masks = subset_masks(s)
        frac = masks.sum(axis=1) / s
        best = max(best, float(np.max(frac * (y.sum() / (masks @ y)) ** (1 / p))))
    return best


def double_oracle_multi(xs, nu, p_list):
    p = 1 / sum(1 / q for q in p_list)
    best = 0.0
    for a, s in lattice_intervals(nu.size):
        masks = subset_masks(s)
        frac = masks.sum(axis=1) / s
        val = nu[a:a + s].sum() ** (1 / p)
        for x, q in zip(xs, p_list):
            val *= float(np.max(frac * (masks @ x[a:a + s]) ** (-1 / q)))
        best = max(best, val)
    return best


def test_restricted_sandwiches():
    rng = np.random.default_rng(5)
    fails = []
    for k, w in enumerate(weights(DESK, 100, 50)):
        p = float(rng.choice([1.0, 1.25, 1.5, 2.0, 3.0, 4.0]))
        b, d = apr_bracket(w, p), apr_double(w, p)
        if not (le(b, d) and le(d, p * b)):
            fails.append(("single", k, p, b, d))
    ws = weights(DESK, 200, 51)
    tuples = [(1, 1), (1, 2), (1.5, 2), (2, 2), (2, 3), (3, 3)]
    for k in range(100):
        P = ExponentTuple(tuples[int(rng.integers(len(tuples)))])
        wv = WeightVector((ws[2 * k], ws[2 * k + 1]))
        b, d = multilinear_apr(wv, P, "bracket"), multilinear_apr(wv, P, "double_bar")
        if not (le(b, d) and le(d, math.prod(P.p_list) * b)):
            fails.append(("multi", k, P.p_list, b, d))
    oracle = 0
    small = Window(1, 2, 1)
    for w in weights(small, 10, 52):
        for p in (1.5, 3.0):
            oracle += 1
            if abs(apr_double(w, p) / double_oracle_1d(w.values, p) - 1) > TOL:
                fails.append(("oracle single", p))
    tiny = Window(1, 1, 1)
    ws = weights(tiny, 20, 53)
    for k in range(10):
        P = ExponentTuple(tuples[k % len(tuples)])
        wv = WeightVector((ws[2 * k], ws[2 * k + 1]))
        want = double_oracle_multi([w.values for w in wv.weights], wv.target(P).values, P.p_list)
        oracle += 1
        if abs(multilinear_apr(wv, P, "double_bar") / want - 1) > TOL:
            fails.append(("oracle multi", P.p_list))
    record(5, not fails, f"100 single + 100 multilinear sandwiches, {oracle} subset oracles"
           + (f", failing {fails[:5]}" if fails else ""))
    assert not fails


# 6 and 11: the bundled suite at 1 and 8 threads

@pytest.fixture(scope="module")
def suite_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("suite")
    runs = {}
    for t in (1, 8):
        out = base / f"t{t}"
        code = main(["verify", "--suite", "paper-core", "--out", str(out), "--threads", str(t)])
        runs[t] = (code, out)
    return runs


def test_paper_core_suite(suite_runs):
    code, out = suite_runs[1]
    rep = json.loads((out / "reports.json").read_text())
    reports = rep["reports"]
    theorems = {r["theorem"] for r in reports}
    sawyer = [r for r in reports if r["experiment_id"].startswith("sawyer-")
              and r["theorem"] == "sawyer"]
    bad = [r["experiment_id"] for r in reports if not r["pass"]]
    above = []
    for r in reports:
        tl = r["theoretical_log10_C"]
        if tl is None:
            continue
        for row in r["rows"]:
            x = row["ratio"]
            if not (x == 0 or math.log10(x) <= tl + 1e-9 * abs(tl)):
                above.append((r["experiment_id"], row["input_id"]))
    grid_ok = len(sawyer) == 12 and all(len(r["rows"]) == 25 for r in sawyer)
    need = {"sawyer", "prodhl", "msawyer", "sparsemax", "dualsawyer"}
    ok = code == EXIT_OK and not bad and not above and grid_ok and need <= theorems
    record(6, ok, f"{len(reports)} experiments, exit {code}"
           + (f", failing {bad}, above constant {above[:5]}" if not ok else ""))
    assert ok


# 7

def test_counterexample_growth():
    Ls = (4, 6, 8, 10, 12)
    ratios = [counterexample_ratio(2.0, L, 6) for L in Ls]
    target = [math.sqrt(L * math.log(2)) / math.sqrt(2) for L in Ls]
    errs = [abs(r / t - 1) for r, t in zip(ratios, target)]
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    ok = increasing and max(errs) <= 0.05
    record(7, ok, f"increasing={increasing}, ratios {[round(r, 4) for r in ratios]}, "
           f"max rel err vs (L ln2)^(1/2)/sqrt2 = {max(errs):.3f}")
    assert increasing
    assert max(errs) <= 0.05


# 8

def test_restricted_characterization():
    rng = np.random.default_rng(8)
    fails, worst = [], 0.0
    for k, u in enumerate(weights(DESK, 10, 80, ("step", "power"))):
        p = float(rng.choice([1.5, 2.0, 3.0]))
        rep = check_dual_sawyer(u, GridFunction.constant(DESK, 1.0), p, 1.0,
                                random_functions(DESK, 3, 81 + k),
                                char_family=random_indicators(DESK, 8, 90 + k), theoretical=False)
        d = rep.details
        worst = max(worst, d["apr_bracket"] / (d["p_conjugate"] * d["char_sup"]))
        if not d["apr_bracket"] <= d["p_conjugate"] * d["char_sup"] * 1.05:
            fails.append(k)
    record(8, not fails, f"10 weights, worst [u]/(p' C) = {worst:.4f}"
           + (f", failing {fails}" if fails else ""))
    assert not fails


# 9

def test_multilinear_characterization():
    ws = weights(DESK, 40, 90)
    fails = []
    for k in range(20):
        wv = WeightVector((ws[2 * k], ws[2 * k + 1]))
        a = random_indicators(DESK, 4, 100 + k)
        b = random_indicators(DESK, 4, 200 + k)
        chars = [(f"chi-{j}", (a[j][1], b[j][1])) for j in range(4)]
        for P in ((1, 1), (2, 2), (1, 2)):
            rep = check_multilinear_characterization(wv, ExponentTuple(P), chars)
            d = rep.details
            lower_ok = d["witness_ratio_centered"] >= d["lower_bound"] * (1 - TOL)
            upper_ok = le(rep.empirical_C, d["upper_cap"])
            if not (lower_ok and upper_ok):
                fails.append((k, P))
    record(9, not fails, "20 configurations x 3 exponent pairs"
           + (f", failing {fails}" if fails else ""))
    assert not fails


# 10

def test_constants_module():
    grid = [1, 2, 4, 8]
    mono = []
    for n, r, p in ((1, 2, 2), (1, 1, 1), (2, 2, 1.5), (2, 3, 3)):
        cfg = ConstantsConfig(n=n)
        vals = np.array([[script_E(n, r, p, A, B, cfg).log for B in grid] for A in grid])
        if not (np.all(np.diff(vals, axis=0) > 0) and np.all(np.diff(vals, axis=1) > 0)):
            mono.append((n, r, p))
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 3))
        r = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        p = float(rng.choice([1.0, 1.5, 2.0, 4.0]))
        A, B = (float(x) for x in rng.uniform(1, 20, size=2))
        cfg = ConstantsConfig(n=n)
        want = float(mp_script_E(n, r, p, A, B, cfg.c_n))
        worst = max(worst, abs(script_E(n, r, p, A, B, cfg).log - want) / abs(want))
    ok = not mono and worst <= 1e-9
    record(10, ok, f"max rel log error {worst:.2e}" + (f", not monotone at {mono}" if mono else ""))
    assert ok


# 11

def test_determinism_and_kernels(suite_runs):
    (c1, o1), (c8, o8) = suite_runs[1], suite_runs[8]
    same = c1 == c8 and all((o1 / f).read_bytes() == (o8 / f).read_bytes()
                            for f in ("reports.json", "reports.csv"))
    rng = np.random.default_rng(11)
    mism = []
    for N in (8, 16, 32, 64, 128, 256, 512, 1024, 64, 1024, 8, 256):
        w = Window(1, int(math.log2(N)) - 3, 2)
        x = rng.integers(0, 9, size=N).astype(float)
        if not np.array_equal(maximal(GridFunction(w, x)).values, brute_maximal_1d(x)):
            mism.append(("1d", N))
    for K, L in ((0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (0, 1), (1, 2), (2, 2), (0, 2), (2, 2)):
        w = Window(2, K, L)
        x = rng.integers(0, 9, size=w.shape).astype(float)
        if not np.array_equal(maximal(GridFunction(w, x)).values, brute_maximal_2d(x)):
            mism.append(("2d", w.N))
    for N in (8, 16, 32, 64, 128, 256, 16, 64):
        w = Window(1, int(math.log2(N)) - 3, 2)
        x = rng.integers(0, 9, size=N).astype(float)
        if not np.array_equal(maximal(GridFunction(w, x), centered()).values,
                              brute_centered_1d([x])):
            mism.append(("centered", N))
    ok = same and not mism
    record(11, ok, f"suite byte-identical={same}, 30 kernel inputs"
           + (f", mismatches {mism}" if mism else ""))
    assert ok
