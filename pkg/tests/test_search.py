import csv
import io
import json
import math

import numpy as np
import pytest

from wlab.errors import ConfigError, DegenerateFamily
from wlab.fixtures import build_weight
from wlab.grid import Window
from wlab.search import (SCAN_COLUMNS, ParamFamily, _pattern_search, make_objective,
                         maximize_ratio, reevaluate, sharpness_scan)
from wlab.verify import check_sawyer
from wlab.lorentz import GridFunction
from wlab.fixtures import random_functions
from wlab.weights import apr_bracket

WIN = Window(1, 2, 2)


def test_param_family_boxes():
    fam = ParamFamily("step", 2, levels=3)
    assert fam.dim == 6 and fam.lower == (-2.0,) * 6
    assert ParamFamily("constant", 3).dim == 0
    with pytest.raises(ConfigError):
        ParamFamily("power", 2, lower=(0,), upper=(1,))
    with pytest.raises(ConfigError):
        ParamFamily("nope", 1)
    with pytest.raises(ConfigError, match="family.count"):
        ParamFamily.from_dict({"kind": "power"})
    assert ParamFamily.from_dict(fam.to_dict()) == fam


@pytest.mark.parametrize("kind", ["power", "step", "mh_product", "mixed"])
def test_family_builds_positive_weights(kind):
    fam = ParamFamily(kind, 2)
    rng = np.random.default_rng(0)
    for _ in range(5):
        for w in fam.build(rng.uniform(fam.lower, fam.upper), WIN):
            assert w.is_weight


def test_family_degenerate():
    fam = ParamFamily("mh_product", 1, lower=(-800.0,), upper=(1.0,))
    with pytest.raises(DegenerateFamily):
        fam.build([-800.0], Window(1, 2, 5))


def test_pattern_search_finds_box_maximum():
    f = lambda x: -np.sum((x - np.array([0.3, -0.7])) ** 2)
    x, fx, trace = _pattern_search(f, [-1, -1], [1, 1], [0, 0], 400)
    assert np.allclose(x, [0.3, -0.7], atol=1e-4)
    assert len(trace) <= 400 and fx == max(v for _, v in trace)


def test_zero_dimensional_family_matches_harness():
    opts = {"p": 2, "samples": 6}
    res = maximize_ratio("sawyer", ParamFamily("constant", 2), budget=50, window=WIN, options=opts)
    one = GridFunction.constant(WIN, 1.0)
    rep = check_sawyer(one, one, 2.0, random_functions(WIN, 6, 0), theoretical=False)
    assert res.best_ratio == rep.empirical_C
    assert res.evaluations == 1 and res.violation is None


def test_kolmogorov_slack_at_least_one():
    res = maximize_ratio("kolmogorov_slack", ParamFamily("power", 1), budget=60, restarts=2,
                         window=WIN, options={"p": 2, "r": 1, "samples": 4})
    assert res.best_ratio >= 1 - 1e-12
    for _, _, _, v in res.trace:
        assert v >= 1 - 1e-12


def test_conjecture_search_reproducible():
    fam = ParamFamily("step", 4, levels=1)
    opts = {"p_list": [2, 2], "samples": 3}
    res = maximize_ratio("conjecture", fam, budget=2000, restarts=2, seed=3, window=WIN,
                         options=opts)
    assert math.isfinite(res.best_ratio) and res.best_ratio > 0
    assert len(res.best_params) == 4
    assert reevaluate(res) == pytest.approx(res.best_ratio, rel=1e-12)
    again = maximize_ratio("conjecture", fam, budget=2000, restarts=2, seed=3, window=WIN,
                           options=opts)
    assert json.dumps(again.to_dict()) == json.dumps(res.to_dict())


def test_conjecture_theta_variant():
    res = maximize_ratio("conjecture", ParamFamily("power", 4), budget=50, restarts=1,
                         window=WIN, options={"p_list": [2, 2], "samples": 2, "theta": 1.0})
    assert math.isfinite(res.best_ratio)


def test_search_deterministic_across_threads():
    fam = ParamFamily("power", 2)
    kw = dict(budget=60, restarts=3, seed=5, window=WIN, options={"p": 2, "samples": 3})
    a = maximize_ratio("sawyer", fam, threads=1, **kw)
    b = maximize_ratio("sawyer", fam, threads=4, **kw)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert a.trace_csv() == b.trace_csv()
    assert a.theoretical_log10_C is not None and a.violation is None


def test_search_validation():
    fam = ParamFamily("power", 2)
    with pytest.raises(ConfigError, match="budget"):
        maximize_ratio("sawyer", fam, budget=10, window=WIN, options={"p": 2})
    with pytest.raises(ConfigError, match="needs 2 weights"):
        maximize_ratio("sawyer", ParamFamily("power", 3), window=WIN, options={"p": 2})
    with pytest.raises(ConfigError, match="options.p"):
        maximize_ratio("sawyer", fam, window=WIN, options={})
    with pytest.raises(ConfigError, match="unknown objective"):
        make_objective("nope", {}, WIN)


def test_sharpness_scan_rows_and_gap():
    fams = {"ones": ["ones", "ones"], "step": [{"kind": "step", "values": [1, 3]}, "ones"]}
    grid = [{"p": 1.5}, {"p": 2}]
    text = sharpness_scan("sawyer", grid, fams, window=WIN, samples=3)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0].keys()) == SCAN_COLUMNS
    assert len(rows) == len(grid) * len(fams)
    for r in rows:
        assert float(r["log10_gap"]) > 0


def test_sharpness_gap_unit_weights():
    win = Window(1, 4, 6)
    one = build_weight("ones", win)
    text = sharpness_scan("sawyer", [{"p": 2}], {"ones": ["ones", "ones"]}, window=win, samples=2)
    row = next(csv.DictReader(io.StringIO(text)))
    tl = float(row["theoretical_log10_C"])
    assert tl - math.log10(0.5) > 0
    assert apr_bracket(one, 2) == 1


def test_sharpness_gap_monotone_in_step_scale():
    win = Window(1, 2, 2)
    scales = [2, 4, 8, 16]
    fams = {f"s{c:02d}": [{"kind": "step", "values": [1, c]}, "ones"] for c in scales}
    text = sharpness_scan("sawyer", [{"p": 2}], fams, window=win, samples=6)
    gaps = [float(r["log10_gap"]) for r in csv.DictReader(io.StringIO(text))]
    A = [apr_bracket(build_weight(fams[k][0], win), 2) for k in sorted(fams)]
    order = np.argsort(A, kind="stable")
    assert np.all(np.diff(np.asarray(gaps)[order]) > 0)


def test_sharpness_scan_rejects_open_theorem():
    with pytest.raises(ConfigError):
        sharpness_scan("sawyer_open", [{"p": 2}], {}, window=WIN)
