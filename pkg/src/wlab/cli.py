"""Command line: ``wlab constants|verify|search``.

Exit codes: 0 success, 1 an inequality violation was found, 2 bad config.
Outputs are written atomically and only after every experiment finished.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

from . import fixtures, search, verify
from .constants import THEOREMS, ConstantsConfig, theorem_constants
from .errors import WlabError
from .grid import Window
from .weights import (a1_constant, ap_constant, apr_bracket, apr_double, fujii_wilson,
                      rh_constant, rh_inf)

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


class CliError(Exception):
    pass


def atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _load_config(args) -> dict:
    if args.config is None:
        raise CliError("--config is required")
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError("config must be a JSON object")
    return cfg


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("WLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise CliError(f"WLAB_THREADS must be an integer, got {env!r}") from exc
    return 1


def _window_override(args) -> dict:
    out = {}
    if args.dim is not None:
        out["n"] = args.dim
    if args.window_K is not None:
        out["K"] = args.window_K
    if args.window_L is not None:
        out["L"] = args.window_L
    return out


def _window(cfg: dict, args) -> Window:
    wd = {**{"n": 1, "K": 4, "L": 6}, **cfg.get("window", {}), **_window_override(args)}
    return Window(int(wd["n"]), int(wd["K"]), int(wd["L"]))


def _constants_cfg(cfg: dict, args, n: int) -> ConstantsConfig:
    cc = dict(cfg.get("constants", {}))
    if args.cn is not None:
        cc["c_n"] = args.cn
    return ConstantsConfig(n=n, c_n=cc.get("c_n"), c_npe=float(cc.get("c_npe", 1.0)),
                           c_npe_is_default="c_npe" not in cc)


# commands

WEIGHT_CONSTANTS = ("a1", "ap", "apr_bracket", "apr_double", "rh_s", "rh_inf", "fujii_wilson")
NEEDS = {"ap": "exponents.p", "apr_bracket": "exponents.p", "apr_double": "exponents.p",
         "rh_s": "exponents.s"}


def cmd_constants(cfg: dict, args) -> tuple:
    win = _window(cfg, args)
    ex = cfg.get("exponents", {})
    requested = cfg.get("constants_requested")
    if requested is None:
        requested = [c for c in WEIGHT_CONSTANTS
                     if NEEDS.get(c) is None or NEEDS[c].split(".")[1] in ex]
    for c in requested:
        if c not in WEIGHT_CONSTANTS:
            raise CliError(f"unknown constant {c!r}")
        if c in NEEDS and NEEDS[c].split(".")[1] not in ex:
            raise CliError(f"missing field '{NEEDS[c]}' required by {c}")
    specs = cfg.get("weights")
    if not specs:
        raise CliError("missing field 'weights'")
    p, s = ex.get("p"), ex.get("s")
    fns = {"a1": a1_constant, "ap": lambda w: ap_constant(w, float(p)),
           "apr_bracket": lambda w: apr_bracket(w, float(p)),
           "apr_double": lambda w: apr_double(w, float(p)),
           "rh_s": lambda w: rh_constant(w, float(s)), "rh_inf": rh_inf,
           "fujii_wilson": fujii_wilson}
    out = {"window": win.to_dict(), "exponents": ex, "weights": []}
    for spec in specs:
        w = fixtures.build_weight(spec, win)
        out["weights"].append({"spec": spec, "constants": {c: fns[c](w) for c in requested}})
    if "theorem" in cfg:
        th = cfg["theorem"]
        if th not in THEOREMS:
            raise CliError(f"unknown theorem id {th!r}")
        val = theorem_constants(th, cfg.get("inputs", {}), _constants_cfg(cfg, args, win.n))
        out["theorem"] = {"id": th, "log10": val.log10}
    return EXIT_OK, {"constants.json": _json(out)}, [json.dumps(out["weights"], sort_keys=True)]


def cmd_verify(cfg: dict, args) -> tuple:
    suite = cfg.get("suite")
    if suite is not None:
        if suite not in verify.SUITES:
            raise CliError(f"unknown suite {suite!r}")
        cfg = {**verify.SUITES[suite](), **{k: v for k, v in cfg.items() if k != "suite"}}
    specs = verify.expand_config(cfg, _window_override(args), args.seed)
    if not specs:
        raise CliError("config holds no experiments")
    reports = verify.run_experiments(specs, _threads(args), _constants_cfg(cfg, args, specs[0].window.n))
    payload = {"reports": [r.to_dict() for r in reports],
               "pass": all(r.passed for r in reports)}
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.experiment_id} empirical_C={r.empirical_C:.6g}"
             + ("" if r.theoretical is None else f" log10_C={r.theoretical.log10:.6g}")
             for r in reports]
    timings = {r.experiment_id: r.runtime for r in reports}
    code = EXIT_OK if payload["pass"] else EXIT_VIOLATION
    return code, {"reports.json": _json(payload), "reports.csv": verify.reports_csv(reports),
                  "timings.json": _json(timings)}, lines


def cmd_search(cfg: dict, args) -> tuple:
    for key in ("objective", "family"):
        if key not in cfg:
            raise CliError(f"missing field '{key}'")
    win = _window(cfg, args)
    fam = search.ParamFamily.from_dict(cfg["family"])
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    res = search.maximize_ratio(cfg["objective"], fam, int(cfg.get("budget", 200)),
                                int(cfg.get("restarts", 3)), seed, win,
                                cfg.get("options", {}), _threads(args))
    lines = [f"best_ratio={res.best_ratio!r} params={res.best_params} evals={res.evaluations}"]
    files = {"search.json": _json(res.to_dict()), "search_trace.csv": res.trace_csv()}
    if res.violation is not None:
        lines.append("VIOLATION: best ratio exceeds the theoretical constant")
        return EXIT_VIOLATION, files, lines
    return EXIT_OK, files, lines


COMMANDS = {"constants": cmd_constants, "verify": cmd_verify, "search": cmd_search}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wlab", description="Weighted maximal inequality lab")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config path")
    ap.add_argument("--suite", help="bundled verify suite (paper-core)")
    ap.add_argument("--out", default="wlab-out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int, help="worker threads (fallback: WLAB_THREADS)")
    ap.add_argument("--window-K", dest="window_K", type=int)
    ap.add_argument("--window-L", dest="window_L", type=int)
    ap.add_argument("--dim", type=int, choices=(1, 2))
    ap.add_argument("--cn", type=float, help="override c_n")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.suite is not None:
            if args.command != "verify":
                raise CliError("--suite only applies to verify")
            cfg = {"suite": args.suite}
        else:
            cfg = _load_config(args)
        code, files, lines = COMMANDS[args.command](cfg, args)
    except (CliError, WlabError, KeyError, TypeError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"wlab: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    for name, text in files.items():
        atomic_write(os.path.join(args.out, name), text)
    for line in lines:
        print(line)
    return code
