"""Command-line front end.

    python3 -m modeltoeplitz --config exp.json [--out report.json] [--format json|csv]

Exit status: 0 when every verdict passes, 2 when a verdict fails, 1 on
invalid input or a numerical failure (the failing stage is named on stderr).
"""

from __future__ import annotations

import argparse
import contextlib
import copy
import csv
import io
import json
import math
import sys
from dataclasses import replace

import jsonschema
import numpy as np

from . import __version__
from .examples import example1_compare, example1_constant, example2_compare, example3_schedule, example3_sweep
from .factorization import FactorizationParams, factorize
from .laurent import DEFAULT_GRID_CAP, DEFAULT_TAIL_TOL, MatrixLaurentSeries, multiply
from .modelspace import BlaschkeProduct, ZeroSequenceGenerator
from .verify import Tolerances, bo_report, strong_convergence_probe, sweep_verdicts, szego_sweep

SCHEMA_VERSION = "1.0"

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "object",
            "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
            "required": ["re", "im"],
            "additionalProperties": False,
        },
    ]
}

_LAURENT = {
    "type": "object",
    "properties": {
        "n_min": {"type": "integer"},
        "coeffs": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {"$ref": "#/$defs/complex"},
                    {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}}},
                ]
            },
        },
    },
    "required": ["n_min", "coeffs"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "$defs": {"complex": _COMPLEX, "laurent": _LAURENT},
    "properties": {
        "command": {"enum": ["verify-bo", "szego", "examples", "factorize"]},
        "seed": {"type": "integer", "minimum": 0},
        "symbol": {
            "type": "object",
            "properties": {
                "m": {"type": "integer", "minimum": 1},
                "laurent": {"$ref": "#/$defs/laurent"},
                "factors": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/laurent"}},
            },
            "oneOf": [{"required": ["laurent"]}, {"required": ["factors"]}],
            "additionalProperties": False,
        },
        "zeros": {
            "type": "object",
            "properties": {
                "explicit": {"type": "array", "items": {"$ref": "#/$defs/complex"}},
                "generator": {"enum": list(ZeroSequenceGenerator.KINDS)},
                "count": {"type": "integer", "minimum": 0},
                "params": {
                    "type": "object",
                    "properties": {
                        "zeros": {"type": "array", "items": {"$ref": "#/$defs/complex"}},
                        "radius_power": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "additionalProperties": False,
                },
                "random": {
                    "type": "object",
                    "properties": {
                        "count": {"type": "integer", "minimum": 0},
                        "max_modulus": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    },
                    "required": ["count"],
                    "additionalProperties": False,
                },
            },
            "oneOf": [{"required": ["explicit"]}, {"required": ["generator"]}, {"required": ["random"]}],
            "additionalProperties": False,
        },
        "numeric": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "route_tol": {"type": "number", "exclusiveMinimum": 0},
                "factorization_tol": {"type": "number", "exclusiveMinimum": 0},
                "tail_tol": {"type": "number", "exclusiveMinimum": 0},
                "grid_cap": {"type": "integer", "minimum": 64},
                "truncation_cap": {"type": "integer", "minimum": 8},
                "method": {"enum": ["auto", "log", "section"]},
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "N_list": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
                "probe_N_list": {"type": "array", "minItems": 2, "items": {"type": "integer", "minimum": 1}},
                "probe_points": {"type": "array", "items": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1}},
                "kernel_points": {"type": "array", "items": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1}},
                "noise_floor": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "examples": {
            "type": "object",
            "properties": {
                "which": {"type": "array", "minItems": 1, "items": {"enum": [1, 2, 3]}},
                "v": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "N_list": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
                "N_max": {"type": "integer", "minimum": 3, "maximum": 10**7},
                "radius_power": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string"}, "format": {"enum": ["json", "csv"]}},
            "additionalProperties": False,
        },
    },
    "required": ["command"],
    "additionalProperties": False,
}

_NUMERIC_DEFAULTS = {
    "tol": 1e-6,
    "route_tol": 1e-8,
    "factorization_tol": 1e-10,
    "tail_tol": DEFAULT_TAIL_TOL,
    "grid_cap": DEFAULT_GRID_CAP,
    "truncation_cap": 4096,
    "method": "auto",
}
_SWEEP_DEFAULTS = {
    "N_list": [1, 2, 4, 8, 16, 32, 64],
    "probe_N_list": [1, 10, 100, 1000, 10000],
    "probe_points": [0.3],
    "kernel_points": [0.5],
    "noise_floor": 1e-10,
}
_EXAMPLE_DEFAULTS = {"which": [1, 2, 3], "v": 0.5, "N_list": [1000, 2000, 100000, 200000], "N_max": 10**6}


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageError(name, str(exc)) from exc


def _complex(x) -> complex:
    if isinstance(x, dict):
        return complex(x["re"], x["im"])
    return complex(x)


def _cjson(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _matrix(entry, m: int) -> np.ndarray:
    if isinstance(entry, list):
        A = np.array([[_complex(x) for x in row] for row in entry], dtype=complex)
        if A.shape != (m, m):
            raise ValueError(f"coefficient block has shape {A.shape}, expected ({m}, {m})")
        return A
    return _complex(entry) * np.eye(m, dtype=complex) if m > 1 else np.array([[_complex(entry)]])


def parse_laurent(node: dict, m: int) -> MatrixLaurentSeries:
    return MatrixLaurentSeries(node["n_min"], np.stack([_matrix(c, m) for c in node["coeffs"]]))


def series_json(x: MatrixLaurentSeries) -> dict:
    return {
        "n_min": x.n_min,
        "coeffs": [[[_cjson(v) for v in row] for row in block] for block in x.coeffs],
        "tail": x.tail,
    }


def build_symbol(node: dict) -> MatrixLaurentSeries:
    m = node.get("m", 1)
    if "laurent" in node:
        return parse_laurent(node["laurent"], m)
    a = MatrixLaurentSeries.identity(m)
    for fs in node["factors"]:
        a = multiply(a, parse_laurent(fs, m))
    return a


def build_zeros(node: dict, seed: int) -> tuple[BlaschkeProduct, ZeroSequenceGenerator | None]:
    if "explicit" in node:
        return BlaschkeProduct(tuple(_complex(z) for z in node["explicit"])), None
    if "random" in node:
        r = node["random"]
        rng = np.random.default_rng(seed)
        n, rmax = r["count"], r.get("max_modulus", 0.8)
        zs = rmax * np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n))
        return BlaschkeProduct(tuple(zs)), None
    params = dict(node.get("params", {}))
    if "zeros" in params:
        params["zeros"] = [_complex(z) for z in params["zeros"]]
    gen = ZeroSequenceGenerator(node["generator"], params)
    return gen.blaschke(node.get("count", 0)), gen


def resolve(config: dict, args) -> dict:
    cfg = copy.deepcopy(config)
    cfg.setdefault("seed", 0)
    if args.seed is not None:
        cfg["seed"] = args.seed
    num = {**_NUMERIC_DEFAULTS, **cfg.get("numeric", {})}
    if args.tol is not None:
        num["tol"] = args.tol
    cfg["numeric"] = num
    if cfg["command"] == "szego":
        cfg["sweep"] = {**_SWEEP_DEFAULTS, **cfg.get("sweep", {})}
    if cfg["command"] == "examples":
        cfg["examples"] = {**_EXAMPLE_DEFAULTS, **cfg.get("examples", {})}
    out = dict(cfg.get("output", {}))
    if args.out is not None:
        out["path"] = args.out
    if args.format is not None:
        out["format"] = args.format
    out.setdefault("format", "json")
    cfg["output"] = out
    cfg["threads"] = args.threads
    for key in {"verify-bo": ("symbol", "zeros"), "szego": ("symbol", "zeros"), "factorize": ("symbol",)}.get(cfg["command"], ()):
        if key not in cfg:
            raise StageError("config", f"command {cfg['command']!r} requires {key!r}")
    if cfg["command"] == "szego" and "generator" not in cfg["zeros"]:
        raise StageError("config", "szego requires a zero generator")
    return cfg


def _params(num: dict) -> tuple[FactorizationParams, Tolerances]:
    fp = FactorizationParams(tol=num["factorization_tol"], tail_tol=num["tail_tol"],
                             grid_cap=num["grid_cap"], method=num["method"])
    tol = replace(Tolerances(), identity=num["tol"], route=num["route_tol"], hankel_cap=num["truncation_cap"])
    return fp, tol


def run_verify_bo(cfg: dict):
    with stage("symbol"):
        a = build_symbol(cfg["symbol"])
    with stage("zeros"):
        u, _ = build_zeros(cfg["zeros"], cfg["seed"])
    fp, tol = _params(cfg["numeric"])
    with stage("factorization"):
        f = factorize(a, fp)
    with stage("verify"):
        rep = bo_report(a, u, tol, fp, factorization=f)
    result = rep.to_dict()
    verdicts = {"borodin_okounkov": rep.rel_defect < rep.tolerance}
    verdicts.update({k: v["passed"] for k, v in rep.checks.items()})
    rows = [{"name": rep.name, "value": rep.rel_defect, "tolerance": rep.tolerance, "passed": verdicts[rep.name]}]
    rows += [{"name": k, **v} for k, v in rep.checks.items()]
    return result, verdicts, rows


def run_szego(cfg: dict):
    with stage("symbol"):
        a = build_symbol(cfg["symbol"])
    with stage("zeros"):
        _, gen = build_zeros({**cfg["zeros"], "count": 0}, cfg["seed"])
    fp, tol = _params(cfg["numeric"])
    sw_cfg = cfg["sweep"]
    with stage("factorization"):
        f = factorize(a, fp)
    with stage("verify"):
        sw = szego_sweep(a, gen, sw_cfg["N_list"], tol, fp, factorization=f, threads=cfg["threads"])
        probe = strong_convergence_probe(gen, sw_cfg["probe_N_list"], sw_cfg["probe_points"], sw_cfg["kernel_points"])
    verdicts = sweep_verdicts(sw, sw_cfg["noise_floor"])
    verdicts.update({f"probe_{k}": v for k, v in probe.verdicts.items()})
    result = {"sweep": sw.to_dict(), "probe": probe.to_dict()}
    return result, verdicts, sw.rows()


def run_examples(cfg: dict):
    ex = cfg["examples"]
    v = ex["v"]
    rows, result, verdicts = [], {}, {}
    with stage("examples"):
        for which, cmp in ((1, example1_compare), (2, example2_compare)):
            if which not in ex["which"]:
                continue
            comps = [cmp(v, n) for n in ex["N_list"]]
            errs = {c.N: c.rel_err for c in comps}
            for c in comps:
                meas = math.exp(c.log_measured.real - c.N * math.log1p(-v))
                pred = math.exp(c.log_predicted.real - c.N * math.log1p(-v))
                rows.append({"example": which, "k": "", "branch": "", "N": c.N,
                             "measured": meas, "predicted": pred, "rel_err": c.rel_err})
            ratios = {n: errs[2 * n] / errs[n] for n in errs if 2 * n in errs and errs[n] > 0}
            result[f"example{which}"] = {"halving_ratios": {str(n): r for n, r in ratios.items()}}
            if which == 1:
                result["example1"]["constant"] = example1_constant(v)
            verdicts[f"example{which}_halving"] = bool(ratios) and all(0.3 <= r <= 0.7 for r in ratios.values())
        if 3 in ex["which"]:
            rr = ex.get("radius_power")
            r_rule = None if rr is None else (lambda j, p=rr: 1 - 1 / np.asarray(j, dtype=float) ** p)
            sched = example3_schedule(ex["N_max"], r_rule)
            tab = example3_sweep(v, ex["N_max"], r_rule)
            for r in tab:
                rows.append({"example": 3, "k": r["k"], "branch": r["branch"], "N": r["N"], "measured": r["root"],
                             "predicted": r["predicted"], "rel_err": abs(r["root"] / r["predicted"] - 1)})
            exact = all(
                (2 * fn == n) if mult == 2 else (4 * fn == n) for _, n, fn, mult in sched.ratio_points()
            )
            ident = all(abs(r["root"] - r["predicted"] * r["correction_root"]) < 1e-12 for r in tab)
            last = {r["branch"]: r for r in tab}
            result["example3"] = {
                "increments_ok": sched.increments_ok(),
                "accumulation": {b: {"root": r["root"], "predicted": r["predicted"], "k": r["k"]} for b, r in last.items()},
            }
            verdicts["example3_increments"] = sched.increments_ok()
            verdicts["example3_ratios_exact"] = exact
            verdicts["example3_correction_identity"] = ident
    return result, verdicts, rows


def run_factorize(cfg: dict):
    with stage("symbol"):
        a = build_symbol(cfg["symbol"])
    fp, _ = _params(cfg["numeric"])
    with stage("factorization"):
        f = factorize(a, fp)
    names = ("w_minus", "w_plus", "v_plus", "v_minus", "b", "c")
    result = {n: series_json(getattr(f, n)) for n in names}
    result.update(
        residual_right=f.residual_right,
        residual_left=f.residual_left,
        normalization=f.normalization,
        diagnostics={k: v for k, v in f.diagnostics.items() if v is not None},
    )
    verdicts = {
        "residual_right": f.residual_right < fp.tol,
        "residual_left": f.residual_left < fp.tol,
    }
    rows = []
    for n in names:
        x = getattr(f, n)
        for i, block in enumerate(x.coeffs):
            for (r, c), z in np.ndenumerate(block):
                rows.append({"factor": n, "n": x.n_min + i, "row": r, "col": c, "re": z.real, "im": z.imag})
    return result, verdicts, rows


COMMANDS = {"verify-bo": run_verify_bo, "szego": run_szego, "examples": run_examples, "factorize": run_factorize}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (complex, np.complexfloating)):
        return _cjson(x)
    return x


def render(report: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        for r in rows[1:]:
            fields += [k for k in r if k not in fields]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _csv_cell(v) for k, v in r.items()})
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def run(config: dict, args) -> tuple[int, str]:
    """Validate, execute and render; returns ``(exit_code, text)``."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise StageError("config", f"{exc.message} (at {path})") from None
    cfg = resolve(config, args)
    result, verdicts, rows = COMMANDS[cfg["command"]](cfg)
    passed = all(verdicts.values())
    report = {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "command": cfg["command"],
        "config": cfg,
        "result": result,
        "verdicts": verdicts,
        "passed": passed,
    }
    return (0 if passed else 2), render(report, rows, cfg["output"]["format"])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modeltoeplitz", description="Model-space Toeplitz determinant experiments.")
    p.add_argument("--config", required=True, help="JSON experiment description")
    p.add_argument("--out", help="report path (default: config output.path, else stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tol", type=float, help="verdict tolerance for the identity defect")
    p.add_argument("--seed", type=int, help="seed for randomized zero sets")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise StageError("config", "--threads must be >= 1")
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise StageError("config", str(exc)) from None
        code, text = run(config, args)
        path = args.out or config.get("output", {}).get("path")
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if code == 2:
        print("verdict failure", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
