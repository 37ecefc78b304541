"""Batch front-end: ``spinframe run job.json`` and ``spinframe schema``.

Exit codes: 0 all checks within tolerance, 1 a tolerance failure, 2 the job
file is unreadable or fails schema validation, 3 an evaluation error (domain
error, singular gauge, ...).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import jsonschema
import numpy as np

from . import __version__
from .clifford import Multivector
from .dual import DomainError
from .expr import ExprError
from .geometry import FrameGradeError, connection_field, curvature, frame
from .immersion import (
    GridSpec,
    PathSpec,
    VielbeinField,
    exactness_check,
    export_pointcloud,
    initial_state,
    integrate_path,
    paper_example_immersion,
    write_csv,
    write_obj,
)
from .solutions import (
    NormalizationError,
    SingularGaugeError,
    TypeAPoint,
    TypeBPoint,
    compose_connection_A,
    compose_connection_B,
    formula_discrepancies,
)
from .spin_field import (
    FDConfig,
    PaperExample,
    Product,
    TypeA,
    TypeB,
    check_spin,
    killing_extract,
    spec_from_dict,
)

EXIT_OK, EXIT_TOLERANCE, EXIT_SCHEMA, EXIT_EVAL = 0, 1, 2, 3

COMMANDS = ("verify", "extract", "curvature", "gcr", "compose", "immerse", "example")

DEFAULT_TOLERANCES = {
    "normalization": 1e-10,
    "grade": 1e-8,
    "reconstruction": 1e-8,
    "residual": 1e-4,
    "compose": 1e-8,
    "drift": 1e-6,
    "exactness": 1e-6,
    "path_independence": 1e-5,
    "example": 1e-6,
}

_EXPR = {"type": "string", "minLength": 1}
_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}
_GRID = {
    "type": "object",
    "required": ["ranges", "counts"],
    "additionalProperties": False,
    "properties": {
        "x0": {"type": "number"},
        "ranges": {
            "type": "array", "minItems": 3, "maxItems": 3,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "counts": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "integer", "minimum": 1}},
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "spinframe job",
    "type": "object",
    "required": ["command"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "field": {"$ref": "#/$defs/field"},
        "points": {
            "oneOf": [
                {"type": "array", "items": _POINT, "minItems": 1},
                {"type": "object", "required": ["grid"], "additionalProperties": False, "properties": {"grid": _GRID}},
            ]
        },
        "fd": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"step": {"type": "number", "exclusiveMinimum": 0}, "scheme": {"const": "central"}},
        },
        "method": {"enum": ["auto", "closed", "jet", "fd"]},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
        },
        "compose": {
            "type": "object",
            "required": ["psi1", "psi2"],
            "additionalProperties": False,
            "properties": {"psi1": {"$ref": "#/$defs/field"}, "psi2": {"$ref": "#/$defs/field"}},
        },
        "immerse": {
            "type": "object",
            "required": ["grid"],
            "additionalProperties": False,
            "properties": {
                "grid": _GRID,
                "vielbein": {
                    "oneOf": [
                        {"const": "paper_example"},
                        {"const": "identity"},
                        {"type": "array", "minItems": 4, "maxItems": 4,
                         "items": {"type": "array", "minItems": 10, "maxItems": 10, "items": _EXPR}},
                    ]
                },
                "steps_per_unit": {"type": "number", "exclusiveMinimum": 0},
                "q0": {"type": "array", "items": {"type": "number"}, "minItems": 10, "maxItems": 10},
                "cloud_path": {"type": "string"},
                "cloud_format": {"enum": ["csv", "obj"]},
                "projection": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 9},
                               "minItems": 3, "maxItems": 3},
                "check_path_independence": {"type": "boolean"},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": "string"}, "format": {"enum": ["json", "csv"]}},
        },
    },
    "allOf": [
        {"if": {"properties": {"command": {"enum": ["verify", "extract", "curvature", "gcr", "immerse"]}}},
         "then": {"required": ["field"]}},
        {"if": {"properties": {"command": {"const": "compose"}}}, "then": {"required": ["compose"]}},
        {"if": {"properties": {"command": {"const": "immerse"}}}, "then": {"required": ["immerse"]}},
    ],
    "$defs": {
        "multivector": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["blade", "coeff"],
                "additionalProperties": False,
                "properties": {
                    "blade": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 9}},
                    "coeff": {"type": "number"},
                },
            },
        },
        "field": {
            "type": "object",
            "required": ["family"],
            "oneOf": [
                {"properties": {"family": {"const": "paper_example"}}, "additionalProperties": False},
                {
                    "properties": {
                        "family": {"const": "typeA"},
                        "normal_index": {"type": "integer", "minimum": 4, "maximum": 9},
                        "f": _EXPR,
                        "coeffs": {"type": "array", "items": _EXPR, "minItems": 4, "maxItems": 4},
                    },
                    "required": ["normal_index", "f", "coeffs"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "family": {"const": "typeB"},
                        "tangent_index": {"type": "integer", "minimum": 0, "maximum": 3},
                        "f": _EXPR,
                        "coeffs": {"type": "array", "items": _EXPR, "minItems": 6, "maxItems": 6},
                    },
                    "required": ["tangent_index", "f", "coeffs"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "family": {"const": "rotation"},
                        "plane": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 9},
                                  "minItems": 2, "maxItems": 2},
                        "angle": _EXPR,
                    },
                    "required": ["plane", "angle"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "family": {"const": "product"},
                        "factors": {"type": "array", "items": {"$ref": "#/$defs/field"}, "minItems": 1},
                    },
                    "required": ["factors"],
                    "additionalProperties": False,
                },
                {
                    "properties": {"family": {"const": "constant"}, "multivector": {"$ref": "#/$defs/multivector"}},
                    "required": ["multivector"],
                    "additionalProperties": False,
                },
            ],
        },
    },
}


class JobError(ValueError):
    """Job content that passes the schema but cannot be interpreted."""


def validate_job(job: dict) -> None:
    jsonschema.validate(job, SCHEMA)


# --- points ----------------------------------------------------------------

EXAMPLE_POINTS = (
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 1.0, 0.0, 0.0),
    (0.5, 0.3, -0.2, 0.5),
    (-0.4, 0.7, 0.4, -0.1),
    (0.2, -1.0, 0.5, 0.8),
)


def _grid(desc) -> GridSpec:
    return GridSpec(desc.get("x0", 0.0), tuple(tuple(r) for r in desc["ranges"]), tuple(desc["counts"]))


def job_points(job: dict):
    pts = job.get("points")
    if pts is None:
        if job["command"] == "example":
            pts = [list(p) for p in EXAMPLE_POINTS]
        else:
            pts = [[0.0, 0.0, 0.0, 0.0]]
    elif isinstance(pts, dict):
        g = _grid(pts["grid"])
        pts = [g.point(i).tolist() for i in g.indices()]
    return sorted(tuple(float(v) for v in p) for p in pts)


def _tolerances(job: dict) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(job.get("tolerances", {}))
    return tol


@lru_cache(maxsize=32)
def _field(text: str):
    return spec_from_dict(json.loads(text))


def _spec(d: dict):
    return _field(json.dumps(d, sort_keys=True))


# --- per-point evaluators --------------------------------------------------

def _vector_record(mv: Multivector):
    return mv.to_list()


def _point_verify(job, tol, x):
    rep = check_spin(_spec(job["field"]), x, tol["grade"])
    failing = rep.failing_indices()
    ok = rep.normalization_residual < tol["normalization"] and not failing
    return {
        "normalization_residual": rep.normalization_residual,
        "right_normalization_residual": rep.right_normalization_residual,
        "sandwich_grade_ok": rep.sandwich_grade_ok,
        "failing_frame_indices": failing,
        "sandwich_outputs": {str(i): _vector_record(rep.frame[i]) for i in failing},
    }, ok, {"normalization": rep.normalization_residual, "grade": max(rep.sandwich_residuals)}


def _point_extract(job, tol, x):
    fd = FDConfig(**job.get("fd", {}))
    data = killing_extract(_spec(job["field"]), x, fd)
    conn = connection_field(_spec(job["field"]), x, fd)
    g2, rec = max(data.grade2_residual), max(data.reconstruction_residual)
    ok = g2 < tol["grade"] and rec < tol["reconstruction"] and data.normalization_residual < tol["normalization"]
    rec_out = conn.to_dict()
    rec_out.update({
        "K": [_vector_record(k) for k in data.K],
        "grade2_residual": data.grade2_residual,
        "reconstruction_residual": data.reconstruction_residual,
        "normalization_residual": data.normalization_residual,
    })
    return rec_out, ok, {"grade2": g2, "reconstruction": rec, "normalization": data.normalization_residual}


def _point_curvature(job, tol, x, full=True):
    fd = FDConfig(**job.get("fd", {}))
    c = curvature(_spec(job["field"]), x, fd, job.get("method", "auto"))
    g, co, r = c.residuals()
    ok = max(g, co, r) < tol["residual"]
    if full:
        out = c.to_dict()
    else:
        out = {"gauss_residual": g, "codazzi_residual": co, "ricci_residual": r,
               "flatness_residual": c.flatness_residual}
    return out, ok, {"gauss": g, "codazzi": co, "ricci": r}


def _point_gcr(job, tol, x):
    return _point_curvature(job, tol, x, full=False)


def _psi1_params(spec, x):
    if isinstance(spec, (TypeA, PaperExample)):
        return TypeAPoint.from_spec(spec, x)
    if isinstance(spec, TypeB):
        return TypeBPoint.from_spec(spec, x)
    raise JobError("compose.psi1 must be a typeA, typeB or paper_example field")


def _point_compose(job, tol, x):
    psi1 = _spec(job["compose"]["psi1"])
    psi2 = _spec(job["compose"]["psi2"])
    params = _psi1_params(psi1, x)
    conn2 = connection_field(psi2, x)
    compose = compose_connection_A if isinstance(params, TypeAPoint) else compose_connection_B
    composed = compose(params, conn2)
    product = connection_field(Product((psi1, psi2)), x)
    prod_res = composed.conn.max_diff(product)
    ok = composed.oracle_residual < tol["compose"] and prod_res < tol["compose"]
    out = composed.conn.to_dict()
    out.update({
        "oracle_residual": composed.oracle_residual,
        "product_extraction_residual": prod_res,
        "printed_formula_discrepancy": formula_discrepancies(params, conn2),
    })
    return out, ok, {"oracle": composed.oracle_residual, "product_extraction": prod_res}


def _example_tables(x):
    """Compare every closed-form quantity of the preset example at x."""
    pe = PaperExample()
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[1:]
    d = 1.0 + x1 ** 2 + x2 ** 2 + x3 ** 2
    conn = connection_field(pe, x)
    H_expected = np.zeros((4, 4, 6))
    for mu in (1, 2, 3):
        H_expected[mu, mu, 1] = -2.0 / d
    om = np.zeros((4, 4, 4))

    def put(a, m, n, v):
        om[a, m, n], om[a, n, m] = v, -v

    put(1, 1, 2, 2 * x2 / d); put(1, 1, 3, 2 * x3 / d); put(1, 2, 3, 0.0)
    put(2, 1, 2, -2 * x1 / d); put(2, 1, 3, 0.0); put(2, 2, 3, 2 * x3 / d)
    put(3, 1, 2, 0.0); put(3, 1, 3, -2 * x1 / d); put(3, 2, 3, -2 * x2 / d)
    curv = curvature(pe, x, method="closed")
    R_expected = np.zeros((4, 4, 4, 4))
    for a, b in ((1, 2), (1, 3), (2, 3)):
        v = -4.0 / d ** 2
        R_expected[a, b, a, b] = R_expected[b, a, b, a] = v
        R_expected[a, b, b, a] = R_expected[b, a, a, b] = -v
    vb = VielbeinField.paper_example()
    g_expected = np.diag([-1.0, d ** -2, d ** -2, d ** -2])
    origin = np.zeros(4)
    path = PathSpec((tuple(origin), tuple(x)), 64)
    end = integrate_path(pe, vb, path, initial_state(pe, origin, paper_example_immersion(origin)))
    E_expected = frame(pe, x).matrix
    errors = {
        "H": float(np.max(np.abs(conn.H - H_expected))),
        "A": float(np.max(np.abs(conn.A))),
        "omega": float(np.max(np.abs(conn.omega - om))),
        "R": float(np.max(np.abs(curv.R - R_expected))),
        "metric": float(np.max(np.abs(vb.metric(x) - g_expected))),
        "immersion_map": float(np.max(np.abs(end.q - paper_example_immersion(x)))),
        "transported_frame": float(np.max(np.abs(end.E - E_expected))),
        "exactness": exactness_check(vb, pe, x),
    }
    values = {
        "H_1^{15}": float(conn.W[1, 1, 5]),
        "omega_1^{12}": float(conn.W[1, 1, 2]),
        "omega_2^{12}": float(conn.W[2, 1, 2]),
        "R_{12}^{12}": float(curv.R[1, 2, 1, 2]),
        "g_11": float(vb.metric(x)[1, 1]),
        "q": end.q.tolist(),
    }
    return errors, values


def _point_example(job, tol, x):
    errors, values = _example_tables(x)
    ok = max(errors.values()) < tol["example"]
    return {"errors": errors, "values": values}, ok, errors


_EVALUATORS = {
    "verify": _point_verify,
    "extract": _point_extract,
    "curvature": _point_curvature,
    "gcr": _point_gcr,
    "compose": _point_compose,
    "example": _point_example,
}


def _evaluate(args):
    job, tol, x = args
    rec, ok, metrics = _EVALUATORS[job["command"]](job, tol, x)
    return {"x": list(x), "ok": bool(ok), **rec}, metrics


def _sweep(job, tol, points, threads):
    tasks = [(job, tol, x) for x in points]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    return [_evaluate(t) for t in tasks]


def _run_immerse(job, tol):
    spec = _spec(job["field"])
    im = job["immerse"]
    grid = _grid(im["grid"])
    vb_desc = im.get("vielbein", "identity")
    if vb_desc == "paper_example":
        vb = VielbeinField.paper_example()
    elif vb_desc == "identity":
        vb = VielbeinField.identity()
    else:
        vb = VielbeinField.from_lists(vb_desc)
    steps = im.get("steps_per_unit", 32.0)
    base = grid.point((0, 0, 0))
    init = initial_state(spec, base, im.get("q0"))
    cloud = export_pointcloud(spec, vb, grid, init, steps)
    exact = [exactness_check(vb, spec, p) for p in cloud.points]
    metrics = {"drift": cloud.max_drift, "exactness": max(exact)}
    ok = cloud.max_drift < tol["drift"] and max(exact) < tol["exactness"]
    summary_extra = {"grid_size": grid.size}
    if im.get("check_path_independence", False):
        other = export_pointcloud(spec, vb, grid, init, steps, order=(2, 1, 0))
        pi = float(np.max(np.abs(other.q - cloud.q)))
        metrics["path_independence"] = pi
        ok = ok and pi < tol["path_independence"]
    if "cloud_path" in im:
        if im.get("cloud_format", "csv") == "obj":
            write_obj(cloud, im["cloud_path"], im.get("projection", (1, 2, 3)))
        else:
            write_csv(cloud, im["cloud_path"])
        summary_extra["cloud_path"] = im["cloud_path"]
    records = []
    for n, (x, q) in enumerate(zip(cloud.points, cloud.q)):
        records.append({"x": x.tolist(), "ok": bool(exact[n] < tol["exactness"]), "q": q.tolist(),
                        "exactness_residual": exact[n]})
    return records, [metrics], ok, summary_extra


def run_job(job: dict, threads: int = 1):
    """Evaluate a validated job; returns (report dict, exit code)."""
    tol = _tolerances(job)
    cmd = job["command"]
    extra = {}
    if cmd == "immerse":
        records, metrics, all_ok, extra = _run_immerse(job, tol)
    else:
        points = job_points(job)
        results = _sweep(job, tol, points, threads)
        records = [r for r, _ in results]
        metrics = [m for _, m in results]
        all_ok = all(r["ok"] for r in records)
    max_res = {}
    for m in metrics:
        for k, v in m.items():
            max_res[k] = max(max_res.get(k, 0.0), float(v))
    failed = sum(1 for r in records if not r["ok"])
    report = {
        "header": {"tool": "spinframe", "version": __version__, "command": cmd},
        "points": records,
        "summary": {
            "ok": bool(all_ok),
            "max_residuals": dict(sorted(max_res.items())),
            "counts": {"points": len(records), "passed": len(records) - failed, "failed": failed},
            **extra,
        },
    }
    return report, EXIT_OK if all_ok else EXIT_TOLERANCE


# --- output ----------------------------------------------------------------

def _scalar_columns(rec):
    return sorted(k for k, v in rec.items() if k not in ("x", "ok") and isinstance(v, (int, float, bool)))


def report_to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    recs = report["points"]
    cmd = report["header"]["command"]
    if cmd == "curvature":
        w.writerow(["x0", "x1", "x2", "x3", "block", "alpha", "beta", "mu", "nu", "value"])
        for r in recs:
            for block in ("R", "F"):
                for a, b, m, n, v in r[block]:
                    w.writerow(list(r["x"]) + [block, a, b, m, n, repr(v)])
        return buf.getvalue()
    if cmd == "example":
        keys = sorted(recs[0]["errors"]) if recs else []
        w.writerow(["x0", "x1", "x2", "x3", "ok"] + keys)
        for r in recs:
            w.writerow(list(r["x"]) + [int(r["ok"])] + [repr(r["errors"][k]) for k in keys])
        return buf.getvalue()
    cols = _scalar_columns(recs[0]) if recs else []
    if cmd == "immerse":
        w.writerow(["x0", "x1", "x2", "x3"] + [f"q{k}" for k in range(10)] + ["ok", "exactness_residual"])
        for r in recs:
            w.writerow([repr(v) for v in r["x"] + r["q"]] + [int(r["ok"]), repr(r["exactness_residual"])])
        return buf.getvalue()
    w.writerow(["x0", "x1", "x2", "x3", "ok"] + cols)
    for r in recs:
        w.writerow(list(r["x"]) + [int(r["ok"])] + [repr(r[c]) for c in cols])
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        return report_to_csv(report)
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _threads(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("SPINFRAME_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _error(msg: str) -> None:
    print(f"spinframe: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        with open(args.job, encoding="utf-8") as fh:
            job = json.load(fh)
        validate_job(job)
        for key in ("field",):
            if key in job:
                _spec(job[key])
        if "compose" in job:
            _spec(job["compose"]["psi1"])
            _spec(job["compose"]["psi2"])
    except (OSError, json.JSONDecodeError) as exc:
        _error(f"cannot read job: {exc}")
        return EXIT_SCHEMA
    except jsonschema.ValidationError as exc:
        _error(f"schema error at {'/'.join(map(str, exc.absolute_path)) or '<root>'}: {exc.message}")
        return EXIT_SCHEMA
    except (ExprError, ValueError) as exc:
        _error(f"invalid field: {exc}")
        return EXIT_SCHEMA

    out_spec = job.get("output", {})
    fmt = args.format or out_spec.get("format", "json")
    path = args.out or out_spec.get("path")
    try:
        report, code = run_job(job, _threads(args.threads))
    except JobError as exc:
        _error(str(exc))
        return EXIT_SCHEMA
    except (DomainError, SingularGaugeError, NormalizationError, FrameGradeError, ArithmeticError) as exc:
        _error(f"evaluation error: {exc}")
        return EXIT_EVAL
    text = render(report, fmt)
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def cmd_schema(args) -> int:
    sys.stdout.write(json.dumps(SCHEMA, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinframe", description="Spin-field immersion checks in Cl(1,9).")
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a JSON job file")
    r.add_argument("job")
    r.add_argument("--out", help="report path (default: job output.path or stdout)")
    r.add_argument("--format", choices=("json", "csv"))
    r.add_argument("--threads", type=int, help="worker processes for point sweeps (env SPINFRAME_THREADS)")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("schema", help="print the job JSON schema")
    s.set_defaults(func=cmd_schema)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
