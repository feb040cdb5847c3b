"""
Command-line front end.

    python3 -m polychar analyze fixture.json
    python3 -m polychar decompose fixture.json --horizon 12
    python3 -m polychar factorize fixture.json --split 3,6 --fock-order 4
    python3 -m polychar verify --suite lemmas --count 100
    python3 -m polychar example --kind nilpotent_poly n=2 m=2 --out f.json

Exit codes: 0 success, 2 parse error, 3 precondition failed (not a row
contraction, not commuting, degree undetermined, ...), 4 verification
failure, 5 fixture generation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import errors
from .charfn import degree, taylor
from .decomp import canonical, da_shift_unitary, phi
from .examples import FixtureSpec, generate
from .factor import BlockSplit, factorize2, factorize3, g_form
from .opcore import DEFAULT_TOL
from .tuples import OperatorTuple, classify
from .verify import run_on_tuple, run_suite

FIXTURE_FORMAT = "polychar-fixture/1"
REPORT_FORMAT = "polychar-report/1"

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_VERIFY, EXIT_GENERATION = 0, 2, 3, 4, 5

PRECONDITION_ERRORS = (
    errors.NotRowContraction,
    errors.NotCommuting,
    errors.DegreeUndetermined,
    errors.NotUpperTriangular,
    errors.AmbientMismatch,
    errors.HypothesisUnmet,
)

# residual tolerances used by the analysis commands
TOL_DECOMP = 1e-10
TOL_FACTOR = 1e-8
TOL_CONNECTOR = 1e-10


# ---------------------------------------------------------------- fixture files

def _entry(z) -> dict:
    # json writes floats with repr, the shortest string that round-trips exactly
    return {"re": float(z.real), "im": float(z.imag)}


def tuple_to_dict(t: OperatorTuple, expected=None, provenance=None) -> dict:
    out = {
        "format": FIXTURE_FORMAT,
        "n": t.n,
        "dim": t.dim,
        "matrices": [[[_entry(z) for z in row] for row in m] for m in t.mats],
    }
    if expected:
        out["expected"] = expected
    if provenance:
        out["provenance"] = provenance
    return out


def tuple_from_dict(doc: dict, tol: float = DEFAULT_TOL) -> OperatorTuple:
    try:
        n, dim, mats = int(doc["n"]), int(doc["dim"]), doc["matrices"]
    except (KeyError, TypeError, ValueError) as e:
        raise errors.ParseError(f"fixture is missing n, dim or matrices ({e})") from None
    if len(mats) != n:
        raise errors.ParseError(f"expected {n} matrices, found {len(mats)}")
    arrs = []
    for k, m in enumerate(mats):
        if len(m) != dim or any(len(row) != dim for row in m):
            raise errors.ParseError(f"matrix {k} is not {dim}x{dim}")
        try:
            a = np.array([[complex(float(e["re"]), float(e["im"])) for e in row] for row in m],
                         dtype=complex).reshape(dim, dim)
        except (KeyError, TypeError, ValueError) as e:
            raise errors.ParseError(f"matrix {k}: bad entry ({e})") from None
        if not np.all(np.isfinite(a)):
            raise errors.ParseError(f"matrix {k} has non-finite entries")
        arrs.append(a)
    if n == 0:
        raise errors.ParseError("fixture has no matrices")
    return OperatorTuple(tuple(arrs), tol)


def load_fixture(path, tol: float = DEFAULT_TOL):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise errors.ParseError(f"cannot read {path}: {e}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise errors.ParseError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(doc, dict):
        raise errors.ParseError(f"{path}: top level must be an object")
    return tuple_from_dict(doc, tol), doc, hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------- analysis pieces

def analysis(t: OperatorTuple, horizon=None) -> dict:
    """The facts reported by ``analyze`` and embedded as fixture annotations."""
    diag = t.diagnostics
    out = {
        "n": t.n,
        "dim": t.dim,
        "diagnostics": {
            "commutation_residual": diag.commutation_residual,
            "row_contraction_residual": diag.row_contraction_residual,
            "commuting": diag.commuting,
            "row_contraction": diag.row_contraction,
        },
    }
    t.require_row_contraction()
    t.require_commuting()
    c = classify(t)
    h = 2 * t.n * t.dim if horizon is None else horizon
    table = taylor(t, h)
    dr = degree(t, h, table=table)
    ph = phi(t, strict=False, report=dr)
    out["flags"] = c.flags()
    out["classify_residuals"] = {
        "spectral_radius": c.spectral_radius,
        "coisometry_residual": c.coisometry_residual,
        "partial_isometry_residual": c.partial_isometry_residual,
    }
    out["degree"] = {
        "value": dr.describe(),
        "horizon": dr.horizon,
        "witness": list(dr.witness) if dr.witness is not None else None,
        "threshold": dr.threshold,
        "max_tail_norm": dr.max_tail_norm,
    }
    out["phi"] = list(ph.as_tuple())
    out["H_c_dim"] = ph.q
    out["band_norms"] = [table.band_norm(k) for k in range(h + 1)]
    return out


def annotations(a: dict) -> dict:
    return {"degree": a["degree"]["value"], "horizon": a["degree"]["horizon"],
            "phi": a["phi"], "flags": a["flags"]}


def compare_annotations(expected: dict, got: dict) -> dict:
    """Per-key match of embedded annotations against a fresh analysis."""
    out = {}
    for k, v in expected.items():
        if k == "horizon":
            continue
        if k == "degree" and expected.get("horizon") not in (None, got.get("horizon")):
            out[k] = "skipped (different horizon)"
            continue
        out[k] = "match" if got.get(k) == v else f"mismatch: expected {v}, got {got.get(k)}"
    return out


def parse_split(text: str) -> BlockSplit:
    try:
        bounds = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise errors.ParseError(f"split must be comma-separated integers, got {text!r}") from None
    if len(bounds) not in (1, 2) or list(bounds) != sorted(bounds):
        raise errors.ParseError("split needs one or two nondecreasing boundaries")
    return BlockSplit(bounds)


def parse_params(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise errors.ParseError(f"parameter must look like key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


# ---------------------------------------------------------------- commands

def cmd_analyze(args) -> tuple[dict, int]:
    t, doc, digest = load_fixture(args.file, args.tol)
    a = analysis(t, args.horizon)
    res = {"analysis": a}
    code = EXIT_OK
    if doc.get("expected"):
        cmp = compare_annotations(doc["expected"], annotations(a))
        res["annotations"] = cmp
        if any(v.startswith("mismatch") for v in cmp.values()):
            code = EXIT_VERIFY
    return _report("analyze", digest, res, {"tol": args.tol}), code


def cmd_decompose(args) -> tuple[dict, int]:
    t, _, digest = load_fixture(args.file, args.tol)
    t.require_row_contraction()
    dec = canonical(t, args.horizon)
    res = {
        "degree_used": dec.degree_used,
        "dims": dec.dims(),
        "residuals": dict(dec.residuals),
    }
    try:
        sm = da_shift_unitary(dec)
        res["shift_model"] = {
            "trunc_degree": sm.trunc_degree,
            "isometry_residual": sm.isometry_residual,
            "coisometry_residual": sm.coisometry_residual,
            "intertwining_residual": sm.intertwining_residual,
        }
    except errors.NotRegular as e:
        res["shift_model"] = {"refused": "NotRegular", "reason": str(e)}
    checks = {k: v <= TOL_DECOMP for k, v in dec.residuals.items() if k != "nil_order"}
    checks["nil_order"] = dec.residuals["nil_order"] <= 1e-9
    res["checks"] = checks
    code = EXIT_OK if all(checks.values()) else EXIT_VERIFY
    return _report("decompose", digest, res, {"tol": args.tol, "residual_tol": TOL_DECOMP}), code


def cmd_factorize(args) -> tuple[dict, int]:
    t, _, digest = load_fixture(args.file, args.tol)
    split = parse_split(args.split)
    if len(split.bounds) == 1:
        cert = factorize2(t, split, args.fock_order)
    else:
        cert = factorize3(t, split, args.fock_order)
    res = {"certificate": cert.summary()}
    if len(split.bounds) == 2:
        try:
            g = g_form(t, split, args.fock_order)
            res["g_form"] = {
                "path": g.path,
                "residual": g.residual,
                "g1_coisometry_residual": g.g1_coisometry_residual,
                "g2_isometry_residual": g.g2_isometry_residual,
                "g2_partial_isometry_residual": g.g2_partial_isometry_residual,
                "g2_initial_space_dim": g.g2_initial_space_dim,
            }
        except errors.HypothesisUnmet as e:
            res["g_form"] = {"refused": e.failed, "reason": str(e)}
    ok = cert.residual <= TOL_FACTOR and cert.max_connector_residual() <= TOL_CONNECTOR
    if "symmetric_residual" in cert.extra:
        ok = ok and cert.extra["symmetric_residual"] <= TOL_FACTOR
    res["passed"] = ok
    tols = {"tol": args.tol, "coincidence_tol": TOL_FACTOR, "connector_tol": TOL_CONNECTOR}
    return _report("factorize", digest, res, tols), EXIT_OK if ok else EXIT_VERIFY


def cmd_verify(args) -> tuple[dict, int]:
    if args.fixture:
        t, _, digest = load_fixture(args.fixture, args.tol)
        reports = run_on_tuple(t, Path(args.fixture).stem)
    else:
        digest = hashlib.sha256(f"{args.suite}:{args.seed}:{args.count}".encode()).hexdigest()
        reports = run_suite(args.suite, args.seed, args.count)
    res = {"suites": []}
    for r in reports:
        res["suites"].append({
            "suite": r.suite,
            "passed": r.passed,
            "worst": r.worst(),
            "failures": [c.line() for c in r.checks if not c.passed],
            "checks": len(r.checks),
        })
    ok = all(r.passed for r in reports)
    res["passed"] = ok
    return _report("verify", digest, res, {"tol": args.tol}), EXIT_OK if ok else EXIT_VERIFY


def cmd_example(args) -> tuple[dict, int]:
    params = parse_params(args.params)
    try:
        spec = FixtureSpec(args.kind, params)
        t = generate(spec)
    except (KeyError, TypeError, ValueError) as e:
        raise errors.GenerationFailed(f"cannot build {args.kind} from {params}: {e}") from None
    t = OperatorTuple(t.mats, args.tol)
    expected = None
    if t.diagnostics.commuting and t.diagnostics.row_contraction:
        expected = annotations(analysis(t, args.horizon))
    doc = tuple_to_dict(t, expected, {"kind": args.kind, "params": params})
    text = json.dumps(doc, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    digest = hashlib.sha256(text.encode()).hexdigest()
    res = {"kind": args.kind, "params": params, "n": t.n, "dim": t.dim,
           "out": args.out, "expected": expected}
    if not args.out:
        res["fixture"] = doc
    return _report("example", digest, res, {"tol": args.tol}), EXIT_OK


def _report(command, digest, results, tolerances) -> dict:
    return {"format": REPORT_FORMAT, "command": command, "inputs_digest": digest,
            "results": results, "tolerances": tolerances}


# ---------------------------------------------------------------- text output

def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}" if v and (abs(v) < 1e-3 or abs(v) >= 1e4) else f"{v:.6g}"
    return str(v)


def render_text(rep: dict) -> str:
    lines = [f"{rep['command']}  ({rep['format']}, inputs {rep['inputs_digest'][:12]})"]
    res = rep["results"]
    if rep["command"] == "analyze":
        a = res["analysis"]
        lines.append(f"n = {a['n']}, dim = {a['dim']}")
        for k, v in a["diagnostics"].items():
            lines.append(f"  {k}: {_fmt(v)}")
        for k, v in a["flags"].items():
            lines.append(f"  {k}: {v}")
        dv = a["degree"]["value"]
        if not dv.startswith("exceeds"):
            dv += f"  (horizon {a['degree']['horizon']})"
        lines.append(f"degree: {dv}")
        lines.append(f"phi = ({', '.join(str(x) for x in a['phi'])})")
        lines.append(f"H_c dimension: {a['H_c_dim']}")
        lines.append("band  max ||theta_a||")
        for k, v in enumerate(a["band_norms"]):
            lines.append(f"{k:4d}  {v:.3e}")
        for k, v in res.get("annotations", {}).items():
            lines.append(f"annotation {k}: {v}")
    elif rep["command"] == "verify":
        for s in res["suites"]:
            lines.append(f"[{'PASS' if s['passed'] else 'FAIL'}] {s['suite']} ({s['checks']} checks)")
            for name, w in s["worst"].items():
                lines.append(f"    {name:28s} max {w['value']:.3e}  tol {w['tol']:.1e}"
                             f"  failures {w['failures']}")
            for f in s["failures"]:
                lines.append(f"    {f}")
    else:
        lines.extend(_flatten(res))
    if "wall_time" in rep:
        lines.append(f"wall time {rep['wall_time']:.3f} s")
    return "\n".join(lines)


def _flatten(d, prefix=""):
    out = []
    for k, v in d.items():
        if isinstance(v, dict):
            out.append(f"{prefix}{k}:")
            out.extend(_flatten(v, prefix + "  "))
        elif k != "fixture":
            out.append(f"{prefix}{k}: {_fmt(v)}")
    return out


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    raise TypeError(f"not serializable: {type(x)}")


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--horizon", type=int, default=None,
                        help="degree scan horizon (default 2*n*dim)")
    common.add_argument("--output", choices=("json", "text"), default="text")
    common.add_argument("--report", default=None, help="also write the JSON report here")

    p = argparse.ArgumentParser(prog="polychar", description=__doc__.split("\n\n")[0].strip())
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="diagnostics, degree and phi")
    a.add_argument("file")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("decompose", parents=[common], help="canonical decomposition")
    d.add_argument("file")
    d.set_defaults(func=cmd_decompose)

    f = sub.add_parser("factorize", parents=[common], help="coincidence certificate")
    f.add_argument("file")
    f.add_argument("--split", required=True, help="block boundaries, e.g. 3 or 2,5")
    f.add_argument("--fock-order", type=int, default=4, dest="fock_order")
    f.set_defaults(func=cmd_factorize)

    v = sub.add_parser("verify", parents=[common], help="run verification batteries")
    v.add_argument("--suite", choices=("lemmas", "factorizations", "bridge", "all"),
                   default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--count", type=int, default=None)
    v.add_argument("--fixture", default=None, help="run the applicable checks on one file")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("example", parents=[common], help="write a generated fixture")
    e.add_argument("--kind", required=True)
    e.add_argument("params", nargs="*", help="key=value (values parsed as JSON when possible)")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        rep, code = args.func(args)
    except errors.ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except PRECONDITION_ERRORS as e:
        print(f"precondition failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except errors.GenerationFailed as e:
        print(f"generation failed: {e}", file=sys.stderr)
        return EXIT_GENERATION
    except errors.PolycharError as e:
        print(f"verification failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VERIFY
    rep["wall_time"] = time.perf_counter() - t0
    text = json.dumps(rep, indent=1, sort_keys=True, default=_jsonable)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(text if args.output == "json" else render_text(rep))
    return code


if __name__ == "__main__":
    sys.exit(main())
