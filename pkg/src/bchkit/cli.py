"""Command-line front end.

Exit codes are a contract scripts rely on:

  0  success
  1  malformed input (bad JSON, missing file, schema errors)
  2  antisymmetry or Jacobi violation in the algebra definition
  3  no closed-form condition applies to the pair
  4  verification or fuzz failure

Machine output is printed to stdout (JSON, except the TSV series table of
``f --series``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from fractions import Fraction

import numpy as np

from . import closed_form, detect, families, oracle
from .algebra import (
    AntisymmetryViolation,
    IndexOutOfRange,
    JacobiViolation,
    LieElement,
    StructureConstants,
)
from .closed_form import (
    BchResult,
    NoClosedFormAvailable,
    bch_closed_form,
    f_rational,
    f_scalar,
    f_series,
)
from .detect import CaseTag, classify_pair

EXIT_OK = 0
EXIT_MALFORMED = 1
EXIT_INVALID_ALGEBRA = 2
EXIT_NO_CLOSED_FORM = 3
EXIT_VERIFY_FAILED = 4

SLOPE_EPS_POWERS = range(3, 8)  # scales 2^-3 .. 2^-7 for order measurements


class InputError(Exception):
    """Anything wrong with user-supplied files or values (exit code 1)."""


# ---------------------------------------------------------------------------
# input loading
# ---------------------------------------------------------------------------

def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}")


def load_algebra(spec: str) -> StructureConstants:
    """Resolve an algebra argument: a JSON file path, or a catalog name.

    Names are looked up first in $BCHKIT_CATALOG_DIR (as NAME.json files),
    then in the builtin catalog.
    """
    if os.path.exists(spec):
        data = _read_json(spec)
        return _algebra_from_data(data, spec)
    override = os.environ.get("BCHKIT_CATALOG_DIR")
    if override:
        candidate = os.path.join(override, spec + ".json")
        if os.path.exists(candidate):
            return _algebra_from_data(_read_json(candidate), candidate)
    try:
        return oracle.catalog_entry(spec).algebra
    except KeyError:
        raise InputError(f"{spec!r} is neither a file nor a catalog name")


def _algebra_from_data(data, source: str) -> StructureConstants:
    if not isinstance(data, dict) or "dim" not in data:
        raise InputError(f"{source}: expected an object with a 'dim' field")
    try:
        return StructureConstants.from_json_dict(data)
    except (AntisymmetryViolation, JacobiViolation, IndexOutOfRange):
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{source}: {exc}")


def load_element(path: str, alg: StructureConstants) -> LieElement:
    data = _read_json(path)
    if not isinstance(data, dict) or "coords" not in data:
        raise InputError(f"{path}: expected an object with a 'coords' field")
    try:
        return alg.element(data["coords"])
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}")


def load_rep(path: str) -> oracle.MatrixRep:
    data = _read_json(path)
    try:
        return oracle.MatrixRep.from_json_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def scalar_json(value):
    if value is None:
        return None
    if isinstance(value, Fraction):
        return str(value)
    return float(value)


def coords_json(elem: LieElement):
    return [scalar_json(c) for c in elem.coords]


def classification_json(cls: detect.CaseClassification) -> dict:
    facts = cls.facts
    rank_one = None
    if facts.rank_one is not None:
        rank_one = {
            "omega": [[str(w) for w in row] for row in facts.rank_one.omega],
            "n": [str(c) for c in facts.rank_one.n.coords],
        }
    nilp = facts.nilpotency
    return {
        "tag": cls.tag.value,
        "u": scalar_json(cls.u),
        "v": scalar_json(cls.v),
        "derived_dim": facts.derived_dim,
        "derived_abelian": facts.derived_abelian,
        "nilpotent": {"class": nilp.nil_class} if nilp.nilpotent else None,
        "rank_one": rank_one,
        "S_dim": cls.s_closure.dim if cls.s_closure is not None else None,
    }


def result_json(res: BchResult) -> dict:
    return {
        "z": coords_json(res.z),
        "method": res.method,
        "exact": res.exact,
        "residual_bound": res.residual_bound,
        "u": scalar_json(res.u),
        "v": scalar_json(res.v),
        "degree": res.degree,
    }


def _emit(data, output: str):
    if output == "human":
        for key, value in data.items():
            print(f"{key}: {value}")
    else:
        print(json.dumps(data, sort_keys=True))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    alg = load_algebra(args.algebra)
    x = load_element(args.x, alg)
    y = load_element(args.y, alg)
    cls = classify_pair(alg, x, y)
    _emit(classification_json(cls), args.output)
    return EXIT_OK if cls.tag != CaseTag.NO_CLOSED_FORM else EXIT_NO_CLOSED_FORM


def cmd_bch(args) -> int:
    alg = load_algebra(args.algebra)
    x = load_element(args.x, alg)
    y = load_element(args.y, alg)
    cls = classify_pair(alg, x, y)
    if cls.tag == CaseTag.NO_CLOSED_FORM:
        print(json.dumps({"error": "NoClosedForm",
                          "hint": "use the 'oracle' command for a truncated series"}))
        return EXIT_NO_CLOSED_FORM
    res = bch_closed_form(alg, x, y, target_tolerance=args.tolerance,
                          classification=cls)
    payload = result_json(res)
    if args.verify:
        reference = oracle.bch_integral_series(alg, x, y, args.degree)
        diff = max(abs(float(a) - float(b))
                   for a, b in zip(res.z.coords, reference.coords))
        payload["verify"] = {"degree": args.degree, "difference_sup_norm": diff,
                             "tolerance": args.tolerance}
        _emit(payload, args.output)
        if diff > args.tolerance:
            print(f"verification failed: |closed - oracle| = {diff:.3e} "
                  f"> {args.tolerance:.1e}", file=sys.stderr)
            return EXIT_VERIFY_FAILED
        return EXIT_OK
    _emit(payload, args.output)
    return EXIT_OK


def cmd_oracle(args) -> int:
    alg = load_algebra(args.algebra)
    x = load_element(args.x, alg)
    y = load_element(args.y, alg)
    series = oracle.bch_integral_series(alg, x, y, args.degree)
    payload = {
        "degree": args.degree,
        "integral_series": coords_json(series),
        "matrix": None,
        "difference_sup_norm": None,
    }
    if args.rep:
        rep = load_rep(args.rep)
        rep.validate_against(alg)
        z_mat = oracle.matrix_bch(rep, x, y)
        payload["matrix"] = coords_json(z_mat)
        payload["difference_sup_norm"] = max(
            abs(float(a) - float(b))
            for a, b in zip(series.coords, z_mat.coords)
        )
    _emit(payload, args.output)
    return EXIT_OK


def cmd_f(args) -> int:
    if args.series is not None:
        table = f_series(args.series)
        for (i, j), c in sorted(table.coefficients.items()):
            print(f"{i}\t{j}\t{c}")
        return EXIT_OK
    if args.u is None or args.v is None:
        raise InputError("f requires --u and --v (or --series DEGREE)")
    value = f_scalar(args.u, args.v)
    _emit({"u": args.u, "v": args.v, "f": value}, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fuzzing
# ---------------------------------------------------------------------------

_CLOSED_FORM_CATALOG = ("abelian3", "heisenberg", "affine", "uvc", "two_scale")
_BUG_DELTA = Fraction(1, 11) - Fraction(1, 12)


def _sup_diff(a: LieElement, b: LieElement) -> float:
    return max(abs(float(p) - float(q)) for p, q in zip(a.coords, b.coords))


def _sup_diff_exact(a: LieElement, b: LieElement) -> float:
    # subtract before converting: order-law gaps sit far below float(p)'s ulp
    return max(abs(float(p - q)) for p, q in zip(a.coords, b.coords))


def _exact_scalar_reference(alg, x, y, u, v, f_degree=40) -> LieElement | None:
    """x + y + f(u, v) [x, y] with rational series f; small-argument regime only."""
    if abs(float(u)) > 1.0 or abs(float(v)) > 1.0:
        return None
    return x + y + alg.bracket(x, y).scale(f_rational(u, v, f_degree))


def _instance_slope(alg, x, y, degree) -> float | None:
    """Order of the truncated oracle against an exact closed-form reference.

    Scales the pair by 2^-3 .. 2^-7; the sup-norm gap must shrink like
    eps^(degree+1).  Returns None when the gap is exactly zero (terminating
    instances) or the pair has no exact scalar reference.
    """
    points = []
    for p in SLOPE_EPS_POWERS:
        eps = Fraction(1, 2**p)
        xs, ys = x.scale(eps), y.scale(eps)
        cls = classify_pair(alg, xs, ys)
        if cls.tag in (CaseTag.COMMUTING, CaseTag.CENTRAL_BRACKET):
            return None
        if cls.tag == CaseTag.SIMULTANEOUS_EIGENVECTOR:
            ref = _exact_scalar_reference(alg, xs, ys, cls.u, cls.v)
        else:
            res = closed_form.bch_operator(alg, xs, ys, cls.s_closure, 1e-16)
            ref = res.z if res.exact else None
        if ref is None:
            return None
        gap = _sup_diff_exact(ref, oracle.bch_integral_series(alg, xs, ys, degree))
        if gap == 0.0:
            return None
        points.append((-float(p), math.log2(gap)))
    if len(points) < 2:
        return None
    xs_, ys_ = zip(*points)
    slope, _ = np.polyfit(xs_, ys_, 1)
    return float(slope)


def _fuzz_instance(rng: random.Random, family: str):
    sup = Fraction(1, 2)
    if family == "rank_one":
        dim = rng.randint(3, 6)
        alg = families.random_rank_one(rng, dim)
    elif family == "case1":
        dim = rng.randint(2, 6)
        alg, _, _ = families.random_case1(rng, dim)
    elif family == "catalog":
        # catalog tensors are fixed, so keep the coordinates smaller to stay
        # inside the degree-8 truncation window of the series oracle
        name = rng.choice(_CLOSED_FORM_CATALOG)
        alg = oracle.catalog_entry(name).algebra
        sup = Fraction(1, 4)
    else:
        raise InputError(f"unknown fuzz family {family!r}")
    x = families.random_element(rng, alg.dim, sup)
    y = families.random_element(rng, alg.dim, sup)
    return alg, x, y


def run_fuzz(seed: int, n: int, family_names, degree: int, tolerance: float,
             slope_every: int, inject_bug: bool = False) -> dict:
    """Randomized closed-form-vs-oracle conformance; deterministic per seed."""
    rng = random.Random(seed)
    slope_threshold = degree + 0.5
    report = {
        "seed": seed, "n": n, "degree": degree, "tolerance": tolerance,
        "slope_threshold": slope_threshold, "families": {}, "violations": [],
        "pass": True,
    }
    if n == 0:
        report["warning"] = "n = 0: vacuous run"
        return report
    for family in family_names:
        max_error = 0.0
        slopes = []
        for idx in range(n):
            alg, x, y = _fuzz_instance(rng, family)
            cls = classify_pair(alg, x, y)
            if cls.tag == CaseTag.NO_CLOSED_FORM:
                continue  # generators only emit closed-form families
            res = bch_closed_form(alg, x, y, target_tolerance=tolerance / 10,
                                  classification=cls)
            z = res.z
            if inject_bug and res.u is not None and res.v is not None:
                drift = res.u + res.v
                if drift != 0:
                    z = z + alg.bracket(x, y).scale(float(_BUG_DELTA * drift))
            reference = oracle.bch_integral_series(alg, x, y, degree)
            err = _sup_diff(z, reference)
            max_error = max(max_error, err)
            if err > tolerance:
                report["pass"] = False
                report["violations"].append({
                    "family": family,
                    "algebra": alg.to_json_dict(),
                    "x": coords_json(x),
                    "y": coords_json(y),
                    "error": err,
                })
            if idx % slope_every == 0 and not inject_bug:
                slope = _instance_slope(alg, x, y, degree)
                if slope is not None:
                    slopes.append(slope)
                    if slope < slope_threshold:
                        report["pass"] = False
                        report["violations"].append({
                            "family": family,
                            "algebra": alg.to_json_dict(),
                            "x": coords_json(x),
                            "y": coords_json(y),
                            "slope": slope,
                        })
        report["families"][family] = {
            "count": n,
            "max_error": max_error,
            "slopes_measured": len(slopes),
            "min_slope": min(slopes) if slopes else None,
        }
    return report


def cmd_fuzz(args) -> int:
    family_names = [f.strip() for f in args.families.split(",") if f.strip()]
    report = run_fuzz(args.seed, args.n, family_names, args.degree,
                      args.tolerance, args.slope_every, args.inject_bug)
    print(json.dumps(report, sort_keys=True))
    if "warning" in report:
        print(report["warning"], file=sys.stderr)
    return EXIT_OK if report["pass"] else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bchkit",
        description="closed-form ln(exp(X) exp(Y)) on structure-constant Lie algebras",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, elements=True):
        p.add_argument("--algebra", required=True,
                       help="algebra JSON file or builtin catalog name")
        if elements:
            p.add_argument("--x", required=True, help="element JSON file")
            p.add_argument("--y", required=True, help="element JSON file")
        p.add_argument("--output", choices=["json", "human"], default="json")

    p_check = sub.add_parser("check", help="classify the pair against the case hierarchy")
    common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_bch = sub.add_parser("bch", help="compute the composition by the best closed form")
    common(p_bch)
    p_bch.add_argument("--verify", action="store_true",
                       help="also compare against the truncated series oracle")
    p_bch.add_argument("--degree", type=int, default=8)
    p_bch.add_argument("--tolerance", type=float, default=1e-8)
    p_bch.set_defaults(func=cmd_bch)

    p_oracle = sub.add_parser("oracle", help="evaluate the ground-truth engines")
    common(p_oracle)
    p_oracle.add_argument("--degree", type=int, default=8)
    p_oracle.add_argument("--rep", help="matrix representation JSON file")
    p_oracle.set_defaults(func=cmd_oracle)

    p_f = sub.add_parser("f", help="evaluate f(u, v) or print its rational series")
    p_f.add_argument("--u", type=float)
    p_f.add_argument("--v", type=float)
    p_f.add_argument("--series", type=int, metavar="DEGREE",
                     help="print the exact coefficient table as TSV instead")
    p_f.add_argument("--output", choices=["json", "human"], default="json")
    p_f.set_defaults(func=cmd_f)

    p_fuzz = sub.add_parser("fuzz", help="randomized conformance against the oracle")
    p_fuzz.add_argument("--seed", type=int, required=True)
    p_fuzz.add_argument("--n", type=int, required=True)
    p_fuzz.add_argument("--families", default="rank_one,case1,catalog")
    p_fuzz.add_argument("--degree", type=int, default=8)
    p_fuzz.add_argument("--tolerance", type=float, default=1e-8)
    p_fuzz.add_argument("--slope-every", type=int, default=25)
    p_fuzz.add_argument("--inject-bug", action="store_true",
                        help=argparse.SUPPRESS)  # CI mutation check
    p_fuzz.set_defaults(func=cmd_fuzz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (AntisymmetryViolation, JacobiViolation, IndexOutOfRange) as exc:
        detail = {"error": type(exc).__name__, "message": str(exc)}
        if hasattr(exc, "indices"):
            detail["indices"] = list(exc.indices)
        if hasattr(exc, "residual"):
            detail["residual"] = str(exc.residual)
        print(json.dumps(detail, sort_keys=True), file=sys.stderr)
        return EXIT_INVALID_ALGEBRA
    except NoClosedFormAvailable:
        return EXIT_NO_CLOSED_FORM
    except (closed_form.NonConvergence, oracle.ExpansionResidualTooLarge,
            oracle.LogDomainError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    except (TypeError, ValueError, OverflowError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


def entry():  # console-script wrapper
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
