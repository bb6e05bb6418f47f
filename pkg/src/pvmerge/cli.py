"""Command-line front end: merge, ucp, certify, worst-case, validate.

Every command is deterministic given its flags and seed, and rerunning
produces byte-identical primary output.  Reports carry a schema_version
field and echo the numeric tolerances they relied on.  Exit codes: 0
success, 2 input error, 3 resource budget exceeded, 4 certification
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional

from .certificates import (
    FEASIBILITY_TOL,
    WEAK_DUALITY_TOL,
    DualCertificate,
    build_ruschendorf_certificate,
    certificate_value,
    check_feasibility,
    clamp_nonnegative,
    monotone_envelope,
    symmetrize_certificate,
    weak_duality_check,
)
from .extremal import (
    GridCopulaSampler,
    IndependenceSampler,
    build_extremal_copula,
    sample_extremal,
    three_sigma_band,
    type1_error_mc,
)
from .grid import (
    BOUND_ORDER_TOL,
    MARGINAL_TOL,
    CellEvaluation,
    GridCopula,
    SizeBudgetError,
    ucp_bounds,
    ucp_primal_lp,
)
from .merging import (
    Bonferroni,
    Hommel,
    MergingRule,
    Ruger,
    ScaledAverage,
    apply_rule,
)
from .sets import Box, RugerSet, SumThreshold, spec_to_json

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_CERTIFICATION = 4

SUPPORT_TOL = 1e-12


class InputError(Exception):
    pass


def _parse_rule(text: str, order: Optional[int]) -> MergingRule:
    name = text.strip().lower()
    if name == "bonferroni":
        return Bonferroni()
    if name == "hommel":
        return Hommel()
    if name == "avg2":
        return ScaledAverage()
    if name == "ruger":
        if order is None:
            raise InputError("rule 'ruger' needs --k (merge) or --order (validate)")
        return Ruger(order)
    if name.startswith("scaled:"):
        try:
            alpha = float(name.split(":", 1)[1])
        except ValueError as e:
            raise InputError(f"bad scaled rule {text!r}: {e}") from None
        if alpha <= 0:
            raise InputError(f"scaled rule needs alpha > 0, got {alpha}")
        return ScaledAverage(alpha)
    raise InputError(
        f"unknown rule {text!r}; choose bonferroni, ruger, hommel, avg2, or scaled:ALPHA"
    )


def _rule_json(rule: MergingRule) -> dict:
    if isinstance(rule, Bonferroni):
        return {"name": "bonferroni"}
    if isinstance(rule, Ruger):
        return {"name": "ruger", "order": rule.k}
    if isinstance(rule, Hommel):
        return {"name": "hommel"}
    if isinstance(rule, ScaledAverage):
        if rule.alpha is None:
            return {"name": "avg2"}
        return {"name": "scaled", "alpha": rule.alpha}
    raise TypeError(type(rule).__name__)


def _emit(report: dict, fmt: str, csv_fields: list[str]) -> None:
    if fmt == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    elif fmt == "csv":
        print(",".join(csv_fields))
        print(",".join(_csv_cell(report[f]) for f in csv_fields))
    else:
        for key in csv_fields:
            print(f"{key}: {_human_cell(report[key])}")


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return str(v).lower()
    return str(v)


def _human_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _parse_pvalues(args) -> list[float]:
    if args.input:
        try:
            with open(args.input, encoding="utf-8") as fh:
                tokens = fh.read().split()
        except OSError as e:
            raise InputError(f"cannot read --input {args.input}: {e}") from None
    else:
        tokens = list(args.pvalues)
    if len(tokens) < 2:
        raise InputError(f"need at least 2 p-values, got {len(tokens)}")
    values = []
    for i, tok in enumerate(tokens, 1):
        try:
            v = float(tok)
        except ValueError:
            raise InputError(f"p-value #{i} = {tok!r} is not a number") from None
        if not 0.0 <= v <= 1.0:
            raise InputError(f"p-value #{i} = {tok!r} outside [0, 1]")
        values.append(v)
    return values


def _spec_from_flags(args):
    chosen = [
        flag
        for flag, val in (
            ("--sum-threshold", args.sum_threshold),
            ("--box", args.box),
            ("--ruger-set", args.ruger_set),
        )
        if val is not None
    ]
    if len(chosen) != 1:
        raise InputError(
            "give exactly one of --sum-threshold, --box, --ruger-set"
            + (f" (got {', '.join(chosen)})" if chosen else "")
        )
    try:
        if args.sum_threshold is not None:
            return SumThreshold(Fraction(args.sum_threshold))
        if args.box is not None:
            parts = args.box.split(",")
            return Box(tuple(Fraction(p) for p in parts))
        alpha, count = args.ruger_set.split(",")
        return RugerSet(Fraction(alpha), int(count))
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"bad set specification: {e}") from None


def cmd_merge(args) -> int:
    rule = _parse_rule(args.rule, args.k)
    values = _parse_pvalues(args)
    merged = apply_rule(rule, values)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "merge",
        "rule": _rule_json(rule),
        "k": len(values),
        "pvalues": values,
        "raw": merged.raw,
        "clipped": merged.clipped,
    }
    _emit(report, args.format, ["raw", "clipped"])
    return EXIT_OK


def cmd_ucp(args) -> int:
    spec = _spec_from_flags(args)
    k = args.k if args.k is not None else (len(spec.u) if isinstance(spec, Box) else 2)
    if isinstance(spec, Box) and k != len(spec.u):
        raise InputError(f"--box has {len(spec.u)} coordinates but --k is {k}")
    bounds = ucp_bounds(spec, k, args.n, method=args.method)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "ucp",
        "spec": spec_to_json(spec),
        "k": k,
        "n": args.n,
        "method": args.method,
        "lower": bounds.lower,
        "upper": bounds.upper,
        "gap": bounds.gap,
        "reference": spec.closed_form_ucp(k),
        "tolerances": {
            "bound_order": BOUND_ORDER_TOL,
            "marginal": MARGINAL_TOL,
        },
    }
    if args.emit_witness:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "lower_witness": bounds.lower_witness.to_json(),
            "upper_witness": bounds.upper_witness.to_json(),
        }
        with open(args.emit_witness, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        report["witness_path"] = args.emit_witness
    _emit(report, args.format, ["lower", "upper", "gap", "reference"])
    return EXIT_OK


def cmd_certify(args) -> int:
    try:
        s = Fraction(args.sum_threshold)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"bad --sum-threshold: {e}") from None
    cert = build_ruschendorf_certificate(s, args.k)
    transforms = []
    if args.scale is not None:
        try:
            factor = Fraction(args.scale)
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"bad --scale: {e}") from None
        cert = DualCertificate(
            tuple(c.scale(factor) for c in cert.components), cert.target
        )
        transforms.append(f"scale:{factor}")
    if args.symmetrize:
        cert = symmetrize_certificate(cert)
        transforms.append("symmetrize")
    if args.clamp:
        cert = clamp_nonnegative(cert)
        transforms.append("clamp")
    if args.monotone:
        cert = monotone_envelope(cert)
        transforms.append("monotone")
    grid_n = args.grid_n if args.grid_n else _default_grid_n(args.k)
    rep = check_feasibility(cert, grid_n)
    value = certificate_value(cert)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "certify",
        "target": spec_to_json(cert.target),
        "k": args.k,
        "grid_n": grid_n,
        "transforms": transforms,
        "value": float(value),
        "value_exact": str(value),
        "feasible": rep.feasible_on_grid,
        "worst_violation": float(rep.worst_violation),
        "worst_violation_exact": str(rep.worst_violation),
        "saturated_regime": bool(s > Fraction(args.k, 2)),
        "tolerances": {
            "feasibility": float(FEASIBILITY_TOL),
            "weak_duality": WEAK_DUALITY_TOL,
        },
    }
    if args.primal_n:
        primal = ucp_primal_lp(
            cert.target, args.k, args.primal_n, CellEvaluation.PESSIMISTIC
        )
        report["primal_lower"] = primal.value
        report["primal_n"] = args.primal_n
        report["weak_duality_ok"] = weak_duality_check(primal.value, cert)
    _emit(report, args.format, ["value", "feasible", "worst_violation", "grid_n"])
    if not rep.feasible_on_grid:
        return EXIT_CERTIFICATION
    return EXIT_OK


def cmd_worst_case(args) -> int:
    copula = build_extremal_copula(args.t)
    pts = sample_extremal(copula, args.seed, args.count)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("u1,u2\n")
        for u1, u2 in pts.tolist():
            fh.write(f"{u1!r},{u2!r}\n")
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "command": "worst-case",
        "t": args.t,
        "seed": args.seed,
        "count": args.count,
        "samples_path": args.out,
        "tolerances": {"support": SUPPORT_TOL},
    }
    sidecar_path = args.out + ".json"
    with open(sidecar_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    report = dict(sidecar)
    report["sidecar_path"] = sidecar_path
    _emit(report, args.format, ["t", "seed", "count", "samples_path"])
    return EXIT_OK


def _load_sampler(args):
    src = args.copula
    if src == "independence":
        return IndependenceSampler(args.k)
    if src.startswith("extremal:"):
        try:
            t = float(src.split(":", 1)[1])
        except ValueError as e:
            raise InputError(f"bad extremal level in {src!r}: {e}") from None
        try:
            return build_extremal_copula(t)
        except ValueError as e:
            raise InputError(str(e)) from None
    if src.startswith("grid:"):
        path = src.split(":", 1)[1]
        try:
            with open(path, encoding="utf-8") as fh:
                copula = GridCopula.from_json(json.load(fh))
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as e:
            raise InputError(f"cannot load grid copula from {path}: {e}") from None
        check = copula.validate_marginals()
        if not check.ok:
            raise InputError(
                f"grid copula in {path} has non-uniform marginals "
                f"(max deviation {check.max_deviation:.3g})"
            )
        return GridCopulaSampler(copula)
    raise InputError(
        f"unknown copula source {src!r}; use independence, extremal:T, or grid:PATH"
    )


def cmd_validate(args) -> int:
    rule = _parse_rule(args.rule, args.order)
    sampler = _load_sampler(args)
    if not 0.0 <= args.epsilon <= 1.0:
        raise InputError(f"--epsilon must lie in [0, 1], got {args.epsilon}")
    rate = type1_error_mc(
        rule, sampler, args.epsilon, args.seed, args.count, args.partitions
    )
    band = three_sigma_band(args.epsilon, args.count)
    verdict = "PASS" if rate <= args.epsilon + band else "FAIL"
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "validate",
        "rule": _rule_json(rule),
        "copula": args.copula,
        "epsilon": args.epsilon,
        "count": args.count,
        "seed": args.seed,
        "partitions": args.partitions,
        "rate": rate,
        "band": band,
        "verdict": verdict,
    }
    _emit(report, args.format, ["rate", "band", "verdict"])
    return EXIT_OK


def _default_grid_n(k: int) -> int:
    n = 101
    while n > 2 and n**k > 200_000:
        n -= 1
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvmerge",
        description="Merge p-values under arbitrary dependence and verify "
        "worst-case guarantees numerically.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_format(p):
        p.add_argument(
            "--format",
            choices=["json", "csv", "human"],
            default="human",
            help="report format (default: human)",
        )

    p = sub.add_parser("merge", help="combine p-values with one rule")
    p.add_argument("--rule", required=True, help="bonferroni|ruger|hommel|avg2|scaled:ALPHA")
    p.add_argument("--k", type=int, default=None, help="order index for --rule ruger")
    p.add_argument("--input", default=None, help="file of whitespace-separated p-values")
    p.add_argument("pvalues", nargs="*", help="p-values as arguments")
    add_format(p)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("ucp", help="grid LP bounds on worst-case set probability")
    p.add_argument("--sum-threshold", default=None, metavar="S")
    p.add_argument("--box", default=None, metavar="U1,U2,...")
    p.add_argument("--ruger-set", default=None, metavar="ALPHA,K")
    p.add_argument("--k", type=int, default=None, help="dimension (default 2 or box length)")
    p.add_argument("--n", type=int, required=True, help="grid resolution")
    p.add_argument(
        "--method",
        choices=["auto", "transport", "simplex", "exact"],
        default="auto",
    )
    p.add_argument("--emit-witness", default=None, metavar="PATH")
    add_format(p)
    p.set_defaults(func=cmd_ucp)

    p = sub.add_parser("certify", help="build and check a dual certificate")
    p.add_argument("--sum-threshold", required=True, metavar="S")
    p.add_argument("--k", type=int, required=True, help="dimension")
    p.add_argument("--grid-n", type=int, default=None, help="feasibility scan resolution")
    p.add_argument("--scale", default=None, metavar="F", help="multiply components by F")
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--monotone", action="store_true")
    p.add_argument(
        "--primal-n",
        type=int,
        default=None,
        help="also run the pessimistic grid LP at this resolution and compare",
    )
    add_format(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("worst-case", help="sample the K=2 extremal copula to CSV")
    p.add_argument("--t", type=float, required=True, help="level in [0,1]")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    add_format(p)
    p.set_defaults(func=cmd_worst_case)

    p = sub.add_parser("validate", help="Monte Carlo type-I-error check of a rule")
    p.add_argument("--rule", required=True)
    p.add_argument("--order", type=int, default=None, help="order index for --rule ruger")
    p.add_argument(
        "--copula",
        required=True,
        help="independence | extremal:T | grid:PATH",
    )
    p.add_argument("--k", type=int, default=2, help="dimension for independence sampling")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--partitions", type=int, default=1)
    add_format(p)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SizeBudgetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
