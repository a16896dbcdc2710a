"""Command-line entry point (``csbp``)."""

from __future__ import annotations

import argparse
import json
import os
import sys

from csbp.errors import BlowUpDomainError, CSBPError
from csbp.riccati import blow_up_time, classify, evaluate
from csbp.sbp import (
    build_operator,
    build_reference_element,
    reference_to_dict,
    sbp_residual,
    skew_residual,
)
from csbp.studies import StudyConfig, _jsonable, run_study, write_csv, write_json

SBP_TOL = 1.0e-13


def _print_json(data) -> None:
    json.dump(_jsonable(data), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers: {text!r}")


# {{{ operators


def cmd_operators(args) -> int:
    if args.action == "dump":
        _print_json(reference_to_dict(build_reference_element(args.p)))
        return 0

    rows = []
    for p in args.degrees:
        ref = build_reference_element(p)
        rows.append({"p": p, "n_e": "", "check": "sbp", "residual": sbp_residual(ref)})
        for n_e in args.n_e:
            rows.append({"p": p, "n_e": n_e, "check": "skew",
                         "residual": skew_residual(build_operator(p, n_e))})
    for r in rows:
        r["passed"] = r["residual"] <= SBP_TOL

    passed = all(r["passed"] for r in rows)
    summary = {
        "kind": "operators",
        "tolerance": SBP_TOL,
        "worst_residual": max(r["residual"] for r in rows),
        "checks": {f"{r['check']}_p{r['p']}" + (f"_ne{r['n_e']}" if r["n_e"] else ""): r["passed"]
                   for r in rows},
        "passed": passed,
    }
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        write_csv(os.path.join(args.output_dir, "report.csv"),
                  ("p", "n_e", "check", "residual", "passed"), rows)
        write_json(os.path.join(args.output_dir, "summary.json"), summary)
    _print_json({k: summary[k] for k in ("kind", "tolerance", "worst_residual", "passed")})
    return 0 if passed else 1


# }}}


# {{{ studies

_STUDY_FLAGS = (
    ("problem", str), ("p", int), ("n_e", _int_list), ("sigma", float),
    ("t_fraction", float), ("dt", float), ("cfl", float),
    ("n_time_samples", int), ("n_bound_samples", int), ("energy_tol", float),
    ("output_dir", str), ("wavenumber", int),
)


def _add_study_flags(parser) -> None:
    parser.add_argument("--config", help="JSON file with study configuration")
    for name, typ in _STUDY_FLAGS:
        parser.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)


def config_from_args(args, kind: str) -> StudyConfig:
    data = {}
    if args.config:
        with open(args.config) as fd:
            data = json.load(fd)
    for name, _ in _STUDY_FLAGS:
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    data["kind"] = kind
    return StudyConfig.from_dict(data)


def cmd_study(args) -> int:
    config = config_from_args(args, args.command)
    report = run_study(config, write=True)
    summary = report.summary()
    _print_json({"kind": summary["kind"], "checks": summary["checks"],
                 "passed": summary["passed"], "output_dir": config.output_dir})
    return 0 if report.passed else 1


# }}}


# {{{ riccati


def cmd_riccati(args) -> int:
    case = classify(args.a, args.b, args.c).case.value
    if args.action == "blowup":
        t_star = blow_up_time(args.a, args.b, args.c)
        _print_json({"case": case, "t_star": float(t_star), "finite": t_star.finite})
        return 0

    try:
        y = evaluate(args.a, args.b, args.c, args.t)
    except BlowUpDomainError as exc:
        _print_json({"case": case, "error": str(exc), "t_star": exc.t_star})
        return 1
    _print_json({"case": case, "y": y})
    return 0


# }}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csbp",
        description="Split-form C-SBP discretizations and Riccati error-envelope studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ops = sub.add_parser("operators", help="check SBP identities or dump a reference operator")
    ops.add_argument("action", choices=("check", "dump"))
    ops.add_argument("--p", type=int, default=2, help="degree for dump")
    ops.add_argument("--degrees", type=_int_list, default=[1, 2, 3, 4])
    ops.add_argument("--n-e", dest="n_e", type=_int_list,
                     default=[2, 4, 8, 16, 32, 64, 128])
    ops.add_argument("--output-dir", default=None)
    ops.set_defaults(func=cmd_operators)

    for kind, help_text in (
        ("simulate", "integrate and report final error and energy drift"),
        ("converge", "convergence study with Riccati envelope checks"),
        ("scaling", "mesh scaling of bound constants and Riccati coefficients"),
    ):
        p = sub.add_parser(kind, help=help_text)
        _add_study_flags(p)
        p.set_defaults(func=cmd_study)

    ric = sub.add_parser("riccati", help="closed-form Riccati solution and blow-up time")
    ric.add_argument("action", choices=("solve", "blowup"))
    ric.add_argument("--a", type=float, required=True)
    ric.add_argument("--b", type=float, required=True)
    ric.add_argument("--c", type=float, required=True)
    ric.add_argument("--t", type=float, default=None)
    ric.set_defaults(func=cmd_riccati)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "riccati" and args.action == "solve" and args.t is None:
        parser.error("riccati solve requires --t")
    try:
        return args.func(args)
    except CSBPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
