"""Command-line front end: diagnose, transform, benchmark and report.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 transform domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

from . import core, diagnostics, evaluation
from .errors import ConfigError, DataError, TransformDomainError

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DOMAIN = 4


def _load_roles(spec):
    if spec is None:
        raise ConfigError("--roles is required")
    text = spec
    if not spec.lstrip().startswith("{"):
        try:
            with open(spec) as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError(f"cannot read roles file {spec}: {exc}") from exc
    return core.ColumnRoles.from_json(text)


def _thresholds(pairs):
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--threshold expects KEY=VALUE, got {pair!r}")
        key, _, value = pair.partition("=")
        try:
            overrides[key.strip()] = float(value)
        except ValueError as exc:
            raise ConfigError(f"threshold {key!r}: {value!r} is not a number"
                              ) from exc
    try:
        return diagnostics.Thresholds().replace(**overrides)
    except (DataError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _validate_transforms(kinds):
    for kind in kinds:
        if kind != "auto" and kind not in core.KNOWN_KINDS:
            raise ConfigError(f"unknown transform kind {kind!r}")


def _write(path, text):
    with open(path, "w") as handle:
        handle.write(text)


def cmd_diagnose(args):
    thresholds = _thresholds(args.threshold)
    _validate_transforms(args.transform or ())
    roles = _load_roles(args.roles)
    dataset = core.load_csv(args.input, roles)
    report = diagnostics.diagnose(dataset, thresholds)
    doc = json.dumps(report.to_dict(), sort_keys=True, indent=2)
    if args.out_json:
        _write(args.out_json, doc + "\n")
    print(f"{args.input}: n={dataset.n} d={dataset.d} "
          f"dropped={dataset.n_dropped}")
    for name in ("subjective", "frame", "trend", "context", "distribution"):
        verdict = getattr(report, name)
        if verdict is None:
            continue
        state = "FLAGGED" if verdict.flagged else "ok"
        print(f"  {name:<13} {state:<8} statistic={verdict.statistic:.4g}")
    if report.recommendations:
        print("  recommended transforms:")
        for kind, reason in report.recommendations:
            print(f"    {kind} ({reason})")
    else:
        print("  no transforms recommended")
    return 0


def cmd_transform(args):
    kinds = args.transform or []
    if len(kinds) != 1:
        raise ConfigError("transform requires exactly one --transform")
    _validate_transforms(kinds)
    kind = kinds[0]
    if kind == "auto":
        raise ConfigError("transform does not support 'auto'; name a kind")
    roles = _load_roles(args.roles)
    dataset = core.load_csv(args.input, roles)
    fitted = evaluation.fit_transform_kind(
        kind, dataset.target, dataset, tuple(range(dataset.n)))
    aux = evaluation._aux_slice(kind, dataset, tuple(range(dataset.n)))
    transformed = core.forward(fitted, dataset.target, aux)

    with open(args.input, newline="") as handle:
        rows = list(csv.reader(handle))
    header, data_rows = rows[0], rows[1:]
    target_col = header.index(roles.target)
    out_rows = [header]
    for out_i, raw_i in enumerate(dataset.kept_rows):
        row = list(data_rows[raw_i])
        row[target_col] = repr(float(transformed[out_i]))
        out_rows.append(row)
    out_csv = args.out_csv or (args.input + ".transformed.csv")
    with open(out_csv, "w", newline="") as handle:
        csv.writer(handle).writerows(out_rows)
    if args.out_json:
        _write(args.out_json, fitted.to_json() + "\n")
    print(f"wrote {out_csv} ({dataset.n} rows, kind={kind})")
    return 0


def _threads_from_env():
    value = os.environ.get("YTX_THREADS")
    if not value:
        return None
    try:
        return max(1, int(value))
    except ValueError as exc:
        raise ConfigError(f"YTX_THREADS={value!r} is not an integer") from exc


def cmd_benchmark(args):
    thresholds = _thresholds(args.threshold)
    kinds = list(args.transform or [])
    _validate_transforms(kinds)
    models = list(args.model or ["ridge", "lasso"])
    roles = _load_roles(args.roles)
    dataset = core.load_csv(args.input, roles)
    if "auto" in kinds:
        report = diagnostics.diagnose(dataset, thresholds)
        kinds = [k for k in kinds if k != "auto"]
        kinds.extend(k for k, _ in report.recommendations
                     if k not in kinds)
    name = os.path.splitext(os.path.basename(args.input))[0]
    report = evaluation.run_benchmark(
        dataset, models=tuple(models), transforms=tuple(kinds),
        seed=args.seed, alpha=args.alpha, threads=_threads_from_env(),
        dataset_name=name)
    markdown = (report.to_markdown("rse") + "\n"
                + report.to_markdown("smape"))
    if args.out_json:
        _write(args.out_json, report.to_json() + "\n")
    if args.out_md:
        _write(args.out_md, markdown + "\n")
    print(markdown)
    return 0


def cmd_report(args):
    try:
        with open(args.in_json) as handle:
            obj = json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read {args.in_json}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.in_json}: invalid JSON: {exc}") from exc
    report = evaluation.BenchmarkReport.from_dict(obj)
    markdown = (report.to_markdown("rse") + "\n"
                + report.to_markdown("smape"))
    if args.out_md:
        _write(args.out_md, markdown + "\n")
    print(markdown)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ytx",
        description="Target-variable transformations: diagnose, transform, "
                    "benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True,
                           help="input CSV with a header row")
            p.add_argument("--roles", required=True,
                           help="roles JSON (inline or a file path)")
        p.add_argument("--transform", action="append",
                       help="transform kind (repeatable); 'auto' derives "
                            "kinds from the diagnostics")
        p.add_argument("--model", action="append",
                       choices=["ridge", "lasso"])
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out-json")
        p.add_argument("--out-md")
        p.add_argument("--threshold", action="append", metavar="KEY=VALUE")

    p = sub.add_parser("diagnose", help="run the heuristics and recommend "
                                        "transforms")
    common(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("transform", help="apply one fitted transform to the "
                                         "target column")
    common(p)
    p.add_argument("--out-csv", help="path for the transformed CSV")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("benchmark", help="5x2cv comparison of baseline vs. "
                                         "transformed targets")
    common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("report", help="render a benchmark JSON as markdown")
    common(p, needs_input=False)
    p.add_argument("--in-json", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TransformDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
