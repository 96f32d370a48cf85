"""Command line entry point: run, suite, fit, export-plots.

Exit codes: 0 pass, 1 fail, 2 config or usage error.
"""

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _root(args):
    return args.out or os.environ.get("FLUSHLAB_OUT") or "flushlab-out"


def cmd_run(args):
    from .scenarios import ConfigError, load_config, run_scenario

    try:
        sc = load_config(args.config)
    except ConfigError as exc:
        print(f"config error in {args.config}:", file=sys.stderr)
        for p in exc.problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_CONFIG
    ok, rec = run_scenario(sc, args.out, plots=not args.no_plots)
    print(json.dumps(rec["summary"], indent=2, sort_keys=True))
    print(f"{'PASS' if ok else 'FAIL'} {sc.name} ({rec['runtime_seconds']:.1f}s) -> {sc.out_dir(args.out)}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_suite(args):
    from . import criteria

    chosen = criteria.ALL
    if args.only:
        want = {int(v) for v in args.only.split(",")}
        chosen = [c for i, c in enumerate(criteria.ALL, 1) if i in want]
    results = []
    for fn in chosen:
        res = fn()
        print(res.line(), flush=True)
        results.append(res)
    out = Path(_root(args))
    out.mkdir(parents=True, exist_ok=True)
    report = {"passed": sum(r.passed for r in results), "total": len(results),
              "criteria": [r.record() for r in results]}
    path = out / "acceptance_report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=str))
    print(f"{report['passed']}/{report['total']} criteria passed; report at {path}")
    return EXIT_PASS if report["passed"] == report["total"] else EXIT_FAIL


def cmd_fit(args):
    from .fitting import FitError, fit_power_law
    from .scenarios import read_csv

    try:
        header, data = read_csv(args.csv)
        x = data[:, header.index(args.x)]
        y = data[:, header.index(args.y)]
        fit = fit_power_law(x, y, args.model, min_points=args.min_points)
    except (ValueError, FitError, OSError) as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"exponent {fit.exponent:.6g} +- {fit.width:.3g} (model {fit.model}, {fit.n_used} points, "
          f"{fit.n_dropped} dropped)")
    return EXIT_PASS


def cmd_export_plots(args):
    from .plotting import guess_spec, render_csv

    root = Path(args.directory)
    if not root.is_dir():
        print(f"{root} is not a directory", file=sys.stderr)
        return EXIT_CONFIG
    n = 0
    for path in sorted(root.rglob("*.csv")):
        render_csv(path, guess_spec(path))
        n += 1
    print(f"rendered {n} plots under {root}")
    return EXIT_PASS


def build_parser():
    ap = argparse.ArgumentParser(prog="flushlab", description="Flushing-control experiments on the periodised band")
    ap.add_argument("--out", help="output root (default $FLUSHLAB_OUT or ./flushlab-out)")
    sub = ap.add_subparsers(dest="verb")
    r = sub.add_parser("run", help="run one scenario config")
    r.add_argument("config")
    r.add_argument("--no-plots", action="store_true")
    s = sub.add_parser("suite", help="run the acceptance criteria and write a JSON report")
    s.add_argument("--only", help="comma-separated criterion numbers")
    f = sub.add_parser("fit", help="power-law fit of two CSV columns")
    f.add_argument("csv")
    f.add_argument("x")
    f.add_argument("y")
    f.add_argument("--model", default="pure-power", choices=("pure-power", "log-corrected"))
    f.add_argument("--min-points", type=int, default=6)
    e = sub.add_parser("export-plots", help="render every CSV under a directory to PNG")
    e.add_argument("directory")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    if args.verb is None:
        ap.print_usage(sys.stderr)
        return EXIT_CONFIG
    handler = {"run": cmd_run, "suite": cmd_suite, "fit": cmd_fit, "export-plots": cmd_export_plots}[args.verb]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
