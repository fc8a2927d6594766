"""Command-line entry point: ``roughheat {sample-sheet,run-scheme,convergence,selftest}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (or a
failed self-test).
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings

from . import experiments
from .errors import ConfigError, NumericalError, RoughHeatError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


class _Parser(argparse.ArgumentParser):
    # bad flags are configuration errors, not argparse's default status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--seed", type=_u64, metavar="U64", help="base seed for derived replicas")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=int, metavar="K", help="worker threads")
    common.add_argument("--emit-plots", action="store_true", default=None, help="write SVG figures")
    common.add_argument("--levels", metavar="N[,N...]", help="levels n to run")
    common.add_argument("--seeds", metavar="COUNT|S,S,...", help="replica count or explicit seeds")
    common.add_argument("--alpha", type=float, help="Sobolev order of the error norm")
    common.add_argument("--kappa", type=float, help="cutoff exponent")
    common.add_argument("--variant", choices=experiments.VARIANTS)
    common.add_argument("--stride", type=int, help="saved-row stride (0 = automatic)")
    common.add_argument("--zero-noise", action="store_true", default=None, help=argparse.SUPPRESS)
    common.add_argument("--synthetic", action="store_true", default=None, help=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="roughheat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sample-sheet", parents=[common], help="sample the truncated fractional sheet")
    sub.add_parser("run-scheme", parents=[common], help="run the fine Galerkin scheme")
    sub.add_parser("convergence", parents=[common], help="error study against the mild solution")
    st = sub.add_parser("selftest", help="run the invariant suite")
    st.add_argument("--inject-fault", action="append", default=[], help=argparse.SUPPRESS)
    return p


def _config(args):
    keys = ("seed", "out", "threads", "emit_plots", "levels", "seeds", "variant", "alpha",
            "kappa", "stride", "zero_noise", "synthetic")
    overrides = {k: getattr(args, k) for k in keys}
    return experiments.load_config(args.config, overrides=overrides)


def _print_selftest(checks, out):
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}", file=out)
    passed = sum(c.passed for c in checks)
    print(f"{passed}/{len(checks)} checks passed", file=out)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:        # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "selftest":
        checks = experiments.selftest(args.inject_fault)
        _print_selftest(checks, sys.stdout)
        return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = _config(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if args.command == "sample-sheet":
            paths = experiments.cmd_sample_sheet(cfg)
        elif args.command == "run-scheme":
            paths = experiments.cmd_run_scheme(cfg)
        else:
            report, results, paths = experiments.cmd_convergence(cfg)
            for r in results:
                print(f"n={r.level}  median error {r.median:.6g}  ({len(r.seeds)} seeds)")
            if report.fitted_rate is not None:
                print(f"fitted rate {report.fitted_rate:.6g}  (rms residual {report.residual:.3g})")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, RoughHeatError, ArithmeticError, IndexError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
