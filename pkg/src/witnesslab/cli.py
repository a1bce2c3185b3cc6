"""Command-line interface: ``witnesslab {test,benchmark,calibrate,interpret}``.

Exit status reports whether the command ran, never the test decision:
0 on completion, 2 for usage errors, 3 for a missing file, 4 for a CSV
parse error, 5 for a dimension mismatch and 1 for any other invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from .baselines import KernelSpec, f_test_outcome, mmd_permutation_test
from .bench import GENERATOR_KINDS, METHODS, GeneratorSpec, MethodConfig, estimate_power, estimate_type1
from .core import CSVParseError, DimensionMismatchError, read_csv
from .inference import OUTCOME_KEYS, PipelineConfig, interpret, run_pipeline, run_test

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_NOT_FOUND = 3
EXIT_PARSE = 4
EXIT_DIMENSION = 5
WORKERS_ENV = "WITNESSLAB_WORKERS"


class UsageError(Exception):
    pass


def _probability(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return value


def _param(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, float(value)
    except ValueError:
        return key, value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=_probability, default=0.05, help="significance level")
    common.add_argument("--permutations", type=_positive_int, default=999, help="permutations B")
    common.add_argument("--method", choices=METHODS, default="auto", help="witness learner or baseline")
    common.add_argument("--pvalue", choices=("permutation", "asymptotic"), default="permutation")
    common.add_argument("--time-limit", type=_positive_float, default=60.0, help="training budget in seconds")
    common.add_argument("--split-ratio", type=_probability, default=0.5, help="training fraction")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", "-o", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=_positive_int, default=1,
                        help=f"worker count; the {WORKERS_ENV} variable takes precedence")

    files = argparse.ArgumentParser(add_help=False)
    files.add_argument("file_p", help="CSV file with the sample from P")
    files.add_argument("file_q", help="CSV file with the sample from Q")
    files.add_argument("--header", action="store_true", help="skip the first line of each file")

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("generator", choices=GENERATOR_KINDS)
    gen.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE",
                     help="generator parameter, repeatable")
    gen.add_argument("--dim", type=int, default=0, help="data dimension (0: generator default)")
    gen.add_argument("--n", type=_positive_int, default=180, help="rows per sample")

    parser = argparse.ArgumentParser(prog="witnesslab", description="Witness two-sample tests.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("test", parents=[common, files], help="test two CSV samples")
    p = sub.add_parser("interpret", parents=[common, files], help="report the most extreme test rows")
    p.add_argument("--top-k", type=int, default=10)
    p = sub.add_parser("benchmark", parents=[common, gen], help="estimate power on a synthetic problem")
    p.add_argument("--trials", type=_positive_int, default=100)
    p = sub.add_parser("calibrate", parents=[common, gen], help="estimate Type-I error on a null problem")
    p.add_argument("--trials", type=_positive_int, default=500)
    return parser


def _workers(args):
    env = os.environ.get(WORKERS_ENV)
    if env is None:
        return args.workers
    try:
        value = int(env)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be a positive integer, got {env!r}") from None
    if value < 1:
        raise UsageError(f"{WORKERS_ENV} must be a positive integer, got {env!r}")
    return value


def _pipeline(args, workers):
    return PipelineConfig(ratio=args.split_ratio, alpha=args.alpha, permutations=args.permutations,
                          pvalue=args.pvalue, method=args.method, time_limit=args.time_limit,
                          seed=args.seed, workers=workers)


def _load(args):
    sp = read_csv(args.file_p, header=args.header)
    sq = read_csv(args.file_q, header=args.header)
    if sp.d != sq.d:
        raise DimensionMismatchError(f"dimension mismatch: {args.file_p} has {sp.d} columns, "
                                     f"{args.file_q} has {sq.d}")
    return sp, sq


def _table(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_test(args, workers):
    sp, sq = _load(args)
    if args.method == "f_test":
        out = f_test_outcome(sp, sq, alpha=args.alpha, seed=args.seed)
    elif args.method == "mmd":
        out = mmd_permutation_test(sp, sq, KernelSpec(), B=args.permutations, seed=args.seed, alpha=args.alpha)
    else:
        out = run_test(sp, sq, _pipeline(args, workers))
    if args.format == "csv":
        record = out.to_dict()
        return _table(OUTCOME_KEYS, [[_cell(record[k]) for k in OUTCOME_KEYS]])
    return out.to_json(indent=2) + "\n"


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def cmd_interpret(args, workers):
    if args.top_k < 1:
        raise UsageError("--top-k must be >= 1")
    if args.method in ("mmd", "f_test"):
        raise UsageError(f"interpret needs a witness method, not {args.method}")
    sp, sq = _load(args)
    result = run_pipeline(sp, sq, _pipeline(args, workers))
    report = interpret(result.witness, result.test_p, result.test_q, k=args.top_k)
    # highest rows get ranks 1..k, lowest rows -1..-k
    ranked = [(i + 1, r) for i, r in enumerate(report.highest)]
    ranked += [(-(i + 1), r) for i, r in enumerate(report.lowest)]
    if args.format == "csv":
        d = sp.d
        header = ["rank", "origin", "witness_value"] + [f"x{j}" for j in range(d)]
        rows = [[rank, r.origin, repr(r.value)] + [repr(x) for x in r.features] for rank, r in ranked]
        return _table(header, rows)
    doc = {
        "k": report.k,
        "clamped": report.clamped,
        "outcome": result.outcome.to_dict(),
        "rows": [{"rank": rank, "index": r.index, "origin": r.origin, "witness_value": r.value,
                  "features": list(r.features)} for rank, r in ranked],
    }
    return json.dumps(doc, indent=2) + "\n"


def _generator(args):
    return GeneratorSpec(args.generator, params=dict(args.param), dim=args.dim)


def _method(args):
    return MethodConfig(method=args.method, alpha=args.alpha, permutations=args.permutations,
                        pvalue=args.pvalue, time_limit=args.time_limit, ratio=args.split_ratio)


def _power_output(report, fmt):
    if fmt == "csv":
        return report.to_csv()
    return report.to_json(indent=2) + "\n"


def cmd_benchmark(args, workers):
    report = estimate_power(_generator(args), _method(args), args.n, args.trials, seed=args.seed,
                            workers=workers)
    return _power_output(report, args.format)


def cmd_calibrate(args, workers):
    report = estimate_type1(_generator(args), _method(args), args.n, args.trials, seed=args.seed,
                            workers=workers)
    return _power_output(report, args.format)


COMMANDS = {"test": cmd_test, "interpret": cmd_interpret, "benchmark": cmd_benchmark,
            "calibrate": cmd_calibrate}


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    def fail(code, message):
        print(f"witnesslab: error: {message}", file=sys.stderr)
        return code

    try:
        text = COMMANDS[args.subcommand](args, _workers(args))
    except UsageError as exc:
        return fail(EXIT_USAGE, exc)
    except FileNotFoundError as exc:
        return fail(EXIT_NOT_FOUND, exc)
    except CSVParseError as exc:
        return fail(EXIT_PARSE, exc)
    except DimensionMismatchError as exc:
        return fail(EXIT_DIMENSION, exc)
    except ValueError as exc:
        return fail(EXIT_INVALID, exc)
    if args.output is None:
        sys.stdout.write(text)
    else:
        try:
            write_atomic(args.output, text)
        except OSError as exc:
            return fail(EXIT_INVALID, f"cannot write {args.output}: {exc}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
