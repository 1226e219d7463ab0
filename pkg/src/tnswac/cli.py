"""Command line entry point: ``tnswac {analyze,confset,simulate,scatter}``.

Exit status: 0 success, 2 bad arguments, 3 input schema error, 4 lattice
over budget.
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

from .confidence import DEFAULT_BUDGET, RULES, BudgetError, confidence_set
from .procedures import decide
from .simulation import SCENARIOS, SimulationConfig, pvalue_scatter, run_study, scenario
from .study_model import SchemaError, comparison_tables, compute_pvalues, load_counts

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_SCHEMA = 3
EXIT_BUDGET = 4

FORMATS = {
    "analyze": ("json", "tsv"),
    "confset": ("json",),
    "simulate": ("json", "tsv"),
    "scatter": ("csv",),
}


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(f"{self.prog}: {message}")


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--alpha must be a number, got {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"--alpha must lie in (0, 1), got {text}")
    return value


def _int_at_least(flag: str, low: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} must be an integer, got {text!r}") from None
        if value < low:
            raise argparse.ArgumentTypeError(f"{flag} must be >= {low}, got {value}")
        return value

    return parse


def _seed(text: str) -> int:
    value = _int_at_least("--seed", 0)(text)
    if value >= 2**64:
        raise argparse.ArgumentTypeError(f"--seed must be < 2**64, got {value}")
    return value


def _variant(text: str) -> str:
    return text.replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tnswac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, formats):
        p.add_argument("--output", help="write here (atomically) instead of stdout")
        p.add_argument("--format", choices=formats, default=formats[0])

    def variant(p):
        p.add_argument(
            "--variant",
            choices=("strict-lambda", "example-consistent"),
            default="example-consistent",
            help="level of method 2's individual tests of (i) and (iii)",
        )

    p = sub.add_parser("analyze", help="p-values and decisions for a set of counts")
    p.add_argument("--input", required=True, help="counts JSON/CSV file or inline JSON")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--procedure", choices=("standard", "method1", "method2", "all"), default="all")
    variant(p)
    common(p, FORMATS["analyze"])

    p = sub.add_parser("confset", help="confidence set for the attributable effects")
    p.add_argument("--input", required=True, help="counts JSON/CSV file or inline JSON")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--procedure", choices=("standard", "method1", "method2"), default="method2")
    variant(p)
    p.add_argument("--stride", type=_int_at_least("--stride", 1), default=1)
    p.add_argument("--budget", type=_int_at_least("--budget", 1), default=DEFAULT_BUDGET)
    p.add_argument("--rule", choices=RULES, default="product",
                   help="'any' excludes a point when any comparison rejects (extension)")
    p.add_argument("--members", help="also write the member lattice points to this CSV")
    common(p, FORMATS["confset"])

    for name, help_text in (
        ("simulate", "FWER, power and dependence summary by Monte Carlo"),
        ("scatter", "p-value triples per replicate, for plotting"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", choices=sorted(SCENARIOS), default="fig1-null")
        p.add_argument("--input", help="simulation config JSON (file or inline) replacing the scenario")
        p.add_argument("--replicates", type=_int_at_least("--replicates", 1 if name == "simulate" else 0))
        p.add_argument("--seed", type=_seed, required=True)
        p.add_argument("--alpha", type=_alpha)
        if name == "simulate":
            p.add_argument("--workers", type=_int_at_least("--workers", 1), default=1)
        common(p, FORMATS[name])
    return parser


def _write(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _analyze(args) -> str:
    counts = load_counts(args.input)
    pvalues = compute_pvalues(comparison_tables(counts))
    names = ("standard", "method1", "method2") if args.procedure == "all" else (args.procedure,)
    decisions = [decide(pvalues, args.alpha, name, _variant(args.variant)) for name in names]
    if args.format == "json":
        return _dumps([d.to_dict() for d in decisions])
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerow(["procedure", "variant", "alpha", "lambda", "hypothesis", "p", "reject"])
    for d in decisions:
        row = d.to_dict()
        for hyp, key in (("i", "i"), ("ii", "ii"), ("iii", "iii"), ("union_i_iii", "i_and_iii")):
            reject = row["reject"][hyp]
            writer.writerow([
                d.procedure, d.variant or "", d.alpha, "" if d.lambda_ is None else d.lambda_,
                hyp, repr(row["p"][key]), "" if reject is None else str(reject).lower(),
            ])
    return buf.getvalue()


def _confset(args) -> str:
    counts = load_counts(args.input)
    cs = confidence_set(
        counts,
        args.alpha,
        args.procedure,
        _variant(args.variant),
        args.stride,
        emit_members=args.members is not None,
        rule=args.rule,
        budget=args.budget,
        max_members=sys.maxsize,
    )
    if args.members is not None:
        buf = io.StringIO()
        cs.write_members_csv(buf)
        _write(buf.getvalue(), args.members)
    return _dumps(cs.to_dict(members_file=args.members))


def _sim_config(args) -> SimulationConfig:
    overrides = {"seed": args.seed}
    if args.replicates is not None:
        overrides["replicates"] = max(1, args.replicates)
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.input is None:
        return scenario(args.scenario, **overrides)
    text = args.input
    if not text.lstrip().startswith("{"):
        try:
            text = Path(text).read_text()
        except OSError as exc:
            raise SchemaError(f"cannot read config file {args.input}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"simulation config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("simulation config must be a JSON object")
    data.update(overrides)
    try:
        return SimulationConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from None


def _simulate(args) -> str:
    summary = run_study(_sim_config(args), workers=args.workers)
    if args.format == "tsv":
        return summary.to_tsv()
    return _dumps(summary.to_dict())


def _scatter(args) -> str:
    config = _sim_config(args)
    n = config.replicates if args.replicates is None else args.replicates
    buf = io.StringIO()
    buf.write("replicate,p_i,p_ii,p_iii\n")
    for r, p_i, p_ii, p_iii in pvalue_scatter(config, n):
        buf.write(f"{r},{p_i!r},{p_ii!r},{p_iii!r}\n")
    return buf.getvalue()


COMMANDS = {"analyze": _analyze, "confset": _confset, "simulate": _simulate, "scatter": _scatter}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        text = COMMANDS[args.command](args)
        _write(text, args.output)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
