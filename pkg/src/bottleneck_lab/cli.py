"""Command-line front end: ingest distributions, run sweeps, closed forms,
and verification suites, and emit CSV curves with reproducible manifests."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .acceptance import SUITES
from .closed_forms import CLOSED_FORM_CSV_HEADER, BscInstance, closed_form_table
from .core import bsc_joint, decompose_joint, load_joint
from .sweep import CURVE_CSV_HEADER, curve_csv_rows, problem_curve

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_INFEASIBLE = 3


class ConfigError(Exception):
    """Flag combination that cannot be run (exit code 3)."""


def _threads_from_env() -> int | None:
    raw = os.environ.get("BOTTLENECK_LAB_THREADS")
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"BOTTLENECK_LAB_THREADS must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"BOTTLENECK_LAB_THREADS must be a positive integer, got {raw!r}")
    return value


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write_outputs(
    output: str,
    header: list[str],
    rows: list[list[str]],
    command: str,
    input_digest: str,
    parameters: dict,
    seed: int,
) -> None:
    out = Path(output)
    _atomic_write(out, _csv_text(header, rows))
    manifest = {
        "command": command,
        "input_digest": input_digest,
        "parameters": parameters,
        "tool_version": __version__,
        "seed": seed,
    }
    _atomic_write(
        out.with_suffix(out.suffix + ".manifest.json"),
        json.dumps(manifest, sort_keys=True, indent=2) + "\n",
    )


def _parse_bsc(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"--bsc expects 'q,delta', got {text!r}")
    return float(parts[0]), float(parts[1])


def _resolve_source(args) -> tuple:
    """Returns (q, T, digest) from --input or --bsc."""
    if (args.input is None) == (args.bsc is None):
        raise ValueError("exactly one of --input or --bsc is required")
    if args.input is not None:
        data = Path(args.input).read_bytes()
        joint = load_joint(args.input)
        digest = hashlib.sha256(data).hexdigest()
    else:
        q, delta = _parse_bsc(args.bsc)
        joint = bsc_joint(q, delta)
        digest = hashlib.sha256(f"bsc:{args.bsc}".encode()).hexdigest()
    marginal, channel = decompose_joint(joint)
    return marginal, channel, digest


def cmd_curve(args) -> int:
    marginal, channel, digest = _resolve_source(args)
    if args.problem == "arimoto" and marginal.m > 2:
        raise ConfigError("the arimoto problem is only available for binary sources")
    if args.beta is not None and args.problem != "arimoto":
        raise ConfigError(f"--beta does not apply to problem {args.problem!r}")
    if args.beta is not None and args.beta < 2.0:
        raise ValueError("--beta must be >= 2")
    directions = ["lower", "upper"] if args.direction == "both" else [args.direction]
    workers = _threads_from_env()
    rows: list[list[str]] = []
    for direction in directions:
        try:
            curve = problem_curve(
                marginal,
                channel,
                args.problem,
                direction,
                beta=args.beta,
                frame=args.frame,
                lambda_steps=args.lambda_steps,
                resolution=args.resolution,
                workers=workers,
            )
        except ValueError as exc:
            # Frame/problem mismatches are configuration, not data, problems.
            raise ConfigError(str(exc)) from exc
        rows.extend(curve_csv_rows(curve))
    params = {
        "problem": args.problem,
        "direction": args.direction,
        "frame": args.frame,
        "beta": args.beta,
        "lambda_steps": args.lambda_steps,
        "resolution": args.resolution,
        "input": args.input,
        "bsc": args.bsc,
    }
    _write_outputs(args.output, CURVE_CSV_HEADER, rows, "curve", digest, params, seed=0)
    return EXIT_OK


def cmd_closed_form(args) -> int:
    q, delta = _parse_bsc(args.bsc)
    inst = BscInstance(q=q, delta=delta)
    if args.law.startswith("arimoto"):
        if args.beta is None or args.beta < 2.0:
            raise ValueError("arimoto laws need --beta >= 2")
    rows = closed_form_table(inst, args.law, beta=args.beta, points=args.points)
    digest = hashlib.sha256(f"bsc:{args.bsc}".encode()).hexdigest()
    params = {"law": args.law, "beta": args.beta, "points": args.points, "bsc": args.bsc}
    _write_outputs(
        args.output, CLOSED_FORM_CSV_HEADER, rows, "closed-form", digest, params, seed=0
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    check = SUITES[args.suite]
    if args.suite == "oracle-cross":
        result = check(seed=args.seed)
    else:
        result = check()
    print(result.line())
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bottleneck-lab",
        description=(
            "Boundaries of the achievable f-information region for a Markov "
            "chain W -> X -> Y over a fixed joint source"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    curve = sub.add_parser("curve", help="sweep a boundary curve and export CSV")
    curve.add_argument("--input", help="joint distribution JSON file")
    curve.add_argument("--bsc", help="binary symmetric shorthand: q,delta")
    curve.add_argument(
        "--problem",
        choices=["ib", "pf", "eb", "epf", "arimoto"],
        required=True,
    )
    curve.add_argument("--beta", type=float, default=None)
    curve.add_argument("--direction", choices=["lower", "upper", "both"], default="both")
    curve.add_argument("--lambda-steps", type=int, default=256)
    curve.add_argument("--resolution", type=int, default=None)
    curve.add_argument("--frame", choices=["finfo", "entropy", "K"], default=None)
    curve.add_argument("--output", required=True)
    curve.set_defaults(func=cmd_curve)

    closed = sub.add_parser("closed-form", help="exact binary-symmetric tables")
    closed.add_argument("--bsc", required=True)
    closed.add_argument(
        "--law", choices=["mgl", "mrgl", "arimoto-mgl", "arimoto-mrgl"], required=True
    )
    closed.add_argument("--beta", type=float, default=None)
    closed.add_argument("--points", type=int, default=101)
    closed.add_argument("--output", required=True)
    closed.set_defaults(func=cmd_closed_form)

    verify = sub.add_parser("verify", help="run one acceptance suite")
    verify.add_argument("--suite", choices=sorted(SUITES), required=True)
    verify.add_argument("--seed", type=int, default=7)
    verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
