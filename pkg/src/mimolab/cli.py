"""Command-line front end: run registered experiments and write CSV.

Errors are reported as one JSON object on stderr with a nonzero exit code
(2 for bad input, 1 for everything else).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, MimoLabError
from .experiments import COMMANDS, REGISTRY, run_experiment

log = logging.getLogger("mimolab")


def format_value(v) -> str:
    """Round-trip text for a CSV cell (``repr`` for floats)."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(rows: list[dict]) -> str:
    header: list[str] = []
    for row in rows:
        header += [k for k in row if k not in header]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(row[k]) if k in row else "" for k in header])
    return buf.getvalue()


def parse_pairs(items, source: str) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"expected key=value in {source}, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; blank lines and ``#`` comments ignored."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    return parse_pairs([ln for ln in lines if ln], path)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials (experiment default if omitted)")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--config", default=None, help="flat key=value file; --set wins")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimolab", description="Massive MU-MIMO uplink experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a registered experiment")
    p.add_argument("experiment", help=", ".join(REGISTRY))
    _common(p)

    p = sub.add_parser("bounds", help="per-user closed-form bounds at one operating point")
    p.add_argument("detector", choices=["mrc", "zf", "mmse"])
    p.add_argument("csi", choices=["perfect", "imperfect"])
    _common(p)

    for name, text in (("required-power", "pu needed for a per-user rate target"),
                       ("tradeoff", "EE-optimal (pu, K, tau) for an SE target"),
                       ("beta-intercell", "estimate the intercell interference factor"),
                       ("reference-mode", "single-antenna reference link")):
        _common(sub.add_parser(name, help=text))

    p = sub.add_parser("list", help="list experiments and their parameters")
    return parser


def _overrides(args) -> dict:
    merged = read_config(args.config) if args.config else {}
    merged.update(parse_pairs(args.overrides, "--set"))
    return merged


def _execute(args) -> list[dict]:
    overrides = _overrides(args)
    if args.command == "run":
        return run_experiment(args.experiment, overrides, args.seed, args.trials, args.workers)
    if args.command == "bounds":
        overrides.update(detector=args.detector, csi=args.csi)
    return run_experiment(args.command, overrides, args.seed, args.trials, args.workers, COMMANDS)


def _write(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, exp in REGISTRY.items():
            print(f"{name}: {exp.doc}")
            for key, value in exp.defaults.items():
                print(f"    {key} = {value}")
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        rows = _execute(args)
        _write(to_csv(rows), args.out)
    except (MimoLabError, OSError, ValueError) as exc:
        kind = getattr(exc, "kind", "io" if isinstance(exc, OSError) else "invalid")
        print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2 if isinstance(exc, (ConfigError, ValueError)) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
