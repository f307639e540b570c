"""Command line: ``plaplab run <config.json>`` and ``plaplab sweep ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigParse
from .lab import EXIT_ERROR, run_file, sweep


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plaplab", description="graph p-Laplacian blow-up lab")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="experiment config (JSON)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="override the config seed")

    sub.add_parser("run", parents=[common], help="run one experiment")
    sw = sub.add_parser("sweep", parents=[common], help="run one experiment per parameter value")
    sw.add_argument("--param", required=True, help="dotted config key, e.g. eps or integrator.horizon")
    sw.add_argument("--values", required=True, help="comma separated values (may be empty)")
    sw.add_argument("--workers", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        outcome = run_file(args.config, args.out, args.seed)
        if outcome.config_hash is None:
            print(f"config error: {outcome.result['error']['message']}", file=sys.stderr)
        else:
            print(f"{outcome.config_hash} {outcome.verdict} exit={outcome.exit_code}")
        return outcome.exit_code

    path = Path(args.config)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"config error: {ConfigParse('<file>', str(e))}", file=sys.stderr)
        return EXIT_ERROR
    if args.seed is not None:
        data["seed"] = args.seed
    values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
    out = args.out or data.get("output", "out")
    rows = sweep(data, args.param, values, out, workers=max(1, args.workers), base_dir=path.parent)
    print(f"{len(rows)} runs -> {Path(out) / 'summary.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
