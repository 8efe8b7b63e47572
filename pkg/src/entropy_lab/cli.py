"""``entropy-lab`` command line.

Exit status: 0 when the verdict holds, 2 when it is violated, 1 on error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from .errors import EntropyLabError
from .experiments import RUNNERS, ExperimentResult, run

log = logging.getLogger("entropy_lab")


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def render_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=result.columns, lineterminator="\n")
    writer.writeheader()
    for row in result.rows:
        writer.writerow({k: _clean(row.get(k, "")) for k in result.columns})
    return buf.getvalue()


def render_json(result: ExperimentResult) -> str:
    return json.dumps(_clean(result.rows), indent=2) + "\n"


def render_summary(result: ExperimentResult, seed) -> str:
    doc = {"name": result.name, "verdict": result.verdict, "seed": seed,
           "summary": result.summary}
    return json.dumps(_clean(doc), indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entropy-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ["run", *RUNNERS]:
        p = sub.add_parser(name, help="experiment named in the config" if name == "run"
                           else f"run a {name} experiment")
        p.add_argument("config", type=Path)
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = json.loads(args.config.read_text())
        if args.seed is not None:
            cfg["seed"] = args.seed
        result = run(cfg, None if args.command == "run" else args.command)
    except (OSError, json.JSONDecodeError, EntropyLabError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    body = render_csv(result) if args.format == "csv" else render_json(result)
    summary = render_summary(result, cfg.get("seed"))
    if args.out is None:
        sys.stdout.write(body)
        sys.stdout.write(summary)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{result.name}.{args.format}").write_text(body)
        (args.out / f"{result.name}.summary.json").write_text(summary)
        log.info("wrote %s", args.out / f"{result.name}.{args.format}")
    print(f"{result.name}: {result.verdict}", file=sys.stderr)
    return 2 if result.verdict == "violated" else 0


if __name__ == "__main__":
    sys.exit(main())
