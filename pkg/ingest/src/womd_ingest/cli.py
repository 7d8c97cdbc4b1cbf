"""Command-line entry points for the record converter.

Exit codes: 0 success, 2 usage error, 1 runtime failure (convert exits 1
only when every input record failed).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .convert import RecordError, convert_records
from .records import make_sample_records
from .validate import validate_output


def cmd_convert(args) -> int:
    try:
        manifest = convert_records(
            args.input, args.output, limit=args.limit, seed=args.seed
        )
    except RecordError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest_path = Path(args.output) / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest.to_doc(), indent=2), encoding="utf-8"
    )
    counts = manifest.counts
    print(
        f"converted {counts['converted']} of {counts['inputs']} records "
        f"({counts['skipped']} skipped); manifest at {manifest_path}"
    )
    if counts["converted"] == 0:
        for entry in manifest.skipped:
            print(f"  {entry['path']}: {entry['reason']}", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    report = validate_output(args.directory)
    print(
        f"valid: {len(report['valid'])}  invalid: {len(report['invalid'])}"
    )
    for entry in report["invalid"]:
        print(f"  {entry['path']}: {entry['error']}", file=sys.stderr)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report, indent=2), encoding="utf-8"
        )
    return 1 if report["invalid"] else 0


def cmd_make_sample(args) -> int:
    paths = make_sample_records(args.output, args.count, seed=args.seed)
    print(f"wrote {len(paths)} sample records to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="womd-ingest",
        description="Convert 10 Hz interactive driving records to scenario JSON",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    convert_p = sub.add_parser("convert", help="convert record files")
    convert_p.add_argument(
        "--input", nargs="+", required=True,
        help="record files or globs",
    )
    convert_p.add_argument("--output", required=True, help="scenario output dir")
    convert_p.add_argument("--limit", type=int, default=None)
    convert_p.add_argument("--seed", type=int, default=0)
    convert_p.set_defaults(func=cmd_convert)

    validate_p = sub.add_parser("validate", help="validate converted scenarios")
    validate_p.add_argument("directory")
    validate_p.add_argument("--report", default=None, help="write JSON report")
    validate_p.set_defaults(func=cmd_validate)

    sample_p = sub.add_parser("make-sample", help="write synthetic source records")
    sample_p.add_argument("--output", required=True)
    sample_p.add_argument("--count", type=int, default=10)
    sample_p.add_argument("--seed", type=int, default=0)
    sample_p.set_defaults(func=cmd_make_sample)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
