"""Shared plumbing for the figure scripts: CSV loading with schema checks,
and a common --in/--out argument parser. The scripts consume only the
documented report files; they never import the library's internals."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path


class SchemaError(ValueError):
    pass


def load_csv(path, required: list[str]) -> list[dict]:
    path = Path(path)
    with path.open() as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        return list(reader)


def load_ndjson(path, required: list[str]) -> list[dict]:
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    missing = [c for c in required if rows and c not in rows[0]]
    if missing:
        raise SchemaError(f"{path}: missing fields {missing}")
    return rows


def make_parser(description: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        help="input report file (repeatable where documented)")
    parser.add_argument("--out", dest="out", required=True, help="output image path")
    parser.add_argument("--dpi", type=int, default=120)
    return parser


def save(fig, out, dpi=120):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=dpi)
    return out


def fail_schema(exc: SchemaError) -> int:
    print(f"schema mismatch: {exc}", file=sys.stderr)
    return 1
