#!/usr/bin/env python3
"""Attack success rate against iteration count, one curve per eps, from a
sweep.csv (columns: eps, iterations, success_rate)."""

import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from common import SchemaError, fail_schema, load_csv, make_parser, save

REQUIRED = ["eps", "iterations", "success_rate"]


def build_figure(rows):
    by_eps = defaultdict(list)
    for r in rows:
        by_eps[float(r["eps"])].append((int(r["iterations"]), float(r["success_rate"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for eps in sorted(by_eps):
        pts = sorted(by_eps[eps])
        ax.plot([p[0] for p in pts], [100 * p[1] for p in pts], marker="o",
                label=f"eps = {eps:g}")
    ax.set_xlabel("iterations")
    ax.set_ylabel("attack success (%)")
    ax.set_ylim(0, 100)
    ax.legend()
    fig.tight_layout()
    return fig


def main(argv=None) -> int:
    args = make_parser(__doc__).parse_args(argv)
    try:
        rows = load_csv(args.inputs[0], REQUIRED)
    except SchemaError as exc:
        return fail_schema(exc)
    save(build_figure(rows), args.out, args.dpi)
    return 0


if __name__ == "__main__":
    sys.exit(main())
