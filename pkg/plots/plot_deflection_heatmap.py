#!/usr/bin/env python3
"""Yaw-deflection heatmap over (gap to obstacle, bearing to goal) from a
probe.csv (columns: gap_m, bearing_deg, deflection_deg_s)."""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from common import SchemaError, fail_schema, load_csv, make_parser, save

REQUIRED = ["gap_m", "bearing_deg", "deflection_deg_s"]


def build_figure(rows):
    gaps = sorted({float(r["gap_m"]) for r in rows})
    bearings = sorted({float(r["bearing_deg"]) for r in rows})
    grid = np.zeros((len(gaps), len(bearings)))
    for r in rows:
        i = gaps.index(float(r["gap_m"]))
        j = bearings.index(float(r["bearing_deg"]))
        grid[i, j] = float(r["deflection_deg_s"])
    fig, ax = plt.subplots(figsize=(6.5, 4))
    im = ax.imshow(grid, aspect="auto", cmap="inferno", origin="upper")
    ax.set_xticks(range(len(bearings)), [f"{b:g}" for b in bearings])
    ax.set_yticks(range(len(gaps)), [f"{g:g}" for g in gaps])
    ax.set_xlabel("bearing to goal (deg)")
    ax.set_ylabel("gap to obstacle (m)")
    for i in range(len(gaps)):
        for j in range(len(bearings)):
            ax.text(j, i, f"{grid[i, j]:.0f}", ha="center", va="center",
                    color="white" if grid[i, j] < grid.max() * 0.6 else "black", fontsize=7)
    fig.colorbar(im, label="yaw deflection (deg/s)")
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
