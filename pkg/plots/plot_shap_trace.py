#!/usr/bin/env python3
"""Episodic attribution trace: the summed depth-image contribution, the two
positional contributions, and the realized yaw rate per step, from a
shap_trace.csv (columns: step, image_shap, bearing_shap, distance_shap,
yaw_rate)."""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from common import SchemaError, fail_schema, load_csv, make_parser, save

REQUIRED = ["step", "image_shap", "bearing_shap", "distance_shap", "yaw_rate"]
SERIES = [
    ("image_shap", "depth image", "tab:red"),
    ("bearing_shap", "bearing", "tab:blue"),
    ("distance_shap", "distance to goal", "tab:orange"),
    ("yaw_rate", "yaw rate", "black"),
]


def build_figure(rows):
    fig, ax = plt.subplots(figsize=(8, 4))
    steps = [int(r["step"]) for r in rows]
    for column, label, color in SERIES:
        ax.plot(steps, [float(r[column]) for r in rows], label=label, color=color,
                lw=1.8 if column == "yaw_rate" else 1.2,
                ls="--" if column == "yaw_rate" else "-")
    ax.set_xlabel("time step")
    ax.set_ylabel("yaw contribution (rad/s)")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.legend(loc="upper right", fontsize=8)
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
