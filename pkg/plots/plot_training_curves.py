#!/usr/bin/env python3
"""Reward per episode with a rolling mean, and the rolling-10 success rate,
from a training_log.csv (columns: episode, steps, total_steps, reward,
success, rolling_success)."""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from common import SchemaError, fail_schema, load_csv, make_parser, save

REQUIRED = ["episode", "reward", "success", "rolling_success"]


def build_figure(rows):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    episodes = np.array([int(r["episode"]) for r in rows])
    rewards = np.array([float(r["reward"]) for r in rows])
    rolling = np.array([float(r["rolling_success"]) for r in rows])
    if len(rows):
        ax1.plot(episodes, rewards, lw=0.6, alpha=0.5, label="reward")
        window = min(25, len(rewards))
        smooth = np.convolve(rewards, np.ones(window) / window, mode="valid")
        ax1.plot(episodes[window - 1:], smooth, lw=1.8, label=f"rolling {window}")
        ax2.plot(episodes, rolling, lw=1.2, color="tab:green")
    ax1.set_xlabel("episode")
    ax1.set_ylabel("reward")
    ax1.legend(loc="lower right")
    ax2.set_xlabel("episode")
    ax2.set_ylabel("success rate (last 10)")
    ax2.set_ylim(-0.02, 1.02)
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
