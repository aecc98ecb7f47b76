"""Per-step attribution trace of one episode: the summed image contribution,
the two positional contributions, and the realized yaw rate."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..ddpg.nets import obs_to_feeds
from ..ddpg.train import run_episode
from ..sim import Arena, SimConfig
from .split import SplitModel, gru_background, gru_layer_shap

TRACE_COLUMNS = ["step", "image_shap", "bearing_shap", "distance_shap", "yaw_rate"]


def episode_shap_trace(
    split: SplitModel,
    arena: Arena,
    sim: SimConfig,
    seed: int,
    ref_feeds: dict[str, np.ndarray],
    apf_gains=None,
):
    """Roll one deterministic episode and attribute every yaw decision.
    Returns (rows, episode summary)."""
    background = gru_background(split, ref_feeds)
    rows = []

    def observer(env, obs, action, exec_action, out, corr):
        frame = gru_layer_shap(split, obs_to_feeds(obs), background)
        rows.append(
            {
                "step": len(rows) + 1,
                "image_shap": float(frame.values["gru_out"].sum()),
                "bearing_shap": float(frame.values["pos"][0]),
                "distance_shap": float(frame.values["pos"][1]),
                "yaw_rate": float(exec_action[1]),
            }
        )

    def actor_forward(feeds):
        return split.compose(feeds)

    class _ComposedActor:
        def forward(self, feeds):
            return actor_forward(feeds)

    summary = run_episode(_ComposedActor(), arena, sim, seed, apf_gains=apf_gains,
                          observer=observer)
    return rows, summary


def write_trace(path, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return path
