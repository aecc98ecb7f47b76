"""NDJSON episode logs: one record per step with pose, action, potential-field
contribution, reward, terminal cause and attack flag. Logged poses plus the
arena are enough to rebuild the observations a log describes."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..sim import Arena, Observation, SimConfig, STACK_DEPTH, wrap_angle
from ..sim.lidar import observe_depth


def step_record(env, obs, action, exec_action, out, apf=(0.0, 0.0), attacked=False) -> dict:
    # poses stay full precision so observations rebuild bit-exactly from the log
    return {
        "step": env.steps,
        "x": float(env.state.position[0]),
        "y": float(env.state.position[1]),
        "heading": float(env.state.heading),
        "goal_index": env.goal_index,
        "action_v": float(action[0]),
        "action_omega": float(action[1]),
        "exec_v": float(exec_action[0]),
        "exec_omega": float(exec_action[1]),
        "apf_fvx": float(apf[0]),
        "apf_fomega": float(apf[1]),
        "reward": float(out.reward),
        "cause": out.cause,
        "checkpoint": out.checkpoint,
        "attack": bool(attacked),
    }


def write_ndjson(path, records: list[dict]) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def read_ndjson(path) -> list[dict]:
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def observations_from_log(arena: Arena, rows: list[dict], start_pose=None) -> list[Observation]:
    """Rebuild the observation at every logged step. The depth stack is
    reconstructed by replaying the logged poses through the deterministic
    sensor model (frames before the first step repeat it)."""
    obs = []
    frames: list[np.ndarray] = []
    for row in rows:
        pose = (row["x"], row["y"])
        heading = row["heading"]
        frame = observe_depth(pose, heading, arena)
        frames.append(frame)
        window = frames[-STACK_DEPTH:]
        while len(window) < STACK_DEPTH:
            window = [window[0]] + window
        gx, gy = arena.goals[row["goal_index"]]
        bearing = wrap_angle(np.arctan2(gy - pose[1], gx - pose[0]) - heading)
        distance = float(np.hypot(gx - pose[0], gy - pose[1]))
        obs.append(Observation(np.stack(window), bearing, distance))
    return obs
