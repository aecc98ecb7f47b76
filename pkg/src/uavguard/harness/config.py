"""Experiment configuration: JSON in, validated + fully-defaulted echo out.

Unknown keys are rejected with their JSON path. The `scale` preset picks the
desk geometry (64x32 depth images) or the paper-shaped one (256x128, full
training sizes); every field can still be overridden explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..apf import ApfGains
from ..attack import AttackConfig
from ..ddpg import TrainConfig
from ..sim import Arena, SimConfig
from ..sim.arena import LidarConfig

DESK = "desk"
PAPER_SHAPED = "paper-shaped"


def _defaults(scale: str) -> dict:
    doc = {
        "scale": scale,
        "seed": 0,
        "out_dir": "runs",
        "arena_file": None,
        "sim": {"dt": 0.25, "v_max": 2.0, "omega_max": float(__import__("numpy").pi / 2),
                "horizon": 200},
        "lidar": LidarConfig().__dict__.copy(),
        "train": TrainConfig().to_json(),
        "attack": AttackConfig().to_json(),
        "detect": {
            "cnn_states": 5000,
            "lstm_samples_per_class": 15000,
            "background_states": 30,
            "cnn_epochs": 10,
            "lstm_epochs": 1200,
            "fcn_epochs": 10,
            "eval_steps": 1000,
            "lr": 1e-3,
            "batch": 32,
        },
        "eval": {
            "episodes": 100,
            "success_threshold": None,
            "sweep_eps": [1.0, 4.0, 16.0, 32.0],
            "sweep_iters": [1, 5, 10, 20],
            "sweep_states": 100,
            "probe_gaps": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            "probe_bearings_deg": [-30, -20, -10, 0, 10, 20, 30],
            "probe_eps": None,
            "probe_variant": "apf_on",
            "campaign_episodes": 100,
            "campaign_eps": None,
            "trace_seed": 0,
        },
    }
    if scale == PAPER_SHAPED:
        doc["lidar"].update(
            n_azimuth=512, n_elevation=64, image_azimuth_bins=256, image_elevation_bins=128
        )
        doc["train"].update(episodes=1750, buffer_size=50_000, warmup=5000)
    return doc


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _merge(defaults: dict, user: dict, path: str, errors: list[str]) -> dict:
    out = {}
    for key, base in defaults.items():
        if key in user and isinstance(base, dict) and isinstance(user[key], dict):
            out[key] = _merge(base, user[key], f"{path}{key}.", errors)
        elif key in user:
            out[key] = user[key]
        else:
            out[key] = base
    for key in user:
        if key not in defaults:
            errors.append(f"{path}{key}: unknown key")
    return out


def validate_config(source) -> dict:
    """Normalize a config (path, JSON text, or dict). Raises ConfigError with
    one entry per violation, each naming its JSON path."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        text = Path(source).read_text().strip()
        user = json.loads(text) if text else {}
    elif isinstance(source, str):
        user = json.loads(source) if source.strip() else {}
    elif source is None:
        user = {}
    else:
        user = dict(source)

    errors: list[str] = []
    scale = user.get("scale", DESK)
    if scale not in (DESK, PAPER_SHAPED):
        raise ConfigError([f"scale: must be '{DESK}' or '{PAPER_SHAPED}', got {scale!r}"])
    doc = _merge(_defaults(scale), user, "", errors)

    if doc["attack"]["eps"] is not None and doc["attack"]["eps"] < 0:
        errors.append("attack.eps: must be >= 0")
    if doc["attack"]["iterations"] < 1:
        errors.append("attack.iterations: must be >= 1")
    if doc["attack"]["duration"] < 1:
        errors.append("attack.duration: must be >= 1")
    if not (0 < doc["train"]["gamma"] < 1):
        errors.append("train.gamma: must be in (0, 1)")
    if not (0 < doc["train"]["tau"] <= 1):
        errors.append("train.tau: must be in (0, 1]")
    if doc["train"]["batch_size"] > doc["train"]["buffer_size"]:
        errors.append("train.batch_size: must not exceed train.buffer_size")
    if doc["arena_file"] is not None and not Path(doc["arena_file"]).exists():
        errors.append(f"arena_file: {doc['arena_file']} does not exist")
    if not isinstance(doc["seed"], int):
        errors.append("seed: must be an integer")
    for key in ("episodes", "campaign_episodes", "sweep_states"):
        if doc["eval"][key] < 1:
            errors.append(f"eval.{key}: must be >= 1")
    if errors:
        raise ConfigError(errors)
    return doc


@dataclass
class Experiment:
    """Typed view of a validated config."""

    doc: dict
    arena: Arena
    sim: SimConfig
    train: TrainConfig
    attack: AttackConfig
    out_dir: Path
    seed: int

    @classmethod
    def from_config(cls, doc: dict, out_override=None) -> "Experiment":
        lidar = LidarConfig(**doc["lidar"])
        if doc["arena_file"]:
            arena = Arena.load(doc["arena_file"])
        else:
            arena = Arena(lidar=lidar)
        sim = SimConfig(**doc["sim"])
        train = TrainConfig.from_json(doc["train"])
        attack = AttackConfig.from_json(doc["attack"])
        import os

        root = out_override or os.environ.get("UAVGUARD_OUT") or doc["out_dir"]
        return cls(doc=doc, arena=arena, sim=sim, train=train, attack=attack,
                   out_dir=Path(root), seed=doc["seed"])

    @property
    def apf_gains(self) -> ApfGains:
        return self.train.apf_gains
