"""Dataset builders for the three detectors.

CNN/FCN samples: per source state, one clean and one attacked full-image
attribution rendered as sign-split SHAP images (label-balanced by
construction). LSTM samples: 10-step windows of 48-value GRU-layer
attributions gathered from simulation rollouts; clean windows come from
attack-free episodes only, attacked windows are labeled by their newest
step.
"""

from __future__ import annotations

import hashlib
import logging

import numpy as np

from ..attack import AttackConfig, bim
from ..ddpg.nets import obs_to_feeds
from ..nn import Network
from ..sim import Arena, Episode, SimConfig
from ..xai import Background, deep_attribution, gru_layer_shap, shap_image
from ..xai.split import SplitModel, gru_background
from .nets import WINDOW

log = logging.getLogger(__name__)

YAW = 1


def dataset_hash(payloads: np.ndarray, labels: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(payloads, dtype="<f4").tobytes())
    h.update(np.ascontiguousarray(labels, dtype="<i4").tobytes())
    return h.hexdigest()[:16]


def collect_states(actor: Network, arena, sim: SimConfig, count: int, seed: int):
    """Observations visited by the frozen policy on its course. `arena` is a
    fixed Arena or a callable episode_seed -> Arena."""
    factory = arena if callable(arena) else (lambda _s: arena)
    states = []
    ep_seed = seed
    while len(states) < count:
        env = Episode(factory(ep_seed), sim, seed=ep_seed)
        obs = env.reset()
        while True:
            states.append(obs.copy())
            if len(states) >= count:
                return states
            action = actor.forward(obs_to_feeds(obs))[0]
            out = env.step(sim.clamp_action(action))
            obs = out.observation
            if out.terminal:
                break
        ep_seed += 1
    return states


def background_from_states(states, count: int = 30):
    """Reference feed arrays from the first `count` gathered states."""
    refs = states[:count]
    return {
        "image": np.stack([o.depth_stack for o in refs])[..., None],
        "pos": np.stack(
            [[o.bearing / np.pi, o.distance / 30.0] for o in refs]
        ).astype(np.float32),
    }


def build_cnn_dataset(actor: Network, states, attack_cfg: AttackConfig,
                      background: Background, progress_every: int = 200):
    """(payloads (2N,5,H,W,2), labels (2N,)) pairs of clean/attacked SHAP
    image stacks, clean first within each pair."""
    payloads, labels = [], []
    skipped = 0
    for i, obs in enumerate(states):
        feeds = obs_to_feeds(obs)
        try:
            clean_frame = deep_attribution(actor, feeds, background, YAW)
            adv_image = bim(actor, feeds, attack_cfg.eps, attack_cfg.iterations,
                            attack_cfg.step_eps)
            adv_frame = deep_attribution(actor, {**feeds, "image": adv_image}, background, YAW)
        except FloatingPointError as exc:
            skipped += 1
            log.warning("state %d skipped: %s", i, exc)
            continue
        payloads.append(shap_image(clean_frame))
        labels.append(0)
        payloads.append(shap_image(adv_frame))
        labels.append(1)
        if progress_every and (i + 1) % progress_every == 0:
            log.info("cnn dataset: %d/%d states attributed", i + 1, len(states))
    if skipped:
        log.info("cnn dataset: %d states skipped", skipped)
    return np.stack(payloads), np.array(labels, dtype=np.int32)


def build_lstm_dataset(actor: Network, split: SplitModel, arena: Arena, sim: SimConfig,
                       attack_cfg: AttackConfig, ref_feeds, samples_per_class: int,
                       seed: int = 0):
    """10x48 attribution windows from rollouts: clean episodes supply label-0
    windows, attacked twins supply label-1 windows (newest step attacked)."""
    background = gru_background(split, ref_feeds)
    rng = np.random.default_rng(seed)
    clean_windows: list[np.ndarray] = []
    attacked_windows: list[np.ndarray] = []
    ep_seed = seed
    while min(len(clean_windows), len(attacked_windows)) < samples_per_class:
        env = Episode(arena, sim, seed=ep_seed)
        obs = env.reset()
        clean_seq: list[np.ndarray] = []
        adv_seq: list[np.ndarray] = []
        adv_flags: list[bool] = []
        burst_left = 0
        while True:
            feeds = obs_to_feeds(obs)
            clean_seq.append(gru_layer_shap(split, feeds, background).values["gru_out"])
            if burst_left == 0 and rng.random() < attack_cfg.onset_prob:
                burst_left = attack_cfg.duration
            attacked = burst_left > 0
            if attacked:
                burst_left -= 1
                adv_image = bim(actor, feeds, attack_cfg.eps, attack_cfg.iterations,
                                attack_cfg.step_eps)
                adv_seq.append(
                    gru_layer_shap(split, {**feeds, "image": adv_image}, background).values["gru_out"]
                )
            else:
                adv_seq.append(clean_seq[-1])
            adv_flags.append(attacked)
            action = actor.forward(feeds)[0]
            out = env.step(sim.clamp_action(action))
            obs = out.observation
            if out.terminal:
                break
        if len(clean_seq) >= WINDOW:
            for t in range(WINDOW, len(clean_seq) + 1):
                clean_windows.append(np.stack(clean_seq[t - WINDOW:t]))
                if adv_flags[t - 1]:  # label = newest step attacked
                    attacked_windows.append(np.stack(adv_seq[t - WINDOW:t]))
        ep_seed += 1
    n = samples_per_class
    payloads = np.stack(clean_windows[:n] + attacked_windows[:n]).astype(np.float32)
    labels = np.array([0] * n + [1] * n, dtype=np.int32)
    return payloads, labels
