"""Paired clean/attacked evaluation on a held-out course, plus the
per-stage latency benchmark."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..attack import AttackConfig, bim
from ..ddpg.nets import obs_to_feeds
from ..nn import Network
from ..sim import Arena, Episode, SimConfig
from ..xai import Background, deep_attribution, gru_layer_shap, shap_image
from ..xai.split import SplitModel, gru_background
from .nets import WINDOW
from .train import score

YAW = 1


@dataclass
class EvalReport:
    kind: str
    accuracy: float
    false_positive_rate: float
    false_negative_rate: float
    clean_count: int
    attacked_count: int
    clean_scores: list[float] = field(default_factory=list)
    attacked_scores: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def report_from_scores(kind: str, clean_scores: np.ndarray, attacked_scores: np.ndarray) -> EvalReport:
    clean_wrong = int(np.sum(clean_scores > 0.5))
    attacked_wrong = int(np.sum(attacked_scores <= 0.5))
    n_c, n_a = len(clean_scores), len(attacked_scores)
    correct = (n_c - clean_wrong) + (n_a - attacked_wrong)
    return EvalReport(
        kind=kind,
        accuracy=correct / (n_c + n_a),
        false_positive_rate=clean_wrong / n_c if n_c else 0.0,
        false_negative_rate=attacked_wrong / n_a if n_a else 0.0,
        clean_count=n_c,
        attacked_count=n_a,
        clean_scores=[float(s) for s in clean_scores],
        attacked_scores=[float(s) for s in attacked_scores],
    )


def walk_payloads(actor: Network, split: SplitModel, arena, sim: SimConfig,
                  attack_cfg: AttackConfig, background: Background, ref_feeds,
                  steps: int, seed: int = 0, want_images: bool = True):
    """Walk the course with the frozen policy; at every step build the paired
    clean/attacked payloads for all detector kinds. The course evolves by the
    clean action; the attacked state is its per-step counterfactual twin.
    `arena` is a fixed Arena or a callable episode_seed -> Arena."""
    factory = arena if callable(arena) else (lambda _s: arena)
    gru_bg = gru_background(split, ref_feeds)
    images_clean, images_adv = [], []
    seq_clean: list[np.ndarray] = []
    seq_adv: list[np.ndarray] = []
    windows_clean, windows_adv = [], []
    deflections = []

    ep_seed = seed
    done = 0
    while done < steps:
        env = Episode(factory(ep_seed), sim, seed=ep_seed)
        obs = env.reset()
        seq_clean.clear()
        seq_adv.clear()
        while done < steps:
            feeds = obs_to_feeds(obs)
            adv_image = bim(actor, feeds, attack_cfg.eps, attack_cfg.iterations,
                            attack_cfg.step_eps)
            adv_feeds = {**feeds, "image": adv_image}
            if want_images:
                images_clean.append(shap_image(deep_attribution(actor, feeds, background, YAW)))
                images_adv.append(shap_image(deep_attribution(actor, adv_feeds, background, YAW)))
            seq_clean.append(gru_layer_shap(split, feeds, gru_bg).values["gru_out"])
            seq_adv.append(gru_layer_shap(split, adv_feeds, gru_bg).values["gru_out"])
            if len(seq_clean) >= WINDOW:
                windows_clean.append(np.stack(seq_clean[-WINDOW:]))
                windows_adv.append(np.stack(seq_adv[-WINDOW:]))
            clean_action = actor.forward(feeds)[0]
            adv_action = actor.forward(adv_feeds)[0]
            deflections.append(float(np.degrees(abs(adv_action[YAW] - clean_action[YAW]))))
            done += 1
            out = env.step(sim.clamp_action(clean_action))
            obs = out.observation
            if out.terminal:
                break
        ep_seed += 1
    return {
        "images_clean": np.stack(images_clean).astype(np.float32) if images_clean else None,
        "images_adv": np.stack(images_adv).astype(np.float32) if images_adv else None,
        "windows_clean": np.stack(windows_clean).astype(np.float32),
        "windows_adv": np.stack(windows_adv).astype(np.float32),
        "deflections_deg_s": deflections,
    }


def evaluate_detectors(detectors: dict[str, Network], payloads: dict) -> dict[str, EvalReport]:
    reports = {}
    for kind, net in detectors.items():
        if kind in ("cnn", "fcn"):
            clean, adv = payloads["images_clean"], payloads["images_adv"]
        else:
            clean, adv = payloads["windows_clean"], payloads["windows_adv"]
        reports[kind] = report_from_scores(kind, score(net, clean), score(net, adv))
    return reports


def latency_bench(actor: Network, split: SplitModel, detectors: dict[str, Network],
                  arena: Arena, sim: SimConfig, background: Background, ref_feeds,
                  repeats: int = 20, seed: int = 0):
    """Per-frame wall-clock timings for action, attribution, and detection."""
    env = Episode(arena, sim, seed=seed)
    obs = env.reset()
    feeds = obs_to_feeds(obs)
    gru_bg = gru_background(split, ref_feeds)

    def timed(fn, n=repeats):
        fn()  # warm caches
        t0 = time.perf_counter()
        for _ in range(n):
            fn()
        return (time.perf_counter() - t0) / n

    action_s = timed(lambda: actor.forward(feeds))
    full_attr_s = timed(lambda: deep_attribution(actor, feeds, background, YAW))
    gru_attr_s = timed(lambda: gru_layer_shap(split, feeds, gru_bg))

    frame = deep_attribution(actor, feeds, background, YAW)
    image_payload = shap_image(frame)[None]
    window_payload = np.zeros((1, WINDOW, split.first_half.layers()["gru"].out_shape[0]),
                              dtype=np.float32)
    rows = []
    for kind, net in sorted(detectors.items()):
        payload = window_payload if kind == "lstm" else image_payload
        detect_s = timed(lambda: net.forward({"x": payload}))
        attr_s = gru_attr_s if kind == "lstm" else full_attr_s
        rows.append({
            "detector": kind,
            "action_s": action_s,
            "shap_generation_s": attr_s,
            "detection_s": detect_s,
        })
    return rows
