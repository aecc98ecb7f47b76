"""Reproduction stages: each emits its CSV/JSON reports into its own run
directory and records a manifest sufficient to replay it."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import attack as atk
from ..ddpg import TrainConfig, build_actor, run_episode, train
from ..detect import (
    background_from_states,
    build_cnn_dataset,
    build_detector,
    build_lstm_dataset,
    collect_states,
    dataset_hash,
    evaluate_detectors,
    latency_bench,
    train_detector,
    walk_payloads,
)
from ..detect.train import accuracy, score, stratified_split
from ..nn import load_network, save_network
from ..sim import validation_arena
from ..xai import make_background, split_actor
from ..xai.trace import episode_shap_trace, write_trace
from .config import Experiment
from .logs import step_record, write_ndjson
from .manifest import RunManifest
from .seeds import derive_seed, stream

log = logging.getLogger(__name__)

STAGES = (
    "train-compare",
    "attack-sweep",
    "deflection-probe",
    "campaign",
    "shap-trace",
    "detector-suite",
    "latency",
)


class MissingPrerequisite(RuntimeError):
    pass


def _write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _actor_path(exp: Experiment, variant: str) -> Path:
    return exp.out_dir / "train-compare" / variant / "actor.uavw"


def load_actor(exp: Experiment, variant: str = "apf_on"):
    path = _actor_path(exp, variant)
    if not path.exists():
        raise MissingPrerequisite(
            f"no trained actor at {path}; run `uavguard reproduce --stage train-compare` first"
        )
    net, _ = load_network(path)
    return net


def _parallel_eval(actor, arena, sim, episodes, seed, apf_gains, jobs):
    factory = arena if callable(arena) else (lambda _s: arena)

    def one(i):
        return run_episode(actor, factory(seed + i), sim, seed=seed + i, apf_gains=apf_gains)

    if jobs <= 1:
        results = [one(i) for i in range(episodes)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(episodes)))
    return float(np.mean([r["success"] for r in results])), results


def _steps_to_threshold(records_csv_rows, threshold: float) -> int | None:
    for row in records_csv_rows:
        if row["rolling"] >= threshold:
            return row["total_steps"]
    return None


def stage_train_compare(exp: Experiment, force: bool = False, jobs: int = 1) -> Path:
    stage_dir = exp.out_dir / "train-compare"
    manifest = RunManifest("train-compare", exp.doc)
    variants = {"apf_off": False, "apf_on": True}
    logs = {}
    for variant, apf_enabled in variants.items():
        vdir = stage_dir / variant
        t0 = time.time()
        if force or not (vdir / "actor.uavw").exists():
            log.info("training %s", variant)
            train(
                exp.arena,
                exp.train,
                apf_enabled=apf_enabled,
                seed=derive_seed(exp.seed, f"train/{variant}"),
                sim=exp.sim,
                out_dir=vdir,
            )
        manifest.add(vdir / "actor.uavw", seconds=time.time() - t0)
        manifest.add(vdir / "training_log.csv")
        with (vdir / "training_log.csv").open() as fh:
            logs[variant] = [
                {"total_steps": int(r["total_steps"]), "rolling": float(r["rolling_success"])}
                for r in csv.DictReader(fh)
            ]

    suite = lambda ep_seed: validation_arena(ep_seed, exp.arena.lidar)
    threshold = exp.doc["eval"]["success_threshold"]
    if threshold is None:
        # the APF-off agent's final training success level (last-50 mean)
        threshold = float(round(np.mean([r["rolling"] for r in logs["apf_off"][-50:]]), 3))
    rows = []
    for variant, apf_enabled in variants.items():
        actor, _ = load_network(stage_dir / variant / "actor.uavw")
        gains = exp.apf_gains if apf_enabled else None
        rate, results = _parallel_eval(
            actor, suite, exp.sim, exp.doc["eval"]["episodes"],
            derive_seed(exp.seed, "eval"), gains, jobs,
        )
        rows.append(
            [
                variant,
                len(logs[variant]),
                logs[variant][-1]["total_steps"],
                logs[variant][-1]["rolling"],
                f"{rate:.4f}",
                _steps_to_threshold(logs[variant], threshold),
                threshold,
            ]
        )
        log.info("%s: eval success %.2f", variant, rate)
    report = _write_csv(
        stage_dir / "train_compare.csv",
        ["variant", "episodes", "env_steps", "final_rolling", "eval_success",
         "steps_to_threshold", "threshold"],
        rows,
    )
    manifest.add(report)
    return manifest.write(stage_dir)


def _probe_states(exp: Experiment, actor, count, seed_label="sweep-states"):
    from ..ddpg.nets import obs_to_feeds

    seed = derive_seed(exp.seed, seed_label)
    states = collect_states(
        actor, lambda ep_seed: validation_arena(ep_seed, exp.arena.lidar),
        exp.sim, count, seed,
    )
    return [obs_to_feeds(o) for o in states]


def stage_attack_sweep(exp: Experiment, jobs: int = 1) -> Path:
    stage_dir = exp.out_dir / "attack-sweep"
    stage_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("attack-sweep", exp.doc)
    actor = load_actor(exp)
    feeds = _probe_states(exp, actor, exp.doc["eval"]["sweep_states"])
    grid = atk.sweep(actor, feeds, exp.doc["eval"]["sweep_eps"],
                     exp.doc["eval"]["sweep_iters"], exp.sim)
    rows = [
        [eps, iters, f"{grid['success'][i][j]:.4f}"]
        for i, eps in enumerate(grid["eps"])
        for j, iters in enumerate(grid["iterations"])
    ]
    report = _write_csv(stage_dir / "sweep.csv", ["eps", "iterations", "success_rate"], rows)
    manifest.add(report)
    return manifest.write(stage_dir)


def stage_deflection_probe(exp: Experiment, jobs: int = 1) -> Path:
    stage_dir = exp.out_dir / "deflection-probe"
    stage_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("deflection-probe", exp.doc)
    actor = load_actor(exp, exp.doc["eval"]["probe_variant"])
    probe_cfg = exp.attack
    if exp.doc["eval"]["probe_eps"] is not None:
        probe_cfg = atk.AttackConfig(**{**exp.attack.to_json(),
                                        "eps": exp.doc["eval"]["probe_eps"]})
    grid = atk.deflection_probe(
        actor, exp.arena.lidar, probe_cfg, exp.sim,
        gaps=exp.doc["eval"]["probe_gaps"],
        bearings_deg=exp.doc["eval"]["probe_bearings_deg"],
    )
    rows = [
        [gap, b, f"{grid['deflection'][i][j]:.3f}"]
        for i, gap in enumerate(grid["gaps"])
        for j, b in enumerate(grid["bearings_deg"])
    ]
    report = _write_csv(stage_dir / "probe.csv", ["gap_m", "bearing_deg", "deflection_deg_s"], rows)
    manifest.add(report)
    return manifest.write(stage_dir)


def stage_campaign(exp: Experiment, jobs: int = 1) -> Path:
    stage_dir = exp.out_dir / "campaign"
    stage_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("campaign", exp.doc)
    actor = load_actor(exp)
    suite = lambda ep_seed: validation_arena(ep_seed, exp.arena.lidar)
    episodes = exp.doc["eval"]["campaign_episodes"]
    seed = derive_seed(exp.seed, "campaign")
    campaign_cfg = exp.attack
    if exp.doc["eval"]["campaign_eps"] is not None:
        from ..attack import AttackConfig

        campaign_cfg = AttackConfig(**{**exp.attack.to_json(),
                                       "eps": exp.doc["eval"]["campaign_eps"]})
    stats = atk.campaign(actor, suite, exp.sim, campaign_cfg, episodes, seed=seed)
    apf_rate, _ = _parallel_eval(actor, suite, exp.sim, episodes, seed, exp.apf_gains, jobs)

    summary = _write_csv(
        stage_dir / "campaign.csv",
        ["metric", "value"],
        [
            ["episodes", episodes],
            ["clean_rate_apf_off", f"{stats['clean_rate']:.4f}"],
            ["attacked_rate", f"{stats['attacked_rate']:.4f}"],
            ["clean_rate_apf_on", f"{apf_rate:.4f}"],
            ["drop_points", f"{(stats['clean_rate'] - stats['attacked_rate']) * 100:.1f}"],
        ],
    )
    per_ep = _write_csv(
        stage_dir / "campaign_episodes.csv",
        ["episode", "clean_cause", "clean_steps", "attacked_cause", "attacked_steps",
         "attacked_step_count"],
        [
            [i, c["cause"], c["steps"], a["cause"], a["steps"], a["attacked_steps"]]
            for i, (c, a) in enumerate(zip(stats["clean"], stats["attacked"]))
        ],
    )
    # one attacked rollout logged step by step, attack flags included
    records = []
    rng = np.random.default_rng((seed, 0, 0))
    atk.run_attacked_episode(
        actor, suite(seed), exp.sim, seed, campaign_cfg, rng,
        observer=lambda env, obs, action, attacked, out: records.append(
            step_record(env, obs, action, action, out, attacked=attacked)
        ),
    )
    ndjson = write_ndjson(stage_dir / "attacked_episode.ndjson", records)
    for artifact in (summary, per_ep, ndjson):
        manifest.add(artifact)
    return manifest.write(stage_dir)


def stage_shap_trace(exp: Experiment, jobs: int = 1) -> Path:
    stage_dir = exp.out_dir / "shap-trace"
    stage_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("shap-trace", exp.doc)
    actor = load_actor(exp)
    split = split_actor(actor)
    states = collect_states(
        actor, exp.arena, exp.sim, exp.doc["detect"]["background_states"],
        derive_seed(exp.seed, "background"),
    )
    refs = background_from_states(states, exp.doc["detect"]["background_states"])
    rows, summary = episode_shap_trace(
        split, exp.arena, exp.sim,
        seed=derive_seed(exp.seed, f"trace/{exp.doc['eval']['trace_seed']}"),
        ref_feeds=refs, apf_gains=exp.apf_gains,
    )
    report = write_trace(stage_dir / "shap_trace.csv", rows)
    (stage_dir / "trace_summary.json").write_text(json.dumps(summary, indent=1))
    manifest.add(report)
    manifest.add(stage_dir / "trace_summary.json")
    return manifest.write(stage_dir)


def stage_detector_suite(exp: Experiment, jobs: int = 1) -> Path:
    stage_dir = exp.out_dir / "detector-suite"
    stage_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("detector-suite", exp.doc)
    actor = load_actor(exp)
    split = split_actor(actor)
    det = exp.doc["detect"]
    hw = (exp.arena.lidar.image_azimuth_bins, exp.arena.lidar.image_elevation_bins)

    states = collect_states(actor, exp.arena, exp.sim, det["cnn_states"],
                            derive_seed(exp.seed, "detector-states"))
    refs = background_from_states(states, det["background_states"])
    background = make_background(actor, refs)

    log.info("building CNN/FCN dataset from %d states", len(states))
    cnn_payloads, cnn_labels = build_cnn_dataset(actor, states, exp.attack, background)
    from ..xai import write_records

    ds_path = write_records(
        stage_dir / "cnn_dataset.uava", cnn_payloads,
        {"labels": cnn_labels.tolist(), "attack": exp.attack.to_json(),
         "seed": exp.seed, "hash": dataset_hash(cnn_payloads, cnn_labels)},
    )
    manifest.add(ds_path)

    log.info("building LSTM dataset (%d per class)", det["lstm_samples_per_class"])
    lstm_payloads, lstm_labels = build_lstm_dataset(
        actor, split, exp.arena, exp.sim, exp.attack, refs,
        det["lstm_samples_per_class"], seed=derive_seed(exp.seed, "lstm-data"),
    )

    detectors = {}
    curves_all = {}
    for kind, payloads, labels, epochs in (
        ("fcn", cnn_payloads, cnn_labels, det["fcn_epochs"]),
        ("cnn", cnn_payloads, cnn_labels, det["cnn_epochs"]),
        ("lstm", lstm_payloads, lstm_labels, det["lstm_epochs"]),
    ):
        log.info("training %s-AD for %d epochs", kind.upper(), epochs)
        net = build_detector(kind, hw, seed=derive_seed(exp.seed, f"det/{kind}"))
        net, curves, _ = train_detector(
            net, payloads, labels, epochs, lr=det["lr"], batch=det["batch"],
            seed=derive_seed(exp.seed, f"det-train/{kind}"),
        )
        detectors[kind] = net
        curves_all[kind] = curves
        save_network(stage_dir / f"{kind}_ad.uavw", net)
        manifest.add(stage_dir / f"{kind}_ad.uavw")

    # shuffled-label control: same LSTM architecture, no signal to learn
    rng = stream(exp.seed, "control-shuffle")
    shuffled = lstm_labels.copy()
    rng.shuffle(shuffled)
    control = build_detector("lstm", hw, seed=derive_seed(exp.seed, "det/control"))
    control, _, control_split = train_detector(
        control, lstm_payloads, shuffled, max(5, min(det["lstm_epochs"], 20)),
        lr=det["lr"], batch=det["batch"], seed=derive_seed(exp.seed, "det-train/control"),
    )
    control_acc = accuracy(
        score(control, lstm_payloads[control_split.test]), shuffled[control_split.test]
    )

    log.info("paired evaluation over %d steps", det["eval_steps"])
    payloads = walk_payloads(
        actor, split, lambda ep_seed: validation_arena(ep_seed, exp.arena.lidar),
        exp.sim, exp.attack, background, refs,
        det["eval_steps"], seed=derive_seed(exp.seed, "detector-eval"),
    )
    reports = evaluate_detectors(detectors, payloads)

    rows = [
        [k, f"{r.accuracy:.4f}", f"{r.false_positive_rate:.4f}",
         f"{r.false_negative_rate:.4f}", r.clean_count + r.attacked_count]
        for k, r in sorted(reports.items())
    ]
    rows.append(["control-shuffled", f"{control_acc:.4f}", "", "", len(control_split.test)])
    table = _write_csv(
        stage_dir / "detectors.csv",
        ["detector", "accuracy", "false_positive_rate", "false_negative_rate", "samples"],
        rows,
    )
    manifest.add(table)

    detail = {
        "reports": {k: r.to_json() for k, r in reports.items()},
        "control_accuracy": control_acc,
        "curves": curves_all,
        "deflections_deg_s": payloads["deflections_deg_s"],
    }
    (stage_dir / "detector_reports.json").write_text(json.dumps(detail, indent=1))
    manifest.add(stage_dir / "detector_reports.json")
    return manifest.write(stage_dir)


def stage_latency(exp: Experiment, jobs: int = 1) -> Path:
    stage_dir = exp.out_dir / "latency"
    stage_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("latency", exp.doc)
    actor = load_actor(exp)
    split = split_actor(actor)
    hw = (exp.arena.lidar.image_azimuth_bins, exp.arena.lidar.image_elevation_bins)
    states = collect_states(actor, exp.arena, exp.sim, exp.doc["detect"]["background_states"],
                            derive_seed(exp.seed, "background"))
    refs = background_from_states(states)
    background = make_background(actor, refs)
    detectors = {}
    for kind in ("fcn", "cnn", "lstm"):
        path = exp.out_dir / "detector-suite" / f"{kind}_ad.uavw"
        if path.exists():
            detectors[kind], _ = load_network(path)
        else:
            detectors[kind] = build_detector(kind, hw, seed=0)
    rows = latency_bench(actor, split, detectors, exp.arena, exp.sim, background, refs)
    report = _write_csv(
        stage_dir / "latency.csv",
        ["detector", "action_s", "shap_generation_s", "detection_s"],
        [[r["detector"], f"{r['action_s']:.6f}", f"{r['shap_generation_s']:.6f}",
          f"{r['detection_s']:.6f}"] for r in rows],
    )
    manifest.add(report, timing=True)  # wall-clock: excluded from determinism
    return manifest.write(stage_dir)


_STAGE_FNS = {
    "train-compare": stage_train_compare,
    "attack-sweep": stage_attack_sweep,
    "deflection-probe": stage_deflection_probe,
    "campaign": stage_campaign,
    "shap-trace": stage_shap_trace,
    "detector-suite": stage_detector_suite,
    "latency": stage_latency,
}


def reproduce(stage: str, config_doc: dict, out_override=None, jobs: int = 1,
              force: bool = False) -> Path:
    if stage not in _STAGE_FNS:
        raise ValueError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
    exp = Experiment.from_config(config_doc, out_override)
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    if stage == "train-compare":
        return stage_train_compare(exp, force=force, jobs=jobs)
    return _STAGE_FNS[stage](exp, jobs=jobs)
