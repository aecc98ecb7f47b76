"""Acceptance criteria, one test per criterion, each printing a pass/fail
line (visible with `pytest -s`). The heavy prerequisites (both trainings,
the detector suite) come from the session-cached desk run; the cheaper
stages run fresh against the same artifacts."""

import csv
import json
import shutil
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sstats

from conftest import acceptance_doc, cache_root
from gradcheck import check_network_grads


def crit(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def read_csv(path):
    with Path(path).open() as fh:
        return list(csv.DictReader(fh))


# -- criterion 1: gradient correctness ---------------------------------


def test_gradient_correctness_all_layer_kinds():
    from uavguard.nn import (
        Concat, Conv2D, Dense, Flatten, GRU, LSTM, MaxPool2D, Network, ReLU,
        Sigmoid, Tanh, TimeDistributed,
    )

    t0 = time.time()
    cases = [
        (Dense(5), (4,), False),
        (Conv2D(3, (3, 3), (1, 1)), (6, 5, 2), False),
        (Conv2D(4, (3, 2), (2, 2)), (7, 6, 2), False),
        (MaxPool2D((2, 2)), (6, 4, 3), False),
        (ReLU(), (7,), True),
        (Tanh(), (7,), False),
        (Sigmoid(), (7,), False),
        (Flatten(), (3, 4), False),
        (GRU(5), (4, 3), False),
        (LSTM(5), (4, 3), False),
        (TimeDistributed(Dense(3)), (4, 5), False),
    ]
    worst = 0.0
    for layer, in_shape, nudge in cases:
        rng = np.random.default_rng(0)
        net = Network(dtype=np.float64)
        net.add_input("x", in_shape)
        net.add("l", layer, "x")
        net.build(rng)
        x = rng.normal(size=(3,) + in_shape)
        if nudge:
            x = np.where(np.abs(x) < 0.05, 0.1, x)
        worst = max(worst, check_network_grads(net, {"x": x}, tol=1e-4))

    rng = np.random.default_rng(9)
    net = Network(dtype=np.float64)
    net.add_input("img", (2, 5, 4, 1))
    net.add_input("pos", (2,))
    net.add("conv", TimeDistributed(Conv2D(2, (3, 3), (1, 1))), "img")
    net.add("act", TimeDistributed(Tanh()), "conv")
    net.add("flat", TimeDistributed(Flatten()), "act")
    net.add("gru", GRU(4), "flat")
    net.add("cat", Concat(), ["gru", "pos"])
    net.add("out", Dense(2), "cat")
    net.build(rng)
    feeds = {"img": rng.normal(size=(2, 2, 5, 4, 1)), "pos": rng.normal(size=(2, 2))}
    worst = max(worst, check_network_grads(net, feeds, tol=1e-4))
    elapsed = time.time() - t0
    crit(
        "gradient-correctness",
        worst <= 1e-4 and elapsed < 60,
        f"worst rel err {worst:.2e} (<= 1e-4), {elapsed:.1f}s (< 60s)",
    )


# -- criterion 2: shapley oracle equivalence ----------------------------


def test_shapley_oracle_equivalence():
    from uavguard.nn import Dense, Network, ReLU
    from uavguard.xai import deep_attribution, exact_shapley, make_background

    t0 = time.time()
    rng = np.random.default_rng(3)
    lin = Network(dtype=np.float64)
    lin.add_input("x", (6,))
    lin.add("d1", Dense(4), "x")
    lin.add("d2", Dense(1), "d1")
    lin.build(np.random.default_rng(3))
    x = rng.normal(size=6)
    bg = rng.normal(size=(7, 6))
    frame = deep_attribution(lin, {"x": x[None]}, make_background(lin, {"x": bg}), 0)
    phi = exact_shapley(lambda X: lin.forward({"x": X})[:, 0], x, bg)
    linear_err = float(np.max(np.abs(frame.values["x"] - phi)))

    rhos = []
    for seed in range(5):
        rng = np.random.default_rng(seed + 10)
        net = Network(dtype=np.float64)
        net.add_input("x", (8,))
        net.add("d1", Dense(8), "x")
        net.add("r", ReLU(), "d1")
        net.add("d2", Dense(1), "r")
        net.build(np.random.default_rng(seed))
        x = rng.normal(size=8)
        bg = rng.normal(size=(6, 8))
        frame = deep_attribution(net, {"x": x[None]}, make_background(net, {"x": bg}), 0)
        phi = exact_shapley(lambda X: net.forward({"x": X})[:, 0], x, bg)
        rhos.append(float(sstats.spearmanr(frame.values["x"], phi).statistic))
    elapsed = time.time() - t0
    crit(
        "shapley-oracle-equivalence",
        linear_err <= 1e-6 and min(rhos) >= 0.9 and elapsed < 300,
        f"linear {linear_err:.2e} (<= 1e-6), spearman min {min(rhos):.3f} (>= 0.9), "
        f"{elapsed:.1f}s (< 300s)",
    )


# -- criterion 3: completeness on actor observations --------------------


def test_completeness_on_actor_observations():
    from uavguard.ddpg import build_actor
    from uavguard.sim import Arena, SimConfig
    from uavguard.xai import deep_attribution, make_background

    arena = Arena()
    actor = build_actor(arena.lidar, SimConfig(), seed=0)
    rng = np.random.default_rng(0)
    refs = {
        "image": rng.random((30, 5, 64, 32, 1), dtype=np.float32),
        "pos": rng.uniform(-1, 1, size=(30, 2)).astype(np.float32),
    }
    background = make_background(actor, refs)
    worst = 0.0
    for _ in range(100):
        feeds = {
            "image": rng.random((1, 5, 64, 32, 1), dtype=np.float32),
            "pos": rng.uniform(-1, 1, size=(1, 2)).astype(np.float32),
        }
        frame = deep_attribution(actor, feeds, background, 1)
        tol = 1e-4 * (1.0 + abs(frame.output))
        worst = max(worst, frame.completeness_error() / tol)
    crit(
        "attribution-completeness",
        worst <= 1.0,
        f"worst error {worst:.3f}x its tolerance over 100 observations (<= 1x)",
    )


# -- criteria 4-8 need the trained desk artifacts ------------------------


def test_apf_benefit(desk_run):
    rows = {r["variant"]: r for r in
            read_csv(desk_run["root"] / "train-compare" / "train_compare.csv")}
    on, off = rows["apf_on"], rows["apf_off"]
    margin = float(on["eval_success"]) - float(off["eval_success"])
    s_on = int(on["steps_to_threshold"])
    s_off = int(off["steps_to_threshold"])
    crit(
        "apf-benefit",
        margin >= 0.05 and s_on < s_off,
        f"eval {float(on['eval_success']):.2f} vs {float(off['eval_success']):.2f} "
        f"(margin {margin * 100:.0f} >= 5 pts); steps to {on['threshold']} success: "
        f"{s_on} vs {s_off} (fewer)",
    )


def test_attack_efficacy_campaign_and_sweep(desk_run):
    from uavguard.harness import reproduce

    doc = desk_run["doc"]
    reproduce("campaign", doc, out_override=desk_run["root"])
    rows = {r["metric"]: r["value"] for r in
            read_csv(desk_run["root"] / "campaign" / "campaign.csv")}
    clean = float(rows["clean_rate_apf_off"])
    attacked = float(rows["attacked_rate"])

    reproduce("attack-sweep", doc, out_override=desk_run["root"])
    sweep = read_csv(desk_run["root"] / "attack-sweep" / "sweep.csv")
    eps_vals = sorted({float(r["eps"]) for r in sweep})
    iter_vals = sorted({int(r["iterations"]) for r in sweep})
    grid = {(float(r["eps"]), int(r["iterations"])): float(r["success_rate"]) for r in sweep}
    slack = 0.02
    monotone = all(
        grid[(e, iter_vals[j + 1])] >= grid[(e, iter_vals[j])] - slack
        for e in eps_vals for j in range(len(iter_vals) - 1)
    ) and all(
        grid[(eps_vals[i + 1], it)] >= grid[(eps_vals[i], it)] - slack
        for it in iter_vals for i in range(len(eps_vals) - 1)
    )
    spread = max(grid.values()) - min(grid.values())
    crit(
        "attack-efficacy",
        (clean - attacked) >= 0.30 and monotone and spread > 0.05,
        f"campaign {clean:.2f} -> {attacked:.2f} (drop {(clean - attacked) * 100:.0f} >= 30 pts); "
        f"sweep monotone within {slack}: {monotone}, spread {spread:.2f}",
    )


def test_deflection_grid_shape(desk_run):
    from uavguard.harness import reproduce

    reproduce("deflection-probe", desk_run["doc"], out_override=desk_run["root"])
    rows = read_csv(desk_run["root"] / "deflection-probe" / "probe.csv")
    gaps = sorted({float(r["gap_m"]) for r in rows})
    means = [
        float(np.mean([float(r["deflection_deg_s"]) for r in rows
                       if float(r["gap_m"]) == g]))
        for g in gaps
    ]
    peak = int(np.argmax(means))
    suppressed = means[0] <= 0.25 * means[peak]
    crit(
        "deflection-grid-shape",
        peak not in (0, len(gaps) - 1) and suppressed,
        f"row means {[f'{m:.1f}' for m in means]}: closest {means[0]:.1f} <= 25% of "
        f"peak {means[peak]:.1f} at interior gap {gaps[peak]}",
    )


def test_detector_ranking(desk_run):
    rows = {r["detector"]: r for r in
            read_csv(desk_run["root"] / "detector-suite" / "detectors.csv")}
    fcn = float(rows["fcn"]["accuracy"])
    cnn = float(rows["cnn"]["accuracy"])
    lstm = float(rows["lstm"]["accuracy"])
    control = float(rows["control-shuffled"]["accuracy"])
    crit(
        "detector-ranking",
        fcn < cnn < lstm and cnn >= 0.70 and lstm >= 0.80 and abs(control - 0.5) <= 0.05,
        f"fcn {fcn:.2f} < cnn {cnn:.2f} < lstm {lstm:.2f}; cnn >= 0.70, lstm >= 0.80; "
        f"shuffled control {control:.2f} within 0.50 +/- 0.05",
    )


def test_latency_ratio(desk_run):
    from uavguard.harness import reproduce

    reproduce("latency", desk_run["doc"], out_override=desk_run["root"])
    rows = {r["detector"]: r for r in read_csv(desk_run["root"] / "latency" / "latency.csv")}
    full_attr = float(rows["cnn"]["shap_generation_s"])
    gru_attr = float(rows["lstm"]["shap_generation_s"])
    lstm_detect = float(rows["lstm"]["detection_s"])
    ratio = full_attr / gru_attr
    dt = desk_run["doc"]["sim"]["dt"]
    crit(
        "latency-ratio",
        ratio >= 50.0 and (gru_attr + lstm_detect) < dt,
        f"full {full_attr * 1e3:.1f} ms vs gru {gru_attr * 1e3:.2f} ms "
        f"(ratio {ratio:.0f} >= 50); gru + detection "
        f"{(gru_attr + lstm_detect) * 1e3:.2f} ms < {dt * 1e3:.0f} ms",
    )


# -- criterion 9: determinism -------------------------------------------


def test_stage_rerun_reproduces_hashes(desk_run, tmp_path):
    from uavguard.harness import report_hashes, reproduce

    doc = desk_run["doc"]
    hashes = []
    for run in ("a", "b"):
        root = tmp_path / run
        shutil.copytree(desk_run["root"] / "train-compare", root / "train-compare")
        manifest = reproduce("deflection-probe", doc, out_override=root)
        hashes.append({Path(p).name: h for p, h in report_hashes(manifest).items()})
    crit(
        "stage-determinism",
        hashes[0] == hashes[1] and len(hashes[0]) > 0,
        f"re-run reproduced {len(hashes[0])} artifact hash(es) exactly",
    )
