import numpy as np
import pytest

from uavguard.attack import AttackConfig
from uavguard.ddpg import build_actor
from uavguard.detect import (
    accuracy,
    background_from_states,
    build_cnn_dataset,
    build_detector,
    build_lstm_dataset,
    collect_states,
    dataset_hash,
    report_from_scores,
    score,
    stratified_split,
    train_detector,
)
from uavguard.sim import Arena, LidarConfig, SimConfig
from uavguard.xai import make_background, split_actor

LIDAR = LidarConfig(n_azimuth=32, n_elevation=8, image_azimuth_bins=32, image_elevation_bins=16)
HW = (32, 16)


def test_detector_outputs_are_probabilities():
    rng = np.random.default_rng(0)
    for kind, payload in (
        ("fcn", rng.random((3, 5, 32, 16, 2), dtype=np.float32)),
        ("cnn", rng.random((3, 5, 32, 16, 2), dtype=np.float32)),
        ("lstm", rng.standard_normal((3, 10, 48)).astype(np.float32)),
    ):
        net = build_detector(kind, HW, seed=1)
        out = net.forward({"x": payload})
        assert out.shape == (3, 1)
        assert np.all((out >= 0) & (out <= 1))


def test_zero_weight_detector_scores_half():
    net = build_detector("fcn", HW, seed=0)
    net.set_parameters({"logit/W": np.zeros((32, 1)), "logit/b": np.zeros(1)})
    s = score(net, np.random.default_rng(0).random((4, 5, 32, 16, 2), dtype=np.float32))
    assert np.allclose(s, 0.5)
    assert accuracy(s, np.array([0, 1, 0, 1])) == 0.5


def test_stratified_split_fractions():
    labels = np.array([0] * 40 + [1] * 40)
    split = stratified_split(labels, np.random.default_rng(0))
    assert len(split.val) == 12 and len(split.test) == 12 and len(split.train) == 56
    for part in (split.train, split.val, split.test):
        assert np.mean(labels[part]) == 0.5  # stratified
    joined = np.sort(np.concatenate([split.train, split.val, split.test]))
    assert np.array_equal(joined, np.arange(80))


def test_report_math():
    clean = np.array([0.1, 0.6, 0.2, 0.4])
    attacked = np.array([0.9, 0.45, 0.8, 0.7])
    rep = report_from_scores("cnn", clean, attacked)
    assert rep.false_positive_rate == 0.25
    assert rep.false_negative_rate == 0.25
    assert rep.accuracy == 0.75
    assert rep.clean_count == rep.attacked_count == 4


def test_training_learns_separable_windows():
    rng = np.random.default_rng(2)
    n = 120
    clean = rng.normal(0.0, 0.3, size=(n, 10, 48))
    attacked = rng.normal(0.0, 0.3, size=(n, 10, 48)) + 1.0
    payloads = np.concatenate([clean, attacked]).astype(np.float32)
    labels = np.array([0] * n + [1] * n, dtype=np.int32)
    net = build_detector("lstm", HW, seed=3)
    net, curves, split = train_detector(net, payloads, labels, epochs=30, seed=0)
    assert curves[-1]["val_acc"] >= 0.9
    test_acc = accuracy(score(net, payloads[split.test]), labels[split.test])
    assert test_acc >= 0.9


def test_shuffled_label_control_sits_at_chance():
    rng = np.random.default_rng(4)
    n = 150
    payloads = rng.normal(size=(2 * n, 10, 48)).astype(np.float32)
    labels = np.array([0] * n + [1] * n, dtype=np.int32)
    rng.shuffle(labels)  # no signal left
    net = build_detector("lstm", HW, seed=5)
    net, _, split = train_detector(net, payloads, labels, epochs=10, seed=1)
    test_acc = accuracy(score(net, payloads[split.test]), labels[split.test])
    assert abs(test_acc - 0.5) <= 0.15


@pytest.fixture(scope="module")
def tiny_setup():
    sim = SimConfig(horizon=40)
    arena = Arena(lidar=LIDAR)
    actor = build_actor(LIDAR, sim, seed=9)
    states = collect_states(actor, arena, sim, count=8, seed=0)
    refs = background_from_states(states, count=4)
    return sim, arena, actor, states, refs


def test_cnn_dataset_balanced_and_distinct(tiny_setup):
    sim, arena, actor, states, refs = tiny_setup
    background = make_background(actor, refs)
    payloads, labels = build_cnn_dataset(
        actor, states[:6], AttackConfig(eps=8.0, iterations=3), background, progress_every=0
    )
    assert payloads.shape == (12, 5, 32, 16, 2)
    assert labels.sum() == 6  # balanced by construction
    diffs = [np.linalg.norm(payloads[2 * i] - payloads[2 * i + 1]) for i in range(6)]
    assert np.mean([d > 0 for d in diffs]) >= 0.99


def test_cnn_dataset_reproducible(tiny_setup):
    sim, arena, actor, states, refs = tiny_setup
    background = make_background(actor, refs)
    cfg = AttackConfig(eps=4.0, iterations=2)
    a = build_cnn_dataset(actor, states[:3], cfg, background, progress_every=0)
    b = build_cnn_dataset(actor, states[:3], cfg, background, progress_every=0)
    assert dataset_hash(*a) == dataset_hash(*b)


def test_lstm_dataset_window_shape(tiny_setup):
    sim, arena, actor, states, refs = tiny_setup
    split = split_actor(actor)
    payloads, labels = build_lstm_dataset(
        actor, split, arena, sim, AttackConfig(eps=8.0, iterations=2, onset_prob=0.4),
        refs, samples_per_class=10, seed=3,
    )
    assert payloads.shape == (20, 10, 48)
    assert labels.sum() == 10
