#!/usr/bin/env python3
"""Shapley attribution on a model small enough to enumerate exactly, then the
fast layer-wise path on the same model, then the actor split that makes
per-step attribution cheap."""

import numpy as np

from uavguard.ddpg import build_actor
from uavguard.nn import Dense, Network, ReLU
from uavguard.sim import Arena, SimConfig
from uavguard.xai import (
    deep_attribution,
    exact_shapley,
    gru_background,
    gru_layer_shap,
    make_background,
    split_actor,
)

rng = np.random.default_rng(0)
net = Network(dtype=np.float64)
net.add_input("x", (6,))
net.add("h", Dense(8), "x")
net.add("a", ReLU(), "h")
net.add("out", Dense(1), "a")
net.build(rng)

x = rng.normal(size=6)
bg = rng.normal(size=(10, 6))
phi = exact_shapley(lambda X: net.forward({"x": X})[:, 0], x, bg)
frame = deep_attribution(net, {"x": x[None]}, make_background(net, {"x": bg}), head=0)
fast = frame.values["x"]

print("feature   exact Phi    layer-wise")
for i in range(6):
    print(f"{i:7d}   {phi[i]:+9.4f}   {fast[i]:+9.4f}")
print(f"\ncompleteness: sum Phi = {fast.sum():+.6f}, "
      f"f(x) - mean f(bg) = {frame.output - frame.baseline:+.6f}")

arena = Arena()
actor = build_actor(arena.lidar, SimConfig(), seed=3)
split = split_actor(actor)
print(f"\nactor split: image half emits {split.first_half.layers()['gru'].out_shape[0]} values")

refs = {
    "image": rng.random((15, 5, 64, 32, 1), dtype=np.float32),
    "pos": rng.normal(size=(15, 2)).astype(np.float32),
}
cheap_bg = gru_background(split, refs)
obs_feeds = {"image": rng.random((1, 5, 64, 32, 1), dtype=np.float32),
             "pos": rng.normal(size=(1, 2)).astype(np.float32)}
cheap = gru_layer_shap(split, obs_feeds, cheap_bg)
print(f"48-value yaw attribution: sum {cheap.values['gru_out'].sum():+.4f}, "
      f"bearing {cheap.values['pos'][0]:+.4f}, distance {cheap.values['pos'][1]:+.4f}")
print(f"completeness error: {cheap.completeness_error():.2e}")
