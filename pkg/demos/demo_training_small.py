#!/usr/bin/env python3
"""A miniature end-to-end training run (small image, short horizon, few
episodes). Nothing useful is learned this quickly; the point is to watch the
loop: warm-up, prioritized sampling, updates, soft targets."""

import logging

logging.basicConfig(level=logging.INFO, format="%(message)s")

from uavguard.ddpg import TrainConfig, train
from uavguard.sim import Arena, LidarConfig, SimConfig

lidar = LidarConfig(n_azimuth=32, n_elevation=8,
                    image_azimuth_bins=32, image_elevation_bins=16)
cfg = TrainConfig(
    episodes=8,
    warmup=60,
    buffer_size=2000,
    batch_size=8,
    schedule_steps=500,
    checkpoint_every=10**9,
)
agent, records = train(
    Arena(lidar=lidar), cfg, apf_enabled=True, seed=1,
    sim=SimConfig(horizon=60), progress_every=1,
)

print("\nepisode  steps  reward   cause")
for r in records:
    print(f"{r.episode:7d}  {r.steps:5d}  {r.reward:6.2f}   {r.cause}")
print(f"\ngradient updates taken: {agent.critic_opt.t}")
