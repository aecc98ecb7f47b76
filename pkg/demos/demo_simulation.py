#!/usr/bin/env python3
"""A first look at the arena: reset an episode, fly a hand-written
bearing-chasing controller, and watch the reward cases fire."""

import numpy as np

from uavguard.sim import Arena, Episode, SimConfig

arena = Arena()
sim = SimConfig()
print(f"arena bounds {arena.bounds}, goals {arena.goals}")
print(f"{len(arena.obstacles)} columns, checkpoints at x = {arena.checkpoints}")

ep = Episode(arena, sim, seed=7)
obs = ep.reset()
print(f"\nreset: goal #{ep.goal_index} at {ep.goal}, distance {obs.distance:.2f} m, "
      f"depth stack {obs.depth_stack.shape}")

total = 0.0
while True:
    # naive pilot: full speed, steer proportionally to the goal bearing
    action = (sim.v_max, 2.0 * obs.bearing)
    out = ep.step(action)
    total += out.reward
    if out.checkpoint is not None:
        print(f"step {ep.steps:3d}: crossed checkpoint {out.checkpoint} "
              f"(+{out.reward:.2f})")
    obs = out.observation
    if out.terminal:
        break

print(f"\nepisode ended: {out.cause} after {ep.steps} steps, return {total:.2f}")
print("(the naive pilot ignores the depth image, so columns are a matter of luck)")

img = obs.depth_stack[-1]
print(f"\nlast depth image {img.shape}: min {img.min():.2f}, mean {img.mean():.2f}")
band = img[::8, img.shape[1] // 2]
print("downsampled azimuth band:", " ".join(f"{v:.1f}" for v in band))
