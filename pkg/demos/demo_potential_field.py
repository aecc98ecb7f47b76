#!/usr/bin/env python3
"""The potential field on its own: force tables, and the same naive pilot
from demo_simulation now flying with the overlay."""

import numpy as np

from uavguard.apf import ApfController, ApfGains, attractive_force, repulsive_force
from uavguard.sim import Arena, Episode, SimConfig

print("attractive force (bearing 0):")
for d in (1, 2, 4, 5, 8, 15):
    f = attractive_force(0.0, d)
    print(f"  d = {d:4.1f} m -> f_vx {f.f_vx:6.2f}")

print("\nrepulsive yaw force at 2 m:")
for deg in (-60, -30, -10, 0, 10, 30, 60):
    f = repulsive_force(np.deg2rad(deg), 2.0, dead_ahead_sign=1.0)
    print(f"  bearing {deg:+4d} deg -> f_omega {f.f_omega:+6.2f}")
print("(positive obstacle bearing pushes negative: always a turn away)")

arena = Arena()
sim = SimConfig()
# a gentle pilot: the overlay can only nudge, so it needs headroom to act
for label, use_apf in (("bare pilot", False), ("pilot + APF", True)):
    wins = 0
    for seed in range(20):
        ep = Episode(arena, sim, seed=seed)
        obs = ep.reset()
        apf = ApfController(ApfGains(), np.random.default_rng(seed)) if use_apf else None
        while True:
            action = (1.0, 0.5 * obs.bearing)
            if apf is not None:
                action, _ = apf.apply(action, obs.bearing, obs.distance,
                                      ep.obstacle_relations(), sim)
            out = ep.step(action)
            obs = out.observation
            if out.terminal:
                wins += out.cause == "success"
                break
    print(f"{label}: {wins}/20 completions")
