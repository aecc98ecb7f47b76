"""Artificial potential field: goal attraction plus per-obstacle repulsion.

The attractive field acts on both forward speed and yaw rate; the repulsive
field contributes to the yaw rate only and is active inside 3 m of an
obstacle surface. Force units are abstract; `ApfGains` converts them to
velocity corrections before they are added to the agent's action.

Sign convention: positive bearing means the target is counter-clockwise of
the nose, and a positive yaw command turns counter-clockwise. An obstacle
at positive bearing therefore produces a negative yaw correction (a turn
away from it), and symmetrically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

ATTRACT_NEAR_RANGE = 5.0  # rate-change point of the attractive field
REPULSE_RANGE = 3.0  # repulsion cutoff (the equation's branch bound)
MIN_GOAL_DISTANCE = 0.1  # floor that caps the 1/d^2 singularity


@dataclass(frozen=True)
class ForceCommand:
    f_vx: float
    f_omega: float

    def __add__(self, other: "ForceCommand") -> "ForceCommand":
        return ForceCommand(self.f_vx + other.f_vx, self.f_omega + other.f_omega)


@dataclass(frozen=True)
class ApfGains:
    k_v: float = 0.1  # m/s per force unit
    k_omega: float = 0.2  # rad/s per force unit


def attractive_force(theta: float, d: float) -> ForceCommand:
    """Goal pull: strong 1/d^2 speed force inside 5 m, 1/d beyond; yaw force
    tan(2*theta/5) inside 5 m, tan^3(theta/3) beyond but only when the
    absolute bearing exceeds 90 degrees."""
    d = max(float(d), MIN_GOAL_DISTANCE)
    theta = float(theta)
    if d < ATTRACT_NEAR_RANGE:
        f_vx = 20.0 * np.cos(theta) / d**2
        f_omega = np.tan(2.0 * theta / 5.0)
    else:
        f_vx = 2.0 * np.cos(theta) / d
        f_omega = np.tan(theta / 3.0) ** 3 if abs(theta) > np.pi / 2 else 0.0
    return ForceCommand(float(f_vx), float(f_omega))


def repulsive_force(theta_ob: float, d_ob: float, dead_ahead_sign: float = 1.0) -> ForceCommand:
    """Obstacle push on the yaw rate only; zero beyond 3 m or when the
    obstacle is more than 90 degrees off the nose. An obstacle exactly dead
    ahead falls in neither branch of the defining equation; it is treated as
    the limit of the branch selected by `dead_ahead_sign`."""
    theta_ob = float(theta_ob)
    if d_ob >= REPULSE_RANGE:
        return ForceCommand(0.0, 0.0)
    if theta_ob == 0.0:
        theta_eff = 0.0
        positive = dead_ahead_sign >= 0
    else:
        theta_eff = theta_ob
        positive = theta_ob > 0
    if positive and 0 <= theta_eff < np.pi / 2:
        f_omega = -(3.0 - 3.0 * np.tan(theta_eff / 2.0))
    elif not positive and -np.pi / 2 < theta_eff <= 0:
        f_omega = -(-3.0 - 3.0 * np.tan(theta_eff / 2.0))
    else:
        f_omega = 0.0
    return ForceCommand(0.0, float(f_omega))


def total_force(goal_theta, goal_d, obstacle_relations, dead_ahead_sign: float = 1.0) -> ForceCommand:
    """Attractive force plus the sum of per-obstacle repulsions.

    `obstacle_relations` is an iterable of (bearing, surface distance).
    """
    total = attractive_force(goal_theta, goal_d)
    for theta_ob, d_ob in obstacle_relations:
        total = total + repulsive_force(theta_ob, d_ob, dead_ahead_sign)
    return total


class ApfController:
    """Per-episode APF overlay. Draws the dead-ahead tiebreak sign once per
    episode from the given rng so the unhandled theta_ob = 0 case carries no
    systematic bias across episodes."""

    def __init__(self, gains: ApfGains | None = None, rng: np.random.Generator | None = None):
        self.gains = gains or ApfGains()
        rng = rng or np.random.default_rng(0)
        self.dead_ahead_sign = 1.0 if rng.random() < 0.5 else -1.0
        self.clamp_events = 0

    def correction(self, goal_theta, goal_d, obstacle_relations) -> ForceCommand:
        f = total_force(goal_theta, goal_d, obstacle_relations, self.dead_ahead_sign)
        return ForceCommand(self.gains.k_v * f.f_vx, self.gains.k_omega * f.f_omega)

    def apply(self, action, goal_theta, goal_d, obstacle_relations, sim_config):
        """Add the scaled correction to (v, omega) and clamp to action bounds."""
        corr = self.correction(goal_theta, goal_d, obstacle_relations)
        raw = (action[0] + corr.f_vx, action[1] + corr.f_omega)
        clamped = sim_config.clamp_action(raw)
        if clamped != raw:
            self.clamp_events += 1
            log.debug("apf: correction clamped %s -> %s", raw, clamped)
        return clamped, corr
