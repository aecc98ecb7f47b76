"""DDPG agent: exploration noise, TD updates with PER weights, soft targets."""

from __future__ import annotations

import logging

import numpy as np

from ..nn import Adam, Network, Tape
from ..sim import Observation, SimConfig
from ..sim.arena import LidarConfig
from .nets import (
    action_feature,
    action_feature_grad_scale,
    batch_feeds,
    build_actor,
    build_critic,
    obs_to_feeds,
)

log = logging.getLogger(__name__)


class OUNoise:
    """Ornstein-Uhlenbeck process per action dimension; sigma is expressed as
    a fraction of each dimension's range."""

    def __init__(self, sim: SimConfig, theta=0.15, sigma=0.2, rng=None):
        self.theta = theta
        self.ranges = np.array([sim.v_max, 2.0 * sim.omega_max])
        self.sigma = sigma * self.ranges
        self.rng = rng or np.random.default_rng(0)
        self.state = np.zeros(2)

    def reset(self):
        self.state = np.zeros(2)

    def sample(self, scale: float = 1.0) -> np.ndarray:
        self.state = self.state - self.theta * self.state + self.sigma * self.rng.normal(size=2)
        return scale * self.state


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float):
    if max_norm <= 0:
        return grads
    total = np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values()))
    if total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return grads


class DdpgAgent:
    def __init__(
        self,
        lidar: LidarConfig,
        sim: SimConfig,
        gamma=0.99,
        actor_lr=1e-4,
        critic_lr=1e-3,
        grad_clip=5.0,
        seed=0,
    ):
        self.sim = sim
        self.gamma = gamma
        self.grad_clip = grad_clip
        self.actor = build_actor(lidar, sim, seed=seed)
        self.critic = build_critic(lidar, sim, seed=seed + 1)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = Adam(self.actor.parameters_grads(), lr=actor_lr)
        self.critic_opt = Adam(self.critic.parameters_grads(), lr=critic_lr)
        self.dropped_transitions = 0

    # -- acting --------------------------------------------------------

    def act(self, obs: Observation, noise: OUNoise | None = None, noise_scale: float = 1.0):
        a = self.actor.forward(obs_to_feeds(obs))[0].astype(np.float64)
        if noise is not None:
            a = a + noise.sample(noise_scale)
        return np.array(self.sim.clamp_action(a))

    # -- learning --------------------------------------------------------

    def td_errors(self, batch) -> np.ndarray:
        """delta_j = r + gamma * Q'(s', mu'(s')) - Q(s, a), zero bootstrap at terminal."""
        feeds_s1 = batch_feeds(batch["images_s1"], batch["pos_s1"])
        a1 = self.target_actor.forward(feeds_s1)
        feeds_s1["action"] = action_feature(a1, self.sim)
        q1 = self.target_critic.forward(feeds_s1)[:, 0]
        y = batch["rewards"] + self.gamma * (~batch["terminals"]) * q1
        feeds_s = batch_feeds(batch["images_s"], batch["pos_s"])
        feeds_s["action"] = action_feature(batch["actions"], self.sim)
        q = self.critic.forward(feeds_s)[:, 0]
        return y - q

    def td_update(self, batch, weights: np.ndarray):
        """One critic + actor step on a prioritized minibatch. Returns the
        weighted critic loss, the new priorities' TD errors, and the mean Q."""
        k = len(weights)
        feeds_s1 = batch_feeds(batch["images_s1"], batch["pos_s1"])
        a1 = self.target_actor.forward(feeds_s1)
        feeds_s1["action"] = action_feature(a1, self.sim)
        q1 = self.target_critic.forward(feeds_s1)[:, 0]
        y = batch["rewards"] + self.gamma * (~batch["terminals"]) * q1

        feeds_s = batch_feeds(batch["images_s"], batch["pos_s"])
        feeds_s["action"] = action_feature(batch["actions"], self.sim)
        tape_c = Tape()
        q = self.critic.forward(feeds_s, tape_c)[:, 0]
        delta = y - q
        bad = ~np.isfinite(delta)
        if bad.any():
            self.dropped_transitions += int(bad.sum())
            log.warning("dropping %d transitions with non-finite TD error", bad.sum())
            delta = np.where(bad, 0.0, delta)
            weights = np.where(bad, 0.0, weights)
        loss = float(np.mean(weights * delta**2))

        upstream = (-2.0 * weights * delta / k)[:, None]
        grads = self.critic.backward(tape_c, upstream)
        clip_gradients(grads.by_param, self.grad_clip)
        self.critic_opt.step(self.critic.parameters(), grads.by_param)

        # actor ascends (1/K) sum dQ/da * dmu/dnu
        tape_a = Tape()
        a_pred = self.actor.forward(feeds_s, tape_a)
        feeds_q = dict(feeds_s)
        feeds_q["action"] = action_feature(a_pred, self.sim)
        tape_q = Tape()
        self.critic.forward(feeds_q, tape_q)
        dq_da = self.critic.backward(
            tape_q, np.full((k, 1), 1.0 / k, dtype=np.float32), wanted_inputs={"action"}
        ).by_input["action"]
        dq_da_raw = dq_da * action_feature_grad_scale(self.sim)
        agrads = self.actor.backward(tape_a, -dq_da_raw)
        clip_gradients(agrads.by_param, self.grad_clip)
        self.actor_opt.step(self.actor.parameters(), agrads.by_param)

        return {"critic_loss": loss, "td_errors": delta, "q_mean": float(q.mean())}

    def soft_update(self, tau: float):
        for target, online in (
            (self.target_actor, self.actor),
            (self.target_critic, self.critic),
        ):
            tp = target.parameters()
            op = online.parameters()
            for key, tv in tp.items():
                tv *= 1.0 - tau
                tv += tau * op[key]
