"""Gradient-sign perturbation of the actor's depth input.

The attack budget eps is given in 8-bit-equivalent units: eps=1 moves each
pixel by at most 1/255 of the normalized depth range. Only the depth stack
is perturbed; bearing and distance are never touched.

The attack ascends the squared difference between the perturbed yaw output
and the clean yaw decision. That loss has a zero gradient exactly at the
clean point, so while the deviation is still below a tolerance the ascent
direction falls back to pushing the yaw output against the clean decision
(tau = -sign(yaw_clean), or +1 at zero); once a deviation exists the
squared-difference gradient takes over and keeps amplifying it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .apf import ApfGains
from .ddpg.nets import obs_to_feeds
from .nn import Network, Tape
from .sim import Arena, Episode, SUCCESS, SimConfig

log = logging.getLogger(__name__)

EIGHT_BIT = 255.0
YAW = 1
_DEV_TOL = 1e-9
SUCCESS_FRACTION = 0.33  # of omega_max


@dataclass
class AttackConfig:
    eps: float = 1.0  # 1/255 units
    iterations: int = 20
    step_eps: float | None = None  # per-iteration step in eps units; default 1/iterations
    onset_prob: float = 0.2
    duration: int = 5

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.duration < 1:
            raise ValueError("duration must be >= 1")

    @property
    def eps_norm(self) -> float:
        return self.eps / EIGHT_BIT

    def to_json(self) -> dict:
        return {
            "eps": self.eps,
            "iterations": self.iterations,
            "step_eps": self.step_eps,
            "onset_prob": self.onset_prob,
            "duration": self.duration,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AttackConfig":
        return cls(**doc)


@dataclass
class AttackResult:
    perturbed_stack: np.ndarray
    clean_action: np.ndarray
    attacked_action: np.ndarray
    deflection_deg_s: float
    success: bool


def attack_loss_grad(actor: Network, feeds: dict, y_clean: np.ndarray, tau=None):
    """Gradient of the attack loss w.r.t. the image input, batched.

    Returns (grad, deviation) where deviation = yaw(x') - y_clean per row.
    `tau` overrides the bootstrap push direction (+1 pushes yaw up); a
    sustained attacker keeps it fixed across a burst, and it also breaks the
    zero-gradient tie exactly at the clean decision.
    """
    tape = Tape()
    out = actor.forward(feeds, tape)
    deviation = out[:, YAW] - y_clean
    if tau is None:
        tau = np.where(np.abs(y_clean) > 0, -np.sign(y_clean), 1.0)
    upstream = np.zeros_like(out)
    upstream[:, YAW] = np.where(np.abs(deviation) < _DEV_TOL, tau, 2.0 * deviation)
    grads = actor.backward(tape, upstream)
    g = grads.by_input["image"]
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("attack aborted: non-finite input gradient")
    return g, deviation


def fgsm(actor: Network, feeds: dict, eps: float) -> np.ndarray:
    """Single-step sign perturbation of the depth stack; eps in 1/255 units."""
    return bim(actor, feeds, eps, iterations=1)


def bim(actor: Network, feeds: dict, eps: float, iterations: int,
        step_eps: float | None = None, tau=None) -> np.ndarray:
    """Iterated sign steps, each excursion projected back into the eps-ball
    around the clean stack and the [0, 1] pixel box."""
    cfg = AttackConfig(eps=eps, iterations=iterations, step_eps=step_eps)
    x0 = np.asarray(feeds["image"], dtype=np.float32)
    if cfg.eps == 0.0:
        return x0.copy()
    y_clean = actor.forward(feeds)[:, YAW]
    step = cfg.eps_norm * (cfg.step_eps if cfg.step_eps is not None else 1.0 / iterations)
    x = x0.copy()
    for _ in range(iterations):
        g, _ = attack_loss_grad(actor, {**feeds, "image": x}, y_clean, tau=tau)
        x = x + step * np.sign(g, dtype=np.float32)
        x = np.clip(x, x0 - cfg.eps_norm, x0 + cfg.eps_norm)
        x = np.clip(x, 0.0, 1.0)
    return x.astype(np.float32)


def deflect(actor: Network, feeds: dict, cfg: AttackConfig, sim: SimConfig) -> AttackResult:
    clean = actor.forward(feeds)[0]
    perturbed = bim(actor, feeds, cfg.eps, cfg.iterations, cfg.step_eps)
    attacked = actor.forward({**feeds, "image": perturbed})[0]
    d_omega = abs(float(attacked[YAW] - clean[YAW]))
    return AttackResult(
        perturbed_stack=perturbed,
        clean_action=clean,
        attacked_action=attacked,
        deflection_deg_s=float(np.degrees(d_omega)),
        success=d_omega >= SUCCESS_FRACTION * sim.omega_max,
    )


# -- probe scenes ------------------------------------------------------


def probe_feeds(arena_lidar, gap: float, bearing: float, column_radius: float = 0.5,
                goal_distance: float = 10.0, approach_speed: float = 2.0,
                dt: float = 0.25):
    """Observation of a lone column dead ahead at surface distance `gap`,
    with the goal at the given bearing. Walls are out of range. The frame
    stack replays a straight approach at `approach_speed`, matching how the
    drone actually encounters obstacles in flight."""
    from .sim import Observation
    from .sim.lidar import observe_depth

    probe_arena = Arena(
        bounds=(-50.0, 50.0, -50.0, 50.0),
        start=(0.0, 0.0),
        goals=((40.0, 5.0), (40.0, -5.0)),
        obstacles=((gap + column_radius, 0.0, column_radius),),
        lidar=arena_lidar,
    )
    frames = [
        observe_depth((-approach_speed * dt * k, 0.0), 0.0, probe_arena, arena_lidar)
        for k in range(4, -1, -1)
    ]
    return obs_to_feeds(Observation(np.stack(frames), bearing, goal_distance))


def deflection_probe(actor: Network, lidar, cfg: AttackConfig, sim: SimConfig,
                     gaps=(1.0, 1.5, 2.0, 2.5, 3.0),
                     bearings_deg=(-30, -20, -10, 0, 10, 20, 30)):
    """Grid of yaw deflections (deg/s) near a column; rows are gaps."""
    rows = []
    for gap in gaps:
        row = []
        for b in bearings_deg:
            feeds = probe_feeds(lidar, gap, float(np.deg2rad(b)))
            res = deflect(actor, feeds, cfg, sim)
            row.append(res.deflection_deg_s)
        rows.append(row)
    return {"gaps": list(gaps), "bearings_deg": list(bearings_deg), "deflection": rows}


def sweep(actor: Network, probe_states: list[dict], eps_values, iteration_values,
          sim: SimConfig):
    """Attack success rate over an (eps, iterations) grid; the same probe
    states are reused in every cell (common random numbers)."""
    grid = []
    for eps in eps_values:
        row = []
        for iters in iteration_values:
            cfg = AttackConfig(eps=eps, iterations=int(iters))
            hits = [deflect(actor, feeds, cfg, sim).success for feeds in probe_states]
            row.append(float(np.mean(hits)))
        grid.append(row)
    return {"eps": list(eps_values), "iterations": list(iteration_values), "success": grid}


# -- sustained campaigns ------------------------------------------------


def run_attacked_episode(actor: Network, arena: Arena, sim: SimConfig, seed: int,
                         cfg: AttackConfig, rng: np.random.Generator,
                         observer=None):
    """One rollout with random-onset bursts of `duration` attacked steps.
    The potential field stays off, mirroring an attacker-degraded platform."""
    env = Episode(arena, sim, seed=seed)
    obs = env.reset()
    total = 0.0
    burst_left = 0
    burst_tau = 1.0
    attacked_steps = 0
    while True:
        feeds = obs_to_feeds(obs)
        if burst_left == 0 and cfg.eps > 0 and rng.random() < cfg.onset_prob:
            burst_left = cfg.duration
            # commit to one push direction for the whole burst: against the
            # current intent, or a coin flip when the drone is flying straight
            yaw_now = float(actor.forward(feeds)[0, YAW])
            burst_tau = -np.sign(yaw_now) if yaw_now != 0 else (1.0 if rng.random() < 0.5 else -1.0)
        attacked = burst_left > 0
        if attacked:
            burst_left -= 1
            attacked_steps += 1
            feeds = {**feeds, "image": bim(actor, feeds, cfg.eps, cfg.iterations,
                                           cfg.step_eps, tau=burst_tau)}
        action = actor.forward(feeds)[0]
        out = env.step(sim.clamp_action(action))
        if observer is not None:
            observer(env, obs, action, attacked, out)
        total += out.reward
        obs = out.observation
        if out.terminal:
            return {
                "cause": out.cause,
                "steps": env.steps,
                "reward": total,
                "success": out.cause == SUCCESS,
                "attacked_steps": attacked_steps,
            }


def campaign(actor: Network, arena, sim: SimConfig, cfg: AttackConfig,
             episodes: int, seed: int = 0):
    """Paired clean/attacked rollouts on the same episode seeds (APF off in
    both; only the perturbation differs). `arena` may be a fixed Arena or a
    callable episode_seed -> Arena. Returns completion statistics."""
    factory = arena if callable(arena) else (lambda _s: arena)
    clean_cfg = AttackConfig(eps=0.0, iterations=1, onset_prob=cfg.onset_prob,
                             duration=cfg.duration)
    clean, attacked = [], []
    for i in range(episodes):
        ep_arena = factory(seed + i)
        rng_clean = np.random.default_rng((seed, i, 0))
        rng_attack = np.random.default_rng((seed, i, 0))  # same onset stream
        clean.append(run_attacked_episode(actor, ep_arena, sim, seed + i, clean_cfg, rng_clean))
        attacked.append(run_attacked_episode(actor, ep_arena, sim, seed + i, cfg, rng_attack))
    return {
        "episodes": episodes,
        "clean_rate": float(np.mean([r["success"] for r in clean])),
        "attacked_rate": float(np.mean([r["success"] for r in attacked])),
        "clean": clean,
        "attacked": attacked,
    }
