"""The training loop: explore, add the potential-field correction, store the
pre-overlay action, sample by priority, update, soft-update targets.

Warm-up steps only fill the buffer (no gradient updates). Exploration noise
and the importance-sampling exponent anneal linearly over `schedule_steps`.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..apf import ApfController, ApfGains
from ..nn import save_network
from ..sim import Arena, Episode, SUCCESS, SimConfig
from .agent import DdpgAgent, OUNoise
from .replay import ReplayBuffer

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    episodes: int = 1500
    # gamma 0.99 makes the telescoping progress reward speed-indifferent and
    # the learned policy crawls; 0.9 restores full-speed flight
    gamma: float = 0.9
    tau: float = 0.01
    batch_size: int = 16
    buffer_size: int = 50_000
    warmup: int = 5000
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    alpha: float = 0.6
    beta0: float = 0.4
    beta_final: float = 1.0
    priority_eps: float = 1e-3
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    noise_floor: float = 0.1
    schedule_steps: int = 25_000
    grad_clip: float = 5.0
    checkpoint_every: int = 100
    apf_gains: ApfGains = field(default_factory=ApfGains)

    def to_json(self) -> dict:
        d = asdict(self)
        d["apf_gains"] = asdict(self.apf_gains)
        return d

    @classmethod
    def from_json(cls, doc: dict) -> "TrainConfig":
        doc = dict(doc)
        gains = doc.pop("apf_gains", None)
        cfg = cls(**doc)
        if gains:
            cfg.apf_gains = ApfGains(**gains)
        return cfg


@dataclass
class EpisodeRecord:
    episode: int
    steps: int
    total_steps: int
    reward: float
    success: bool
    cause: str
    rolling_success: float


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    env_s, noise_s, sample_s, apf_s, net_s = ss.spawn(5)
    return {
        "env_seed": int(env_s.generate_state(1)[0] % (2**31)),
        "noise": np.random.default_rng(noise_s),
        "sample": np.random.default_rng(sample_s),
        "apf": np.random.default_rng(apf_s),
        "net_seed": int(net_s.generate_state(1)[0] % (2**31)),
    }


def train(
    arena: Arena,
    cfg: TrainConfig,
    apf_enabled: bool,
    seed: int = 0,
    sim: SimConfig | None = None,
    out_dir=None,
    progress_every: int = 50,
):
    """Run the full loop; returns (agent, list of EpisodeRecord)."""
    sim = sim or SimConfig()
    streams = _streams(seed)
    env = Episode(arena, sim, seed=streams["env_seed"])
    agent = DdpgAgent(
        arena.lidar,
        sim,
        gamma=cfg.gamma,
        actor_lr=cfg.actor_lr,
        critic_lr=cfg.critic_lr,
        grad_clip=cfg.grad_clip,
        seed=streams["net_seed"],
    )
    frame_shape = (arena.lidar.image_azimuth_bins, arena.lidar.image_elevation_bins)
    buffer = ReplayBuffer(
        cfg.buffer_size,
        frame_shape,
        alpha=cfg.alpha,
        priority_eps=cfg.priority_eps,
        warmup=min(cfg.warmup, cfg.buffer_size),
    )
    noise = OUNoise(sim, theta=cfg.ou_theta, sigma=cfg.ou_sigma, rng=streams["noise"])

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    records: list[EpisodeRecord] = []
    recent: list[bool] = []
    total_steps = 0
    bad_losses = 0

    for episode in range(1, cfg.episodes + 1):
        noise.reset()
        apf = ApfController(cfg.apf_gains, streams["apf"]) if apf_enabled else None
        obs = env.reset()
        fid = buffer.add_frame(obs.depth_stack[-1])
        ids = (fid,) * 5
        ep_reward = 0.0
        cause = "running"
        while True:
            frac = min(1.0, total_steps / cfg.schedule_steps)
            noise_scale = 1.0 + (cfg.noise_floor - 1.0) * frac
            beta = cfg.beta0 + (cfg.beta_final - cfg.beta0) * frac

            action = agent.act(obs, noise, noise_scale)
            if apf is not None:
                exec_action, _ = apf.apply(
                    action, obs.bearing, obs.distance, env.obstacle_relations(), sim
                )
            else:
                exec_action = sim.clamp_action(action)
            out = env.step(exec_action)

            nid = buffer.add_frame(out.observation.depth_stack[-1])
            ids1 = ids[1:] + (nid,)
            buffer.add(
                ids,
                ids1,
                (obs.bearing, obs.distance),
                (out.observation.bearing, out.observation.distance),
                action,
                out.reward,
                out.terminal,
            )
            total_steps += 1
            ep_reward += out.reward

            if total_steps > cfg.warmup:
                idx, weights, batch = buffer.sample(cfg.batch_size, beta, streams["sample"])
                stats = agent.td_update(batch, weights)
                buffer.update_priorities(idx, stats["td_errors"])
                agent.soft_update(cfg.tau)
                if not np.isfinite(stats["critic_loss"]):
                    bad_losses += 1
                    if bad_losses >= 3:
                        if out_dir is not None:
                            save_network(out_dir / "actor_diverged.uavw", agent.actor)
                        raise TrainingDiverged(
                            f"non-finite critic loss for {bad_losses} consecutive batches"
                        )
                else:
                    bad_losses = 0

            obs = out.observation
            ids = ids1
            if out.terminal:
                cause = out.cause
                break

        success = cause == SUCCESS
        recent.append(success)
        recent = recent[-10:]
        rolling = float(np.mean(recent))
        records.append(
            EpisodeRecord(episode, env.steps, total_steps, ep_reward, success, cause, rolling)
        )
        if progress_every and episode % progress_every == 0:
            log.info(
                "episode %d: steps=%d total=%d reward=%.2f rolling10=%.2f",
                episode, env.steps, total_steps, ep_reward, rolling,
            )
        if out_dir is not None and episode % cfg.checkpoint_every == 0:
            save_network(out_dir / f"actor_ep{episode}.uavw", agent.actor)

    if out_dir is not None:
        opt_cfg = {"train": cfg.to_json(), "apf_enabled": apf_enabled, "seed": seed,
                   "init": "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), head +-3e-3",
                   "adam": {"actor": agent.actor_opt.config(), "critic": agent.critic_opt.config()}}
        save_network(out_dir / "actor.uavw", agent.actor, opt_cfg)
        save_network(out_dir / "critic.uavw", agent.critic, opt_cfg)
        write_training_log(out_dir / "training_log.csv", records)
    return agent, records


def write_training_log(path, records: list[EpisodeRecord]):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "steps", "total_steps", "reward", "success", "rolling_success"])
        for r in records:
            writer.writerow(
                [r.episode, r.steps, r.total_steps, f"{r.reward:.6f}", int(r.success),
                 f"{r.rolling_success:.3f}"]
            )
    return path


def run_episode(actor, arena: Arena, sim: SimConfig, seed: int, apf_gains: ApfGains | None = None,
                observer=None):
    """Deterministic rollout of a frozen actor; optional APF overlay.
    `observer(env, obs, action, exec_action, out, apf_corr)` is called per step."""
    from ..apf import ForceCommand
    from .nets import obs_to_feeds  # local import to avoid cycle in doc builds

    env = Episode(arena, sim, seed=seed)
    obs = env.reset()
    apf = ApfController(apf_gains, np.random.default_rng(seed)) if apf_gains is not None else None
    no_corr = ForceCommand(0.0, 0.0)
    total = 0.0
    while True:
        action = actor.forward(obs_to_feeds(obs))[0]
        if apf is not None:
            exec_action, corr = apf.apply(
                action, obs.bearing, obs.distance, env.obstacle_relations(), sim
            )
        else:
            exec_action, corr = sim.clamp_action(action), no_corr
        out = env.step(exec_action)
        if observer is not None:
            observer(env, obs, action, exec_action, out, corr)
        total += out.reward
        obs = out.observation
        if out.terminal:
            return {"cause": out.cause, "steps": env.steps, "reward": total,
                    "success": out.cause == SUCCESS}


def evaluate(actor, arena, sim: SimConfig, episodes: int, seed: int = 0,
             apf_gains: ApfGains | None = None):
    """Success rate of a frozen actor over seeded episodes. `arena` is either
    a fixed Arena or a callable episode_seed -> Arena (validation suites)."""
    factory = arena if callable(arena) else (lambda _s: arena)
    results = [
        run_episode(actor, factory(seed + i), sim, seed=seed + i, apf_gains=apf_gains)
        for i in range(episodes)
    ]
    rate = float(np.mean([r["success"] for r in results]))
    return rate, results
