"""Episode lifecycle: yaw-mode kinematics, reward cases, observations.

Reward cases, in precedence order (exactly one fires per step):
  +5 on reaching the goal radius, -2 on any dead end (collision,
  out-of-bounds, timeout), 2*(1 + C/N_C) on the first crossing of
  checkpoint line C, otherwise the signed progress d_{t-1} - d_t
  (positive when the drone closed distance to the goal).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arena import Arena, wrap_angle
from .lidar import observe_depth

STACK_DEPTH = 5

SUCCESS = "success"
COLLISION = "collision"
OUT_OF_BOUNDS = "out-of-bounds"
TIMEOUT = "timeout"
RUNNING = "running"


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.25
    v_max: float = 2.0
    omega_max: float = float(np.pi / 2)
    horizon: int = 200

    def clamp_action(self, action):
        v, w = float(action[0]), float(action[1])
        return (
            min(max(v, 0.0), self.v_max),
            min(max(w, -self.omega_max), self.omega_max),
        )


@dataclass
class DroneState:
    position: np.ndarray
    heading: float
    v_x: float = 0.0
    omega: float = 0.0


@dataclass
class Observation:
    depth_stack: np.ndarray  # (5, H, W) float32, oldest first
    bearing: float
    distance: float

    def copy(self) -> "Observation":
        return Observation(self.depth_stack.copy(), self.bearing, self.distance)


@dataclass
class StepOutcome:
    observation: Observation
    reward: float
    terminal: bool
    cause: str
    checkpoint: int | None = None


@dataclass
class Episode:
    """One seeded episode. `reset` picks the goal; `step` advances physics."""

    arena: Arena
    config: SimConfig = field(default_factory=SimConfig)
    seed: int = 0

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)
        self._done = True
        self.state: DroneState | None = None
        self.goal_index: int | None = None
        self.steps = 0

    # -- lifecycle ----------------------------------------------------

    def reset(self) -> Observation:
        cx, cy = self.arena.center
        sx, sy = self.arena.start
        heading = float(np.arctan2(cy - sy, cx - sx))
        self.state = DroneState(position=np.array([sx, sy], dtype=float), heading=heading)
        self.goal_index = int(self._rng.integers(0, len(self.arena.goals)))
        self.steps = 0
        self._done = False
        self._crossed = [False] * len(self.arena.checkpoints)
        frame = observe_depth(self.state.position, self.state.heading, self.arena)
        stack = np.repeat(frame[None], STACK_DEPTH, axis=0)
        self._obs = Observation(stack, *self._goal_relation())
        return self._obs.copy()

    @property
    def goal(self):
        return self.arena.goals[self.goal_index]

    def _goal_relation(self):
        gx, gy = self.goal
        px, py = self.state.position
        bearing = wrap_angle(np.arctan2(gy - py, gx - px) - self.state.heading)
        distance = float(np.hypot(gx - px, gy - py))
        return bearing, distance

    def obstacle_relations(self):
        """(bearing, surface distance) per column, for the potential field."""
        px, py = self.state.position
        out = []
        for cx, cy, r in self.arena.obstacles:
            bearing = wrap_angle(np.arctan2(cy - py, cx - px) - self.state.heading)
            d = max(float(np.hypot(cx - px, cy - py)) - r, 0.0)
            out.append((bearing, d))
        return out

    def step(self, action) -> StepOutcome:
        if self._done:
            raise RuntimeError("step called on a finished episode")
        cfg = self.config
        v, w = cfg.clamp_action(action)
        st = self.state
        prev_distance = self._goal_relation()[1]
        prev_x = float(st.position[0])

        st.heading = wrap_angle(st.heading + w * cfg.dt)
        st.position = st.position + v * cfg.dt * np.array([np.cos(st.heading), np.sin(st.heading)])
        st.v_x, st.omega = v, w
        self.steps += 1

        bearing, distance = self._goal_relation()
        cause = RUNNING
        if distance <= self.arena.goal_radius:
            cause = SUCCESS
        elif self._collided():
            cause = COLLISION
        elif self._out_of_bounds():
            cause = OUT_OF_BOUNDS
        elif self.steps >= cfg.horizon:
            cause = TIMEOUT

        checkpoint = None
        if cause in (RUNNING, SUCCESS):
            x_now = float(st.position[0])
            for i, line in enumerate(self.arena.checkpoints):
                if not self._crossed[i] and prev_x < line <= x_now:
                    self._crossed[i] = True
                    checkpoint = i + 1  # checkpoint number C is 1-based

        if cause == SUCCESS:
            reward = 5.0
        elif cause in (COLLISION, OUT_OF_BOUNDS, TIMEOUT):
            reward = -2.0
        elif checkpoint is not None:
            reward = 2.0 * (1.0 + checkpoint / len(self.arena.checkpoints))
        else:
            reward = prev_distance - distance

        frame = observe_depth(st.position, st.heading, self.arena)
        stack = np.concatenate([self._obs.depth_stack[1:], frame[None]], axis=0)
        self._obs = Observation(stack, bearing, distance)
        self._done = cause != RUNNING
        return StepOutcome(self._obs.copy(), reward, self._done, cause, checkpoint)

    # -- termination predicates ----------------------------------------

    def _collided(self) -> bool:
        px, py = self.state.position
        for cx, cy, r in self.arena.obstacles:
            if np.hypot(cx - px, cy - py) <= r + self.arena.drone_radius:
                return True
        return False

    def _out_of_bounds(self) -> bool:
        xmin, xmax, ymin, ymax = self.arena.bounds
        px, py = self.state.position
        rad = self.arena.drone_radius
        return not (xmin + rad < px < xmax - rad and ymin + rad < py < ymax - rad)
