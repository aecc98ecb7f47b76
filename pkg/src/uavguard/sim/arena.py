"""Arena geometry: bounds, start, the two candidate goals, columns, checkpoints.

Angles follow the mathematical convention throughout the package: headings
are CCW-positive radians from +x, and a positive bearing means the target
is counter-clockwise of the nose.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class LidarConfig:
    n_azimuth: int = 128
    fov_deg: float = 90.0
    n_elevation: int = 16
    elevation_span_deg: float = 30.0
    max_range: float = 10.0
    image_azimuth_bins: int = 64  # H of the depth image
    image_elevation_bins: int = 32  # W of the depth image

    def azimuth_angles(self) -> np.ndarray:
        half = np.deg2rad(self.fov_deg) / 2.0
        return np.linspace(-half, half, self.n_azimuth)

    def elevation_angles(self) -> np.ndarray:
        half = np.deg2rad(self.elevation_span_deg) / 2.0
        return np.linspace(-half, half, self.n_elevation)


@dataclass(frozen=True)
class Arena:
    bounds: tuple[float, float, float, float] = (-5.0, 25.0, -10.0, 10.0)  # xmin,xmax,ymin,ymax
    start: tuple[float, float] = (0.0, 0.0)
    goals: tuple[tuple[float, float], ...] = ((20.0, 5.0), (20.0, -5.0))
    obstacles: tuple[tuple[float, float, float], ...] = (  # (cx, cy, radius)
        (5.0, 1.6, 0.6),
        (5.0, -1.6, 0.6),
        (8.5, 2.4, 0.7),
        (8.5, -2.4, 0.7),
        (11.5, 0.0, 0.7),
        (14.0, 3.6, 0.6),
        (14.0, -3.6, 0.6),
    )
    checkpoints: tuple[float, ...] = (4.0, 8.0, 12.0, 16.0)  # downrange x lines
    goal_radius: float = 1.0
    drone_radius: float = 0.3
    lidar: LidarConfig = field(default_factory=LidarConfig)

    def __post_init__(self):
        xmin, xmax, ymin, ymax = self.bounds
        for name, (px, py) in [("start", self.start)] + [
            (f"goal {i}", g) for i, g in enumerate(self.goals)
        ]:
            if not (xmin < px < xmax and ymin < py < ymax):
                raise ValueError(f"{name} {px, py} outside bounds {self.bounds}")
        for cx, cy, r in self.obstacles:
            for name, (px, py) in [("start", self.start)] + [
                (f"goal {i}", g) for i, g in enumerate(self.goals)
            ]:
                if np.hypot(px - cx, py - cy) <= r + self.drone_radius:
                    raise ValueError(f"obstacle at {cx, cy} covers {name}")

    @property
    def center(self) -> tuple[float, float]:
        xmin, xmax, ymin, ymax = self.bounds
        return ((xmin + xmax) / 2.0, (ymin + ymax) / 2.0)

    def to_json(self) -> dict:
        return {
            "bounds": list(self.bounds),
            "start": list(self.start),
            "goals": [list(g) for g in self.goals],
            "obstacles": [list(o) for o in self.obstacles],
            "checkpoints": list(self.checkpoints),
            "goal_radius": self.goal_radius,
            "drone_radius": self.drone_radius,
            "lidar": self.lidar.__dict__,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Arena":
        return cls(
            bounds=tuple(doc["bounds"]),
            start=tuple(doc["start"]),
            goals=tuple(tuple(g) for g in doc["goals"]),
            obstacles=tuple(tuple(o) for o in doc["obstacles"]),
            checkpoints=tuple(doc["checkpoints"]),
            goal_radius=doc["goal_radius"],
            drone_radius=doc["drone_radius"],
            lidar=LidarConfig(**doc["lidar"]),
        )

    @classmethod
    def load(cls, path) -> "Arena":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=1))


def validation_arena(seed: int | None = None, lidar: LidarConfig | None = None) -> Arena:
    """Held-out course. Without a seed: one fixed unseen layout. With a seed:
    a randomized layout (unseen column count, radii and placement), so
    completion rates over many seeded episodes vary smoothly instead of
    collapsing onto the two goal choices of a deterministic policy."""
    lidar = lidar or LidarConfig()
    if seed is None:
        return Arena(
            obstacles=(
                (5.0, 1.0, 0.5),
                (7.5, -2.0, 0.5),
                (10.0, 2.3, 0.5),
                (13.0, -3.2, 0.5),
            ),
            lidar=lidar,
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(86,)))
    keepout = [(0.0, 0.0), (20.0, 5.0), (20.0, -5.0)]
    columns: list[tuple[float, float, float]] = []
    n = int(rng.integers(6, 9))
    tries = 0
    while len(columns) < n and tries < 500:
        tries += 1
        x = float(rng.uniform(6.0, 15.0))
        y = float(rng.uniform(-5.0, 5.0))
        r = float(rng.uniform(0.85, 1.1))
        if any(np.hypot(x - px, y - py) < r + 2.0 for px, py in keepout):
            continue
        # 1.4 m surface clearance keeps every layout passable for the overlay
        if any(np.hypot(x - cx, y - cy) < r + cr + 1.4 for cx, cy, cr in columns):
            continue
        columns.append((x, y, r))
    return Arena(obstacles=tuple(columns), lidar=lidar)


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    arr = np.asarray(a, dtype=float)
    out = -(np.mod(-arr + np.pi, 2.0 * np.pi) - np.pi)
    return float(out) if out.ndim == 0 else out
