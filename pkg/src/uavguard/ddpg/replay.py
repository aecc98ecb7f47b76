"""Prioritized replay: sum tree, frame-deduplicated transition storage,
proportional sampling and importance weights.

Observations share four of their five depth frames with their successor, so
the buffer stores each frame once in a ring (`FrameStore`) and transitions
keep 5-tuples of frame ids. New transitions enter at the running maximum
priority; sampled ones are re-prioritized from their absolute TD error.
"""

from __future__ import annotations

import numpy as np


class BufferNotReady(RuntimeError):
    """Sampling attempted before the warm-up threshold."""


class SumTree:
    """Binary sum tree over `capacity` leaves; internal nodes hold subtree sums."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.tree = np.zeros(2 * capacity, dtype=np.float64)  # 1-indexed heap

    def set(self, leaf: int, value: float):
        if value <= 0:
            raise ValueError(f"priority must be positive, got {value}")
        i = leaf + self.capacity
        delta = value - self.tree[i]
        while i >= 1:
            self.tree[i] += delta
            i //= 2

    def get(self, leaf: int) -> float:
        return float(self.tree[leaf + self.capacity])

    @property
    def total(self) -> float:
        return float(self.tree[1])

    def retrieve(self, value: float) -> int:
        """Leaf index whose cumulative-sum interval contains `value`."""
        i = 1
        while i < self.capacity:
            left = 2 * i
            if value < self.tree[left]:
                i = left
            else:
                value -= self.tree[left]
                i = left + 1
        return i - self.capacity

    def leaf_values(self, n: int) -> np.ndarray:
        return self.tree[self.capacity:self.capacity + n].copy()


class FrameStore:
    """Ring of single depth frames addressed by a monotonically increasing id."""

    def __init__(self, capacity: int, frame_shape, dtype=np.float32):
        self.capacity = capacity
        self.buf = np.zeros((capacity,) + tuple(frame_shape), dtype=dtype)
        self.next_id = 0

    def add(self, frame: np.ndarray) -> int:
        fid = self.next_id
        self.buf[fid % self.capacity] = frame
        self.next_id += 1
        return fid

    def stack(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.size and ids.min() < self.next_id - self.capacity:
            raise RuntimeError(
                "frame evicted while still referenced; episodes are shorter than "
                "the frame-ring margin assumes"
            )
        return self.buf[ids % self.capacity]


class ReplayBuffer:
    def __init__(self, capacity: int, frame_shape, alpha=0.6, priority_eps=1e-3, warmup=5000):
        self.capacity = capacity
        self.alpha = alpha
        self.priority_eps = priority_eps
        self.warmup = warmup
        self.frames = FrameStore(capacity + capacity // 3 + 16, frame_shape)
        self.tree = SumTree(capacity)
        self.max_priority = 1.0
        self.size = 0
        self._cursor = 0
        self.ids_s = np.zeros((capacity, 5), dtype=np.int64)
        self.ids_s1 = np.zeros((capacity, 5), dtype=np.int64)
        self.pos_s = np.zeros((capacity, 2), dtype=np.float32)
        self.pos_s1 = np.zeros((capacity, 2), dtype=np.float32)
        self.actions = np.zeros((capacity, 2), dtype=np.float32)
        self.rewards = np.zeros(capacity, dtype=np.float32)
        self.terminals = np.zeros(capacity, dtype=bool)

    def __len__(self):
        return self.size

    def add_frame(self, frame: np.ndarray) -> int:
        return self.frames.add(frame)

    def add(self, ids_s, ids_s1, pos_s, pos_s1, action, reward, terminal):
        i = self._cursor
        self.ids_s[i] = ids_s
        self.ids_s1[i] = ids_s1
        self.pos_s[i] = pos_s
        self.pos_s1[i] = pos_s1
        self.actions[i] = action
        self.rewards[i] = reward
        self.terminals[i] = terminal
        self.tree.set(i, self.max_priority**self.alpha)
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, k: int, beta: float, rng: np.random.Generator):
        if self.size == 0 or self.size < self.warmup:
            raise BufferNotReady(
                f"buffer holds {self.size} transitions; warm-up threshold is {self.warmup}"
            )
        total = self.tree.total
        draws = rng.uniform(0.0, total, size=k)
        idx = np.array([self.tree.retrieve(v) for v in draws], dtype=np.int64)
        idx = np.minimum(idx, self.size - 1)  # guard the zero-priority tail
        probs = np.array([self.tree.get(i) for i in idx]) / total
        weights = (self.size * probs) ** (-beta)
        weights = weights / weights.max()
        batch = {
            "images_s": self.frames.stack(self.ids_s[idx]),
            "images_s1": self.frames.stack(self.ids_s1[idx]),
            "pos_s": self.pos_s[idx].copy(),
            "pos_s1": self.pos_s1[idx].copy(),
            "actions": self.actions[idx].copy(),
            "rewards": self.rewards[idx].copy(),
            "terminals": self.terminals[idx].copy(),
        }
        return idx, weights.astype(np.float32), batch

    def update_priorities(self, indices, td_errors):
        for i, delta in zip(indices, td_errors):
            p = abs(float(delta)) + self.priority_eps
            self.tree.set(int(i), p**self.alpha)
            self.max_priority = max(self.max_priority, p)
