"""Actor/critic graph builders and observation-to-feed preprocessing.

Both networks share the trunk shape: three time-distributed convolutions
over the 5-frame depth stack, a GRU bottleneck of exactly 48 units, then a
merge with the positional inputs (plus the action, for the critic) into two
dense layers. The actor ends in tanh scaled onto the action box; that
scaling is a frozen dense layer so attribution sees outputs in action units.
"""

from __future__ import annotations

import numpy as np

from ..nn import GRU, Concat, Conv2D, Dense, Flatten, Network, ReLU, Tanh, TimeDistributed
from ..sim import Observation, SimConfig
from ..sim.arena import LidarConfig

BEARING_SCALE = float(np.pi)
DISTANCE_SCALE = 30.0
GRU_UNITS = 48
OUTPUT_INIT_BOUND = 3e-3  # small head init keeps early tanh outputs unsaturated


def _image_trunk(net: Network, image_input: str):
    net.add("conv1", TimeDistributed(Conv2D(8, (4, 4), (4, 2))), image_input)
    net.add("act1", TimeDistributed(ReLU()), "conv1")
    net.add("conv2", TimeDistributed(Conv2D(16, (3, 3), (2, 2))), "act1")
    net.add("act2", TimeDistributed(ReLU()), "conv2")
    net.add("conv3", TimeDistributed(Conv2D(16, (3, 3), (2, 2))), "act2")
    net.add("act3", TimeDistributed(ReLU()), "conv3")
    net.add("frames", TimeDistributed(Flatten()), "act3")
    net.add("gru", GRU(GRU_UNITS), "frames")
    return "gru"


def _head_init(net: Network, node: str, rng: np.random.Generator):
    p = net.parameters()
    w = p[f"{node}/W"]
    w[...] = rng.uniform(-OUTPUT_INIT_BOUND, OUTPUT_INIT_BOUND, size=w.shape).astype(w.dtype)


def build_actor(lidar: LidarConfig, sim: SimConfig, seed: int = 0, dtype=np.float32) -> Network:
    """Policy net; `dtype=np.float64` gives the oracle build for FD checks."""
    rng = np.random.default_rng(seed)
    net = Network(dtype=dtype)
    net.add_input("image", (5, lidar.image_azimuth_bins, lidar.image_elevation_bins, 1))
    net.add_input("pos", (2,))
    trunk = _image_trunk(net, "image")
    net.add("merge", Concat(), [trunk, "pos"])
    net.add("fc1", Dense(64), "merge")
    net.add("fca1", ReLU(), "fc1")
    net.add("fc2", Dense(64), "fca1")
    net.add("fca2", ReLU(), "fc2")
    net.add("head", Dense(2), "fca2")
    net.add("squash", Tanh(), "head")
    net.add("scale", Dense(2, trainable=False), "squash")
    net.build(rng)
    _head_init(net, "head", rng)
    net.set_parameters({
        "scale/W": np.array([[sim.v_max / 2.0, 0.0], [0.0, sim.omega_max]]),
        "scale/b": np.array([sim.v_max / 2.0, 0.0]),
    })
    return net


def build_critic(lidar: LidarConfig, sim: SimConfig, seed: int = 0, dtype=np.float32) -> Network:
    rng = np.random.default_rng(seed)
    net = Network(dtype=dtype)
    net.add_input("image", (5, lidar.image_azimuth_bins, lidar.image_elevation_bins, 1))
    net.add_input("pos", (2,))
    net.add_input("action", (2,))
    trunk = _image_trunk(net, "image")
    net.add("merge", Concat(), [trunk, "pos", "action"])
    net.add("fc1", Dense(64), "merge")
    net.add("fca1", ReLU(), "fc1")
    net.add("fc2", Dense(64), "fca1")
    net.add("fca2", ReLU(), "fc2")
    net.add("q", Dense(1), "fca2")
    net.build(rng)
    _head_init(net, "q", rng)
    return net


# -- feed construction ------------------------------------------------


def pos_features(bearing, distance) -> np.ndarray:
    return np.stack(
        [np.asarray(bearing) / BEARING_SCALE, np.asarray(distance) / DISTANCE_SCALE], axis=-1
    ).astype(np.float32)


def obs_to_feeds(obs: Observation) -> dict[str, np.ndarray]:
    return {
        "image": obs.depth_stack[None, ..., None],
        "pos": pos_features(obs.bearing, obs.distance)[None],
    }


def batch_feeds(images: np.ndarray, pos_raw: np.ndarray) -> dict[str, np.ndarray]:
    return {"image": images[..., None], "pos": pos_features(pos_raw[:, 0], pos_raw[:, 1])}


def action_feature(actions: np.ndarray, sim: SimConfig) -> np.ndarray:
    scale = np.array([sim.v_max, sim.omega_max], dtype=np.float32)
    return np.asarray(actions, dtype=np.float32) / scale


def action_feature_grad_scale(sim: SimConfig) -> np.ndarray:
    """d(action feature)/d(raw action), for chaining dQ/da into the actor."""
    return 1.0 / np.array([sim.v_max, sim.omega_max], dtype=np.float32)
