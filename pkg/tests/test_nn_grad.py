"""Finite-difference checks for every layer kind, 64-bit build."""

import numpy as np
import pytest

from gradcheck import check_network_grads
from uavguard.nn import (
    Concat,
    Conv2D,
    Dense,
    Flatten,
    GRU,
    LSTM,
    MaxPool2D,
    Network,
    ReLU,
    Sigmoid,
    Tanh,
    Tape,
    TimeDistributed,
)


def single(layer, in_shape, seed=0, nudge_relu=False):
    rng = np.random.default_rng(seed)
    net = Network(dtype=np.float64)
    net.add_input("x", in_shape)
    net.add("l", layer, "x")
    net.build(rng)
    x = rng.normal(size=(3,) + in_shape)
    if nudge_relu:
        x = np.where(np.abs(x) < 0.05, 0.1, x)  # keep clear of the kink
    return net, {"x": x}


@pytest.mark.parametrize(
    "layer,in_shape,nudge",
    [
        (Dense(5), (4,), False),
        (Conv2D(3, (3, 3), (1, 1)), (6, 5, 2), False),
        (Conv2D(4, (3, 2), (2, 2)), (7, 6, 2), False),  # stride with leftover rows
        (MaxPool2D((2, 2)), (6, 4, 3), False),
        (ReLU(), (7,), True),
        (Tanh(), (7,), False),
        (Sigmoid(), (7,), False),
        (Flatten(), (3, 4), False),
        (GRU(5), (4, 3), False),
        (LSTM(5), (4, 3), False),
        (TimeDistributed(Dense(3)), (4, 5), False),
    ],
    ids=lambda v: getattr(v, "kind", None) or str(v),
)
def test_layer_gradients(layer, in_shape, nudge):
    net, feeds = single(layer, in_shape, nudge_relu=nudge)
    check_network_grads(net, feeds)


def test_concat_gradients():
    rng = np.random.default_rng(2)
    net = Network(dtype=np.float64)
    net.add_input("a", (3,))
    net.add_input("b", (2,))
    net.add("cat", Concat(), ["a", "b"])
    net.add("d", Dense(2), "cat")
    net.build(rng)
    feeds = {"a": rng.normal(size=(2, 3)), "b": rng.normal(size=(2, 2))}
    check_network_grads(net, feeds)


def test_dense_input_grad_is_w_transpose():
    rng = np.random.default_rng(0)
    net = Network(dtype=np.float64)
    net.add_input("x", (4,))
    net.add("d", Dense(3), "x")
    net.build(rng)
    x = rng.normal(size=(1, 4))
    up = rng.normal(size=(1, 3))
    tape = Tape()
    net.forward({"x": x}, tape)
    grads = net.backward(tape, up)
    assert np.allclose(grads.by_input["x"], up @ net.parameters()["d/W"].T)


def test_gru_three_steps_vs_fd():
    rng = np.random.default_rng(4)
    net = Network(dtype=np.float64)
    net.add_input("x", (3, 4))
    net.add("g", GRU(6), "x")
    net.build(rng)
    x = rng.normal(size=(1, 3, 4))
    check_network_grads(net, {"x": x})


def test_composed_four_layer_net():
    rng = np.random.default_rng(9)
    net = Network(dtype=np.float64)
    net.add_input("img", (2, 5, 4, 1))
    net.add_input("pos", (2,))
    net.add("conv", TimeDistributed(Conv2D(2, (3, 3), (1, 1))), "img")
    net.add("act", TimeDistributed(Tanh()), "conv")
    net.add("flat", TimeDistributed(Flatten()), "act")
    net.add("gru", GRU(4), "flat")
    net.add("cat", Concat(), ["gru", "pos"])
    net.add("out", Dense(2), "cat")
    net.build(rng)
    feeds = {"img": rng.normal(size=(2, 2, 5, 4, 1)), "pos": rng.normal(size=(2, 2))}
    check_network_grads(net, feeds)


def test_shared_node_fanout_accumulates():
    # one node feeding two consumers must sum upstream gradients
    rng = np.random.default_rng(11)
    net = Network(dtype=np.float64)
    net.add_input("x", (3,))
    net.add("h", Dense(3), "x")
    net.add("t", Tanh(), "h")
    net.add("s", Sigmoid(), "h")
    net.add("cat", Concat(), ["t", "s"])
    net.add("out", Dense(1), "cat")
    net.build(rng)
    check_network_grads(net, {"x": rng.normal(size=(2, 3))})
