"""Detector architectures.

CNN-AD: six time-distributed convolutions over the five two-channel SHAP
images, max-pooling after every second convolution, then a five-layer
fully connected head. LSTM-AD: 100 LSTM units over the 10x48 attribution
window, then four dense layers. FCN-AD: the four-dense-layer baseline on
the flattened SHAP images. All end in a sigmoid score.
"""

from __future__ import annotations

import numpy as np

from ..nn import (
    Conv2D,
    Dense,
    Flatten,
    LSTM,
    MaxPool2D,
    Network,
    ReLU,
    Sigmoid,
    TimeDistributed,
)

CNN_FILTERS = (8, 8, 16, 16, 32, 32)
CNN_FCN = (256, 128, 64, 16)
LSTM_UNITS = 100
LSTM_HEAD = (64, 32, 16)
FCN_WIDTHS = (128, 64, 32)
WINDOW = 10


def build_cnn_ad(image_hw: tuple[int, int], seed: int = 0, dtype=np.float32) -> Network:
    H, W = image_hw
    rng = np.random.default_rng(seed)
    net = Network(dtype=dtype)
    net.add_input("x", (5, H, W, 2))
    prev = "x"
    h, w = H, W
    for i, filters in enumerate(CNN_FILTERS, start=1):
        # 3x3 kernels and 2x2 pools except where an axis is already exhausted
        kernel = (min(3, h), min(3, w))
        prev = net.add(f"conv{i}", TimeDistributed(Conv2D(filters, kernel, (1, 1))), prev)
        prev = net.add(f"act{i}", TimeDistributed(ReLU()), prev)
        h, w = h - kernel[0] + 1, w - kernel[1] + 1
        if i % 2 == 0:
            pool = (min(2, h), min(2, w))
            prev = net.add(f"pool{i // 2}", TimeDistributed(MaxPool2D(pool)), prev)
            h, w = h // pool[0], w // pool[1]
    prev = net.add("flat", Flatten(), prev)
    for j, width in enumerate(CNN_FCN, start=1):
        prev = net.add(f"fc{j}", Dense(width), prev)
        prev = net.add(f"fca{j}", ReLU(), prev)
    net.add("logit", Dense(1), prev)
    net.add("score", Sigmoid(), "logit")
    net.build(rng)
    return net


def build_lstm_ad(gru_width: int = 48, seed: int = 0, dtype=np.float32) -> Network:
    rng = np.random.default_rng(seed)
    net = Network(dtype=dtype)
    net.add_input("x", (WINDOW, gru_width))
    prev = net.add("lstm", LSTM(LSTM_UNITS), "x")
    for j, width in enumerate(LSTM_HEAD, start=1):
        prev = net.add(f"fc{j}", Dense(width), prev)
        prev = net.add(f"fca{j}", ReLU(), prev)
    net.add("logit", Dense(1), prev)
    net.add("score", Sigmoid(), "logit")
    net.build(rng)
    return net


def build_fcn_ad(image_hw: tuple[int, int], seed: int = 0, dtype=np.float32) -> Network:
    H, W = image_hw
    rng = np.random.default_rng(seed)
    net = Network(dtype=dtype)
    net.add_input("x", (5, H, W, 2))
    prev = net.add("flat", Flatten(), "x")
    for j, width in enumerate(FCN_WIDTHS, start=1):
        prev = net.add(f"fc{j}", Dense(width), prev)
        prev = net.add(f"fca{j}", ReLU(), prev)
    net.add("logit", Dense(1), prev)
    net.add("score", Sigmoid(), "logit")
    net.build(rng)
    return net


BUILDERS = {"fcn": build_fcn_ad, "cnn": build_cnn_ad, "lstm": build_lstm_ad}


def build_detector(kind: str, image_hw: tuple[int, int], seed: int = 0) -> Network:
    if kind == "lstm":
        return build_lstm_ad(seed=seed)
    if kind == "cnn":
        return build_cnn_ad(image_hw, seed=seed)
    if kind == "fcn":
        return build_fcn_ad(image_hw, seed=seed)
    raise ValueError(f"unknown detector kind {kind!r}")
