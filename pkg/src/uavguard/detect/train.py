"""Detector training: binary cross-entropy, Adam, stratified 70/15/15 split,
best-validation checkpointing."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..ddpg.agent import clip_gradients
from ..nn import Adam, Network, Tape

log = logging.getLogger(__name__)

_P_EPS = 1e-6


class DetectorDiverged(RuntimeError):
    pass


@dataclass
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def stratified_split(labels: np.ndarray, rng: np.random.Generator,
                     val_frac=0.15, test_frac=0.15) -> SplitIndices:
    train, val, test = [], [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        n_val = int(round(len(idx) * val_frac))
        n_test = int(round(len(idx) * test_frac))
        val.extend(idx[:n_val])
        test.extend(idx[n_val:n_val + n_test])
        train.extend(idx[n_val + n_test:])
    return SplitIndices(np.array(train), np.array(val), np.array(test))


def bce_loss(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, _P_EPS, 1.0 - _P_EPS)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def score(net: Network, payloads: np.ndarray, batch: int = 64) -> np.ndarray:
    outs = [net.forward({"x": payloads[i:i + batch]})[:, 0]
            for i in range(0, len(payloads), batch)]
    return np.concatenate(outs) if outs else np.zeros(0)


def accuracy(scores: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean((scores > 0.5).astype(np.int32) == labels))


def train_detector(net: Network, payloads: np.ndarray, labels: np.ndarray, epochs: int,
                   lr: float = 1e-3, batch: int = 32, seed: int = 0, grad_clip: float = 5.0,
                   progress_every: int = 0):
    """Returns (net with best-validation weights, curves, split indices)."""
    rng = np.random.default_rng(seed)
    split = stratified_split(labels, rng)
    opt = Adam(net.parameters_grads(), lr=lr)
    best_val = -1.0
    best_params = None
    curves = []
    bad = 0
    for epoch in range(1, epochs + 1):
        order = split.train.copy()
        rng.shuffle(order)
        losses = []
        for i in range(0, len(order), batch):
            idx = order[i:i + batch]
            x = payloads[idx]
            y = labels[idx].astype(np.float64)
            tape = Tape()
            p = net.forward({"x": x}, tape)[:, 0]
            losses.append(bce_loss(p, y))
            pc = np.clip(p.astype(np.float64), _P_EPS, 1.0 - _P_EPS)
            upstream = ((pc - y) / (pc * (1.0 - pc)) / len(y))[:, None]
            grads = net.backward(tape, upstream)
            clip_gradients(grads.by_param, grad_clip)
            opt.step(net.parameters(), grads.by_param)
        epoch_loss = float(np.mean(losses)) if losses else 0.0
        if not np.isfinite(epoch_loss):
            bad += 1
            if bad >= 3:
                raise DetectorDiverged(f"non-finite loss for {bad} consecutive epochs")
        else:
            bad = 0
        train_acc = accuracy(score(net, payloads[split.train]), labels[split.train])
        val_acc = accuracy(score(net, payloads[split.val]), labels[split.val])
        curves.append({"epoch": epoch, "loss": epoch_loss, "train_acc": train_acc,
                       "val_acc": val_acc})
        if val_acc >= best_val:
            best_val = val_acc
            best_params = {k: v.copy() for k, v in net.parameters().items()}
        if progress_every and epoch % progress_every == 0:
            log.info("epoch %d: loss=%.4f train=%.3f val=%.3f", epoch, epoch_loss,
                     train_acc, val_acc)
    if best_params is not None:
        net.set_parameters(best_params)
    return net, curves, split
