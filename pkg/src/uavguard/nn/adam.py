"""Adam optimizer over a network's named parameters."""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.skipped = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        """Bias-corrected Adam update in place. A non-finite gradient skips the
        whole step and logs the event."""
        for k, g in grads.items():
            if not np.all(np.isfinite(g)):
                self.skipped += 1
                log.warning("adam: non-finite gradient in %s, step %d skipped", k, self.t + 1)
                return False
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            mhat = m / corr1
            vhat = v / corr2
            params[k] -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(params[k].dtype)
        return True

    def config(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}
