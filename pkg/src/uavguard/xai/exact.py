"""Exact Shapley values by subset enumeration; the oracle the fast path is
validated against. Feature absence means replacement by background values,
averaged over the background set."""

from __future__ import annotations

from math import factorial

import numpy as np

MAX_FEATURES = 12


def exact_shapley(f, x: np.ndarray, background: np.ndarray) -> np.ndarray:
    """Phi_i for a scalar model `f` evaluated batched: f((N, F)) -> (N,).

    x: (F,), background: (R, F). Enumerates all 2^F coalitions, so F <= 12.
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    n = x.shape[0]
    if n > MAX_FEATURES:
        raise ValueError(f"exact enumeration limited to {MAX_FEATURES} features, got {n}")
    r = background.shape[0]

    masks = np.arange(2**n, dtype=np.int64)
    member = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)  # (2^n, F)

    # batched evaluation of v(S) = mean_b f(x_S combined with b elsewhere)
    mixed = np.where(member[:, None, :], x[None, None, :], background[None, :, :])
    vals = np.asarray(f(mixed.reshape(-1, n)), dtype=np.float64).reshape(2**n, r)
    v = vals.mean(axis=1)

    w = np.array(
        [factorial(s) * factorial(n - s - 1) / factorial(n) for s in range(n)]
    )
    phi = np.zeros(n)
    sizes = member.sum(axis=1)
    for i in range(n):
        without = ~member[:, i]
        s_masks = masks[without]
        phi[i] = np.sum(w[sizes[without]] * (v[s_masks | (1 << i)] - v[s_masks]))
    return phi


def linear_shapley(coefs: np.ndarray, x: np.ndarray, background: np.ndarray) -> np.ndarray:
    """Closed form for y = b0 + sum b_i x_i: Phi_i = b_i (x_i - mean_bg x_i)."""
    return np.asarray(coefs, dtype=np.float64) * (
        np.asarray(x, dtype=np.float64) - np.mean(background, axis=0)
    )
