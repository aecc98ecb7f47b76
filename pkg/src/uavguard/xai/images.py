"""Render full-image attribution values as two-channel sign-split images."""

from __future__ import annotations

import numpy as np

from .deeplift import AttributionFrame


def shap_image(frame: AttributionFrame) -> np.ndarray:
    """(5, H, W, 2) rendering of the depth-stack attributions: channel 0 is
    positive values over their max, channel 1 is negative magnitudes over
    theirs; a channel with no mass stays all-zero."""
    if "image" not in frame.values:
        raise ValueError("frame does not cover the image stack")
    vals = np.asarray(frame.values["image"], dtype=np.float64)
    vals = vals.reshape(vals.shape[:3])  # drop the trailing channel axis
    pos = np.maximum(vals, 0.0)
    neg = np.maximum(-vals, 0.0)
    if pos.max() > 0:
        pos = pos / pos.max()
    if neg.max() > 0:
        neg = neg / neg.max()
    return np.stack([pos, neg], axis=-1).astype(np.float32)
