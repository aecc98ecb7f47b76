"""Split the actor at the GRU bottleneck so cheap attribution can run on the
48-value head instead of the full depth stack."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Network
from ..nn.layers import layer_from_spec
from .deeplift import AttributionFrame, Background, deep_attribution, make_background

SPLIT_NODE = "gru"
GRU_FEED = "gru_out"
YAW_HEAD = 1


@dataclass
class SplitModel:
    first_half: Network  # image stack -> 48 GRU values
    second_half: Network  # (48 values, positional) -> action

    def compose(self, feeds: dict[str, np.ndarray]) -> np.ndarray:
        gru = self.first_half.forward({"image": feeds["image"]})
        return self.second_half.forward({GRU_FEED: gru, "pos": feeds["pos"]})


def split_actor(actor: Network) -> SplitModel:
    """Rebuild the actor as two nets sharing its weights bit-for-bit."""
    spec = actor.to_spec()
    names = [n["name"] for n in spec["nodes"]]
    if SPLIT_NODE not in names or "pos" not in spec["inputs"]:
        raise ValueError("architecture mismatch: actor has no GRU bottleneck to split at")
    cut = names.index(SPLIT_NODE)

    first = Network(dtype=actor.dtype)
    first.add_input("image", tuple(spec["inputs"]["image"]))
    for node in spec["nodes"][: cut + 1]:
        first.add(node["name"], layer_from_spec(node["layer"]), node["inputs"])
    first.set_output(SPLIT_NODE)
    first.build(np.random.default_rng(0))

    gru_width = first.layers()[SPLIT_NODE].out_shape[0]
    second = Network(dtype=actor.dtype)
    second.add_input(GRU_FEED, (gru_width,))
    second.add_input("pos", tuple(spec["inputs"]["pos"]))
    for node in spec["nodes"][cut + 1:]:
        inputs = [GRU_FEED if p == SPLIT_NODE else p for p in node["inputs"]]
        second.add(node["name"], layer_from_spec(node["layer"]), inputs)
    second.set_output(spec["output"])
    second.build(np.random.default_rng(0))

    params = actor.parameters()
    first.set_parameters({k: v for k, v in params.items() if k in first.parameters()})
    second.set_parameters({k: v for k, v in params.items() if k in second.parameters()})
    return SplitModel(first, second)


def gru_background(split: SplitModel, ref_feeds: dict[str, np.ndarray]) -> Background:
    """Push the reference observations through the first half once; cache the
    second half's forward on the transformed values."""
    gru = split.first_half.forward({"image": ref_feeds["image"]})
    return make_background(split.second_half, {GRU_FEED: gru, "pos": ref_feeds["pos"]})


def gru_layer_shap(
    split: SplitModel,
    feeds: dict[str, np.ndarray],
    background: Background,
    head: int = YAW_HEAD,
) -> AttributionFrame:
    """48-value (plus positional) attribution of the yaw decision. The
    positional values ride along for traces but detectors use only the 48."""
    gru = split.first_half.forward({"image": feeds["image"]})
    return deep_attribution(
        split.second_half, {GRU_FEED: gru, "pos": feeds["pos"]}, background, head
    )
