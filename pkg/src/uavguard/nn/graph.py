"""Network DAG: named inputs, layer nodes, a single output head.

forward() can record a tape of activations; backward() consumes that tape
and produces parameter gradients plus gradients w.r.t. every declared
input. Inference over frozen parameters is pure; training mutates layer
gradient buffers and is single-threaded per network instance.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .layers import Layer, ShapeError, layer_from_spec


@dataclass
class Tape:
    """Recorded forward pass: per-node value and layer cache."""

    values: dict = field(default_factory=dict)
    caches: dict = field(default_factory=dict)
    feeds: dict = field(default_factory=dict)


@dataclass
class Gradients:
    by_param: dict[str, np.ndarray]
    by_input: dict[str, np.ndarray]


class Network:
    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self.input_shapes: dict[str, tuple] = {}
        self.nodes: list[tuple[str, Layer, list[str]]] = []
        self._by_name: dict[str, Layer] = {}
        self.output: str | None = None
        self.built = False

    def add_input(self, name: str, shape: tuple) -> str:
        self.input_shapes[name] = tuple(shape)
        return name

    def add(self, name: str, layer: Layer, inputs) -> str:
        if isinstance(inputs, str):
            inputs = [inputs]
        for parent in inputs:
            if parent not in self.input_shapes and parent not in self._by_name:
                raise ValueError(f"node '{name}': unknown input '{parent}'")
        if name in self._by_name or name in self.input_shapes:
            raise ValueError(f"duplicate node name '{name}'")
        layer.name = name
        self.nodes.append((name, layer, list(inputs)))
        self._by_name[name] = layer
        return name

    def set_output(self, name: str):
        self.output = name

    def build(self, rng: np.random.Generator):
        shapes = dict(self.input_shapes)
        for name, layer, inputs in self.nodes:
            in_shapes = [shapes[p] for p in inputs]
            arg = in_shapes[0] if len(in_shapes) == 1 else in_shapes
            shapes[name] = layer.build(arg, rng, self.dtype)
        if self.output is None:
            self.output = self.nodes[-1][0]
        self.built = True
        return self

    # -- execution ---------------------------------------------------

    def forward(self, feeds: dict[str, np.ndarray], tape: Tape | None = None) -> np.ndarray:
        if not self.built:
            raise RuntimeError("network not built")
        missing = set(self.input_shapes) - set(feeds)
        if missing:
            raise ShapeError(f"missing inputs: {sorted(missing)}")
        values = {k: np.asarray(v, dtype=self.dtype) for k, v in feeds.items()}
        for name, shape in self.input_shapes.items():
            if values[name].shape[1:] != shape:
                raise ShapeError(f"input '{name}': expected {shape}, got {values[name].shape[1:]}")
        for name, layer, inputs in self.nodes:
            args = [values[p] for p in inputs]
            cache: dict = {}
            y = layer.forward(args[0] if len(args) == 1 else args, cache)
            values[name] = y
            if tape is not None:
                tape.caches[name] = cache
        if tape is not None:
            tape.values = values
            tape.feeds = {k: values[k] for k in self.input_shapes}
        return values[self.output]

    def backward(self, tape: Tape, d_out: np.ndarray, wanted_inputs=None) -> Gradients:
        """Reverse pass over the tape. With `wanted_inputs`, only the subgraph
        that can reach those inputs is traversed (cheap input-gradients, e.g.
        dQ/da through the merge head only); parameter gradients of skipped
        nodes stay zero."""
        if not tape.values:
            raise RuntimeError("backward called before forward: empty tape")
        self.zero_grads()
        keep = None
        if wanted_inputs is not None:
            reaches = {k: k in wanted_inputs for k in self.input_shapes}
            for name, _, inputs in self.nodes:
                reaches[name] = any(reaches[p] for p in inputs)
            keep = reaches
        pending: dict[str, np.ndarray] = {self.output: np.asarray(d_out, dtype=self.dtype)}
        for name, layer, inputs in reversed(self.nodes):
            dy = pending.pop(name, None)
            if dy is None or (keep is not None and not keep[name]):
                continue
            dx = layer.backward(dy, tape.caches[name])
            dxs = dx if isinstance(dx, list) else [dx]
            for parent, grad in zip(inputs, dxs):
                if parent in pending:
                    pending[parent] = pending[parent] + grad
                else:
                    pending[parent] = grad
        by_input = {k: pending.get(k, np.zeros_like(tape.feeds[k])) for k in self.input_shapes}
        return Gradients(by_param=self.parameters_grads(), by_input=by_input)

    # -- parameter access ---------------------------------------------

    def layers(self) -> dict[str, Layer]:
        return dict(self._by_name)

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer, _ in self.nodes:
            for k, v in layer.params.items():
                out[f"{name}/{k}"] = v
        return out

    def parameters_grads(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer, _ in self.nodes:
            if not layer.trainable:
                continue
            for k, v in layer.grads.items():
                out[f"{name}/{k}"] = v
        return out

    def set_parameters(self, values: dict[str, np.ndarray]):
        own = self.parameters()
        for key, val in values.items():
            if key not in own:
                raise KeyError(f"unknown parameter '{key}'")
            if own[key].shape != val.shape:
                raise ShapeError(f"parameter '{key}': expected {own[key].shape}, got {val.shape}")
            own[key][...] = val.astype(self.dtype)

    def zero_grads(self):
        for _, layer, _ in self.nodes:
            layer.zero_grads()

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    # -- serialization ------------------------------------------------

    def to_spec(self) -> dict:
        return {
            "dtype": self.dtype.name,
            "inputs": {k: list(v) for k, v in self.input_shapes.items()},
            "nodes": [
                {"name": n, "inputs": ins, "layer": {"kind": l.kind, **l.spec_args()}}
                for n, l, ins in self.nodes
            ],
            "output": self.output,
        }


def network_from_spec(spec: dict, dtype=None, rng: np.random.Generator | None = None) -> Network:
    net = Network(dtype=dtype if dtype is not None else spec.get("dtype", "float32"))
    for name, shape in spec["inputs"].items():
        net.add_input(name, tuple(shape))
    for node in spec["nodes"]:
        net.add(node["name"], layer_from_spec(node["layer"]), node["inputs"])
    net.set_output(spec["output"])
    net.build(rng if rng is not None else np.random.default_rng(0))
    return net
