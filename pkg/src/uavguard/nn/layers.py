"""Layer implementations for the fixed-graph network engine.

The engine supports exactly the layer kinds the guidance/detector
architectures need: dense, conv2d, maxpool, gru, lstm, relu, tanh,
sigmoid, flatten, concat and time-distribute. Every layer provides an
analytic backward pass; `tests/test_nn_grad.py` checks each one against
central finite differences.

Shapes exclude the batch dimension. Images are (H, W, C); recurrent
inputs are (T, features).
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Input dims don't match what a layer was built for."""


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(1, fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base layer. Holds parameters and, after a backward pass, their gradients."""

    kind = "base"

    def __init__(self):
        self.name = ""
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.trainable = True
        self.in_shape: tuple | None = None
        self.out_shape: tuple | None = None

    def build(self, in_shape: tuple, rng: np.random.Generator, dtype) -> tuple:
        raise NotImplementedError

    def forward(self, x, cache: dict) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray, cache: dict):
        raise NotImplementedError

    def zero_grads(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def check_input(self, x: np.ndarray):
        if x.shape[1:] != self.in_shape:
            raise ShapeError(
                f"layer '{self.name}' ({self.kind}): expected input {self.in_shape}, "
                f"got {x.shape[1:]}"
            )

    def spec_args(self) -> dict:
        return {}


class Dense(Layer):
    kind = "dense"

    def __init__(self, units: int, trainable: bool = True):
        super().__init__()
        self.units = units
        self.trainable = trainable

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 1:
            raise ShapeError(f"layer '{self.name}' (dense): needs a flat input, got {in_shape}")
        n = in_shape[0]
        self.in_shape = in_shape
        self.out_shape = (self.units,)
        self.params = {
            "W": _uniform_init(rng, (n, self.units), n, dtype),
            "b": np.zeros(self.units, dtype=dtype),
        }
        self.zero_grads()
        return self.out_shape

    def forward(self, x, cache):
        self.check_input(x)
        cache["x"] = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dy, cache):
        x = cache["x"]
        if self.trainable:
            self.grads["W"] += x.T @ dy
            self.grads["b"] += dy.sum(axis=0)
        return dy @ self.params["W"].T

    def spec_args(self):
        return {"units": self.units, "trainable": self.trainable}


def _conv_windows(x, kh, kw, sh, sw):
    # (B,H,W,C) -> view (B,Ho,Wo,C,kh,kw)
    v = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    return v[:, ::sh, ::sw]


class Conv2D(Layer):
    """Valid-padding 2D convolution, channels-last."""

    kind = "conv2d"

    def __init__(self, filters: int, kernel: tuple[int, int] = (3, 3), stride: tuple[int, int] = (1, 1)):
        super().__init__()
        self.filters = filters
        self.kernel = tuple(kernel)
        self.stride = tuple(stride)

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 3:
            raise ShapeError(f"layer '{self.name}' (conv2d): needs (H, W, C) input, got {in_shape}")
        H, W, C = in_shape
        kh, kw = self.kernel
        sh, sw = self.stride
        if H < kh or W < kw:
            raise ShapeError(f"layer '{self.name}' (conv2d): kernel {self.kernel} larger than input {in_shape}")
        Ho = (H - kh) // sh + 1
        Wo = (W - kw) // sw + 1
        self.in_shape = in_shape
        self.out_shape = (Ho, Wo, self.filters)
        fan_in = kh * kw * C
        self.params = {
            "W": _uniform_init(rng, (kh, kw, C, self.filters), fan_in, dtype),
            "b": np.zeros(self.filters, dtype=dtype),
        }
        self.zero_grads()
        # col2im as a gather: for every input cell, the flat dcols entries that
        # touch it (padded with a sentinel that reads a trailing zero)
        K = C * kh * kw
        contrib: list[list[int]] = [[] for _ in range(H * W * C)]
        for i in range(Ho):
            for p in range(kh):
                u = i * sh + p
                for j in range(Wo):
                    for q in range(kw):
                        v = j * sw + q
                        for c in range(C):
                            n = (u * W + v) * C + c
                            contrib[n].append((i * Wo + j) * K + ((c * kh + p) * kw + q))
        fan = max((len(e) for e in contrib), default=0)
        self._gather_width = fan
        self._gather_sentinel_base = Ho * Wo * K
        idx = np.full((H * W * C, fan), -1, dtype=np.int64)
        for n, entries in enumerate(contrib):
            idx[n, : len(entries)] = entries
        self._gather_idx = idx
        self._gather_cache: dict[int, np.ndarray] = {}
        return self.out_shape

    @staticmethod
    def _cols(x, kh, kw, sh, sw):
        # contiguous (B*Ho*Wo, C*kh*kw) im2col matrix for a BLAS matmul
        win = _conv_windows(x, kh, kw, sh, sw)  # (B,Ho,Wo,C,kh,kw) view
        B, Ho, Wo = win.shape[:3]
        return np.ascontiguousarray(win).reshape(B * Ho * Wo, -1), (B, Ho, Wo)

    def _w_matrix(self):
        kh, kw = self.kernel
        W = self.params["W"]  # (kh,kw,C,F)
        return W.transpose(2, 0, 1, 3).reshape(-1, self.filters)  # (C*kh*kw, F)

    def forward(self, x, cache):
        self.check_input(x)
        kh, kw = self.kernel
        sh, sw = self.stride
        cols, (B, Ho, Wo) = self._cols(x, kh, kw, sh, sw)
        cache["cols"] = cols
        cache["in_shape_full"] = x.shape
        y = cols @ self._w_matrix() + self.params["b"]
        return y.reshape(B, Ho, Wo, self.filters)

    def backward(self, dy, cache):
        kh, kw = self.kernel
        B, H, W, C = cache["in_shape_full"]
        F = self.filters
        dy2 = dy.reshape(-1, F)
        dW2 = cache["cols"].T @ dy2  # (C*kh*kw, F)
        self.grads["W"] += dW2.reshape(C, kh, kw, F).transpose(1, 2, 0, 3)
        self.grads["b"] += dy2.sum(axis=0)
        # col2im as a batched gather of dcols contributions
        dcols = dy2 @ self._w_matrix().T  # (B*Ho*Wo, C*kh*kw)
        idx = self._gather_cache.get(B)
        if idx is None:
            per_image = self._gather_sentinel_base
            sentinel = B * per_image  # points at the appended zero
            base = np.where(self._gather_idx < 0, sentinel, self._gather_idx)
            offs = (np.arange(B) * per_image)[:, None, None]
            idx = np.where(self._gather_idx[None] < 0, sentinel, base[None] + offs)
            idx = np.ascontiguousarray(idx.reshape(-1, self._gather_width))
            self._gather_cache[B] = idx
        flat = np.append(dcols.ravel(), dcols.dtype.type(0.0))
        dx = flat[idx].sum(axis=1)
        return dx.reshape(B, H, W, C)

    def spec_args(self):
        return {"filters": self.filters, "kernel": list(self.kernel), "stride": list(self.stride)}


class MaxPool2D(Layer):
    """Non-overlapping max pooling (stride equals the pool window)."""

    kind = "maxpool"

    def __init__(self, pool: tuple[int, int] = (2, 2)):
        super().__init__()
        self.pool = tuple(pool)

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 3:
            raise ShapeError(f"layer '{self.name}' (maxpool): needs (H, W, C) input, got {in_shape}")
        H, W, C = in_shape
        ph, pw = self.pool
        Ho = (H - ph) // ph + 1
        Wo = (W - pw) // pw + 1
        if Ho < 1 or Wo < 1:
            raise ShapeError(f"layer '{self.name}' (maxpool): pool {self.pool} larger than input {in_shape}")
        self.in_shape = in_shape
        self.out_shape = (Ho, Wo, C)
        return self.out_shape

    def forward(self, x, cache):
        self.check_input(x)
        ph, pw = self.pool
        win = _conv_windows(x, ph, pw, ph, pw)  # (B,Ho,Wo,C,ph,pw)
        B, Ho, Wo, C = win.shape[:4]
        flat = win.reshape(B, Ho, Wo, C, ph * pw)
        amax = flat.argmax(axis=-1)
        cache["amax"] = amax
        cache["in_shape"] = x.shape
        return np.take_along_axis(flat, amax[..., None], axis=-1)[..., 0]

    def backward(self, dy, cache):
        ph, pw = self.pool
        amax = cache["amax"]
        B, Ho, Wo, C = amax.shape
        dx = np.zeros(cache["in_shape"], dtype=dy.dtype)
        b, i, j, c = np.indices((B, Ho, Wo, C))
        # windows are disjoint, so plain indexed assignment is a correct scatter
        dx[b, i * ph + amax // pw, j * pw + amax % pw, c] = dy
        return dx

    def spec_args(self):
        return {"pool": list(self.pool)}


class _Activation(Layer):
    def build(self, in_shape, rng, dtype):
        self.in_shape = in_shape
        self.out_shape = in_shape
        return in_shape


class ReLU(_Activation):
    kind = "relu"

    def forward(self, x, cache):
        self.check_input(x)
        cache["mask"] = x > 0
        return np.maximum(x, 0)

    def backward(self, dy, cache):
        return dy * cache["mask"]


class Tanh(_Activation):
    kind = "tanh"

    def forward(self, x, cache):
        self.check_input(x)
        y = np.tanh(x)
        cache["y"] = y
        return y

    def backward(self, dy, cache):
        y = cache["y"]
        return dy * (1.0 - y * y)


class Sigmoid(_Activation):
    kind = "sigmoid"

    def forward(self, x, cache):
        self.check_input(x)
        y = sigmoid(x)
        cache["y"] = y
        return y

    def backward(self, dy, cache):
        y = cache["y"]
        return dy * y * (1.0 - y)


class Flatten(Layer):
    kind = "flatten"

    def build(self, in_shape, rng, dtype):
        self.in_shape = in_shape
        self.out_shape = (int(np.prod(in_shape)),)
        return self.out_shape

    def forward(self, x, cache):
        self.check_input(x)
        cache["in_shape"] = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy, cache):
        return dy.reshape(cache["in_shape"])


class Concat(Layer):
    """Concatenate flat inputs along the feature axis."""

    kind = "concat"

    def build(self, in_shape, rng, dtype):
        # in_shape is a list of per-parent shapes
        if any(len(s) != 1 for s in in_shape):
            raise ShapeError(f"layer '{self.name}' (concat): only flat inputs supported, got {in_shape}")
        self.in_shape = tuple(in_shape)
        self.splits = np.cumsum([s[0] for s in in_shape])[:-1]
        self.out_shape = (int(sum(s[0] for s in in_shape)),)
        return self.out_shape

    def check_input(self, xs):
        shapes = tuple(x.shape[1:] for x in xs)
        if shapes != self.in_shape:
            raise ShapeError(f"layer '{self.name}' (concat): expected inputs {self.in_shape}, got {shapes}")

    def forward(self, xs, cache):
        self.check_input(xs)
        return np.concatenate(xs, axis=1)

    def backward(self, dy, cache):
        return np.split(dy, self.splits, axis=1)


class TimeDistributed(Layer):
    """Apply an inner layer independently at every time step of a (T, ...) input."""

    kind = "time-distribute"

    def __init__(self, inner: Layer):
        super().__init__()
        self.inner = inner

    @property
    def params(self):
        return self.inner.params

    @params.setter
    def params(self, value):
        # base-class __init__ assigns {}; the inner layer owns the real dict
        if value:
            self.inner.params = value

    @property
    def grads(self):
        return self.inner.grads

    @grads.setter
    def grads(self, value):
        if value:
            self.inner.grads = value

    def zero_grads(self):
        self.inner.zero_grads()

    def build(self, in_shape, rng, dtype):
        if len(in_shape) < 2:
            raise ShapeError(f"layer '{self.name}' (time-distribute): needs (T, ...) input, got {in_shape}")
        self.inner.name = self.name + ".inner"
        inner_out = self.inner.build(in_shape[1:], rng, dtype)
        self.in_shape = in_shape
        self.out_shape = (in_shape[0],) + inner_out
        return self.out_shape

    def forward(self, x, cache):
        self.check_input(x)
        B, T = x.shape[:2]
        flat = x.reshape((B * T,) + x.shape[2:])
        inner_cache: dict = {}
        y = self.inner.forward(flat, inner_cache)
        cache["inner"] = inner_cache
        cache["bt"] = (B, T)
        return y.reshape((B, T) + y.shape[1:])

    def backward(self, dy, cache):
        B, T = cache["bt"]
        dflat = dy.reshape((B * T,) + dy.shape[2:])
        dx = self.inner.backward(dflat, cache["inner"])
        return dx.reshape((B, T) + dx.shape[1:])

    def spec_args(self):
        return {"inner": {"kind": self.inner.kind, **self.inner.spec_args()}}


class GRU(Layer):
    """Gated recurrent unit over (T, n) input; emits the final hidden state.

    Candidate uses the classic form n_t = tanh(Wn x_t + Un (r_t * h_{t-1}) + bn).
    """

    kind = "gru"

    def __init__(self, units: int):
        super().__init__()
        self.units = units

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 2:
            raise ShapeError(f"layer '{self.name}' (gru): needs (T, features) input, got {in_shape}")
        T, n = in_shape
        u = self.units
        self.in_shape = in_shape
        self.out_shape = (u,)
        p = {}
        for g in ("z", "r", "n"):
            p["W" + g] = _uniform_init(rng, (n, u), n, dtype)
            p["U" + g] = _uniform_init(rng, (u, u), u, dtype)
            p["b" + g] = np.zeros(u, dtype=dtype)
        self.params = p
        self.zero_grads()
        return self.out_shape

    def forward(self, x, cache):
        self.check_input(x)
        p = self.params
        B, T, _ = x.shape
        h = np.zeros((B, self.units), dtype=x.dtype)
        steps = []
        for t in range(T):
            xt = x[:, t]
            z = sigmoid(xt @ p["Wz"] + h @ p["Uz"] + p["bz"])
            r = sigmoid(xt @ p["Wr"] + h @ p["Ur"] + p["br"])
            rh = r * h
            n = np.tanh(xt @ p["Wn"] + rh @ p["Un"] + p["bn"])
            h_new = (1.0 - z) * n + z * h
            steps.append({"h_prev": h, "z": z, "r": r, "rh": rh, "n": n})
            h = h_new
        cache["x"] = x
        cache["steps"] = steps
        return h

    def backward(self, dy, cache):
        p = self.params
        g = self.grads
        x = cache["x"]
        steps = cache["steps"]
        dx = np.zeros_like(x)
        dh = dy
        for t in range(len(steps) - 1, -1, -1):
            s = steps[t]
            xt = x[:, t]
            h_prev, z, r, rh, n = s["h_prev"], s["z"], s["r"], s["rh"], s["n"]
            dz = dh * (h_prev - n)
            dn = dh * (1.0 - z)
            dh_prev = dh * z
            dan = dn * (1.0 - n * n)
            g["Wn"] += xt.T @ dan
            g["Un"] += rh.T @ dan
            g["bn"] += dan.sum(axis=0)
            drh = dan @ p["Un"].T
            dr = drh * h_prev
            dh_prev += drh * r
            dar = dr * r * (1.0 - r)
            g["Wr"] += xt.T @ dar
            g["Ur"] += h_prev.T @ dar
            g["br"] += dar.sum(axis=0)
            dh_prev += dar @ p["Ur"].T
            daz = dz * z * (1.0 - z)
            g["Wz"] += xt.T @ daz
            g["Uz"] += h_prev.T @ daz
            g["bz"] += daz.sum(axis=0)
            dh_prev += daz @ p["Uz"].T
            dx[:, t] = dan @ p["Wn"].T + dar @ p["Wr"].T + daz @ p["Wz"].T
            dh = dh_prev
        return dx

    def spec_args(self):
        return {"units": self.units}


class LSTM(Layer):
    """LSTM over (T, n) input; emits the final hidden state. Forget bias starts at 1."""

    kind = "lstm"

    def __init__(self, units: int):
        super().__init__()
        self.units = units

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 2:
            raise ShapeError(f"layer '{self.name}' (lstm): needs (T, features) input, got {in_shape}")
        T, n = in_shape
        u = self.units
        self.in_shape = in_shape
        self.out_shape = (u,)
        p = {}
        for gate in ("i", "f", "g", "o"):
            p["W" + gate] = _uniform_init(rng, (n, u), n, dtype)
            p["U" + gate] = _uniform_init(rng, (u, u), u, dtype)
            p["b" + gate] = np.zeros(u, dtype=dtype)
        p["bf"] += np.asarray(1.0, dtype=dtype)
        self.params = p
        self.zero_grads()
        return self.out_shape

    def forward(self, x, cache):
        self.check_input(x)
        p = self.params
        B, T, _ = x.shape
        h = np.zeros((B, self.units), dtype=x.dtype)
        c = np.zeros((B, self.units), dtype=x.dtype)
        steps = []
        for t in range(T):
            xt = x[:, t]
            i = sigmoid(xt @ p["Wi"] + h @ p["Ui"] + p["bi"])
            f = sigmoid(xt @ p["Wf"] + h @ p["Uf"] + p["bf"])
            gg = np.tanh(xt @ p["Wg"] + h @ p["Ug"] + p["bg"])
            o = sigmoid(xt @ p["Wo"] + h @ p["Uo"] + p["bo"])
            c_new = f * c + i * gg
            tc = np.tanh(c_new)
            h_new = o * tc
            steps.append({"h_prev": h, "c_prev": c, "i": i, "f": f, "g": gg, "o": o, "tc": tc})
            h, c = h_new, c_new
        cache["x"] = x
        cache["steps"] = steps
        return h

    def backward(self, dy, cache):
        p = self.params
        g = self.grads
        x = cache["x"]
        steps = cache["steps"]
        dx = np.zeros_like(x)
        dh = dy
        dc = np.zeros_like(dy)
        for t in range(len(steps) - 1, -1, -1):
            s = steps[t]
            xt = x[:, t]
            h_prev, c_prev, i, f, gg, o, tc = (
                s["h_prev"], s["c_prev"], s["i"], s["f"], s["g"], s["o"], s["tc"],
            )
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            di = dc * gg
            df = dc * c_prev
            dg = dc * i
            dc_prev = dc * f
            dai = di * i * (1.0 - i)
            daf = df * f * (1.0 - f)
            dag = dg * (1.0 - gg * gg)
            dao = do * o * (1.0 - o)
            dh_prev = np.zeros_like(dh)
            for name, da in (("i", dai), ("f", daf), ("g", dag), ("o", dao)):
                g["W" + name] += xt.T @ da
                g["U" + name] += h_prev.T @ da
                g["b" + name] += da.sum(axis=0)
                dh_prev += da @ p["U" + name].T
            dx[:, t] = dai @ p["Wi"].T + daf @ p["Wf"].T + dag @ p["Wg"].T + dao @ p["Wo"].T
            dh = dh_prev
            dc = dc_prev
        return dx

    def spec_args(self):
        return {"units": self.units}


LAYER_KINDS = {
    "dense": Dense,
    "conv2d": Conv2D,
    "maxpool": MaxPool2D,
    "relu": ReLU,
    "tanh": Tanh,
    "sigmoid": Sigmoid,
    "flatten": Flatten,
    "concat": Concat,
    "gru": GRU,
    "lstm": LSTM,
}


def layer_from_spec(spec: dict) -> Layer:
    """Rebuild an unbuilt layer from its spec dict ({'kind': ..., **args})."""
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "time-distribute":
        return TimeDistributed(layer_from_spec(spec.pop("inner")))
    if kind not in LAYER_KINDS:
        raise ValueError(f"unknown layer kind {kind!r}")
    cls = LAYER_KINDS[kind]
    if kind in ("conv2d",):
        return cls(spec["filters"], tuple(spec["kernel"]), tuple(spec["stride"]))
    if kind == "maxpool":
        return cls(tuple(spec["pool"]))
    if kind == "dense":
        return cls(spec["units"], spec.get("trainable", True))
    if kind in ("gru", "lstm"):
        return cls(spec["units"])
    return cls()
