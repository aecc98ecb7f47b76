"""Layer-wise attribution by multiplier propagation against reference inputs.

Multipliers m satisfy sum_i m_i * (x_i - r_i) = f(x) - f(r) exactly, per
reference r:

* linear layers (dense, conv, flatten, concat, time-distribute of those)
  propagate multipliers like gradients;
* elementwise nonlinearities use the rescale rule m = (f(x)-f(r))/(x-r),
  which is exact by construction (analytic derivative at the midpoint when
  the denominator vanishes, where the contribution is zero anyway);
* GRU/LSTM use a gate-linearized rule: every elementwise product a*b
  decomposes as delta(ab) = delta(a)*mean(b) + delta(b)*mean(a) with means
  taken across the two runs, which is algebraically exact, so completeness
  survives the recurrence.

Max pooling admits no completeness-preserving local rule and is rejected;
no explained architecture here contains one. Attribution math runs in
float64 regardless of the model dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Network, Tape
from ..nn.layers import (
    GRU,
    LSTM,
    Concat,
    Conv2D,
    Dense,
    Flatten,
    MaxPool2D,
    ReLU,
    Sigmoid,
    Tanh,
    TimeDistributed,
)

_RESCALE_TOL = 1e-9


class UnsupportedLayerError(ValueError):
    pass


@dataclass
class Background:
    """Reference set with its cached forward pass through the explained net."""

    feeds: dict[str, np.ndarray]
    tape: Tape
    outputs: np.ndarray  # (R, out_dim)

    @property
    def size(self) -> int:
        return self.outputs.shape[0]


@dataclass
class AttributionFrame:
    head: int
    values: dict[str, np.ndarray]  # per input name, shaped like the (unbatched) feed
    output: float  # f(x) at the head
    baseline: float  # mean_ref f(ref) at the head

    def total(self) -> float:
        return float(sum(v.sum() for v in self.values.values()))

    def completeness_error(self) -> float:
        return abs(self.total() - (self.output - self.baseline))


def make_background(net: Network, feeds: dict[str, np.ndarray]) -> Background:
    tape = Tape()
    outputs = net.forward(feeds, tape)
    return Background(feeds={k: np.asarray(v) for k, v in feeds.items()}, tape=tape,
                      outputs=outputs)


def _rescale(m, in_x, in_r, out_x, out_r, midpoint_deriv):
    din = (in_x - in_r).astype(np.float64)
    dout = (out_x - out_r).astype(np.float64)
    safe = np.abs(din) > _RESCALE_TOL
    slope = np.where(safe, dout / np.where(safe, din, 1.0), midpoint_deriv)
    return m * slope


def _conv_input_grad(layer: Conv2D, m: np.ndarray) -> np.ndarray:
    B = m.shape[0]
    m2 = m.reshape(-1, layer.filters)
    dcols = m2 @ layer._w_matrix().astype(np.float64).T
    idx = layer._gather_cache.get(B)
    if idx is None:
        per_image = layer._gather_sentinel_base
        sentinel = B * per_image
        base = np.where(layer._gather_idx < 0, sentinel, layer._gather_idx)
        offs = (np.arange(B) * per_image)[:, None, None]
        idx = np.where(layer._gather_idx[None] < 0, sentinel, base[None] + offs)
        idx = np.ascontiguousarray(idx.reshape(-1, layer._gather_width))
        layer._gather_cache[B] = idx
    flat = np.append(dcols.ravel(), 0.0)
    H, W, C = layer.in_shape
    return flat[idx].sum(axis=1).reshape((B, H, W, C))


def _gru_multipliers(layer: GRU, m_h, cache_x, cache_r):
    p = {k: v.astype(np.float64) for k, v in layer.params.items()}
    steps_x, steps_r = cache_x["steps"], cache_r["steps"]
    x_x, x_r = cache_x["x"], cache_r["x"]
    T = len(steps_x)
    m_x = np.zeros((m_h.shape[0], T, layer.in_shape[1]), dtype=np.float64)
    sig = lambda a: 1.0 / (1.0 + np.exp(-a))

    def pre_acts(x_t, s, run):
        h = s["h_prev"].astype(np.float64)
        az = x_t @ p["Wz"] + h @ p["Uz"] + p["bz"]
        ar = x_t @ p["Wr"] + h @ p["Ur"] + p["br"]
        an = x_t @ p["Wn"] + s["rh"].astype(np.float64) @ p["Un"] + p["bn"]
        return az, ar, an

    for t in range(T - 1, -1, -1):
        sx, sr = steps_x[t], steps_r[t]
        azx, arx, anx = pre_acts(x_x[:, t].astype(np.float64), sx, "x")
        azr, arr_, anr = pre_acts(x_r[:, t].astype(np.float64), sr, "r")
        mean = lambda a, b: (a.astype(np.float64) + b.astype(np.float64)) / 2.0
        z_m, n_m = mean(sx["z"], sr["z"]), mean(sx["n"], sr["n"])
        h_prev_m, r_m = mean(sx["h_prev"], sr["h_prev"]), mean(sx["r"], sr["r"])

        m_n = m_h * (1.0 - z_m)
        m_z = m_h * (h_prev_m - n_m)
        m_hprev = m_h * z_m

        m_an = _rescale(m_n, anx, anr, sx["n"], sr["n"], 1.0 - n_m**2)
        m_x[:, t] += m_an @ p["Wn"].T
        m_rh = m_an @ p["Un"].T
        m_r = m_rh * h_prev_m
        m_hprev += m_rh * r_m

        m_ar = _rescale(m_r, arx, arr_, sx["r"], sr["r"], sig(mean(arx, arr_)) * (1 - sig(mean(arx, arr_))))
        m_x[:, t] += m_ar @ p["Wr"].T
        m_hprev += m_ar @ p["Ur"].T

        m_az = _rescale(m_z, azx, azr, sx["z"], sr["z"], sig(mean(azx, azr)) * (1 - sig(mean(azx, azr))))
        m_x[:, t] += m_az @ p["Wz"].T
        m_hprev += m_az @ p["Uz"].T

        m_h = m_hprev
    return m_x


def _lstm_multipliers(layer: LSTM, m_h, cache_x, cache_r):
    p = {k: v.astype(np.float64) for k, v in layer.params.items()}
    steps_x, steps_r = cache_x["steps"], cache_r["steps"]
    x_x, x_r = cache_x["x"], cache_r["x"]
    T = len(steps_x)
    m_x = np.zeros((m_h.shape[0], T, layer.in_shape[1]), dtype=np.float64)
    m_c = np.zeros_like(m_h)
    sig = lambda a: 1.0 / (1.0 + np.exp(-a))

    def pre_acts(x_t, s):
        h = s["h_prev"].astype(np.float64)
        return {g: x_t @ p["W" + g] + h @ p["U" + g] + p["b" + g] for g in ("i", "f", "g", "o")}

    for t in range(T - 1, -1, -1):
        sx, sr = steps_x[t], steps_r[t]
        ax = pre_acts(x_x[:, t].astype(np.float64), sx)
        ar = pre_acts(x_r[:, t].astype(np.float64), sr)
        mean = lambda a, b: (np.asarray(a, dtype=np.float64) + np.asarray(b, dtype=np.float64)) / 2.0
        c_x = sx["f"] * sx["c_prev"] + sx["i"] * sx["g"]
        c_r = sr["f"] * sr["c_prev"] + sr["i"] * sr["g"]
        tc_m = mean(sx["tc"], sr["tc"])
        o_m = mean(sx["o"], sr["o"])

        m_o = m_h * tc_m
        m_tc = m_h * o_m
        m_c = m_c + _rescale(m_tc, c_x, c_r, sx["tc"], sr["tc"], 1.0 - tc_m**2)

        m_f = m_c * mean(sx["c_prev"], sr["c_prev"])
        m_cprev = m_c * mean(sx["f"], sr["f"])
        m_i = m_c * mean(sx["g"], sr["g"])
        m_g = m_c * mean(sx["i"], sr["i"])

        m_hprev = np.zeros_like(m_h)
        for gate, m_gate, act_x, act_r, deriv in (
            ("i", m_i, sx["i"], sr["i"], None),
            ("f", m_f, sx["f"], sr["f"], None),
            ("g", m_g, sx["g"], sr["g"], "tanh"),
            ("o", m_o, sx["o"], sr["o"], None),
        ):
            mid = mean(ax[gate], ar[gate])
            d = (1.0 - np.tanh(mid) ** 2) if deriv == "tanh" else sig(mid) * (1 - sig(mid))
            m_a = _rescale(m_gate, ax[gate], ar[gate], act_x, act_r, d)
            m_x[:, t] += m_a @ p["W" + gate].T
            m_hprev += m_a @ p["U" + gate].T

        m_h = m_hprev
        m_c = m_cprev
    return m_x


def _propagate(layer, m, parents_x, parents_r, out_x, out_r, cache_x, cache_r):
    """Multipliers w.r.t. the layer's parent(s); list aligned with parents."""
    if isinstance(layer, Dense):
        return [m @ layer.params["W"].astype(np.float64).T]
    if isinstance(layer, Conv2D):
        return [_conv_input_grad(layer, m)]
    if isinstance(layer, Flatten):
        return [m.reshape((m.shape[0],) + layer.in_shape)]
    if isinstance(layer, Concat):
        return list(np.split(m, layer.splits, axis=1))
    if isinstance(layer, ReLU):
        mid = (parents_x[0] + parents_r[0]) / 2.0
        return [_rescale(m, parents_x[0], parents_r[0], out_x, out_r, (mid > 0).astype(np.float64))]
    if isinstance(layer, Tanh):
        mid = np.tanh((parents_x[0] + parents_r[0]) / 2.0)
        return [_rescale(m, parents_x[0], parents_r[0], out_x, out_r, 1.0 - mid**2)]
    if isinstance(layer, Sigmoid):
        mid = 1.0 / (1.0 + np.exp(-(parents_x[0] + parents_r[0]) / 2.0))
        return [_rescale(m, parents_x[0], parents_r[0], out_x, out_r, mid * (1.0 - mid))]
    if isinstance(layer, GRU):
        return [_gru_multipliers(layer, m, cache_x, cache_r)]
    if isinstance(layer, LSTM):
        return [_lstm_multipliers(layer, m, cache_x, cache_r)]
    if isinstance(layer, TimeDistributed):
        inner = layer.inner
        R = m.shape[0]
        T = layer.in_shape[0]
        if isinstance(inner, (Conv2D, Dense, Flatten)):
            flat = _propagate(
                inner, m.reshape((R * T,) + m.shape[2:]), None, None, None, None, None, None
            )[0]
            return [flat.reshape((R, T) + flat.shape[1:])]
        if isinstance(inner, (ReLU, Tanh, Sigmoid)):
            return _propagate(inner, m, parents_x, parents_r, out_x, out_r, None, None)
        raise UnsupportedLayerError(
            f"layer '{layer.name}': time-distributed {inner.kind} has no attribution rule"
        )
    if isinstance(layer, MaxPool2D):
        raise UnsupportedLayerError(
            f"layer '{layer.name}': maxpool has no completeness-preserving attribution rule"
        )
    raise UnsupportedLayerError(f"layer '{layer.name}': kind {layer.kind} unsupported")


def deep_attribution(
    net: Network,
    feeds_x: dict[str, np.ndarray],
    background: Background,
    head: int,
) -> AttributionFrame:
    """Attribution of output[head] for one input (batch of 1) against the
    cached background; averaged over references."""
    tape_x = Tape()
    out_x = net.forward(feeds_x, tape_x)
    if out_x.shape[0] != 1:
        raise ValueError("deep_attribution explains a single input (batch of 1)")
    R = background.size
    tape_r = background.tape

    seed = np.zeros((R, out_x.shape[1]), dtype=np.float64)
    seed[:, head] = 1.0
    mult: dict[str, np.ndarray] = {net.output: seed}
    for name, layer, inputs in reversed(net.nodes):
        m = mult.pop(name, None)
        if m is None:
            continue
        parents_x = [tape_x.values[p].astype(np.float64) for p in inputs]
        parents_r = [tape_r.values[p].astype(np.float64) for p in inputs]
        ms = _propagate(
            layer,
            m,
            parents_x,
            parents_r,
            tape_x.values[name].astype(np.float64),
            tape_r.values[name].astype(np.float64),
            tape_x.caches.get(name),
            tape_r.caches.get(name),
        )
        for parent, grad in zip(inputs, ms):
            if parent in mult:
                mult[parent] = mult[parent] + grad
            else:
                mult[parent] = grad

    values = {}
    for k in net.input_shapes:
        m = mult.get(k)
        if m is None:
            values[k] = np.zeros(net.input_shapes[k], dtype=np.float64)
            continue
        delta = feeds_x[k].astype(np.float64) - background.feeds[k].astype(np.float64)
        values[k] = (m * delta).mean(axis=0)
    return AttributionFrame(
        head=head,
        values=values,
        output=float(out_x[0, head]),
        baseline=float(background.outputs[:, head].mean()),
    )
