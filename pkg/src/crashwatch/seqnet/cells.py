"""Batched forward passes and backpropagation-through-time for one recurrent layer.

Gate blocks are stored side by side in a layer's ``Wx`` (F_in x G*H),
``Wh`` (H x G*H) and ``b`` (G*H):

* SIMPLE: one block, ``h_t = act(x Wx + h_{t-1} Wh + b)``
* LSTM: blocks input, forget, candidate, output
* GRU: blocks update, reset, candidate; the candidate sees ``r * h_{t-1}``
  and ``h_t = (1 - z) * h_{t-1} + z * candidate``.

``act`` (ReLU by default, tanh optionally) is used for the simple cell and the
LSTM/GRU candidate and cell-output paths; gates are always sigmoid.
"""
from __future__ import annotations

import numpy as np

GATES = {"simple": 1, "lstm": 4, "gru": 3}


def sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def _relu(a):
    return np.maximum(a, 0.0)


def _relu_grad(a):
    return (a > 0).astype(a.dtype)


def _tanh_grad(a):
    t = np.tanh(a)
    return 1.0 - t * t


ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
}


def forward(cell: str, p: dict, X: np.ndarray, activation: str = "relu"):
    """Run one layer over X (N x T x F_in). Returns (hidden states N x T x H, cache)."""
    act, _ = ACTIVATIONS[activation]
    N, T, _ = X.shape
    Wh = p["Wh"]
    H = Wh.shape[0]
    xw = X @ p["Wx"] + p["b"]
    hs = np.empty((N, T, H))
    h = np.zeros((N, H))
    steps = []

    if cell == "simple":
        for t in range(T):
            a = xw[:, t] + h @ Wh
            h_prev, h = h, act(a)
            hs[:, t] = h
            steps.append((a, h_prev))
    elif cell == "lstm":
        c = np.zeros((N, H))
        for t in range(T):
            a = xw[:, t] + h @ Wh
            i = sigmoid(a[:, :H])
            f = sigmoid(a[:, H:2 * H])
            ag = a[:, 2 * H:3 * H]
            g = act(ag)
            o = sigmoid(a[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            hc = act(c)
            h = o * hc
            hs[:, t] = h
            steps.append((i, f, ag, g, o, c, c_prev, hc, h_prev))
    elif cell == "gru":
        Wzr, Wn = Wh[:, :2 * H], Wh[:, 2 * H:]
        for t in range(T):
            ah = h @ Wzr
            z = sigmoid(xw[:, t, :H] + ah[:, :H])
            r = sigmoid(xw[:, t, H:2 * H] + ah[:, H:])
            rh = r * h
            an = xw[:, t, 2 * H:] + rh @ Wn
            n = act(an)
            h_prev = h
            h = (1.0 - z) * h_prev + z * n
            hs[:, t] = h
            steps.append((z, r, rh, an, n, h_prev))
    else:
        raise ValueError(f"unknown cell {cell!r}")
    return hs, (X, steps)


def backward(cell: str, p: dict, cache, dhs: np.ndarray, activation: str = "relu"):
    """Gradients for one layer given dLoss/dh_t for every step (N x T x H).

    Returns (grads dict with Wx/Wh/b, dLoss/dX of shape N x T x F_in).
    """
    _, dact = ACTIVATIONS[activation]
    X, steps = cache
    N, T, _ = X.shape
    Wx, Wh = p["Wx"], p["Wh"]
    H = Wh.shape[0]
    G = Wh.shape[1] // H
    da_all = np.empty((N, T, G * H))
    dWh = np.zeros_like(Wh)
    dh_next = np.zeros((N, H))

    if cell == "simple":
        for t in reversed(range(T)):
            a, h_prev = steps[t]
            da = (dhs[:, t] + dh_next) * dact(a)
            dWh += h_prev.T @ da
            dh_next = da @ Wh.T
            da_all[:, t] = da
    elif cell == "lstm":
        dc_next = np.zeros((N, H))
        for t in reversed(range(T)):
            i, f, ag, g, o, c, c_prev, hc, h_prev = steps[t]
            dh = dhs[:, t] + dh_next
            dc = dc_next + dh * o * dact(c)
            da = np.concatenate(
                [
                    dc * g * i * (1.0 - i),
                    dc * c_prev * f * (1.0 - f),
                    dc * i * dact(ag),
                    dh * hc * o * (1.0 - o),
                ],
                axis=1,
            )
            dc_next = dc * f
            dWh += h_prev.T @ da
            dh_next = da @ Wh.T
            da_all[:, t] = da
    elif cell == "gru":
        Wzr, Wn = Wh[:, :2 * H], Wh[:, 2 * H:]
        for t in reversed(range(T)):
            z, r, rh, an, n, h_prev = steps[t]
            dh = dhs[:, t] + dh_next
            dan = dh * z * dact(an)
            drh = dan @ Wn.T
            dzr = np.concatenate([dh * (n - h_prev) * z * (1.0 - z), drh * h_prev * r * (1.0 - r)], axis=1)
            dWh[:, 2 * H:] += rh.T @ dan
            dWh[:, :2 * H] += h_prev.T @ dzr
            dh_next = dh * (1.0 - z) + drh * r + dzr @ Wzr.T
            da_all[:, t, :2 * H] = dzr
            da_all[:, t, 2 * H:] = dan
    else:
        raise ValueError(f"unknown cell {cell!r}")

    flat = da_all.reshape(N * T, G * H)
    grads = {
        "Wx": X.reshape(N * T, -1).T @ flat,
        "Wh": dWh,
        "b": flat.sum(axis=0),
    }
    return grads, da_all @ Wx.T
