"""Batched recurrent/convolutional layers with explicit backward passes.

All layers take inputs shaped ``(batch, time, features)``. Every
``*_forward`` returns ``(outputs, cache)`` and the matching ``*_backward``
takes the upstream gradient plus that cache and returns the input gradient
and a dict of parameter gradients. Arithmetic is float64 throughout.
"""

from __future__ import annotations

import numpy as np

Params = dict[str, np.ndarray]


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_matrix(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def softmax_xent(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over rows and its gradient w.r.t. ``logits``."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)
    picked = probs[np.arange(n), targets]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    grad = probs
    grad[np.arange(n), targets] -= 1.0
    return loss, grad / n


# -- Elman (tanh) recurrence -------------------------------------------------

def rnn_forward(x, W, U, b, reverse=False):
    B, T, _ = x.shape
    H = U.shape[0]
    xw = x @ W + b
    hs = np.empty((B, T, H))
    h = np.zeros((B, H))
    steps = range(T - 1, -1, -1) if reverse else range(T)
    for t in steps:
        h = np.tanh(xw[:, t] + h @ U)
        hs[:, t] = h
    return hs, (x, W, U, hs, reverse)


def rnn_backward(dhs, cache):
    x, W, U, hs, reverse = cache
    B, T, _ = x.shape
    H = U.shape[0]
    dpre = np.empty_like(hs)
    dU = np.zeros_like(U)
    dh_next = np.zeros((B, H))
    steps = range(T) if reverse else range(T - 1, -1, -1)
    for t in steps:
        prev_t = t + 1 if reverse else t - 1
        h_prev = hs[:, prev_t] if 0 <= prev_t < T else np.zeros((B, H))
        dh = dhs[:, t] + dh_next
        dp = dh * (1.0 - hs[:, t] ** 2)
        dpre[:, t] = dp
        dU += h_prev.T @ dp
        dh_next = dp @ U.T
    flat_x = x.reshape(B * T, -1)
    flat_dp = dpre.reshape(B * T, H)
    grads = {"W": flat_x.T @ flat_dp, "U": dU, "b": flat_dp.sum(axis=0)}
    return dpre @ W.T, grads


# -- gated recurrent unit ----------------------------------------------------
# W: (D, 3H) input weights for [update | reset | candidate]
# U: (H, 3H) recurrent weights in the same order, b: (3H,)

def gru_forward(x, W, U, b, reverse=False):
    B, T, _ = x.shape
    H = U.shape[0]
    xw = x @ W + b
    Uzr, Un = U[:, :2 * H], U[:, 2 * H:]
    hs = np.empty((B, T, H))
    z_all = np.empty((B, T, H))
    r_all = np.empty((B, T, H))
    n_all = np.empty((B, T, H))
    h = np.zeros((B, H))
    steps = range(T - 1, -1, -1) if reverse else range(T)
    for t in steps:
        zr = sigmoid(xw[:, t, :2 * H] + h @ Uzr)
        z, r = zr[:, :H], zr[:, H:]
        n = np.tanh(xw[:, t, 2 * H:] + (r * h) @ Un)
        h = (1.0 - z) * n + z * h
        hs[:, t], z_all[:, t], r_all[:, t], n_all[:, t] = h, z, r, n
    return hs, (x, W, U, hs, z_all, r_all, n_all, reverse)


def gru_backward(dhs, cache):
    x, W, U, hs, z_all, r_all, n_all, reverse = cache
    B, T, _ = x.shape
    H = U.shape[0]
    Uzr, Un = U[:, :2 * H], U[:, 2 * H:]
    dpre = np.empty((B, T, 3 * H))
    dU = np.zeros_like(U)
    dh_next = np.zeros((B, H))
    steps = range(T) if reverse else range(T - 1, -1, -1)
    for t in steps:
        prev_t = t + 1 if reverse else t - 1
        h_prev = hs[:, prev_t] if 0 <= prev_t < T else np.zeros((B, H))
        z, r, n = z_all[:, t], r_all[:, t], n_all[:, t]
        dh = dhs[:, t] + dh_next
        dn = dh * (1.0 - z)
        dz = dh * (h_prev - n)
        dh_prev = dh * z
        dn_pre = dn * (1.0 - n ** 2)
        drh = dn_pre @ Un.T
        dr = drh * h_prev
        dh_prev += drh * r
        dz_pre = dz * z * (1.0 - z)
        dr_pre = dr * r * (1.0 - r)
        dzr = np.concatenate([dz_pre, dr_pre], axis=1)
        dh_prev += dzr @ Uzr.T
        dU[:, :2 * H] += h_prev.T @ dzr
        dU[:, 2 * H:] += (r * h_prev).T @ dn_pre
        dpre[:, t, :2 * H] = dzr
        dpre[:, t, 2 * H:] = dn_pre
        dh_next = dh_prev
    flat_x = x.reshape(B * T, -1)
    flat_dp = dpre.reshape(B * T, 3 * H)
    grads = {"W": flat_x.T @ flat_dp, "U": dU, "b": flat_dp.sum(axis=0)}
    return dpre @ W.T, grads


# -- width-3 convolution over time, zero padded --------------------------------
# W: (3, D, H) taps for positions t-1, t, t+1; b: (H,)

def conv3_forward(x, W, b):
    B, T, D = x.shape
    padded = np.zeros((B, T + 2, D))
    padded[:, 1:-1] = x
    pre = b + sum(padded[:, k:k + T] @ W[k] for k in range(3))
    out = np.tanh(pre)
    return out, (padded, W, out)


def conv3_backward(dout, cache):
    padded, W, out = cache
    B, Tp, D = padded.shape
    T = Tp - 2
    dpre = dout * (1.0 - out ** 2)
    flat_dp = dpre.reshape(B * T, -1)
    dW = np.stack([padded[:, k:k + T].reshape(B * T, D).T @ flat_dp for k in range(3)])
    dpadded = np.zeros_like(padded)
    for k in range(3):
        dpadded[:, k:k + T] += dpre @ W[k].T
    return dpadded[:, 1:-1], {"W": dW, "b": flat_dp.sum(axis=0)}


# -- optimisation -------------------------------------------------------------

class Adam:
    """Adam with bias correction; state is keyed by parameter name."""

    def __init__(self, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: Params = {}
        self.v: Params = {}
        self.t = 0

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            m = self.m.get(k)
            if m is None:
                m = self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: Params, grads: Params) -> None:
        for k, g in grads.items():
            params[k] -= self.lr * g


def make_optimizer(name: str, lr: float):
    if name == "adam":
        return Adam(lr)
    if name == "sgd":
        return SGD(lr)
    raise ValueError(f"unknown optimizer {name!r}")


def length_batches(lengths, batch_size: int, rng: np.random.Generator | None):
    """Group sequence indices into equal-length batches.

    With ``rng`` the members of each length bucket and the batch order are
    shuffled; without it the order is ascending and stable.
    """
    buckets: dict[int, list[int]] = {}
    for i, n in enumerate(lengths):
        buckets.setdefault(int(n), []).append(i)
    batches = []
    for n in sorted(buckets):
        idx = np.asarray(buckets[n])
        if rng is not None:
            idx = rng.permutation(idx)
        for s in range(0, len(idx), batch_size):
            batches.append(idx[s:s + batch_size])
    if rng is not None:
        order = rng.permutation(len(batches))
        batches = [batches[i] for i in order]
    return batches
