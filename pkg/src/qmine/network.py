"""Small dense network and training primitives, no autograd.

The mutual-information objective needs one scalar output per input row
and exact gradients of a log-mean-exp term, which is little enough that
a hand-written forward/backward over a few dense layers beats pulling in
a framework.  Everything here is stateless: parameters, dropout masks
and momentum buffers are passed explicitly so training loops stay
reproducible.

Conventions: activations are ReLU on every hidden layer, linear output;
dropout is inverted (scale by 1/keep at train time, nothing at eval);
the step direction is ascent because the objective is a lower bound to
be maximized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN2 = float(np.log(2.0))

__all__ = [
    "MlpParams",
    "init_mlp",
    "make_dropout_masks",
    "forward",
    "backward",
    "dv_value_and_upstream",
    "dv_objective",
    "init_velocity",
    "sgd_step",
    "ema_smooth",
    "ma_smooth",
]


@dataclass
class MlpParams:
    weights: list  # [np.ndarray (fan_in, fan_out)]
    biases: list  # [np.ndarray (fan_out,)]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_mlp(in_dim: int, hidden=(64, 64, 64), rng=None) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    if rng is None:
        rng = np.random.default_rng()
    sizes = [in_dim, *hidden, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def make_dropout_masks(rng, batch: int, hidden, rate: float) -> list:
    """Per-sample inverted-dropout masks for each hidden layer."""
    keep = 1.0 - rate
    return [
        (rng.random((batch, h)) < keep).astype(np.float64) / keep for h in hidden
    ]


def forward(params: MlpParams, x: np.ndarray, masks=None):
    """Network outputs (batch,) plus the cache needed by ``backward``.

    ``masks`` is None for evaluation; at train time pass one mask per
    hidden layer (rows matching ``x``).
    """
    a = np.asarray(x, dtype=np.float64)
    acts = [a]
    gates = []
    n_hidden = params.n_layers - 1
    for layer in range(n_hidden):
        z = a @ params.weights[layer] + params.biases[layer]
        gate = z > 0.0
        a = np.where(gate, z, 0.0)
        if masks is not None:
            a = a * masks[layer]
        acts.append(a)
        gates.append(gate)
    out = (a @ params.weights[-1] + params.biases[-1]).ravel()
    return out, (acts, gates, masks)


def backward(params: MlpParams, cache, upstream: np.ndarray):
    """Parameter gradients for sum_i upstream_i * f(x_i).

    ``upstream`` carries any 1/batch factors, so the returned gradients
    are exactly d(objective)/d(parameter).
    """
    acts, gates, masks = cache
    n = params.n_layers
    grads_w = [None] * n
    grads_b = [None] * n
    d = np.asarray(upstream, dtype=np.float64)[:, None]
    grads_w[-1] = acts[-1].T @ d
    grads_b[-1] = d.sum(axis=0)
    da = d @ params.weights[-1].T
    for layer in range(n - 2, -1, -1):
        if masks is not None:
            da = da * masks[layer]
        dz = da * gates[layer]
        grads_w[layer] = acts[layer].T @ dz
        grads_b[layer] = dz.sum(axis=0)
        if layer > 0:
            da = dz @ params.weights[layer].T
    return grads_w, grads_b


def dv_objective(f_joint: np.ndarray, f_marg: np.ndarray) -> float:
    """Donsker-Varadhan lower bound in bits: mean(f_P) - log mean(exp f_Q).

    Both streams are centered on the marginal max before averaging, so
    outputs that agree between the streams cancel exactly instead of to
    rounding error.
    """
    shift = f_marg.max()
    log_mean_exp = np.log(np.mean(np.exp(f_marg - shift)))
    return float(((f_joint - shift).mean() - log_mean_exp) / LN2)


def dv_value_and_upstream(f_joint: np.ndarray, f_marg: np.ndarray, marg_denom=None):
    """Objective in bits plus per-sample upstream gradients for both streams.

    The value always uses the in-batch denominator.  ``marg_denom``
    (mean of exp f over the marginal stream, possibly smoothed across
    iterations) replaces it in the gradient only; None keeps the plain
    biased batch gradient.  Also returns the batch mean of exp(f_marg)
    rescaled to the shift-free convention, for callers that maintain a
    running denominator.
    """
    shift = f_marg.max()
    exp_f = np.exp(f_marg - shift)
    batch_mean = exp_f.mean()
    value = float(((f_joint - shift).mean() - np.log(batch_mean)) / LN2)
    n_joint = f_joint.size
    g_joint = np.full(n_joint, 1.0 / (n_joint * LN2))
    if marg_denom is None:
        weights = exp_f / (batch_mean * f_marg.size)
    else:
        weights = np.exp(f_marg) / (marg_denom * f_marg.size)
    g_marg = -weights / LN2
    return value, g_joint, g_marg, float(batch_mean * np.exp(shift))


def init_velocity(params: MlpParams):
    return (
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
    )


def sgd_step(params: MlpParams, grads, velocity, lr: float, momentum: float) -> None:
    """In-place momentum ascent: v <- m v + g, theta <- theta + lr v."""
    grads_w, grads_b = grads
    vel_w, vel_b = velocity
    for i in range(params.n_layers):
        vel_w[i] *= momentum
        vel_w[i] += grads_w[i]
        params.weights[i] += lr * vel_w[i]
        vel_b[i] *= momentum
        vel_b[i] += grads_b[i]
        params.biases[i] += lr * vel_b[i]


def ema_smooth(values: np.ndarray, gamma: float) -> np.ndarray:
    """Exponential moving average, seeded with the first raw value."""
    values = np.asarray(values, dtype=np.float64)
    out = np.empty_like(values)
    if values.size == 0:
        return out
    acc = values[0]
    for i, v in enumerate(values):
        acc = (1.0 - gamma) * acc + gamma * v
        out[i] = acc
    return out


def ma_smooth(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window truncates at both edges."""
    values = np.asarray(values, dtype=np.float64)
    if window < 1:
        raise ValueError("window must be positive")
    half = window // 2
    out = np.empty_like(values)
    for i in range(values.size):
        lo = max(0, i - half)
        hi = min(values.size, i + half + 1)
        out[i] = values[lo:hi].mean()
    return out
