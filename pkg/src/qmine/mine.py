"""Neural mutual-information estimation from measurement bitstrings.

A small dense network f(a, b) is trained to maximize the
Donsker-Varadhan lower bound

    M >= mean over joint pairs of f  -  log mean over shuffled pairs of e^f

(reported in bits).  The supremum over f equals the mutual information,
so a sufficiently expressive trained network approaches M from below;
finite batches can overshoot, which is why the reported value comes from
a smoothed validation curve rather than the raw training objective.

Protocol per run: shuffle and split the dataset 80/20, then iterate
momentum-SGD ascent on batches of 256 with inverted dropout, evaluating
the bound on the held-out fifth every 100 iterations with dropout off
and a fresh marginal shuffle.  The estimate is the maximum of the
smoothed validation curve; training stops early once that curve has
gone a configured number of iterations without a new best.  An ensemble
of independently initialized runs gives the quoted mean and spread.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericError
from .exact import Partition, subsystem_index
from .network import (
    MlpParams,
    backward,
    dv_objective as _dv_from_outputs,
    dv_value_and_upstream,
    ema_smooth,
    forward,
    init_mlp,
    init_velocity,
    make_dropout_masks,
    ma_smooth,
    sgd_step,
)
from .sampling import BitstringDataset, bits_from_configs

__all__ = [
    "TrainConfig",
    "TrainingCurves",
    "TrainResult",
    "MiEstimate",
    "dv_objective",
    "dv_gradient",
    "train_single",
    "estimate_mi",
    "write_diagnostics",
]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.8
    dropout_rate: float = 0.1
    batch_size: int = 256
    max_iterations: int = 20000
    split_fraction: float = 0.8  # training share of the dataset
    ema_gamma: float = 0.001
    ma_window: int = 500  # iterations, spanning ma_window/validation_period curve points
    validation_period: int = 100
    ensemble_size: int = 15
    seed: int = 0
    patience: int = 2000  # iterations without a new validation best before stopping
    smoothing: str = "ma"  # 'ma' or 'ema' filter for the validation curve
    grad_denominator: str = "batch"  # 'ema' swaps in a running mean for the log-term gradient
    denominator_gamma: float = 0.01
    share_dropout_masks: bool = True
    hidden: tuple = (64, 64, 64)

    def validate(self) -> None:
        checks = [
            (self.learning_rate > 0, "learning_rate must be positive"),
            (0 <= self.momentum < 1, "momentum must lie in [0, 1)"),
            (0 <= self.dropout_rate < 1, "dropout_rate must lie in [0, 1)"),
            (self.batch_size >= 1, "batch_size must be at least 1"),
            (self.max_iterations >= 1, "max_iterations must be at least 1"),
            (0 < self.split_fraction < 1, "split_fraction must lie in (0, 1)"),
            (0 < self.ema_gamma <= 1, "ema_gamma must lie in (0, 1]"),
            (self.ma_window >= 1, "ma_window must be at least 1"),
            (1 <= self.validation_period <= self.max_iterations,
             "validation_period must lie in [1, max_iterations]"),
            (self.ensemble_size >= 1, "ensemble_size must be at least 1"),
            (self.patience >= 1, "patience must be at least 1"),
            (self.smoothing in ("ma", "ema"), "smoothing must be 'ma' or 'ema'"),
            (self.grad_denominator in ("batch", "ema"),
             "grad_denominator must be 'batch' or 'ema'"),
            (0 < self.denominator_gamma <= 1, "denominator_gamma must lie in (0, 1]"),
            (len(self.hidden) >= 1 and all(h >= 1 for h in self.hidden),
             "hidden layer sizes must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message)


@dataclass
class TrainingCurves:
    train_raw: np.ndarray  # objective per iteration
    train_ema: np.ndarray
    val_iterations: np.ndarray
    val_raw: np.ndarray
    val_smooth: np.ndarray


@dataclass
class TrainResult:
    value: float  # bits, maximum of the smoothed validation curve
    best_iteration: int
    n_iterations: int
    curves: TrainingCurves


@dataclass
class MiEstimate:
    value: float  # ensemble mean, bits
    std: float  # sample standard deviation over the ensemble
    per_network: np.ndarray
    stop_iteration: list
    diagnostics: list = field(default_factory=list)  # TrainingCurves per member


def _pair_inputs(dataset: BitstringDataset, part: Partition):
    """Per-sample 0/1 feature rows for each subsystem, A columns then B."""
    a = subsystem_index(dataset.samples, part.sites_a)
    b = subsystem_index(dataset.samples, part.sites_b)
    xa = bits_from_configs(a, len(part.sites_a)).astype(np.float64)
    xb = bits_from_configs(b, len(part.sites_b)).astype(np.float64)
    return xa, xb


def dv_objective(params: MlpParams, joint_inputs, marginal_inputs, masks=None) -> float:
    """Bound value in bits for explicit joint/marginal input batches."""
    joint_inputs = np.atleast_2d(np.asarray(joint_inputs, dtype=np.float64))
    marginal_inputs = np.atleast_2d(np.asarray(marginal_inputs, dtype=np.float64))
    if joint_inputs.shape[0] == 0 or marginal_inputs.shape[0] == 0:
        raise ValueError("both batches must be non-empty")
    f_joint, _ = forward(params, joint_inputs, masks)
    f_marg, _ = forward(params, marginal_inputs, masks)
    if not (np.all(np.isfinite(f_joint)) and np.all(np.isfinite(f_marg))):
        raise NumericError("network produced non-finite outputs")
    return _dv_from_outputs(f_joint, f_marg)


def dv_gradient(params: MlpParams, joint_inputs, marginal_inputs, masks=None):
    """(value, (grads_w, grads_b)) for the batch bound; masks shared across passes."""
    joint_inputs = np.atleast_2d(np.asarray(joint_inputs, dtype=np.float64))
    marginal_inputs = np.atleast_2d(np.asarray(marginal_inputs, dtype=np.float64))
    if masks is not None and joint_inputs.shape[0] != marginal_inputs.shape[0]:
        raise ValueError("shared masks require equal batch sizes")
    n_joint = joint_inputs.shape[0]
    x = np.vstack([joint_inputs, marginal_inputs])
    stacked = None if masks is None else [np.vstack([m, m]) for m in masks]
    f, cache = forward(params, x, stacked)
    if not np.all(np.isfinite(f)):
        raise NumericError("network produced non-finite outputs")
    value, g_joint, g_marg, _ = dv_value_and_upstream(f[:n_joint], f[n_joint:])
    grads = backward(params, cache, np.concatenate([g_joint, g_marg]))
    return value, grads


def _validation_value(params, xa, xb, val_idx, rng) -> float:
    perm = rng.permutation(val_idx.size)
    a = xa[val_idx]
    b = xb[val_idx]
    x = np.vstack([np.hstack([a, b]), np.hstack([a, b[perm]])])
    f, _ = forward(params, x)
    if not np.all(np.isfinite(f)):
        raise NumericError("network produced non-finite outputs on validation")
    n = val_idx.size
    return _dv_from_outputs(f[:n], f[n:])


def train_single(
    dataset: BitstringDataset,
    part: Partition,
    config: TrainConfig,
    seed=None,
) -> TrainResult:
    """One full training run; bit-reproducible for a fixed seed.

    ``seed`` overrides ``config.seed`` (the ensemble driver passes spawned
    child seeds).  Accepts anything ``np.random.default_rng`` does.
    """
    config.validate()
    part.validate_for(dataset.n_sites)
    n = len(dataset)
    n_train = int(round(n * config.split_fraction))
    if n_train < 1 or n - n_train < 1:
        raise ConfigurationError(f"cannot split {n} samples {config.split_fraction:.0%}/rest")
    if n_train < config.batch_size:
        raise ConfigurationError(
            f"training split has {n_train} samples, fewer than batch_size={config.batch_size}"
        )

    rng = np.random.default_rng(config.seed if seed is None else seed)
    split = rng.permutation(n)
    train_idx, val_idx = split[:n_train], split[n_train:]
    xa, xb = _pair_inputs(dataset, part)
    params = init_mlp(xa.shape[1] + xb.shape[1], config.hidden, rng)
    velocity = init_velocity(params)
    batch = config.batch_size

    train_vals = np.empty(config.max_iterations)
    val_iters: list = []
    val_vals: list = []
    patience_evals = max(1, config.patience // config.validation_period)
    best_raw = -np.inf
    evals_since_best = 0
    denom = None
    order = rng.permutation(n_train)
    cursor = 0
    n_done = config.max_iterations

    for it in range(1, config.max_iterations + 1):
        if cursor + batch > n_train:  # new epoch, leftover tail discarded
            order = rng.permutation(n_train)
            cursor = 0
        idx = train_idx[order[cursor:cursor + batch]]
        cursor += batch
        shuffle = rng.permutation(batch)
        a = xa[idx]
        b = xb[idx]
        x = np.vstack([np.hstack([a, b]), np.hstack([a, b[shuffle]])])
        if config.dropout_rate > 0:
            if config.share_dropout_masks:
                half = make_dropout_masks(rng, batch, config.hidden, config.dropout_rate)
                masks = [np.vstack([m, m]) for m in half]
            else:
                masks = make_dropout_masks(rng, 2 * batch, config.hidden, config.dropout_rate)
        else:
            masks = None
        f, cache = forward(params, x, masks)
        if not np.all(np.isfinite(f)):
            raise NumericError(f"non-finite network output at iteration {it}")
        use_denom = None
        if config.grad_denominator == "ema" and denom is not None:
            use_denom = denom
        value, g_joint, g_marg, batch_mean_exp = dv_value_and_upstream(
            f[:batch], f[batch:], use_denom
        )
        if config.grad_denominator == "ema":
            g = config.denominator_gamma
            denom = batch_mean_exp if denom is None else (1 - g) * denom + g * batch_mean_exp
        train_vals[it - 1] = value
        grads = backward(params, cache, np.concatenate([g_joint, g_marg]))
        sgd_step(params, grads, velocity, config.learning_rate, config.momentum)

        if it % config.validation_period == 0:
            v = _validation_value(params, xa, xb, val_idx, rng)
            val_iters.append(it)
            val_vals.append(v)
            if v > best_raw:
                best_raw = v
                evals_since_best = 0
            else:
                evals_since_best += 1
            if evals_since_best >= patience_evals:
                n_done = it
                break

    val_iters = np.asarray(val_iters, dtype=np.int64)
    val_vals = np.asarray(val_vals, dtype=np.float64)
    if config.smoothing == "ma":
        window_points = max(1, config.ma_window // config.validation_period)
        val_smooth = ma_smooth(val_vals, window_points)
    else:
        # per-point constant equivalent to the per-iteration EMA rate
        gamma = 1.0 - (1.0 - config.ema_gamma) ** config.validation_period
        val_smooth = ema_smooth(val_vals, gamma)
    best = int(np.argmax(val_smooth))
    curves = TrainingCurves(
        train_raw=train_vals[:n_done],
        train_ema=ema_smooth(train_vals[:n_done], config.ema_gamma),
        val_iterations=val_iters,
        val_raw=val_vals,
        val_smooth=val_smooth,
    )
    return TrainResult(
        value=float(val_smooth[best]),
        best_iteration=int(val_iters[best]),
        n_iterations=n_done,
        curves=curves,
    )


def estimate_mi(dataset: BitstringDataset, part: Partition, config: TrainConfig) -> MiEstimate:
    """Ensemble of independent runs; mean, sample std and per-run details."""
    seeds = np.random.SeedSequence(config.seed).spawn(config.ensemble_size)
    results = [train_single(dataset, part, config, seed=s) for s in seeds]
    values = np.array([r.value for r in results])
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return MiEstimate(
        value=float(values.mean()),
        std=std,
        per_network=values,
        stop_iteration=[r.best_iteration for r in results],
        diagnostics=[r.curves for r in results],
    )


def write_diagnostics(path, curves: TrainingCurves) -> None:
    """Training curves as CSV, validation columns filled every eval period."""
    by_iter = {int(i): j for j, i in enumerate(curves.val_iterations)}
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,raw_train,ema_train,raw_valid,ma_valid\n")
        for i in range(curves.train_raw.size):
            row = f"{i + 1},{float(curves.train_raw[i])!r},{float(curves.train_ema[i])!r}"
            j = by_iter.get(i + 1)
            if j is None:
                fh.write(row + ",,\n")
            else:
                fh.write(
                    f"{row},{float(curves.val_raw[j])!r},"
                    f"{float(curves.val_smooth[j])!r}\n"
                )
