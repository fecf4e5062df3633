"""Estimator objects with the scikit-learn fit/params contract.

Thin wrappers over the functional estimators for pipelines that expect
`fit(X)` plus trailing-underscore attributes: X is an (n_samples,
n_sites) matrix of 0/1 measurement outcomes, column j holding site j.
Hyperparameters are stored verbatim so get_params/set_params/clone work
unchanged.  The physics layer (Hamiltonians, eigensolver, exact
quantities) stays functional; only the data-driven estimators have a
natural fit shape.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConfigurationError
from .exact import Partition, half_partition, quarter_partition
from .mice import MiceConfig, specific_entropy
from .mine import TrainConfig, estimate_mi
from .plugin import plugin_mi
from .sampling import BitstringDataset

__all__ = [
    "as_dataset",
    "resolve_partition",
    "MineMutualInfoEstimator",
    "PluginMutualInfoEstimator",
    "MiceEntropyEstimator",
]


def as_dataset(X) -> BitstringDataset:
    """Accept a BitstringDataset or a 0/1 sample matrix (columns = sites)."""
    if isinstance(X, BitstringDataset):
        return X
    X = check_array(X, dtype="numeric", ensure_2d=True)
    values = np.unique(X)
    if not np.all(np.isin(values, (0, 1))):
        raise ConfigurationError("sample matrix entries must be 0 or 1")
    bits = X.astype(np.int64)
    n_sites = bits.shape[1]
    configs = bits @ (np.int64(1) << np.arange(n_sites, dtype=np.int64))
    return BitstringDataset(configs, n_sites)


def resolve_partition(partition, n_sites: int) -> Partition:
    """'half', 'quarter', a Partition, or an explicit (sites_a, sites_b) pair."""
    if isinstance(partition, Partition):
        partition.validate_for(n_sites)
        return partition
    if partition == "half":
        return half_partition(n_sites)
    if partition == "quarter":
        return quarter_partition(n_sites)
    if isinstance(partition, (tuple, list)) and len(partition) == 2:
        part = Partition(tuple(partition[0]), tuple(partition[1]))
        part.validate_for(n_sites)
        return part
    raise ConfigurationError(
        f"partition must be 'half', 'quarter', a Partition or a site-list pair, "
        f"got {partition!r}"
    )


class MineMutualInfoEstimator(BaseEstimator):
    """Neural lower-bound MI between two subsystems of measured bitstrings.

    After fit: ``mi_`` (ensemble mean, bits), ``std_``, ``per_network_``,
    ``stop_iteration_``, ``n_features_in_``.
    """

    def __init__(self, partition="half", learning_rate=0.01, momentum=0.8,
                 dropout_rate=0.1, batch_size=256, max_iterations=20000,
                 validation_period=100, ma_window=500, patience=2000,
                 ensemble_size=15, smoothing="ma", seed=0):
        self.partition = partition
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.dropout_rate = dropout_rate
        self.batch_size = batch_size
        self.max_iterations = max_iterations
        self.validation_period = validation_period
        self.ma_window = ma_window
        self.patience = patience
        self.ensemble_size = ensemble_size
        self.smoothing = smoothing
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            dropout_rate=self.dropout_rate,
            batch_size=self.batch_size,
            max_iterations=self.max_iterations,
            validation_period=self.validation_period,
            ma_window=self.ma_window,
            patience=self.patience,
            ensemble_size=self.ensemble_size,
            smoothing=self.smoothing,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        data = as_dataset(X)
        part = resolve_partition(self.partition, data.n_sites)
        estimate = estimate_mi(data, part, self._train_config())
        self.n_features_in_ = data.n_sites
        self.mi_ = estimate.value
        self.std_ = estimate.std
        self.per_network_ = estimate.per_network
        self.stop_iteration_ = estimate.stop_iteration
        return self

    def score(self, X=None, y=None) -> float:
        check_is_fitted(self, "mi_")
        return self.mi_


class PluginMutualInfoEstimator(BaseEstimator):
    """Histogram MI between two subsystems; fast, biased for large blocks.

    After fit: ``mi_``, ``n_features_in_``.
    """

    def __init__(self, partition="half"):
        self.partition = partition

    def fit(self, X, y=None):
        data = as_dataset(X)
        part = resolve_partition(self.partition, data.n_sites)
        self.n_features_in_ = data.n_sites
        self.mi_ = plugin_mi(data, part)
        return self

    def score(self, X=None, y=None) -> float:
        check_is_fitted(self, "mi_")
        return self.mi_


class MiceEntropyEstimator(BaseEstimator):
    """Per-site entropy by recursive halving of the measured system.

    After fit: ``s0_``, ``s0_std_``, ``s_k_``, ``levels_``,
    ``n_features_in_``.
    """

    def __init__(self, mode="mine", terminal_size=1, plugin_threshold=4,
                 ensemble_size=15, max_iterations=20000, patience=2000, seed=0):
        self.mode = mode
        self.terminal_size = terminal_size
        self.plugin_threshold = plugin_threshold
        self.ensemble_size = ensemble_size
        self.max_iterations = max_iterations
        self.patience = patience
        self.seed = seed

    def _mice_config(self) -> MiceConfig:
        return MiceConfig(
            terminal_size=self.terminal_size,
            plugin_threshold=self.plugin_threshold,
            train=TrainConfig(
                ensemble_size=self.ensemble_size,
                max_iterations=self.max_iterations,
                patience=self.patience,
            ),
            seed=self.seed,
        )

    def fit(self, X, y=None):
        data = as_dataset(X)
        decomposition = specific_entropy(data, self._mice_config(), mode=self.mode)
        self.n_features_in_ = data.n_sites
        self.s0_ = decomposition.s0
        self.s0_std_ = decomposition.s0_std
        self.s_k_ = decomposition.s_k
        self.levels_ = decomposition.levels
        return self

    def score(self, X=None, y=None) -> float:
        check_is_fitted(self, "s0_")
        return self.s0_
