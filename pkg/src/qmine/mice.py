"""Specific entropy by recursive halving.

The Shannon entropy per site of the full measurement distribution
decomposes exactly when equal-size blocks are statistically
indistinguishable (translation invariance on the ring):

    s0 = s_k - (1/2) * sum_j M(A_j, twin_j) / V_j

where level j splits the previous block into contiguous left and right
halves (volumes V_j = V_0 / 2^j), M is the mutual information between
them, and s_k is the per-site entropy of the terminal block.  Estimating
the M terms from bitstrings sidesteps the exponential cost of the full
joint histogram: the large blocks go to the neural estimator, the small
ones to direct histograms, and only the terminal block needs an
exhaustive frequency table.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .eigensolver import WaveFunction
from .errors import ConfigurationError
from .exact import (
    Partition,
    exact_mutual_information,
    marginalize,
    shannon_entropy,
    state_probabilities,
    subsystem_index,
)
from .mine import TrainConfig, estimate_mi
from .plugin import empirical_entropy, plugin_mi
from .sampling import BitstringDataset

__all__ = [
    "MiceConfig",
    "MiceLevel",
    "MiceDecomposition",
    "halving_schedule",
    "specific_entropy",
    "exact_specific_entropy",
]

MODES = ("mine", "plugin", "exact")


@dataclass(frozen=True)
class MiceConfig:
    terminal_size: int = 1
    plugin_threshold: int = 4  # half sizes up to this use histogram MI
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0


@dataclass
class MiceLevel:
    sites: tuple  # the block A_j carried into the next level
    twin: tuple  # its discarded other half
    volume: int
    mi: float
    mi_std: float
    estimator: str  # 'mine' | 'plugin' | 'exact'


@dataclass
class MiceDecomposition:
    levels: list
    s_k: float  # per-site entropy of the terminal block, bits
    s0: float  # bits per site
    s0_std: float
    terminal_sites: tuple

    def reconstruct(self) -> float:
        """Recombine stored parts; must reproduce s0 exactly."""
        return self.s_k - 0.5 * sum(lv.mi / lv.volume for lv in self.levels)


def halving_schedule(sites, terminal_size: int = 1) -> list:
    """(left, right) contiguous splits down to blocks of ``terminal_size``."""
    sites = tuple(int(s) for s in sites)
    if terminal_size < 1:
        raise ValueError("terminal_size must be at least 1")
    ratio, rem = divmod(len(sites), terminal_size)
    if rem or ratio < 2 or ratio & (ratio - 1):
        raise ValueError(
            f"{len(sites)} sites cannot be halved down to blocks of {terminal_size}"
        )
    levels = []
    block = sites
    while len(block) > terminal_size:
        half = len(block) // 2
        levels.append((block[:half], block[half:]))
        block = block[:half]
    return levels


def _level_seed(seed: int, level: int) -> int:
    return int(np.random.SeedSequence([seed, level]).generate_state(1)[0])


def specific_entropy(data, config: MiceConfig | None = None, mode: str = "mine") -> MiceDecomposition:
    """Assemble the halving decomposition of the per-site entropy.

    ``mode`` selects the per-level MI estimator: 'exact' takes a
    WaveFunction and evaluates true marginals; 'plugin' and 'mine' take a
    BitstringDataset, the latter switching to the neural estimator for
    blocks above the plugin threshold.
    """
    if config is None:
        config = MiceConfig()
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "exact":
        if not isinstance(data, WaveFunction):
            raise ConfigurationError("exact mode evaluates a WaveFunction, not samples")
        table = state_probabilities(data)
    else:
        if not isinstance(data, BitstringDataset):
            raise ConfigurationError(f"{mode} mode needs a BitstringDataset")

    n = data.n_sites
    schedule = halving_schedule(range(n), config.terminal_size)
    levels = []
    for j, (left, right) in enumerate(schedule):
        part = Partition(left, right)
        if mode == "exact":
            mi, std, tag = exact_mutual_information(data, part), 0.0, "exact"
        elif mode == "plugin" or len(left) <= config.plugin_threshold:
            mi, std, tag = plugin_mi(data, part), 0.0, "plugin"
        else:
            cfg = replace(config.train, seed=_level_seed(config.seed, j))
            est = estimate_mi(data, part, cfg)
            mi, std, tag = est.value, est.std, "mine"
        levels.append(MiceLevel(left, right, len(left), mi, std, tag))

    terminal = schedule[-1][0]
    if mode == "exact":
        s_k = shannon_entropy(marginalize(table, terminal)) / len(terminal)
    else:
        s_k = empirical_entropy(subsystem_index(data.samples, terminal)) / len(terminal)
    s0 = s_k - 0.5 * sum(lv.mi / lv.volume for lv in levels)
    s0_std = 0.5 * float(np.sqrt(sum((lv.mi_std / lv.volume) ** 2 for lv in levels)))
    return MiceDecomposition(levels, float(s_k), float(s0), s0_std, terminal)


def exact_specific_entropy(psi: WaveFunction) -> float:
    """Per-site Shannon entropy of the full measurement distribution."""
    return shannon_entropy(state_probabilities(psi)) / psi.n_sites
