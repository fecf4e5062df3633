"""Exact entropy-based quantities computed from a wave function.

All Shannon-type entropies are in bits (log base 2), so the classical
mutual information between the halves of the antiferromagnetic cat state
is exactly 1 and the entanglement-to-information ratio is exactly 1 deep
in the ordered phase.

Subsystem configurations follow the site-list order of the partition:
bit j of a sub-configuration is the measured value at ``sites[j]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .eigensolver import WaveFunction
from .errors import DimensionError

__all__ = [
    "Partition",
    "ProbabilityTable",
    "half_partition",
    "quarter_partition",
    "state_probabilities",
    "marginalize",
    "shannon_entropy",
    "exact_mutual_information",
    "von_neumann_entropy",
    "alpha_ratio",
    "mean_sz",
    "subsystem_index",
]

SCHMIDT_CUTOFF = 1e-14   # squared Schmidt coefficients below this count as exact zeros
ALPHA_FLOOR = 1e-6       # bits; ratio undefined when the mutual information is smaller


@dataclass(frozen=True)
class Partition:
    """Two disjoint ordered site lists naming subsystems A and B."""

    sites_a: tuple[int, ...]
    sites_b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites_a", tuple(self.sites_a))
        object.__setattr__(self, "sites_b", tuple(self.sites_b))
        if not self.sites_a or not self.sites_b:
            raise ValueError("both subsystems must be non-empty")
        if min(self.sites_a + self.sites_b) < 0:
            raise ValueError("site indices must be non-negative")
        if set(self.sites_a) & set(self.sites_b):
            raise ValueError("subsystems must be disjoint")
        if len(set(self.sites_a)) != len(self.sites_a) or len(
            set(self.sites_b)
        ) != len(self.sites_b):
            raise ValueError("site lists must not repeat indices")

    @property
    def all_sites(self) -> tuple[int, ...]:
        return self.sites_a + self.sites_b

    def validate_for(self, n_sites: int) -> None:
        if max(self.all_sites) >= n_sites:
            raise DimensionError(
                f"partition references site {max(self.all_sites)} "
                f"but the chain has {n_sites} sites"
            )

    def covers(self, n_sites: int) -> bool:
        return set(self.all_sites) == set(range(n_sites))


def half_partition(n_sites: int) -> Partition:
    """Equally balanced bipartition: contiguous halves of the ring."""
    if n_sites % 2:
        raise ValueError(f"need an even chain for the half partition, got {n_sites}")
    h = n_sites // 2
    return Partition(tuple(range(h)), tuple(range(h, n_sites)))


def quarter_partition(n_sites: int) -> Partition:
    """Adjacent quarter blocks; half the ring is left out of the estimate."""
    if n_sites % 4:
        raise ValueError(
            f"need a chain length divisible by 4 for the quarter partition, got {n_sites}"
        )
    q = n_sites // 4
    return Partition(tuple(range(q)), tuple(range(q, 2 * q)))


@dataclass
class ProbabilityTable:
    """Probability vector over the 2^n_bits configurations of a subsystem."""

    probs: np.ndarray
    n_bits: int

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.shape != (1 << self.n_bits,):
            raise DimensionError(
                f"expected {1 << self.n_bits} probabilities, got shape {self.probs.shape}"
            )
        if np.any(self.probs < -1e-15):
            raise ValueError("negative probability entry")
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {total!r}, not 1")


def state_probabilities(psi: WaveFunction) -> ProbabilityTable:
    """Born-rule measurement distribution in the sz basis: p[s] = amp[s]^2."""
    return ProbabilityTable(psi.amplitudes**2, psi.n_sites)


def subsystem_index(states: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """Map full configurations to sub-configurations over ``sites``.

    Bit j of the result is bit ``sites[j]`` of the input, so the output
    indexes a table of width len(sites) in site-list order.
    """
    states = np.asarray(states, dtype=np.int64)
    out = np.zeros_like(states)
    for j, site in enumerate(sites):
        out |= ((states >> int(site)) & 1) << j
    return out


def marginalize(
    table: ProbabilityTable, sites: Sequence[int], full_width: int | None = None
) -> ProbabilityTable:
    """Marginal distribution over ``sites``: sum all consistent configurations."""
    width = table.n_bits if full_width is None else full_width
    if width != table.n_bits:
        raise DimensionError(
            f"table has width {table.n_bits}, full_width says {width}"
        )
    sites = tuple(int(s) for s in sites)
    if any(s < 0 or s >= width for s in sites):
        raise DimensionError(f"sites {sites} out of range for width {width}")
    sub = subsystem_index(np.arange(1 << width, dtype=np.int64), sites)
    probs = np.bincount(sub, weights=table.probs, minlength=1 << len(sites))
    return ProbabilityTable(probs, len(sites))


def shannon_entropy(table: ProbabilityTable) -> float:
    """-sum p log2 p in bits, with 0 * log 0 = 0."""
    p = table.probs
    return float(-np.sum(xlogy(p, p)) / math.log(2.0))


def exact_mutual_information(psi: WaveFunction, part: Partition) -> float:
    """H(A) + H(B) - H(A,B) from exact marginals of the measurement distribution."""
    part.validate_for(psi.n_sites)
    table = state_probabilities(psi)
    h_a = shannon_entropy(marginalize(table, part.sites_a))
    h_b = shannon_entropy(marginalize(table, part.sites_b))
    h_ab = shannon_entropy(marginalize(table, part.all_sites))
    return h_a + h_b - h_ab


def von_neumann_entropy(psi: WaveFunction, part: Partition) -> float:
    """Entanglement entropy of subsystem A across a full bipartition, in bits.

    The amplitude vector is reshaped into a 2^|A| x 2^|B| matrix ordered
    by the partition's site lists; the squared singular values are the
    Schmidt weights.  Weights below ``SCHMIDT_CUTOFF`` are treated as
    exact zeros.
    """
    part.validate_for(psi.n_sites)
    if not part.covers(psi.n_sites):
        raise DimensionError(
            "von Neumann entropy needs a full bipartition of the chain"
        )
    states = np.arange(psi.amplitudes.size, dtype=np.int64)
    rows = subsystem_index(states, part.sites_a)
    cols = subsystem_index(states, part.sites_b)
    matrix = np.zeros((1 << len(part.sites_a), 1 << len(part.sites_b)))
    matrix[rows, cols] = psi.amplitudes
    weights = np.linalg.svd(matrix, compute_uv=False) ** 2
    weights = weights[weights > SCHMIDT_CUTOFF]
    return float(-np.sum(weights * np.log2(weights)))


def alpha_ratio(
    psi: WaveFunction, part: Partition, floor: float = ALPHA_FLOOR
) -> float:
    """Ratio of entanglement entropy to classical mutual information.

    Returns NaN (the undefined sentinel) when the mutual information is
    below ``floor``; tiny denominators make the ratio meaningless there.
    """
    mi = exact_mutual_information(psi, part)
    if mi < floor:
        return math.nan
    return von_neumann_entropy(psi, part) / mi


def mean_sz(psi: WaveFunction) -> float:
    """Site-averaged <sz>: +1 for the polarized state, 0 for Neel strings."""
    n = psi.n_sites
    states = np.arange(psi.amplitudes.size, dtype=np.int64)
    ones = np.zeros(psi.amplitudes.size, dtype=np.int64)
    for k in range(n):
        ones += (states >> k) & 1
    per_state = (n - 2 * ones) / n
    return float(np.dot(psi.amplitudes**2, per_state))
