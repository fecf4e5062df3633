"""Projective-measurement bitstrings and training-pair assembly.

Datasets imitate experimental measurement records: n independent draws
from the Born distribution of a wave function in the sz basis.  Pair
batches hold the two input streams a mutual-information network trains
on: subsystem configurations combined in measured order (joint) and with
the B side randomly permuted within the batch (product of marginals).

On disk a dataset is line-oriented text: a single header line

    # qmine-bitstrings v1 N=<n> Bx=<f> Bz=<f> seed=<u>

followed by one N-character 0/1 string per measurement, site 0 leftmost,
newline-terminated, no trailing whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .eigensolver import WaveFunction
from .errors import DatasetFormatError, DimensionError
from .exact import Partition, state_probabilities, subsystem_index

__all__ = [
    "DatasetMeta",
    "BitstringDataset",
    "PairBatch",
    "sample_bitstrings",
    "project",
    "bits_from_configs",
    "make_pair_batch",
    "write_dataset",
    "read_dataset",
]

_HEADER_RE = re.compile(
    r"^# qmine-bitstrings v1 N=(\d+) Bx=(\S+) Bz=(\S+) seed=(\d+)$"
)


@dataclass(frozen=True)
class DatasetMeta:
    field_x: float = 0.0
    field_z: float = 0.0
    seed: int = 0
    source: str = field(default="synthetic", compare=False)  # not persisted


@dataclass
class BitstringDataset:
    """Measurement outcomes stored as integer configurations (bit k = site k)."""

    samples: np.ndarray
    n_sites: int
    meta: DatasetMeta = field(default_factory=DatasetMeta)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int64)
        if self.samples.ndim != 1:
            raise DimensionError("samples must be a flat array of configurations")
        if self.samples.size and (
            self.samples.min() < 0 or self.samples.max() >= (1 << self.n_sites)
        ):
            raise DimensionError(
                f"sample out of range for {self.n_sites} sites"
            )

    def __len__(self) -> int:
        return self.samples.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitstringDataset):
            return NotImplemented
        return (
            self.n_sites == other.n_sites
            and self.meta == other.meta
            and np.array_equal(self.samples, other.samples)
        )


@dataclass
class PairBatch:
    """Aligned and marginal-shuffled subsystem pairs for one training batch.

    ``b_marginal`` is a permutation of ``b_joint``, so the B-side multiset
    is identical between the two streams; only the pairing with A differs.
    """

    a_configs: np.ndarray
    b_joint: np.ndarray
    b_marginal: np.ndarray
    part: Partition

    @property
    def joint_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a_configs, self.b_joint

    @property
    def marginal_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a_configs, self.b_marginal

    def __len__(self) -> int:
        return self.a_configs.size


def sample_bitstrings(
    psi: WaveFunction,
    n: int,
    seed: int,
    field_x: float = 0.0,
    field_z: float = 0.0,
    source: str = "wavefunction",
) -> BitstringDataset:
    """n i.i.d. draws from the measurement distribution of ``psi``.

    Inverse-CDF sampling through a cumulative table; deterministic for a
    fixed seed.  ``field_x``/``field_z`` only annotate the metadata.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    probs = state_probabilities(psi).probs
    cdf = np.cumsum(probs)
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    configs = np.searchsorted(cdf, u, side="right")
    np.clip(configs, 0, probs.size - 1, out=configs)
    return BitstringDataset(
        configs.astype(np.int64),
        psi.n_sites,
        DatasetMeta(field_x, field_z, seed, source),
    )


def project(dataset: BitstringDataset, sites: Sequence[int]) -> np.ndarray:
    """Reduce every sample to the bits at ``sites`` (site-list bit order)."""
    sites = tuple(int(s) for s in sites)
    if any(s < 0 or s >= dataset.n_sites for s in sites):
        raise DimensionError(
            f"sites {sites} out of range for {dataset.n_sites} sites"
        )
    return subsystem_index(dataset.samples, sites)


def bits_from_configs(configs: np.ndarray, n_bits: int) -> np.ndarray:
    """(n, n_bits) 0/1 matrix; column j is bit j of each configuration."""
    configs = np.asarray(configs, dtype=np.int64)
    return ((configs[:, None] >> np.arange(n_bits)) & 1).astype(np.uint8)


def make_pair_batch(
    dataset: BitstringDataset,
    part: Partition,
    indices: Sequence[int],
    seed: int,
) -> PairBatch:
    """Joint and shuffled-marginal pairs for the samples at ``indices``.

    The marginal side reuses the same A configurations and permutes the B
    side uniformly within the batch (fresh seeded permutation per call;
    coincidentally aligned pairs are allowed).
    """
    part.validate_for(dataset.n_sites)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise ValueError("pair batch needs at least one sample index")
    if indices.min() < 0 or indices.max() >= len(dataset):
        raise DimensionError("batch indices out of dataset range")
    picked = dataset.samples[indices]
    a = subsystem_index(picked, part.sites_a)
    b = subsystem_index(picked, part.sites_b)
    perm = np.random.default_rng(seed).permutation(indices.size)
    return PairBatch(a, b, b[perm], part)


def write_dataset(dataset: BitstringDataset, path) -> None:
    path = Path(path)
    meta = dataset.meta
    header = (
        f"# qmine-bitstrings v1 N={dataset.n_sites} "
        f"Bx={float(meta.field_x)!r} Bz={float(meta.field_z)!r} seed={meta.seed}"
    )
    bits = bits_from_configs(dataset.samples, dataset.n_sites) + ord("0")
    lines = np.empty((len(dataset), dataset.n_sites + 1), dtype=np.uint8)
    lines[:, :-1] = bits
    lines[:, -1] = ord("\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(b"\n")
        fh.write(lines.tobytes())


def read_dataset(path) -> BitstringDataset:
    path = Path(path)
    text = path.read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines:
        raise DatasetFormatError("empty file", line=1)
    match = _HEADER_RE.match(lines[0])
    if match is None:
        raise DatasetFormatError(
            f"bad header {lines[0]!r}; expected '# qmine-bitstrings v1 ...'", line=1
        )
    n_sites = int(match.group(1))
    try:
        bx, bz = float(match.group(2)), float(match.group(3))
    except ValueError as exc:
        raise DatasetFormatError(f"unparsable field value in header: {exc}", line=1)
    seed = int(match.group(4))
    body = lines[1:]
    if not body:
        raise DatasetFormatError("dataset contains a header but no samples", line=2)
    for i, line in enumerate(body):
        if len(line) != n_sites:
            raise DatasetFormatError(
                f"expected {n_sites} characters, got {len(line)}", line=i + 2
            )
    raw = np.frombuffer("".join(body).encode("ascii"), dtype=np.uint8)
    raw = raw.reshape(len(body), n_sites)
    bad = (raw != ord("0")) & (raw != ord("1"))
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        raise DatasetFormatError(
            f"character {chr(raw[bad][0])!r} is not 0/1", line=row + 2
        )
    bits = (raw - ord("0")).astype(np.int64)
    configs = bits @ (np.int64(1) << np.arange(n_sites, dtype=np.int64))
    return BitstringDataset(
        configs, n_sites, DatasetMeta(bx, bz, seed, source="file")
    )
