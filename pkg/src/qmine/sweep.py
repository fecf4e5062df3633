"""Field-grid sweeps and phase-boundary readout.

A sweep walks the (B^x, B^z) grid, solves each node for its ground
state, evaluates the requested quantities and appends one CSV row per
node per quantity.  Runs are resumable: rows already on disk are never
rewritten, and per-node seeds derive from (master seed, B^x, B^z) so the
order of evaluation cannot change any value.

Output schema, one file per quantity:

    bx,bz,quantity,value,std,provenance,flags

with full-precision decimal floats, empty std where no spread exists,
and flags such as ``gap_warning`` / ``error:<kind>`` / ``undefined``.

Phase boundaries come from finite differences: derivative_scan maps a
grid to d/dB grids, boundary_trace picks the maximum-|derivative| node
per scan line, and susceptibility_scan does the same job through ground
state overlaps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .eigensolver import fidelity_susceptibility, ground_state
from .errors import ConfigurationError, QmineError
from .exact import (
    alpha_ratio,
    exact_mutual_information,
    half_partition,
    mean_sz,
    quarter_partition,
    von_neumann_entropy,
)
from .mice import MiceConfig, exact_specific_entropy, specific_entropy
from .mine import TrainConfig, estimate_mi
from .model import ModelParams
from .plugin import plugin_mi
from .sampling import sample_bitstrings

__all__ = [
    "QUANTITY_PROVENANCE",
    "DEFAULT_QUANTITIES",
    "PhaseGrid",
    "SweepConfig",
    "QuantityRecord",
    "BoundaryPoint",
    "SusceptibilityScan",
    "field_axis",
    "run_point",
    "run_sweep",
    "load_grid",
    "derivative_scan",
    "boundary_trace",
    "susceptibility_scan",
]

QUANTITY_PROVENANCE = {
    "mi_exact": "exact",
    "mi_mine": "mine",
    "mi_plugin": "plugin",
    "s0_mice": "mice",
    "s0_exact": "exact",
    "svn": "exact",
    "alpha": "exact",
    "sz": "exact",
    "chi_x": "exact",
    "chi_z": "exact",
}

DEFAULT_QUANTITIES = ("mi_exact", "s0_exact", "svn", "alpha", "sz")

CSV_HEADER = "bx,bz,quantity,value,std,provenance,flags"

# B^z = 0 with B^x below this sits on the degenerate AFM strip the sweep excludes
MIN_BX_ON_ZERO_ROW = 0.2


def field_axis(start: float, stop: float, step: float) -> np.ndarray:
    """Ascending inclusive grid, rounded to shed accumulated float drift."""
    if step <= 0:
        raise ConfigurationError(f"grid step must be positive, got {step}")
    if stop < start:
        raise ConfigurationError(f"empty field range [{start}, {stop}]")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 10)


@dataclass
class PhaseGrid:
    bx_values: np.ndarray
    bz_values: np.ndarray
    values: np.ndarray  # shape (len(bx), len(bz)); NaN marks undefined cells
    quantity: str = ""

    def __post_init__(self):
        self.bx_values = np.asarray(self.bx_values, dtype=np.float64)
        self.bz_values = np.asarray(self.bz_values, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        for axis in (self.bx_values, self.bz_values):
            if axis.ndim != 1 or axis.size == 0 or np.any(np.diff(axis) <= 0):
                raise ConfigurationError("grid axes must be non-empty and ascending")
        if self.values.shape != (self.bx_values.size, self.bz_values.size):
            raise ConfigurationError(
                f"cell block {self.values.shape} does not match axes "
                f"({self.bx_values.size}, {self.bz_values.size})"
            )


@dataclass
class SweepConfig:
    n_sites: int = 16
    bx_values: np.ndarray = field(default_factory=lambda: field_axis(0.2, 3.0, 0.1))
    bz_values: np.ndarray = field(default_factory=lambda: field_axis(0.0, 3.0, 0.1))
    quantities: tuple = DEFAULT_QUANTITIES
    n_samples: int = 15000
    partition: str = "half"
    seed: int = 0
    out_dir: Path = Path("sweep-out")
    train: TrainConfig = field(default_factory=TrainConfig)
    mice: MiceConfig = field(default_factory=MiceConfig)
    delta: float = 0.001
    solver_tol: float = 1e-10
    solver_max_iter: int = 500

    def validate(self) -> None:
        bx = np.asarray(self.bx_values, dtype=np.float64)
        bz = np.asarray(self.bz_values, dtype=np.float64)
        for axis in (bx, bz):
            if axis.ndim != 1 or axis.size == 0 or np.any(np.diff(axis) <= 0):
                raise ConfigurationError("field grids must be non-empty and ascending")
        unknown = [q for q in self.quantities if q not in QUANTITY_PROVENANCE]
        if unknown:
            raise ConfigurationError(
                f"unknown quantities {unknown}; available: {sorted(QUANTITY_PROVENANCE)}"
            )
        if not self.quantities:
            raise ConfigurationError("no quantities selected")
        if self.partition not in ("half", "quarter"):
            raise ConfigurationError("partition must be 'half' or 'quarter'")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be positive")
        if np.any(np.abs(bz) < 1e-12) and bx.min() < MIN_BX_ON_ZERO_ROW - 1e-9:
            raise ConfigurationError(
                "grid includes the degenerate strip: the bz = 0 row needs "
                f"bx >= {MIN_BX_ON_ZERO_ROW}"
            )


@dataclass
class QuantityRecord:
    value: float
    std: float  # NaN when the quantity has no spread
    provenance: str
    flags: str = ""


@dataclass
class BoundaryPoint:
    fixed_value: float
    location: float
    flat: bool = False


@dataclass
class SusceptibilityScan:
    fields: np.ndarray
    chi: np.ndarray
    peak_field: float
    peak_value: float


def _encode_field(value: float) -> int:
    # micro-unit encoding keeps SeedSequence entries non-negative integers
    return int(round(value * 1e6)) + (1 << 32)


def _node_seeds(master: int, bx: float, bz: float) -> tuple[int, int, int]:
    ss = np.random.SeedSequence([master, _encode_field(bx), _encode_field(bz)])
    sample_seed, mine_seed, mice_seed = (int(s) for s in ss.generate_state(3))
    return sample_seed, mine_seed, mice_seed


def _partition_for(config: SweepConfig):
    if config.partition == "half":
        return half_partition(config.n_sites)
    return quarter_partition(config.n_sites)


def run_point(config: SweepConfig, bx: float, bz: float, quantities=None) -> dict:
    """All requested quantities at one grid node; failures become sentinels."""
    config.validate()
    qs = tuple(quantities) if quantities is not None else tuple(config.quantities)
    unknown = [q for q in qs if q not in QUANTITY_PROVENANCE]
    if unknown:
        raise ConfigurationError(f"unknown quantities {unknown}")
    params = ModelParams(config.n_sites, 1.0, float(bx), float(bz))
    try:
        solved = ground_state(
            params, tol=config.solver_tol, max_iter=config.solver_max_iter, seed=config.seed
        )
    except QmineError as exc:
        tag = f"error:{type(exc).__name__}"
        return {
            q: QuantityRecord(np.nan, np.nan, QUANTITY_PROVENANCE[q], tag) for q in qs
        }
    psi = solved.state
    base_flags = ["gap_warning"] if solved.gap_warning else []
    part = _partition_for(config)
    sample_seed, mine_seed, mice_seed = _node_seeds(config.seed, bx, bz)
    dataset = None

    def measured():
        nonlocal dataset
        if dataset is None:
            dataset = sample_bitstrings(
                psi, config.n_samples, sample_seed, field_x=bx, field_z=bz,
                source="ground-state",
            )
        return dataset

    records = {}
    for q in qs:
        flags = list(base_flags)
        std = np.nan
        try:
            if q == "mi_exact":
                value = exact_mutual_information(psi, part)
            elif q == "svn":
                value = von_neumann_entropy(psi, part)
            elif q == "alpha":
                value = alpha_ratio(psi, part)
            elif q == "sz":
                value = mean_sz(psi)
            elif q == "s0_exact":
                value = exact_specific_entropy(psi)
            elif q == "chi_x":
                value = fidelity_susceptibility(
                    params, "z", delta=config.delta, tol=config.solver_tol,
                    max_iter=config.solver_max_iter, seed=config.seed,
                )
            elif q == "chi_z":
                value = fidelity_susceptibility(
                    params, "x", delta=config.delta, tol=config.solver_tol,
                    max_iter=config.solver_max_iter, seed=config.seed,
                )
            elif q == "mi_mine":
                est = estimate_mi(measured(), part, replace(config.train, seed=mine_seed))
                value, std = est.value, est.std
            elif q == "mi_plugin":
                value = plugin_mi(measured(), part)
            else:  # s0_mice
                dec = specific_entropy(
                    measured(), replace(config.mice, seed=mice_seed), mode="mine"
                )
                value, std = dec.s0, dec.s0_std
            if np.isnan(value):
                flags.append("undefined")
        except QmineError as exc:
            value = np.nan
            std = np.nan
            flags.append(f"error:{type(exc).__name__}")
        records[q] = QuantityRecord(
            float(value), float(std), QUANTITY_PROVENANCE[q], ";".join(flags)
        )
    return records


def _format_value(x: float) -> str:
    return "nan" if np.isnan(x) else repr(float(x))


def _format_row(bx: float, bz: float, quantity: str, rec: QuantityRecord) -> str:
    std = "" if np.isnan(rec.std) else repr(float(rec.std))
    return (
        f"{_format_value(bx)},{_format_value(bz)},{quantity},"
        f"{_format_value(rec.value)},{std},{rec.provenance},{rec.flags}\n"
    )


def _existing_keys(path: Path) -> set:
    """(bx, bz) string pairs already present; creates the header if absent."""
    if not path.exists() or path.stat().st_size == 0:
        path.write_text(CSV_HEADER + "\n", encoding="utf-8")
        return set()
    keys = set()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigurationError(f"{path} has unexpected header {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) >= 2:
                keys.add((parts[0], parts[1]))
    return keys


def run_sweep(config: SweepConfig) -> dict:
    """Walk the grid, append missing rows, and return the loaded grids."""
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {q: out / f"{q}.csv" for q in config.quantities}
    done = {q: _existing_keys(p) for q, p in paths.items()}
    for bx in config.bx_values:
        for bz in config.bz_values:
            key = (_format_value(bx), _format_value(bz))
            todo = [q for q in config.quantities if key not in done[q]]
            if not todo:
                continue
            records = run_point(config, float(bx), float(bz), todo)
            for q in todo:
                with open(paths[q], "a", encoding="utf-8", newline="") as fh:
                    fh.write(_format_row(float(bx), float(bz), q, records[q]))
                done[q].add(key)
    return {q: load_grid(p) for q, p in paths.items()}


def load_grid(path) -> PhaseGrid:
    """Rebuild a PhaseGrid from one sweep CSV (single quantity per file)."""
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigurationError(f"{path} has unexpected header {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 7:
                raise ConfigurationError(f"{path}: malformed row {line!r}")
            rows.append((float(parts[0]), float(parts[1]), parts[2], float(parts[3])))
    if not rows:
        raise ConfigurationError(f"{path} holds no data rows")
    quantities = {r[2] for r in rows}
    if len(quantities) != 1:
        raise ConfigurationError(f"{path} mixes quantities {sorted(quantities)}")
    bx_values = np.array(sorted({r[0] for r in rows}))
    bz_values = np.array(sorted({r[1] for r in rows}))
    values = np.full((bx_values.size, bz_values.size), np.nan)
    bx_index = {v: i for i, v in enumerate(bx_values)}
    bz_index = {v: i for i, v in enumerate(bz_values)}
    for bx, bz, _, value in rows:
        values[bx_index[bx], bz_index[bz]] = value
    return PhaseGrid(bx_values, bz_values, values, quantity=quantities.pop())


def derivative_scan(grid: PhaseGrid, axis: str) -> PhaseGrid:
    """d(quantity)/dB along one axis: central differences, one-sided edges."""
    if axis not in ("x", "z"):
        raise ConfigurationError(f"axis must be 'x' or 'z', got {axis!r}")
    coords = grid.bx_values if axis == "x" else grid.bz_values
    if coords.size < 3:
        raise ConfigurationError(f"need at least 3 nodes along b{axis} to differentiate")
    dvals = np.gradient(grid.values, coords, axis=0 if axis == "x" else 1, edge_order=1)
    return PhaseGrid(
        grid.bx_values, grid.bz_values, dvals, quantity=f"d_{grid.quantity}_d_b{axis}"
    )


def boundary_trace(grid: PhaseGrid, axis: str) -> list:
    """Per scan line, the field of maximum |value|; ties go to smaller field.

    Intended for derivative grids.  A line whose finite values are all
    equal yields its smallest field and a flatness mark (plus a warning),
    since an extremum position means nothing there.
    """
    if axis not in ("x", "z"):
        raise ConfigurationError(f"axis must be 'x' or 'z', got {axis!r}")
    if axis == "x":
        lines = [(grid.bz_values[j], grid.values[:, j]) for j in range(grid.bz_values.size)]
        coords = grid.bx_values
    else:
        lines = [(grid.bx_values[i], grid.values[i, :]) for i in range(grid.bx_values.size)]
        coords = grid.bz_values
    out = []
    for fixed, line in lines:
        mag = np.abs(line)
        finite = np.isfinite(mag)
        if not finite.any():
            out.append(BoundaryPoint(float(fixed), np.nan))
            continue
        spread = mag[finite].max() - mag[finite].min()
        flat = bool(spread <= 1e-12 * max(1.0, mag[finite].max()))
        masked = np.where(finite, mag, -np.inf)
        location = float(coords[int(np.argmax(masked))])
        if flat:
            warnings.warn(
                f"derivative line at fixed field {fixed} is flat; "
                "extremum position is arbitrary"
            )
        out.append(BoundaryPoint(float(fixed), location, flat))
    return out


def susceptibility_scan(
    config: SweepConfig,
    fixed_axis: str,
    fixed_value: float,
    scan_values,
    delta: float | None = None,
) -> SusceptibilityScan:
    """Ground-state overlap susceptibility along one field line.

    ``fixed_axis`` names the field held constant; the shift delta applies
    to the scanned field, matching the convention that chi_x is a
    function of B^z at fixed B^x.
    """
    if fixed_axis not in ("x", "z"):
        raise ConfigurationError(f"fixed_axis must be 'x' or 'z', got {fixed_axis!r}")
    config.validate()
    delta = config.delta if delta is None else float(delta)
    fields = np.asarray(scan_values, dtype=np.float64)
    if fields.ndim != 1 or fields.size == 0:
        raise ConfigurationError("scan_values must be a non-empty 1D grid")
    chi = np.empty(fields.size)
    for i, b in enumerate(fields):
        if fixed_axis == "x":
            params = ModelParams(config.n_sites, 1.0, float(fixed_value), float(b))
            vary = "z"
        else:
            params = ModelParams(config.n_sites, 1.0, float(b), float(fixed_value))
            vary = "x"
        chi[i] = fidelity_susceptibility(
            params, vary, delta=delta, tol=config.solver_tol,
            max_iter=config.solver_max_iter, seed=config.seed,
        )
    peak = int(np.argmax(chi))
    return SusceptibilityScan(fields, chi, float(fields[peak]), float(chi[peak]))
