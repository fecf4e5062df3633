"""Command-line front end.

Every pipeline stage is reachable on its own: `solve` for exact
quantities at one field point, `sample` to write a measurement dataset,
`mine`/`mice`/`plugin` to run the estimators on a dataset file, `sweep`
for grid scans and `fidelity` for susceptibility lines.

Exit codes: 0 on success, 2 for configuration problems (bad flags,
malformed config or dataset files), 3 for numeric failures
(non-convergence, blow-ups).
"""

from __future__ import annotations

import functools
from dataclasses import fields as dataclass_fields, replace
from pathlib import Path

import click
import numpy as np

from .eigensolver import ground_state
from .errors import ConfigurationError, ConvergenceError, NumericError, QmineError
from .exact import (
    alpha_ratio,
    exact_mutual_information,
    half_partition,
    mean_sz,
    quarter_partition,
    von_neumann_entropy,
)
from .mice import MiceConfig, exact_specific_entropy, specific_entropy
from .mine import TrainConfig, estimate_mi, write_diagnostics
from .model import ModelParams
from .plugin import convergence_study, plugin_mi
from .sampling import read_dataset, sample_bitstrings, write_dataset
from .sweep import (
    DEFAULT_QUANTITIES,
    SweepConfig,
    field_axis,
    run_sweep,
    susceptibility_scan,
)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    raise SystemExit(code)


def handle_errors(f):
    """Map package errors onto the documented exit codes."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (ConvergenceError, NumericError) as exc:
            _fail(str(exc), 3)
        except (QmineError, ValueError) as exc:
            _fail(str(exc), 2)

    return wrapper


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"range {text!r} must look like start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(f"range {text!r} holds non-numeric parts")
    return field_axis(start, stop, step)


def _read_config_file(path: Path) -> dict:
    mapping = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        mapping[key.strip()] = value.strip()
    return mapping


def _coerce(key: str, text: str, default):
    kind = type(default)
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is str:
            return text
        if kind is tuple:
            return tuple(int(p) for p in text.split(",") if p)
    except ValueError:
        raise ConfigurationError(f"config key {key}: cannot parse {text!r} as {kind.__name__}")
    raise ConfigurationError(f"config key {key} is not overridable")


def _apply_overrides(obj, mapping: dict, prefix: str, used: set):
    """Fill dataclass fields from `name` or `prefix.name` keys."""
    scalars = {
        f.name: getattr(obj, f.name)
        for f in dataclass_fields(obj)
        if isinstance(getattr(obj, f.name), (bool, int, float, str, tuple))
    }
    updates = {}
    for key, text in mapping.items():
        name = None
        if key in scalars and "." not in key:
            name = key
        elif key.startswith(prefix + ".") and key[len(prefix) + 1:] in scalars:
            name = key[len(prefix) + 1:]
        if name is None or key in used:
            continue
        updates[name] = _coerce(key, text, scalars[name])
        used.add(key)
    return replace(obj, **updates) if updates else obj


def _build_configs(config_file: Path | None):
    """TrainConfig and MiceConfig with config-file overrides applied.

    Bare keys bind to TrainConfig fields first; use `mice.` / `train.` /
    `sweep.` prefixes to disambiguate.
    """
    mapping = _read_config_file(config_file) if config_file else {}
    used: set = set()
    train = _apply_overrides(TrainConfig(), mapping, "train", used)
    mice_cfg = _apply_overrides(MiceConfig(), mapping, "mice", used)
    mice_cfg = replace(mice_cfg, train=train)
    return train, mice_cfg, mapping, used


def _finish_overrides(mapping: dict, used: set) -> None:
    unknown = sorted(set(mapping) - used)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")


def _partition(name: str, n_sites: int):
    return half_partition(n_sites) if name == "half" else quarter_partition(n_sites)


def _echo_kv(key: str, value) -> None:
    if isinstance(value, float):
        value = repr(value)
    click.echo(f"{key} = {value}")


n_sites_option = click.option(
    "--n-sites", type=int, default=16, show_default=True, help="chain length"
)
seed_option = click.option("--seed", type=int, default=0, show_default=True)
partition_option = click.option(
    "--partition", type=click.Choice(["half", "quarter"]), default="half",
    show_default=True,
)
config_option = click.option(
    "--config", "config_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None, help="key=value overrides for estimator settings",
)
samples_option = click.option(
    "--samples", type=int, default=15000, show_default=True, help="dataset size"
)


@click.group()
def main():
    """Information-based phase mapping of the mixed-field Ising chain."""


@main.command()
@n_sites_option
@click.option("--bx", type=float, default=0.0, show_default=True)
@click.option("--bz", type=float, default=0.0, show_default=True)
@seed_option
@partition_option
@handle_errors
def solve(n_sites, bx, bz, seed, partition):
    """Exact ground-state quantities at one field point."""
    params = ModelParams(n_sites, 1.0, bx, bz)
    result = ground_state(params, seed=seed)
    psi = result.state
    part = _partition(partition, n_sites)
    _echo_kv("energy", result.energy)
    _echo_kv("gap", result.gap if result.gap is not None else float("nan"))
    _echo_kv("gap_warning", result.gap_warning)
    _echo_kv("iterations", result.iterations)
    _echo_kv("residual", result.residual)
    _echo_kv("mi_exact", exact_mutual_information(psi, part))
    if partition == "half":
        _echo_kv("svn", von_neumann_entropy(psi, part))
        _echo_kv("alpha", alpha_ratio(psi, part))
    _echo_kv("sz", mean_sz(psi))
    _echo_kv("s0_exact", exact_specific_entropy(psi))


@main.command()
@n_sites_option
@click.option("--bx", type=float, default=0.0, show_default=True)
@click.option("--bz", type=float, default=0.0, show_default=True)
@samples_option
@seed_option
@click.option(
    "--out", type=click.Path(file_okay=False, path_type=Path),
    default=Path("qmine-out"), show_default=True,
)
@handle_errors
def sample(n_sites, bx, bz, samples, seed, out):
    """Write measurement bitstrings drawn from the ground state."""
    params = ModelParams(n_sites, 1.0, bx, bz)
    psi = ground_state(params, seed=seed).state
    dataset = sample_bitstrings(
        psi, samples, seed, field_x=bx, field_z=bz, source="ground-state"
    )
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"bitstrings_n{n_sites}_bx{bx:g}_bz{bz:g}_seed{seed}.txt"
    write_dataset(dataset, path)
    click.echo(str(path))


@main.command()
@click.argument(
    "dataset", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@partition_option
@click.option("--seed", type=int, default=None, help="override the configured seed")
@config_option
@click.option(
    "--out", type=click.Path(file_okay=False, path_type=Path), default=None,
    help="directory for per-network training-curve CSVs",
)
@handle_errors
def mine(dataset, partition, seed, config_file, out):
    """Neural mutual-information estimate from a dataset file."""
    data = read_dataset(dataset)
    train, _, mapping, used = _build_configs(config_file)
    _finish_overrides(mapping, used)
    if seed is not None:
        train = replace(train, seed=seed)
    part = _partition(partition, data.n_sites)
    estimate = estimate_mi(data, part, train)
    _echo_kv("mi", estimate.value)
    _echo_kv("std", estimate.std)
    _echo_kv("per_network", ",".join(repr(v) for v in estimate.per_network))
    _echo_kv("stop_iteration", ",".join(str(i) for i in estimate.stop_iteration))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for i, curves in enumerate(estimate.diagnostics):
            write_diagnostics(out / f"train_curves_{i:02d}.csv", curves)
        click.echo(str(out))


@main.command("mice")
@click.argument(
    "dataset", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option(
    "--mode", type=click.Choice(["mine", "plugin"]), default="mine", show_default=True
)
@click.option("--seed", type=int, default=None, help="override the configured seed")
@config_option
@handle_errors
def mice_command(dataset, mode, seed, config_file):
    """Specific entropy of a dataset by recursive halving."""
    data = read_dataset(dataset)
    _, mice_cfg, mapping, used = _build_configs(config_file)
    _finish_overrides(mapping, used)
    if seed is not None:
        mice_cfg = replace(mice_cfg, seed=seed)
    dec = specific_entropy(data, mice_cfg, mode=mode)
    _echo_kv("s0", dec.s0)
    _echo_kv("s0_std", dec.s0_std)
    _echo_kv("s_k", dec.s_k)
    for level in dec.levels:
        click.echo(
            f"level size={level.volume} mi={level.mi!r} std={level.mi_std!r} "
            f"estimator={level.estimator}"
        )


@main.command()
@click.argument(
    "dataset", required=False,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@n_sites_option
@click.option("--bx", type=float, default=0.0, show_default=True)
@click.option("--bz", type=float, default=0.0, show_default=True)
@partition_option
@seed_option
@click.option(
    "--sizes", default="5000,10000,15000,30000,45000", show_default=True,
    help="dataset sizes for the convergence fit",
)
@click.option("--repeats", type=int, default=100, show_default=True)
@handle_errors
def plugin(dataset, n_sites, bx, bz, partition, seed, sizes, repeats):
    """Histogram MI of a dataset, or a dataset-size convergence fit.

    With a DATASET argument, reports the raw plug-in value.  Without
    one, samples fresh datasets from the ground state at (--bx, --bz)
    for every size in --sizes and fits the asymptote.
    """
    if dataset is not None:
        data = read_dataset(dataset)
        part = _partition(partition, data.n_sites)
        _echo_kv("mi_plugin", plugin_mi(data, part))
        return
    try:
        size_list = [int(s) for s in sizes.split(",") if s]
    except ValueError:
        raise ConfigurationError(f"--sizes {sizes!r} must be comma-separated integers")
    params = ModelParams(n_sites, 1.0, bx, bz)
    psi = ground_state(params, seed=seed).state
    part = _partition(partition, n_sites)
    fit = convergence_study(psi, part, size_list, repeats, seed)
    for n, mi, std in fit.points:
        click.echo(f"n={int(n)} mi={mi!r} std={std!r}")
    _echo_kv("m0", fit.m0)
    _echo_kv("k", fit.k)
    _echo_kv("n0", fit.n0)
    _echo_kv("residual", fit.residual)


@main.command()
@n_sites_option
@click.option("--bx-range", default="0.2:3:0.1", show_default=True, help="start:stop:step")
@click.option("--bz-range", default="0:3:0.1", show_default=True, help="start:stop:step")
@samples_option
@seed_option
@partition_option
@click.option(
    "--out", type=click.Path(file_okay=False, path_type=Path),
    default=Path("sweep-out"), show_default=True,
)
@config_option
@click.option(
    "--quantities", default=",".join(DEFAULT_QUANTITIES), show_default=True,
    help="comma-separated subset of the quantity keys",
)
@handle_errors
def sweep(n_sites, bx_range, bz_range, samples, seed, partition, out, config_file,
          quantities):
    """Evaluate quantities over the field grid; one resumable CSV each."""
    train, mice_cfg, mapping, used = _build_configs(config_file)
    config = SweepConfig(
        n_sites=n_sites,
        bx_values=_parse_range(bx_range),
        bz_values=_parse_range(bz_range),
        quantities=tuple(q for q in quantities.split(",") if q),
        n_samples=samples,
        partition=partition,
        seed=seed,
        out_dir=out,
        train=train,
        mice=mice_cfg,
    )
    config = _apply_overrides(config, mapping, "sweep", used)
    _finish_overrides(mapping, used)
    grids = run_sweep(config)
    for quantity, grid in grids.items():
        finite = int(np.isfinite(grid.values).sum())
        click.echo(f"{quantity}: {finite}/{grid.values.size} nodes -> {out / (quantity + '.csv')}")


@main.command()
@n_sites_option
@click.option("--bx", type=float, default=None, help="fixed transverse field (scan bz)")
@click.option("--bz", type=float, default=None, help="fixed longitudinal field (scan bx)")
@click.option("--bx-range", default="0.2:3:0.1", show_default=True)
@click.option("--bz-range", default="0:3:0.1", show_default=True)
@click.option("--delta", type=float, default=0.001, show_default=True)
@seed_option
@handle_errors
def fidelity(n_sites, bx, bz, bx_range, bz_range, delta, seed):
    """Ground-state overlap susceptibility along one field line."""
    if (bx is None) == (bz is None):
        raise ConfigurationError("fix exactly one field with --bx or --bz")
    config = SweepConfig(n_sites=n_sites, seed=seed)
    if bx is not None:
        scan = susceptibility_scan(config, "x", bx, _parse_range(bz_range), delta)
        label = "bz"
    else:
        scan = susceptibility_scan(config, "z", bz, _parse_range(bx_range), delta)
        label = "bx"
    for b, chi in zip(scan.fields, scan.chi):
        click.echo(f"{label}={b!r} chi={chi!r}")
    _echo_kv("peak_field", scan.peak_field)
    _echo_kv("peak_value", scan.peak_value)
