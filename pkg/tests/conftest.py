import numpy as np
import pytest

from qmine import ModelParams, WaveFunction, ground_state


def neel_strings(n_sites: int) -> tuple[int, int]:
    """The two alternating basis integers (site 0 up / site 0 down)."""
    up_odd = sum(1 << i for i in range(1, n_sites, 2))
    return up_odd, sum(1 << i for i in range(0, n_sites, 2))


def cat_state(n_sites: int) -> WaveFunction:
    """Equal-weight superposition of the two alternating configurations."""
    amp = np.zeros(1 << n_sites)
    s1, s2 = neel_strings(n_sites)
    amp[s1] = amp[s2] = 1.0 / np.sqrt(2.0)
    return WaveFunction(amp, n_sites)


def uniform_state(n_sites: int) -> WaveFunction:
    dim = 1 << n_sites
    return WaveFunction(np.full(dim, dim ** -0.5), n_sites)


@pytest.fixture(scope="session")
def solve():
    """Memoized ground-state solver; most tests revisit the same few points."""
    cache = {}

    def _solve(n_sites, bx, bz, seed=0):
        key = (n_sites, round(bx, 10), round(bz, 10), seed)
        if key not in cache:
            cache[key] = ground_state(
                ModelParams(n_sites, 1.0, bx, bz), seed=seed)
        return cache[key]

    return _solve


GRID_BX = np.round(np.arange(0.2, 3.0 + 1e-9, 0.1), 10)
GRID_BZ = np.round(np.arange(0.0, 3.0 + 1e-9, 0.1), 10)


@pytest.fixture(scope="session")
def exact_grid16(solve):
    """Exact N=16 observables on the 0.1-step field grid.

    Built once per session (a few minutes); only the map-level tests pay
    for it.
    """
    from qmine import (alpha_ratio, exact_mutual_information,
                       exact_specific_entropy, half_partition, mean_sz,
                       von_neumann_entropy)

    part = half_partition(16)
    shape = (GRID_BX.size, GRID_BZ.size)
    grid = {name: np.full(shape, np.nan)
            for name in ("mi", "svn", "alpha", "s0", "sz")}
    for i, bx in enumerate(GRID_BX):
        for j, bz in enumerate(GRID_BZ):
            psi = solve(16, float(bx), float(bz)).state
            grid["mi"][i, j] = exact_mutual_information(psi, part)
            grid["svn"][i, j] = von_neumann_entropy(psi, part)
            grid["alpha"][i, j] = alpha_ratio(psi, part)
            grid["s0"][i, j] = exact_specific_entropy(psi)
            grid["sz"][i, j] = mean_sz(psi)
    grid["bx"] = GRID_BX.copy()
    grid["bz"] = GRID_BZ.copy()
    return grid
