"""Histogram mutual information and its finite-sample convergence fit.

The brute-force route to M(A, B): build empirical frequency tables for
the A-configurations, the B-configurations and the joint pairs, plug
them into Shannon entropies and combine.  No bias correction is applied,
deliberately: the point of the convergence fit is to expose exactly that
bias.  With n samples spread over many joint states the raw estimate
overshoots badly; fitting M(n) = M0 + k/(n - n0) across several dataset
sizes and reading off the asymptote M0 recovers the true value when the
state space is small enough for the 1/n regime to be reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from .eigensolver import WaveFunction
from .exact import Partition, subsystem_index
from .sampling import BitstringDataset, sample_bitstrings

__all__ = [
    "FitResult",
    "empirical_entropy",
    "mi_from_configs",
    "plugin_mi",
    "plugin_mi_ensemble",
    "fit_convergence",
    "convergence_study",
]

_LN2 = math.log(2.0)


def _entropy_bits(probs: np.ndarray) -> float:
    return float(-np.sum(xlogy(probs, probs)) / _LN2)


def _group_probs(keys: np.ndarray, weights=None) -> np.ndarray:
    """Relative frequency of each distinct key.

    The unweighted path divides integer counts by the total, so the
    probabilities are exact ratios (a constant dataset gives exactly
    [1.0], not a sum of n rounded 1/n terms).
    """
    if weights is None:
        _, counts = np.unique(keys, return_counts=True)
        return counts / keys.size
    _, inverse = np.unique(keys, return_inverse=True)
    probs = np.bincount(inverse, weights=weights)
    return probs / probs.sum()


def empirical_entropy(configs: np.ndarray, weights=None) -> float:
    """Plug-in Shannon entropy (bits) of observed configurations."""
    configs = np.asarray(configs, dtype=np.int64)
    if configs.size == 0:
        raise ValueError("cannot estimate entropy from zero samples")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
    return _entropy_bits(_group_probs(configs, weights))


def mi_from_configs(a_configs, b_configs, weights=None) -> float:
    """H(A) + H(B) - H(A,B) in bits from paired observations.

    ``weights`` turns the sample average into an arbitrary distribution,
    which is how exhaustive weighted enumerations reduce to the exact
    value.  Tiny negative results from rounding clamp to zero.
    """
    a = np.asarray(a_configs, dtype=np.int64)
    b = np.asarray(b_configs, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired configuration arrays must be equal-length vectors")
    if a.size == 0:
        raise ValueError("cannot estimate mutual information from zero samples")
    w = None if weights is None else np.asarray(weights, dtype=np.float64)
    joint = (a << np.int64(32)) | b  # subsystems hold at most 24 bits each
    mi = (
        _entropy_bits(_group_probs(a, w))
        + _entropy_bits(_group_probs(b, w))
        - _entropy_bits(_group_probs(joint, w))
    )
    if -1e-12 < mi < 0.0:
        mi = 0.0
    return mi


def plugin_mi(dataset: BitstringDataset, part: Partition) -> float:
    """Empirical-histogram mutual information of a measured dataset."""
    part.validate_for(dataset.n_sites)
    a = subsystem_index(dataset.samples, part.sites_a)
    b = subsystem_index(dataset.samples, part.sites_b)
    return mi_from_configs(a, b)


def plugin_mi_ensemble(
    psi: WaveFunction, part: Partition, n: int, repeats: int, seed=0
) -> tuple[float, float]:
    """Mean and sample std of the histogram MI over fresh datasets."""
    if repeats < 2:
        raise ValueError("need repeats >= 2 for a spread estimate")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    child_seeds = root.generate_state(repeats)
    values = np.empty(repeats)
    for i, s in enumerate(child_seeds):
        data = sample_bitstrings(psi, n, int(s))
        values[i] = plugin_mi(data, part)
    return float(values.mean()), float(values.std(ddof=1))


@dataclass
class FitResult:
    m0: float  # fitted asymptote, bits
    k: float
    n0: float
    residual: float  # weighted sum of squared errors at the optimum
    points: list  # (n, mi, std) triples as fitted

    def predict(self, n) -> np.ndarray:
        return self.m0 + self.k / (np.asarray(n, dtype=np.float64) - self.n0)


def _normalize_points(points) -> list:
    out = []
    for p in points:
        p = tuple(p)
        if len(p) == 2:
            out.append((float(p[0]), float(p[1]), float("nan")))
        elif len(p) == 3:
            out.append((float(p[0]), float(p[1]), float(p[2])))
        else:
            raise ValueError("points must be (n, mi) or (n, mi, std)")
    return out


def fit_convergence(points: Sequence, weighted: bool = False) -> FitResult:
    """Least-squares fit of M(n) = M0 + k/(n - n0) to dataset-size scans.

    The pole position n0 enters nonlinearly, so it is scanned over
    (-min_n, min_n); at each candidate the remaining (M0, k) problem is
    linear and solved in closed form.  A bounded local refinement around
    the best scan candidate follows, and the better of the two wins, so
    refinement never increases the residual.  ``weighted`` divides each
    squared error by the point's variance (requires std entries).
    """
    pts = _normalize_points(points)
    ns = np.array([p[0] for p in pts])
    ms = np.array([p[1] for p in pts])
    stds = np.array([p[2] for p in pts])
    if np.unique(ns).size < 4:
        raise ValueError("fit needs at least 4 distinct dataset sizes")
    if weighted:
        if not np.all(np.isfinite(stds)) or np.any(stds <= 0):
            raise ValueError("weighted fit needs positive std for every point")
        w = 1.0 / stds**2
    else:
        w = np.ones_like(ms)
    sqrt_w = np.sqrt(w)
    min_n = ns.min()

    def solve_linear(n0: float):
        design = np.column_stack([np.ones_like(ns), 1.0 / (ns - n0)])
        coef, *_ = np.linalg.lstsq(sqrt_w[:, None] * design, sqrt_w * ms, rcond=None)
        resid = design @ coef - ms
        return float(np.sum(w * resid**2)), coef

    candidates = np.linspace(-min_n, min_n, 1002)[1:-1]  # open interval, pole left of data
    sses = np.array([solve_linear(c)[0] for c in candidates])
    best = int(np.argmin(sses))
    lo = candidates[max(best - 1, 0)]
    hi = candidates[min(best + 1, candidates.size - 1)]
    refined = minimize_scalar(
        lambda c: solve_linear(c)[0], bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-10},
    )
    n0 = float(refined.x)
    sse, coef = solve_linear(n0)
    if sses[best] < sse:  # keep the scan winner if refinement stalled
        n0 = float(candidates[best])
        sse, coef = solve_linear(n0)
    return FitResult(m0=float(coef[0]), k=float(coef[1]), n0=n0, residual=sse, points=pts)


def convergence_study(
    psi: WaveFunction,
    part: Partition,
    sizes: Sequence[int],
    repeats: int,
    seed=0,
    weighted: bool = False,
) -> FitResult:
    """Ensemble M_data at each dataset size, then the asymptote fit."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(len(sizes))
    triples = []
    for n, child in zip(sizes, children):
        mean, std = plugin_mi_ensemble(psi, part, int(n), repeats, child)
        triples.append((int(n), mean, std))
    return fit_convergence(triples, weighted=weighted)
