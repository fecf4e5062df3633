import numpy as np
import pytest

from qmine.exact import (exact_mutual_information, half_partition,
                         state_probabilities, subsystem_index)
from qmine.plugin import (empirical_entropy, fit_convergence, mi_from_configs,
                          plugin_mi, plugin_mi_ensemble)
from qmine.sampling import BitstringDataset, make_pair_batch

from conftest import cat_state
from oracles import empirical_mi_bits


def test_empirical_entropy():
    assert empirical_entropy(np.zeros(10, dtype=int)) == 0.0
    assert empirical_entropy(np.array([0, 1, 2, 3])) == pytest.approx(2.0)
    # weights override the sample frequencies
    assert empirical_entropy(
        np.array([0, 1]), weights=[1.0, 0.0]) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        empirical_entropy(np.array([], dtype=int))


def test_mi_identical_and_product():
    # b a copy of a: M = H(A) with the same empirical frequencies
    same = np.array([3, 1, 3, 1, 0])
    assert mi_from_configs(same, same) == pytest.approx(
        empirical_entropy(same), abs=1e-12)
    const = np.zeros(6, dtype=int)
    assert mi_from_configs(const, np.arange(6)) == 0.0
    # enumerate a product distribution exactly: every (a, b) combo once
    a, b = np.divmod(np.arange(12), 4)
    assert mi_from_configs(a, b) == 0.0
    with pytest.raises(ValueError):
        mi_from_configs(np.array([1]), np.array([1, 2]))
    with pytest.raises(ValueError):
        mi_from_configs(np.array([], dtype=int), np.array([], dtype=int))


def test_mi_matches_independent_oracle():
    rng = np.random.default_rng(5)
    a = rng.integers(0, 7, 400)
    b = (a + rng.integers(0, 2, 400)) % 7
    assert mi_from_configs(a, b) == pytest.approx(
        empirical_mi_bits(a, b), abs=1e-12)


def test_weighted_enumeration_reduces_to_exact(solve):
    # feeding the full outcome enumeration with Born weights must recover
    # the exact mutual information
    psi = solve(8, 0.9, 0.6).state
    part = half_partition(8)
    states = np.arange(256)
    probs = state_probabilities(psi).probs
    a = subsystem_index(states, part.sites_a)
    b = subsystem_index(states, part.sites_b)
    got = mi_from_configs(a, b, weights=probs)
    assert got == pytest.approx(exact_mutual_information(psi, part), abs=1e-12)


def test_plugin_mi_on_shuffled_pairs_is_near_zero():
    ds = BitstringDataset(
        np.where(np.random.default_rng(0).random(4000) < 0.5,
                 0b01010101, 0b10101010), 8)
    part = half_partition(8)
    batch = make_pair_batch(ds, part, np.arange(4000), seed=3)
    # shuffling destroys the correlation the joint pairing carries
    assert mi_from_configs(*batch.joint_pairs) == pytest.approx(1.0, abs=0.01)
    assert mi_from_configs(*batch.marginal_pairs) < 0.01


def test_plugin_ensemble_on_cat_state():
    # two perfectly correlated outcomes: the estimate is the binary entropy
    # of the empirical split, so it sits a hair under 1 bit
    mean, std = plugin_mi_ensemble(cat_state(8), half_partition(8),
                                   n=2000, repeats=20, seed=4)
    assert mean == pytest.approx(1.0, abs=2e-3)
    assert 0.0 <= std < 2e-3
    with pytest.raises(ValueError):
        plugin_mi_ensemble(cat_state(8), half_partition(8), n=10, repeats=1)


def test_plugin_mi_dataset_wrapper():
    ds = BitstringDataset(np.array([0b1111, 0b0000, 0b1111, 0b0000]), 4)
    assert plugin_mi(ds, half_partition(4)) == pytest.approx(1.0)


def test_fit_recovers_synthetic_parameters():
    ns = np.array([5000, 10000, 15000, 30000, 45000], dtype=float)
    truth = (2.0, 100.0, 0.0)
    ms = truth[0] + truth[1] / (ns - truth[2])
    fit = fit_convergence(list(zip(ns, ms)))
    assert fit.m0 == pytest.approx(2.0, abs=1e-6)
    assert fit.k == pytest.approx(100.0, rel=1e-4)
    assert abs(fit.n0) < 5.0
    assert fit.residual < 1e-12
    np.testing.assert_allclose(fit.predict(ns), ms, atol=1e-8)


def test_fit_constant_points():
    ns = [1000, 2000, 4000, 8000]
    fit = fit_convergence([(n, 1.5) for n in ns])
    assert fit.m0 == pytest.approx(1.5, abs=1e-9)
    assert fit.k == pytest.approx(0.0, abs=1e-6)


def test_fit_requires_four_distinct_sizes():
    with pytest.raises(ValueError):
        fit_convergence([(1000, 1.0), (2000, 0.9), (1000, 1.0)])
    with pytest.raises(ValueError):
        fit_convergence([(1000, 1.0), (1000, 1.1), (1000, 0.9), (1000, 1.0)])


def test_fit_weighted_variant():
    ns = np.array([5000.0, 10000, 15000, 30000, 45000])
    ms = 1.0 + 50.0 / ns
    stds = np.full(ns.size, 0.01)
    fit = fit_convergence(list(zip(ns, ms, stds)), weighted=True)
    assert fit.m0 == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(ValueError):
        fit_convergence(list(zip(ns, ms)), weighted=True)  # no stds given
    bad = [(n, m, 0.0) for n, m in zip(ns, ms)]
    with pytest.raises(ValueError):
        fit_convergence(bad, weighted=True)


def test_fit_point_format_validation():
    with pytest.raises(ValueError):
        fit_convergence([(1000, 1.0, 0.1, 7), (2000, 1.0), (3000, 1.0),
                         (4000, 1.0)])
