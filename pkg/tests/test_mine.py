import dataclasses

import numpy as np
import pytest

from qmine.errors import ConfigurationError, NumericError
from qmine.exact import Partition, half_partition, state_probabilities
from qmine.mine import (MlpParams, TrainConfig, dv_objective, dv_gradient,
                        estimate_mi, train_single, write_diagnostics)
from qmine.network import init_mlp
from qmine.sampling import BitstringDataset, bits_from_configs

from conftest import uniform_state
from oracles import weighted_dv_bits


def uniform_bits_dataset(n_sites, n, seed):
    rng = np.random.default_rng(seed)
    return BitstringDataset(rng.integers(0, 1 << n_sites, size=n), n_sites)


def copy_dataset(n, seed):
    # site i+4 mirrors site i: four shared bits, M = 4 exactly
    rng = np.random.default_rng(seed)
    low = rng.integers(0, 16, size=n)
    return BitstringDataset(low | (low << 4), 8)


SMALL = TrainConfig(batch_size=64, max_iterations=600, validation_period=50,
                    patience=300, ma_window=150, ensemble_size=3)


def test_config_validation():
    for bad in [
        {"learning_rate": 0.0},
        {"momentum": 1.0},
        {"dropout_rate": 1.0},
        {"split_fraction": 1.0},
        {"smoothing": "median"},
        {"grad_denominator": "none"},
        {"validation_period": 0},
        {"hidden": ()},
    ]:
        with pytest.raises(ConfigurationError):
            dataclasses.replace(TrainConfig(), **bad).validate()
    TrainConfig().validate()


def test_zero_network_gives_zero_bound():
    params = MlpParams(
        [np.zeros((4, 8)), np.zeros((8, 1))], [np.zeros(8), np.zeros(1)])
    x = np.eye(4)
    assert dv_objective(params, x, x) == pytest.approx(0.0)
    value, grads = dv_gradient(params, x, x)
    assert value == pytest.approx(0.0)
    with pytest.raises(ValueError):
        dv_objective(params, np.empty((0, 4)), x)


def test_dv_bound_never_exceeds_exact_mi():
    # enumerate a 4-site system: any network output obeys the variational
    # bound when the expectations use the true distributions
    from qmine import WaveFunction
    rng = np.random.default_rng(17)
    psi = WaveFunction.from_amplitudes(rng.standard_normal(16) ** 3, 4)
    part = Partition((0, 1), (2, 3))
    probs = state_probabilities(psi).probs

    pairs = np.arange(16)
    p_joint = probs
    pa = probs.reshape(4, 4).sum(axis=0)  # marginal over low bits (sites 0,1)
    pb = probs.reshape(4, 4).sum(axis=1)
    p_prod = (pa[None, :] * pb[:, None]).ravel()
    mi_exact = float(np.sum(
        p_joint * np.log2(p_joint / p_prod, where=p_joint > 0,
                          out=np.zeros(16))))

    x = bits_from_configs(pairs, 4).astype(float)
    for trial in range(5):
        params = init_mlp(4, hidden=(16, 16), rng=rng)
        from qmine.network import forward
        f, _ = forward(params, x)
        bound = weighted_dv_bits(f, p_joint, f, p_prod)
        assert bound <= mi_exact + 1e-9

    # the optimal test function saturates the bound exactly
    with np.errstate(divide="ignore"):
        f_star = np.where(p_joint > 0, np.log(p_joint / p_prod), -745.0)
    assert weighted_dv_bits(f_star, p_joint, f_star, p_prod) == pytest.approx(
        mi_exact, abs=1e-9)


def test_independent_bits_train_to_zero():
    ds = uniform_bits_dataset(8, 4000, seed=1)
    cfg = dataclasses.replace(SMALL, max_iterations=2000, patience=1000)
    res = train_single(ds, half_partition(8), cfg, seed=5)
    assert abs(res.value) < 0.05


def test_constant_dataset_gives_exact_zero():
    ds = BitstringDataset(np.full(400, 0b10101010), 8)
    est = estimate_mi(ds, half_partition(8), SMALL)
    assert est.value == 0.0 and est.std == 0.0
    assert np.all(est.per_network == 0.0)


def test_perfect_copy_approaches_four_bits():
    ds = copy_dataset(15000, seed=2)
    part = Partition((0, 1, 2, 3), (4, 5, 6, 7))
    res = train_single(ds, part, TrainConfig(), seed=9)
    # the true value is 4 bits; picking the smoothed validation maximum can
    # overshoot slightly because the log-term denominator is itself noisy
    assert 3.5 <= res.value <= 4.1


def test_training_is_deterministic():
    ds = uniform_bits_dataset(6, 800, seed=3)
    part = half_partition(6)
    a = train_single(ds, part, SMALL, seed=11)
    b = train_single(ds, part, SMALL, seed=11)
    assert a.value == b.value and a.n_iterations == b.n_iterations
    np.testing.assert_array_equal(a.curves.val_raw, b.curves.val_raw)
    c = train_single(ds, part, SMALL, seed=12)
    assert c.value != a.value


def test_alternate_training_switches():
    ds = uniform_bits_dataset(6, 800, seed=4)
    part = half_partition(6)
    for override in [
        {"share_dropout_masks": False},
        {"grad_denominator": "ema"},
        {"smoothing": "ema"},
        {"dropout_rate": 0.0},
    ]:
        cfg = dataclasses.replace(SMALL, **override)
        res = train_single(ds, part, cfg, seed=6)
        assert np.isfinite(res.value)


def test_early_stopping_respects_patience():
    ds = uniform_bits_dataset(6, 800, seed=7)
    cfg = dataclasses.replace(SMALL, max_iterations=5000, patience=100)
    res = train_single(ds, half_partition(6), cfg, seed=8)
    assert res.n_iterations < 5000
    assert res.curves.val_iterations[-1] == res.n_iterations


def test_dataset_too_small_is_a_configuration_error():
    ds = uniform_bits_dataset(6, 50, seed=0)
    with pytest.raises(ConfigurationError):
        train_single(ds, half_partition(6), TrainConfig(), seed=0)


def test_divergent_learning_rate_raises_numeric_error():
    ds = uniform_bits_dataset(6, 800, seed=9)
    cfg = dataclasses.replace(SMALL, learning_rate=1e6, max_iterations=200)
    with pytest.raises(NumericError), np.errstate(all="ignore"):
        train_single(ds, half_partition(6), cfg, seed=1)


def test_ensemble_statistics_and_reduction():
    ds = uniform_bits_dataset(6, 800, seed=10)
    part = half_partition(6)
    single = dataclasses.replace(SMALL, ensemble_size=1)
    est = estimate_mi(ds, part, single)
    assert est.std == 0.0 and est.per_network.size == 1
    seed0 = np.random.SeedSequence(single.seed).spawn(1)[0]
    assert est.value == train_single(ds, part, single, seed=seed0).value

    est3 = estimate_mi(ds, part, SMALL)
    assert est3.per_network.size == 3
    assert est3.value == pytest.approx(est3.per_network.mean())
    assert est3.std == pytest.approx(est3.per_network.std(ddof=1))
    assert len(est3.diagnostics) == 3


def test_write_diagnostics_csv(tmp_path):
    ds = uniform_bits_dataset(6, 800, seed=12)
    res = train_single(ds, half_partition(6), SMALL, seed=2)
    path = tmp_path / "curves.csv"
    write_diagnostics(path, res.curves)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,raw_train,ema_train,raw_valid,ma_valid"
    assert len(lines) == res.n_iterations + 1
    first = lines[1].split(",")
    assert int(first[0]) == 1 and first[3] == "" and first[4] == ""
    at_eval = lines[50].split(",")
    assert float(at_eval[3]) == res.curves.val_raw[0]
    assert float(at_eval[4]) == res.curves.val_smooth[0]
