import numpy as np
import pytest

from dpspectra.linalg import random_orthonormal, schatten_norm
from dpspectra.model import (
    DataMatrix,
    SpikedModel,
    covariance_of,
    load_data_auto,
    load_data_bin,
    load_data_csv,
    neighbor,
    sample,
    save_data_bin,
    save_data_csv,
    snr_diagnostics,
    _coordinate_draws,
)

RNG = np.random.default_rng(77)


def make_model(p=50, r=1, lam=10.0, sigma2=1.0, seed=0):
    u = random_orthonormal(p, r, np.random.default_rng(seed))
    return SpikedModel(u=u, spike_eigs=np.full(r, lam), sigma2=sigma2)


def test_covariance_paper_regime_eigenvalues():
    model = make_model(p=50, r=1, lam=10.0, sigma2=1.0)
    eigs = np.sort(np.linalg.eigvalsh(covariance_of(model)))[::-1]
    assert eigs[0] == pytest.approx(11.0)
    assert np.allclose(eigs[1:], 1.0)


def test_covariance_explicit_two_by_two():
    model = SpikedModel(u=np.array([[1.0], [0.0]]), spike_eigs=[2.0], sigma2=1.0)
    assert np.allclose(covariance_of(model), [[3.0, 0.0], [0.0, 1.0]])


def test_covariance_trace_identity():
    model = make_model(p=20, r=3, lam=5.0, sigma2=2.0, seed=1)
    sigma = covariance_of(model)
    expected = model.spike_eigs.sum() + model.p * model.sigma2
    assert np.trace(sigma) == pytest.approx(expected, rel=1e-12)


def test_model_validation():
    u = random_orthonormal(5, 2, RNG)
    with pytest.raises(ValueError):
        SpikedModel(u=u, spike_eigs=[1.0, 2.0], sigma2=1.0)  # increasing
    with pytest.raises(ValueError):
        SpikedModel(u=u, spike_eigs=[1.0, -1.0], sigma2=1.0)
    with pytest.raises(ValueError):
        SpikedModel(u=u, spike_eigs=[2.0, 1.0], sigma2=0.0)
    with pytest.raises(ValueError):
        SpikedModel(u=np.ones((5, 2)), spike_eigs=[2.0, 1.0], sigma2=1.0)


def test_kappa0():
    model = make_model(p=10, r=2, lam=1.0, seed=2)
    assert model.kappa0 == 1.0
    u = random_orthonormal(10, 2, RNG)
    model = SpikedModel(u=u, spike_eigs=[8.0, 2.0], sigma2=1.0)
    assert model.kappa0 == pytest.approx(4.0)


def test_sample_law_of_large_numbers():
    model = make_model(p=5, r=1, lam=4.0, sigma2=1.0, seed=3)
    x = sample(model, 100_000, rng=np.random.default_rng(4))
    err = schatten_norm(x.sample_cov - covariance_of(model), "inf")
    assert err <= 0.05 * schatten_norm(covariance_of(model), "inf")


def test_sample_dominant_subspace_limit():
    model = make_model(p=20, r=2, lam=1e6, sigma2=1.0, seed=5)
    x = sample(model, 200, rng=np.random.default_rng(6))
    resid = x.columns - model.u @ (model.u.T @ x.columns)
    assert (resid**2).sum() <= 1e-3 * (x.columns**2).sum()


def test_sample_deterministic():
    model = make_model(p=8, r=2, lam=3.0, seed=7)
    a = sample(model, 40, rng=np.random.default_rng(8)).columns
    b = sample(model, 40, rng=np.random.default_rng(8)).columns
    assert np.array_equal(a, b)


def test_sample_subgaussian_covariance():
    model = make_model(p=6, r=1, lam=4.0, sigma2=1.0, seed=9)
    for dist in ("rademacher_subgaussian", "uniform_subgaussian"):
        x = sample(model, 60_000, dist=dist, rng=np.random.default_rng(10))
        err = schatten_norm(x.sample_cov - covariance_of(model), "inf")
        assert err <= 0.1 * schatten_norm(covariance_of(model), "inf")


def test_subgaussian_coordinate_variance():
    rng = np.random.default_rng(11)
    for dist in ("rademacher_subgaussian", "uniform_subgaussian"):
        w = _coordinate_draws((1_000_000,), dist, rng)
        assert abs(w.mean()) < 5e-3
        assert abs(w.var() - 1.0) < 0.02


def test_sample_cov_psd():
    model = make_model(p=30, r=2, lam=5.0, seed=12)
    x = sample(model, 20, rng=np.random.default_rng(13))  # p > n, rank deficient
    eigs = np.linalg.eigvalsh(x.sample_cov)
    assert eigs.min() >= -1e-10 * max(1.0, eigs.max())


def test_empirical_cov_rate_bound():
    model = make_model(p=10, r=1, lam=4.0, sigma2=1.0, seed=14)
    m = 100_000
    x = sample(model, m, rng=np.random.default_rng(15))
    err = schatten_norm(x.sample_cov - covariance_of(model), "inf")
    assert err <= 10.0 * np.sqrt(model.p / m)


def test_neighbor_single_column():
    model = make_model(p=6, r=1, lam=2.0, seed=16)
    x = sample(model, 30, rng=np.random.default_rng(17))
    x2 = neighbor(x, 4, model, rng=np.random.default_rng(18))
    diff_cols = np.flatnonzero(np.any(x.columns != x2.columns, axis=0))
    assert diff_cols.tolist() == [4]
    assert np.array_equal(x.columns[:, :4], x2.columns[:, :4])


def test_neighbor_cov_update_rank_two():
    model = make_model(p=8, r=1, lam=2.0, seed=19)
    x = sample(model, 25, rng=np.random.default_rng(20))
    i = 7
    x2 = neighbor(x, i, model, rng=np.random.default_rng(21))
    xi, xr = x.columns[:, i], x2.columns[:, i]
    oracle = (np.outer(xr, xr) - np.outer(xi, xi)) / x.n
    delta = x2.sample_cov - x.sample_cov
    assert np.abs(delta - oracle).max() < 1e-12
    assert np.linalg.matrix_rank(delta, tol=1e-10) <= 2


def test_neighbor_same_stream_reproduces():
    model = make_model(p=5, r=1, lam=2.0, seed=22)
    x = sample(model, 10, rng=np.random.default_rng(23))
    a = neighbor(x, 3, model, rng=np.random.default_rng(24)).columns
    b = neighbor(x, 3, model, rng=np.random.default_rng(24)).columns
    assert np.array_equal(a, b)


def test_neighbor_index_out_of_range():
    model = make_model(p=5, r=1, lam=2.0, seed=25)
    x = sample(model, 10, rng=np.random.default_rng(26))
    with pytest.raises(IndexError):
        neighbor(x, 10, model, rng=RNG)


def test_snr_report_pass():
    model = make_model(p=50, r=1, lam=10.0, sigma2=1.0, seed=27)
    rep = snr_diagnostics(model, 30)
    assert rep.threshold == pytest.approx(50 / 30 + np.sqrt(50 / 30), rel=1e-12)
    assert rep.threshold == pytest.approx(2.9577, abs=5e-4)
    assert rep.snr == pytest.approx(10.0)
    assert rep.passes


def test_snr_report_fail():
    model = make_model(p=40, r=1, lam=0.1, sigma2=1.0, seed=28)
    rep = snr_diagnostics(model, 40)
    assert rep.threshold == pytest.approx(2.0)
    assert not rep.passes


def test_effective_rank_limit():
    model = make_model(p=30, r=3, lam=1e9, sigma2=1.0, seed=29)
    rep = snr_diagnostics(model, 100)
    assert rep.effective_rank == pytest.approx(3.0, abs=1e-6)


def test_data_matrix_immutable():
    x = sample(make_model(seed=30), 5, rng=np.random.default_rng(31))
    with pytest.raises(ValueError):
        x.columns[0, 0] = 1.0


def test_bin_round_trip(tmp_path):
    x = sample(make_model(p=7, r=2, lam=3.0, seed=32), 11, rng=np.random.default_rng(33))
    path = tmp_path / "x.bin"
    save_data_bin(x, path)
    back = load_data_bin(path)
    assert np.array_equal(back.columns, x.columns)
    assert load_data_auto(path).p == 7


def test_bin_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        load_data_bin(path)


def test_csv_round_trip(tmp_path):
    x = sample(make_model(p=4, r=1, lam=2.0, seed=34), 9, rng=np.random.default_rng(35))
    path = tmp_path / "x.csv"
    save_data_csv(x, path)
    back = load_data_csv(path)
    assert np.array_equal(back.columns, x.columns)  # repr round-trips exactly
    assert load_data_auto(path).n == 9


def test_data_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        DataMatrix(columns=np.array([[1.0, np.inf]]))
