import numpy as np
import pytest

from chemrc.readout import Dataset, fit_ridge, nrmse, split_train_test


def make_dataset(rows, cols=4, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(
        features=rng.uniform(0, 10, (rows, cols)),
        targets=rng.uniform(0, 5, rows),
        times=np.arange(rows),
        washout=2,
    )


def test_split_sizes_floor():
    train, test = split_train_test(make_dataset(48))
    assert (train.num_rows, test.num_rows) == (33, 15)  # floor(0.7 * 48) = 33
    train, test = split_train_test(make_dataset(10))
    assert (train.num_rows, test.num_rows) == (7, 3)


def test_split_is_chronological():
    ds = make_dataset(30)
    train, test = split_train_test(ds)
    assert np.array_equal(np.concatenate([train.times, test.times]), ds.times)
    assert train.times.max() < test.times.min()
    assert np.array_equal(train.targets, ds.targets[:21])


def test_split_needs_ten_rows():
    with pytest.raises(ValueError):
        split_train_test(make_dataset(9))


def test_ridge_recovers_generating_weights():
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 10, (60, 5))
    w_true = np.array([1.5, -2.0, 0.25, 3.0, -0.75])
    c_true = 4.0
    ds = Dataset(features=X, targets=X @ w_true + c_true, times=np.arange(60), washout=0)
    model = fit_ridge(ds, ridge_lambda=1e-9)
    assert np.abs(model.weights - w_true).max() / np.abs(w_true).max() < 1e-6
    assert model.intercept == pytest.approx(c_true, rel=1e-6)
    assert np.abs(model.predict(X) - ds.targets).max() < 1e-6


def test_constant_target_absorbed_by_intercept():
    ds = make_dataset(40)
    const = Dataset(features=ds.features, targets=np.full(40, 6.25),
                    times=ds.times, washout=0)
    model = fit_ridge(const, ridge_lambda=2.0)
    assert np.abs(model.weights).max() < 1e-9
    assert model.intercept == pytest.approx(6.25)


def test_huge_lambda_shrinks_weights_to_zero():
    ds = make_dataset(40, seed=5)
    model = fit_ridge(ds, ridge_lambda=1e12)
    assert np.abs(model.weights).max() < 1e-6


def test_normal_equations_residual():
    # (X'X + lambda I) w = X'(y - c) must hold to solver precision
    for seed in range(5):
        ds = make_dataset(50, cols=6, seed=seed)
        for lam in (1e-6, 1.0, 100.0):
            model = fit_ridge(ds, lam)
            X, y = ds.features, ds.targets
            lhs = (X.T @ X + lam * np.eye(6)) @ model.weights
            rhs = X.T @ (y - model.intercept)
            scale = max(1.0, np.linalg.norm(rhs))
            assert np.linalg.norm(lhs - rhs) <= 1e-8 * scale


def test_lambda_shrinkage_is_monotone():
    ds = make_dataset(50, cols=6, seed=7)
    norms = [
        np.linalg.norm(fit_ridge(ds, lam).weights)
        for lam in (0.0, 1e-3, 1e-1, 1.0, 10.0, 1e3, 1e6)
    ]
    for a, b in zip(norms, norms[1:]):
        assert b <= a + 1e-12


def test_singular_system_reports_rank_error():
    # duplicated column with lambda = 0 makes the normal equations singular
    col = np.arange(12, dtype=float)
    X = np.column_stack([col, col])
    ds = Dataset(features=X, targets=col.copy(), times=np.arange(12), washout=0)
    with pytest.raises(np.linalg.LinAlgError):
        fit_ridge(ds, ridge_lambda=0.0)


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        fit_ridge(make_dataset(20), ridge_lambda=-1.0)


def test_nrmse_perfect_prediction_is_zero():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert nrmse(y, y) == 0.0


def test_nrmse_mean_predictor_is_one():
    rng = np.random.default_rng(11)
    y = rng.uniform(0, 5, 200)
    p = np.full_like(y, y.mean())
    assert abs(nrmse(p, y) - 1.0) <= 1e-12


def test_nrmse_hand_computed_case():
    # RMSE = 1, population std of (0, 2) = 1, so NRMSE = 1
    assert nrmse(np.array([1.0, 1.0]), np.array([0.0, 2.0])) == pytest.approx(1.0)


def test_nrmse_affine_invariance():
    rng = np.random.default_rng(13)
    y = rng.uniform(0, 5, 100)
    p = y + rng.normal(0, 0.5, 100)
    base = nrmse(p, y)
    for a, b in [(2.0, 3.0), (-1.5, 0.0), (0.01, -7.0)]:
        assert nrmse(a * p + b, a * y + b) == pytest.approx(base, abs=1e-12)


def test_nrmse_errors():
    with pytest.raises(ValueError):
        nrmse(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        nrmse(np.zeros(1), np.zeros(1))
    with pytest.raises(ValueError):
        nrmse(np.array([1.0, 2.0]), np.array([3.0, 3.0]))  # zero target variance


def test_nrmse_rejects_constant_window_despite_roundoff():
    # identical values can leave a ~1e-16 residue in the population std
    # through pairwise summation; that is still a degenerate normalizer
    y = np.full(15, 3 * 46.2345678901234567)
    with pytest.raises(ValueError):
        nrmse(np.zeros(15), y)
