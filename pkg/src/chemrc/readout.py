"""Ridge-regression readout and NRMSE scoring.

The readout is a plain linear map from node counts to the target series,
fitted by ridge regression with an unpenalized intercept. Data is split
chronologically (first 70% train, rest test) because the targets are a
time series and shuffling would leak temporal information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Dataset:
    """Aligned features and targets on the sample grid.

    Rows are time samples (washout already removed), columns are node
    counts with the input node's column dropped. ``times`` records the
    sample second of each row.
    """

    features: np.ndarray
    targets: np.ndarray
    times: np.ndarray
    washout: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if len(self.targets) != len(self.features) or len(self.times) != len(self.features):
            raise ValueError("features, targets, and times must have equal row counts")

    @property
    def num_rows(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True, eq=False)
class ReadoutModel:
    weights: np.ndarray
    intercept: float
    ridge_lambda: float

    def predict(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights + self.intercept


def split_train_test(dataset: Dataset) -> tuple[Dataset, Dataset]:
    """Chronological 70/30 split (train size rounded down), no shuffling."""
    rows = dataset.num_rows
    if rows < 10:
        raise ValueError(f"need at least 10 usable rows to split, got {rows}")
    n_train = (7 * rows) // 10
    head = Dataset(
        features=dataset.features[:n_train],
        targets=dataset.targets[:n_train],
        times=dataset.times[:n_train],
        washout=dataset.washout,
    )
    tail = Dataset(
        features=dataset.features[n_train:],
        targets=dataset.targets[n_train:],
        times=dataset.times[n_train:],
        washout=dataset.washout,
    )
    return head, tail


def fit_ridge(train: Dataset, ridge_lambda: float) -> ReadoutModel:
    """Minimize ||y - Xw - c||^2 + lambda ||w||^2 with unpenalized intercept.

    Solved in closed form: centering X and y reduces the problem to
    (Xc'Xc + lambda I) w = Xc' yc, solved with numpy's LAPACK-backed
    ``linalg.solve``; the intercept is recovered as mean(y) - mean(X) . w.
    """
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be non-negative")
    if train.num_rows == 0:
        raise ValueError("cannot fit on an empty dataset")
    X = np.asarray(train.features, dtype=np.float64)
    y = np.asarray(train.targets, dtype=np.float64)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    gram = Xc.T @ Xc + ridge_lambda * np.eye(X.shape[1])
    try:
        w = np.linalg.solve(gram, Xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"normal equations are singular (rank-deficient features at "
            f"lambda={ridge_lambda}): {exc}"
        ) from exc
    intercept = float(y_mean - x_mean @ w)
    return ReadoutModel(weights=w, intercept=intercept, ridge_lambda=ridge_lambda)


def nrmse(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Root-mean-square error normalized by the population std of targets.

    Normalizing by the std of the evaluated window makes the constant
    mean-predictor score exactly 1.0.
    """
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    if len(y) < 2:
        raise ValueError("need at least 2 entries to compute NRMSE")
    sd = float(y.std())
    # treat roundoff-level spread of a constant window as zero variance too
    if sd <= 1e-12 * max(1.0, abs(float(y.mean()))):
        raise ValueError("targets have zero variance; NRMSE undefined")
    rmse = float(np.sqrt(np.mean((p - y) ** 2)))
    return rmse / sd
