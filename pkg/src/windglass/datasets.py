"""Synthetic data generators used by the demos and the test suite."""

from __future__ import annotations

import numpy as np

from .data import SupervisedMatrix, TimeSeriesFrame

__all__ = ["make_interaction_data", "make_autocorrelated_series"]


def make_interaction_data(n_rows: int = 20_000, n_features: int = 6,
                          noise: float = 0.05, seed: int = 0) -> SupervisedMatrix:
    """Additive-plus-interaction benchmark data.

    Features are uniform on [0, 1]. The target is
    ``sin(2*pi*x0) + 0.5*x1 + x2*x3`` plus gaussian noise; any features
    beyond the first four are pure noise. The raw (un-normalized)
    matrix is returned.
    """
    if n_features < 4:
        raise ValueError("need at least 4 features for the signal terms")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n_rows, n_features))
    y = (np.sin(2 * np.pi * X[:, 0])
         + 0.5 * X[:, 1]
         + X[:, 2] * X[:, 3]
         + rng.normal(0.0, noise, size=n_rows))
    names = tuple(f"x{f}" for f in range(n_features))
    return SupervisedMatrix(X=X, y=y, feature_names=names)


def make_autocorrelated_series(n: int = 5_000, phi: float = 0.97,
                               noise: float = 0.08, seed: int = 0,
                               step_seconds: float = 3600.0) -> TimeSeriesFrame:
    """A smooth AR(1)-style per-unit power series.

    Strongly autocorrelated, squashed into (0, 1): the persistence
    baseline degrades with horizon on it the way real wind power does.
    """
    rng = np.random.default_rng(seed)
    z = np.empty(n)
    z[0] = 0.0
    eps = rng.normal(0.0, noise, size=n)
    for t in range(1, n):
        z[t] = phi * z[t - 1] + eps[t]
    y = 1.0 / (1.0 + np.exp(-z))  # logistic squash keeps it in (0, 1)
    ts = np.arange(n, dtype=np.float64) * step_seconds
    return TimeSeriesFrame(timestamps=ts, target=y)
