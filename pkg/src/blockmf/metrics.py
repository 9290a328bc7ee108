"""RMSE computation and mergeable error accumulators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataError, FactorModel, RatingsDataset


@dataclass(frozen=True)
class RmseAccumulator:
    """Sum of squared errors plus the entry count it covers.

    Accumulators add component-wise, so per-block results merge into the
    global figure in any order.
    """

    sse: float = 0.0
    count: int = 0

    def __post_init__(self):
        if self.sse < 0 or self.count < 0:
            raise ValueError(f"accumulator fields must be non-negative, got {self}")


def merge(a: RmseAccumulator, b: RmseAccumulator) -> RmseAccumulator:
    return RmseAccumulator(a.sse + b.sse, a.count + b.count)


def finalize(acc: RmseAccumulator) -> float:
    """RMSE of an accumulator; zero entries give 0.0 (nothing to misfit)."""
    if acc.count == 0:
        return 0.0
    return float(np.sqrt(acc.sse / acc.count))


def rmse(model: FactorModel, d: RatingsDataset) -> float:
    """Root mean squared error of the model over d's observed entries.

    Squared errors are summed with numpy's pairwise reduction, which keeps
    round-off bounded on multi-million-entry datasets.
    """
    if len(d) == 0:
        raise DataError("RMSE is undefined for an empty dataset")
    if model.u.shape[0] != d.n or model.v.shape[0] != d.m:
        raise DataError(
            f"model is {model.u.shape[0]}x{model.v.shape[0]}, dataset {d.n}x{d.m}"
        )
    err = d.values - model.predict(d.rows, d.cols)
    return float(np.sqrt(np.sum(np.square(err)) / len(d)))


class HoldoutEvaluator:
    """Scores a model on held-out entries.

    Entries whose row or column never appears in the training set have no
    trained factors; they are predicted with the global training mean and
    counted in `cold_entries`.
    """

    def __init__(self, train: RatingsDataset, test: RatingsDataset):
        if (train.n, train.m) != (test.n, test.m):
            raise ValueError("train and test must share global dimensions")
        if len(test) == 0:
            raise DataError("holdout evaluation needs a non-empty test set")
        row_seen = np.zeros(train.n, dtype=bool)
        col_seen = np.zeros(train.m, dtype=bool)
        row_seen[train.rows] = True
        col_seen[train.cols] = True
        self.test = test
        self.fallback = float(train.values.mean()) if len(train) else 0.0
        self._cold = ~(row_seen[test.rows] & col_seen[test.cols])
        self.cold_entries = int(self._cold.sum())

    def rmse(self, model: FactorModel) -> float:
        pred = model.predict(self.test.rows, self.test.cols)
        pred[self._cold] = self.fallback
        err = self.test.values - pred
        return float(np.sqrt(np.sum(np.square(err)) / len(self.test)))


def test_rmse(model: FactorModel, train: RatingsDataset, test: RatingsDataset) -> float:
    """One-shot holdout RMSE; see HoldoutEvaluator for the cold-entry rule."""
    return HoldoutEvaluator(train, test).rmse(model)
