"""Shared fixtures, plus the MovieLens-format stand-in generator."""

import os

import numpy as np
import pytest
from hypothesis import settings

import blockmf as bm

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

# Point this at a real u.data file to run the end-to-end test against it
# instead of the generated stand-in.
ML100K_ENV = "BLOCKMF_ML100K"


@pytest.fixture(scope="session")
def dense32():
    return bm.gen_synthetic(bm.SyntheticSpec(32, 32, 1, 30, seed=0))


@pytest.fixture(scope="session")
def dense64():
    return bm.gen_synthetic(bm.SyntheticSpec(64, 64, 1, 30, seed=0))


@pytest.fixture(scope="session")
def dense256():
    return bm.gen_synthetic(bm.SyntheticSpec(256, 256, 1, 30, seed=0))


def make_ml100k_standin():
    """943x1682 with 100k integer ratings 1..5, as (rows, cols, values).

    User and item biases plus a weak low-rank taste term plus noise,
    rounded onto the 1..5 scale. The parameters are tuned so the rating
    histogram and the reachable holdout RMSE resemble the real dataset.
    """
    rng = np.random.default_rng(100_000)
    n_users, n_items, n_ratings, f = 943, 1682, 100_000, 6
    bu = rng.normal(0.0, 0.55, n_users)
    bi = rng.normal(0.0, 0.55, n_items)
    uu = rng.normal(0.0, 0.6 / np.sqrt(f), (n_users, f))
    vv = rng.normal(0.0, 0.6 / np.sqrt(f), (n_items, f))
    cells = rng.choice(n_users * n_items, size=n_ratings, replace=False)
    rows, cols = np.divmod(cells, n_items)
    raw = (
        3.53
        + bu[rows]
        + bi[cols]
        + np.einsum("ij,ij->i", uu[rows], vv[cols])
        + rng.normal(0.0, 0.8, n_ratings)
    )
    values = np.clip(np.rint(raw), 1, 5).astype(np.int64)
    return rows, cols, values


@pytest.fixture(scope="session")
def ml100k_path(tmp_path_factory):
    """Path to a ratings file in ml-100k layout (real one when configured)."""
    env = os.environ.get(ML100K_ENV)
    if env:
        return env
    rows, cols, values = make_ml100k_standin()
    path = tmp_path_factory.mktemp("ml100k") / "u.data"
    with open(path, "w", encoding="ascii") as f:
        for r, c, v in zip(rows, cols, values):
            f.write(f"{r + 1}\t{c + 1}\t{v}\t881250949\n")
    return str(path)
