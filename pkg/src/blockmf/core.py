"""Shared domain types: datasets, factor models, training configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np


class DataError(ValueError):
    """A dataset, file, or model artifact violates its contract."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite value.

    Carries enough context to locate the blow-up: block coordinates,
    entry position in the block's visitation order, inner iteration,
    and outer step (where known).
    """

    def __init__(
        self,
        message: str,
        *,
        block: tuple[int, int] | None = None,
        entry: int | None = None,
        iteration: int | None = None,
        step: int | None = None,
    ):
        super().__init__(message)
        self.block = block
        self.entry = entry
        self.iteration = iteration
        self.step = step


@dataclass(frozen=True)
class RatingTriple:
    """One observation: matrix cell (row, col) holds `value`."""

    row: int
    col: int
    value: float

    def __iter__(self) -> Iterator[int | float]:
        # tuple-unpacking support, so from_triples accepts either form
        return iter((self.row, self.col, self.value))


class RatingsDataset:
    """Sparse set of (row, col, value) observations with fixed global shape.

    Entries are stored as three parallel arrays (int64 rows, int64 cols,
    float64 values) and are immutable after construction. `density_hint`
    (observed / n*m) lets downstream code pick dense fast paths.
    """

    def __init__(
        self,
        n: int,
        m: int,
        rows: np.ndarray,
        cols: np.ndarray,
        values: np.ndarray,
        density_hint: float | None = None,
    ):
        if n < 0 or m < 0:
            raise ValueError(f"dimensions must be non-negative, got {n}x{m}")
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        cols = np.ascontiguousarray(cols, dtype=np.int64)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape) or rows.ndim != 1:
            raise ValueError("rows, cols, values must be 1-D arrays of equal length")
        self.n = int(n)
        self.m = int(m)
        self.rows = rows
        self.cols = cols
        self.values = values
        for a in (self.rows, self.cols, self.values):
            a.flags.writeable = False
        if density_hint is None:
            cells = self.n * self.m
            density_hint = len(self) / cells if cells else 0.0
        self.density_hint = float(density_hint)

    @classmethod
    def from_triples(
        cls, n: int, m: int, triples: Sequence[tuple[int, int, float] | RatingTriple]
    ) -> "RatingsDataset":
        if triples:
            rows, cols, values = (np.asarray(x) for x in zip(*triples))
        else:
            rows = cols = values = np.empty(0)
        return cls(n, m, rows, cols, values)

    def __len__(self) -> int:
        return self.rows.shape[0]

    def entries(self) -> Iterator[RatingTriple]:
        """Iterate entries as RatingTriple objects (convenience for small data)."""
        for r, c, v in zip(self.rows, self.cols, self.values):
            yield RatingTriple(int(r), int(c), float(v))

    def __repr__(self) -> str:
        return f"RatingsDataset(n={self.n}, m={self.m}, entries={len(self)})"


def validate_dataset(d: RatingsDataset) -> None:
    """Check dataset invariants, raising DataError naming the offending triple.

    Checks: indices inside [0, n) x [0, m), no duplicate (row, col) pair,
    all values finite.
    """
    if len(d) == 0:
        return
    bad = np.flatnonzero((d.rows < 0) | (d.rows >= d.n) | (d.cols < 0) | (d.cols >= d.m))
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"entry {i}: index ({d.rows[i]}, {d.cols[i]}) outside {d.n}x{d.m} matrix"
        )
    bad = np.flatnonzero(~np.isfinite(d.values))
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"entry {i}: non-finite value {d.values[i]} at ({d.rows[i]}, {d.cols[i]})"
        )
    keys = d.rows * d.m + d.cols
    uniq, counts = np.unique(keys, return_counts=True)
    dup = uniq[counts > 1]
    if dup.size:
        k = int(dup[0])
        raise DataError(f"duplicate entry at ({k // d.m}, {k % d.m})")


class FactorModel:
    """Latent factor matrices: u is n x k (rows), v is m x k (columns).

    Predictions are dot products of a u row with a v row. Mutated only by
    the trainers, which guarantee exclusive access to the row slices they
    hand to kernels.
    """

    def __init__(self, u: np.ndarray, v: np.ndarray):
        u = np.ascontiguousarray(u, dtype=np.float64)
        v = np.ascontiguousarray(v, dtype=np.float64)
        if u.ndim != 2 or v.ndim != 2 or u.shape[1] != v.shape[1]:
            raise ValueError(
                f"factor matrices must be 2-D with equal width, got {u.shape} and {v.shape}"
            )
        if u.shape[1] < 1:
            raise ValueError("latent dimension k must be >= 1")
        self.u = u
        self.v = v

    @property
    def k(self) -> int:
        return self.u.shape[1]

    def predict(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Predicted values for the given (row, col) index arrays."""
        return np.einsum("ij,ij->i", self.u[rows], self.v[cols])

    def copy(self) -> "FactorModel":
        return FactorModel(self.u.copy(), self.v.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FactorModel):
            return NotImplemented
        return np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v)

    def __repr__(self) -> str:
        return f"FactorModel(n={self.u.shape[0]}, m={self.v.shape[0]}, k={self.k})"


def init_factors(n: int, m: int, k: int, seed: int) -> FactorModel:
    """Seeded random factor model: i.i.d. uniform entries in [0, 1/sqrt(k)).

    The scale keeps initial predictions (expected value k * (1/(2*sqrt(k)))**2
    = 1/4) and hence early gradients bounded for any k. Pure function of its
    arguments: same inputs give bit-identical matrices (PCG64 stream, u drawn
    before v).
    """
    if n < 1 or m < 1 or k < 1:
        raise ValueError(f"n, m, k must all be >= 1, got n={n}, m={m}, k={k}")
    rng = np.random.default_rng(seed)
    scale = 1.0 / math.sqrt(k)
    u = rng.random((n, k)) * scale
    v = rng.random((m, k)) * scale
    return FactorModel(u, v)


class InnerSchedule:
    """Base for per-step inner-iteration policies. See the subclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class Constant(InnerSchedule):
    """Same number of sweeps over every block at every step."""

    iters: int

    def __post_init__(self):
        if self.iters < 1:
            raise ValueError("Constant schedule needs iters >= 1")


@dataclass(frozen=True)
class IncreasingEvery(InnerSchedule):
    """ceil(step / period) sweeps, capped: 1,1,..,2,2,..  up to `cap`."""

    period: int
    cap: int

    def __post_init__(self):
        if self.period < 1 or self.cap < 1:
            raise ValueError("IncreasingEvery needs period >= 1 and cap >= 1")


@dataclass(frozen=True)
class Decreasing(InnerSchedule):
    """start, start-1, ... down to a floor of one sweep per block."""

    start: int

    def __post_init__(self):
        if self.start < 1:
            raise ValueError("Decreasing schedule needs start >= 1")


@dataclass(frozen=True)
class AdaptiveDecreasing(InnerSchedule):
    """Scales `start` by the previous step's relative RMSE improvement."""

    start: int

    def __post_init__(self):
        if self.start < 1:
            raise ValueError("AdaptiveDecreasing schedule needs start >= 1")


@dataclass(frozen=True)
class ConvergeEachBlock(InnerSchedule):
    """Sweep each block until its RMSE improvement drops below `tol`."""

    tol: float

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("ConvergeEachBlock needs tol > 0")


def parse_schedule(text: str) -> InnerSchedule:
    """Parse a schedule spec: const:G | inc:PERIOD,CAP | dec:START | adaptive:START | converge:TOL."""
    kind, sep, args = text.partition(":")
    if not sep:
        raise ValueError(f"malformed schedule {text!r}: expected kind:args")
    try:
        if kind == "const":
            return Constant(int(args))
        if kind == "inc":
            period, cap = args.split(",")
            return IncreasingEvery(int(period), int(cap))
        if kind == "dec":
            return Decreasing(int(args))
        if kind == "adaptive":
            return AdaptiveDecreasing(int(args))
        if kind == "converge":
            return ConvergeEachBlock(float(args))
    except ValueError as exc:
        raise ValueError(f"malformed schedule {text!r}: {exc}") from None
    raise ValueError(f"unknown schedule kind {kind!r}")


def format_schedule(s: InnerSchedule) -> str:
    """Inverse of parse_schedule, used for provenance comments."""
    if isinstance(s, Constant):
        return f"const:{s.iters}"
    if isinstance(s, IncreasingEvery):
        return f"inc:{s.period},{s.cap}"
    if isinstance(s, Decreasing):
        return f"dec:{s.start}"
    if isinstance(s, AdaptiveDecreasing):
        return f"adaptive:{s.start}"
    if isinstance(s, ConvergeEachBlock):
        return f"converge:{s.tol}"
    raise TypeError(f"not a schedule: {s!r}")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by every trainer variant.

    alpha is the SGD learning rate, beta the regularization weight, delta
    the minimum per-step RMSE improvement below which training stops early.
    grid_i x grid_j is the block grid; workers bounds how many blocks run
    concurrently within a batch.
    """

    k: int = 10
    alpha: float = 1e-4
    beta: float = 1e-2
    delta: float = 1e-2
    outer_steps: int = 100
    inner_schedule: InnerSchedule = Constant(1)
    grid_i: int = 1
    grid_j: int = 1
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.outer_steps < 1:
            raise ValueError("outer_steps must be >= 1")
        if self.grid_i < 1 or self.grid_j < 1:
            raise ValueError("grid dimensions must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class TraceStep:
    """One outer step's record.

    inner_iters is the largest sweep count any block used this step (equals
    the scheduled count for fixed schedules). capped_blocks counts blocks
    that hit the converge-mode iteration cap.
    """

    step: int
    train_rmse: float
    test_rmse: float | None
    seconds: float
    inner_iters: int
    capped_blocks: int = 0


class ConvergenceTrace:
    """Per-outer-step training record with strictly increasing step indices."""

    def __init__(self):
        self.steps: list[TraceStep] = []

    def append(self, step: TraceStep) -> None:
        if self.steps and step.step <= self.steps[-1].step:
            raise ValueError("trace step indices must be strictly increasing")
        if not step.train_rmse >= 0:
            raise ValueError("train RMSE must be >= 0")
        self.steps.append(step)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[TraceStep]:
        return iter(self.steps)

    def last(self) -> TraceStep:
        return self.steps[-1]
