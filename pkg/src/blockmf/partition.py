"""Balanced I x J block partition of a sparse ratings matrix.

The grid cuts rows into I contiguous slabs and columns into J slabs, each
pair of slabs defining one block. Block entries are stored in local
coordinates so kernels can work directly on the matching factor slices
u[row_start:row_stop] and v[col_start:col_stop].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RatingsDataset


def split_bounds(n: int, parts: int) -> np.ndarray:
    """Bounds of a balanced split of range(n) into `parts` contiguous slabs.

    The first n % parts slabs get ceil(n / parts) indices, the rest get
    floor(n / parts), so slab sizes differ by at most one. Returns an array
    of parts + 1 offsets starting at 0 and ending at n.

    >>> split_bounds(10, 3)
    array([ 0,  4,  7, 10])
    """
    if parts < 1:
        raise ValueError(f"parts must be >= 1, got {parts}")
    if parts > n:
        raise ValueError(f"cannot split {n} indices into {parts} non-empty slabs")
    base, extra = divmod(n, parts)
    sizes = np.full(parts, base, dtype=np.int64)
    sizes[:extra] += 1
    bounds = np.zeros(parts + 1, dtype=np.int64)
    np.cumsum(sizes, out=bounds[1:])
    return bounds


@dataclass(frozen=True)
class BlockGrid:
    """Partition descriptor: where each block's rows and columns start and stop."""

    n: int
    m: int
    grid_i: int
    grid_j: int
    row_bounds: np.ndarray
    col_bounds: np.ndarray

    def block_shape(self, bi: int, bj: int) -> tuple[int, int]:
        return (
            int(self.row_bounds[bi + 1] - self.row_bounds[bi]),
            int(self.col_bounds[bj + 1] - self.col_bounds[bj]),
        )


def make_grid(n: int, m: int, grid_i: int, grid_j: int) -> BlockGrid:
    """Balanced I x J grid over an n x m matrix; every slab is non-empty."""
    if not (1 <= grid_i <= n):
        raise ValueError(f"grid_i must be in [1, {n}], got {grid_i}")
    if not (1 <= grid_j <= m):
        raise ValueError(f"grid_j must be in [1, {m}], got {grid_j}")
    return BlockGrid(
        n=n,
        m=m,
        grid_i=grid_i,
        grid_j=grid_j,
        row_bounds=split_bounds(n, grid_i),
        col_bounds=split_bounds(m, grid_j),
    )


def locate(grid: BlockGrid, row: int, col: int) -> tuple[int, int, int, int]:
    """Map a global cell to (bi, bj, local_row, local_col)."""
    if not (0 <= row < grid.n and 0 <= col < grid.m):
        raise IndexError(f"({row}, {col}) outside {grid.n}x{grid.m} matrix")
    bi = int(np.searchsorted(grid.row_bounds, row, side="right")) - 1
    bj = int(np.searchsorted(grid.col_bounds, col, side="right")) - 1
    return bi, bj, row - int(grid.row_bounds[bi]), col - int(grid.col_bounds[bj])


@dataclass(frozen=True)
class Block:
    """One grid cell: factor-slice ranges plus its entries in local coordinates.

    Entry arrays are read-only views sorted by (row, col), so every sweep
    visits them in the same order.
    """

    bi: int
    bj: int
    row_start: int
    row_stop: int
    col_start: int
    col_stop: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return self.rows.shape[0]


class BlockedDataset:
    """A dataset's entries bucketed into the blocks of a grid.

    Every entry lands in exactly one block; within a block entries are
    sorted row-major. Blocks are zero-copy views into three shared arrays.
    """

    def __init__(self, dataset: RatingsDataset, grid: BlockGrid):
        if (dataset.n, dataset.m) != (grid.n, grid.m):
            raise ValueError(
                f"grid is {grid.n}x{grid.m} but dataset is {dataset.n}x{dataset.m}"
            )
        self.dataset = dataset
        self.grid = grid

        bi = np.searchsorted(grid.row_bounds, dataset.rows, side="right") - 1
        bj = np.searchsorted(grid.col_bounds, dataset.cols, side="right") - 1
        block_id = bi * grid.grid_j + bj
        # lexsort keys run least-significant first: block, then row, then col
        order = np.lexsort((dataset.cols, dataset.rows, block_id))
        self._rows = np.ascontiguousarray(
            dataset.rows[order] - grid.row_bounds[bi[order]]
        )
        self._cols = np.ascontiguousarray(
            dataset.cols[order] - grid.col_bounds[bj[order]]
        )
        self._values = np.ascontiguousarray(dataset.values[order])
        for a in (self._rows, self._cols, self._values):
            a.flags.writeable = False
        self._offsets = np.searchsorted(
            block_id[order], np.arange(grid.grid_i * grid.grid_j + 1)
        )

    @property
    def counts(self) -> np.ndarray:
        """I x J array of per-block entry counts."""
        return np.diff(self._offsets).reshape(self.grid.grid_i, self.grid.grid_j)

    def block(self, bi: int, bj: int) -> Block:
        if not (0 <= bi < self.grid.grid_i and 0 <= bj < self.grid.grid_j):
            raise IndexError(
                f"block ({bi}, {bj}) outside {self.grid.grid_i}x{self.grid.grid_j} grid"
            )
        flat = bi * self.grid.grid_j + bj
        lo, hi = self._offsets[flat], self._offsets[flat + 1]
        return Block(
            bi=bi,
            bj=bj,
            row_start=int(self.grid.row_bounds[bi]),
            row_stop=int(self.grid.row_bounds[bi + 1]),
            col_start=int(self.grid.col_bounds[bj]),
            col_stop=int(self.grid.col_bounds[bj + 1]),
            rows=self._rows[lo:hi],
            cols=self._cols[lo:hi],
            values=self._values[lo:hi],
        )

    def __iter__(self):
        for bi in range(self.grid.grid_i):
            for bj in range(self.grid.grid_j):
                yield self.block(bi, bj)


def block_dataset(dataset: RatingsDataset, grid: BlockGrid) -> BlockedDataset:
    """Bucket a dataset's entries into the blocks of `grid`."""
    return BlockedDataset(dataset, grid)


def partition(dataset: RatingsDataset, grid_i: int, grid_j: int) -> BlockedDataset:
    """Convenience: make_grid + block_dataset in one call."""
    return block_dataset(dataset, make_grid(dataset.n, dataset.m, grid_i, grid_j))


def permute_dataset(
    dataset: RatingsDataset, seed: int
) -> tuple[RatingsDataset, np.ndarray, np.ndarray]:
    """Relabel rows and columns by a seeded random permutation.

    Spreads dense stripes across blocks before partitioning. Returns the
    relabeled dataset plus the permutations used (perm[old_index] = new
    index) so predictions can be mapped back. Off by default everywhere.
    """
    rng = np.random.default_rng(seed)
    row_perm = rng.permutation(dataset.n)
    col_perm = rng.permutation(dataset.m)
    return (
        RatingsDataset(
            dataset.n,
            dataset.m,
            row_perm[dataset.rows],
            col_perm[dataset.cols],
            dataset.values,
            density_hint=dataset.density_hint,
        ),
        row_perm,
        col_perm,
    )
