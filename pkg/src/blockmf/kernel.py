"""Per-block factorization kernel.

A kernel call owns its u/v slices exclusively for the whole invocation;
scheduling guarantees concurrent calls never overlap slices. Entries are
visited in their stored row-major order, never shuffled, so repeated runs
are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import DivergenceError, FactorModel
from .partition import Block

# Converge-mode safety net: one block never spins past this many sweeps.
CONVERGE_CAP = 10_000


@dataclass(frozen=True)
class BlockTask:
    """Everything one kernel invocation needs.

    rows/cols are block-local and index directly into u_slice/v_slice,
    which are writable views of the global factor matrices. inner_iters
    is the fixed sweep count G, or None to sweep until the block's RMSE
    improvement falls below converge_tol.
    """

    bi: int
    bj: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    u_slice: np.ndarray
    v_slice: np.ndarray
    alpha: float
    beta: float
    inner_iters: int | None = 1
    converge_tol: float = 0.0

    def __post_init__(self):
        if self.u_slice.ndim != 2 or self.v_slice.ndim != 2:
            raise ValueError("factor slices must be 2-D")
        if self.u_slice.shape[1] != self.v_slice.shape[1]:
            raise ValueError("factor slices must share latent dimension")
        if self.inner_iters is None:
            if not self.converge_tol > 0:
                raise ValueError("converge mode needs converge_tol > 0")
        elif self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")


@dataclass(frozen=True)
class BlockStats:
    """Kernel result: SSE before the first and after the last sweep."""

    sse_before: float
    sse_after: float
    entries: int
    iters_used: int
    capped: bool = False


def task_from_block(
    block: Block,
    model: FactorModel,
    alpha: float,
    beta: float,
    inner_iters: int | None,
    converge_tol: float = 0.0,
) -> BlockTask:
    """Bind a partition block to its writable factor slices."""
    return BlockTask(
        bi=block.bi,
        bj=block.bj,
        rows=block.rows,
        cols=block.cols,
        values=block.values,
        u_slice=model.u[block.row_start : block.row_stop],
        v_slice=model.v[block.col_start : block.col_stop],
        alpha=alpha,
        beta=beta,
        inner_iters=inner_iters,
        converge_tol=converge_tol,
    )


def _diverged(task: BlockTask, entry: int, iteration: int) -> DivergenceError:
    return DivergenceError(
        f"block ({task.bi}, {task.bj}): non-finite residual at entry {entry}, "
        f"inner iteration {iteration}; reduce alpha",
        block=(task.bi, task.bj),
        entry=entry,
        iteration=iteration,
    )


def sgd_block(task: BlockTask) -> BlockStats:
    """Element-wise SGD over the block's entries.

    Fixed mode runs exactly inner_iters sweeps; converge mode sweeps until
    block RMSE improvement < converge_tol, hard-capped at CONVERGE_CAP.
    """
    if task.inner_iters is None:
        sse_before, sse_after, iters, capped, bad_entry, bad_iter = (
            _kernels.sgd_converge(
                task.rows,
                task.cols,
                task.values,
                task.u_slice,
                task.v_slice,
                task.alpha,
                task.beta,
                task.converge_tol,
                CONVERGE_CAP,
            )
        )
        if bad_entry >= 0:
            raise _diverged(task, bad_entry, bad_iter)
        return BlockStats(
            sse_before, sse_after, len(task.rows), int(iters), bool(capped)
        )
    sse_before, sse_after, bad_entry, bad_iter = _kernels.sgd_sweeps(
        task.rows,
        task.cols,
        task.values,
        task.u_slice,
        task.v_slice,
        task.alpha,
        task.beta,
        task.inner_iters,
    )
    if bad_entry >= 0:
        raise _diverged(task, bad_entry, bad_iter)
    return BlockStats(sse_before, sse_after, len(task.rows), task.inner_iters)


def batch_gradient_block(task: BlockTask) -> BlockStats:
    """Full-batch gradient updates on the block (verification variant)."""
    if task.inner_iters is None:
        raise ValueError("converge mode is only defined for sgd_block")
    sse_before, sse_after, bad_entry, bad_iter = _kernels.gradient_steps(
        task.rows,
        task.cols,
        task.values,
        task.u_slice,
        task.v_slice,
        task.alpha,
        task.beta,
        task.inner_iters,
    )
    if bad_entry >= 0:
        raise _diverged(task, bad_entry, bad_iter)
    return BlockStats(sse_before, sse_after, len(task.rows), task.inner_iters)


def block_objective(task: BlockTask) -> float:
    """Squared residual sum plus (beta/2) times the slice norms; pure."""
    e = task.values - np.einsum(
        "ij,ij->i", task.u_slice[task.rows], task.v_slice[task.cols]
    )
    reg = np.square(task.u_slice).sum() + np.square(task.v_slice).sum()
    return float(e @ e + 0.5 * task.beta * reg)


def block_gradients(task: BlockTask) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of block_objective w.r.t. the two slices; pure."""
    e = task.values - np.einsum(
        "ij,ij->i", task.u_slice[task.rows], task.v_slice[task.cols]
    )
    gu = task.beta * task.u_slice
    gv = task.beta * task.v_slice
    np.add.at(gu, task.rows, -2.0 * e[:, None] * task.v_slice[task.cols])
    np.add.at(gv, task.cols, -2.0 * e[:, None] * task.u_slice[task.rows])
    return gu, gv
