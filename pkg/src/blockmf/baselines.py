"""Reference trainers: sequential SGD and synchronized row-sharded SGD.

Both apply the same per-entry update as the block kernel, in deterministic
row-major global order, so the blocked variant can be compared against
them entry for entry.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from . import _kernels
from .core import (
    ConvergenceTrace,
    DivergenceError,
    RatingsDataset,
    TraceStep,
    TrainConfig,
    init_factors,
)
from .kernel import sgd_block, task_from_block
from .metrics import HoldoutEvaluator
from .partition import partition, split_bounds
from .trainer import StopReason, TrainResult


def _finish_step(
    trace: ConvergenceTrace,
    step: int,
    sse: float,
    count: int,
    evaluator,
    model,
    t0: float,
    timing: bool,
) -> float:
    train_rmse = float(np.sqrt(sse / count)) if count else 0.0
    trace.append(
        TraceStep(
            step=step,
            train_rmse=train_rmse,
            test_rmse=evaluator.rmse(model) if evaluator else None,
            seconds=time.perf_counter() - t0 if timing else 0.0,
            inner_iters=1,
        )
    )
    return train_rmse


def _should_stop(trace: ConvergenceTrace, count: int, delta: float) -> bool:
    if count == 0:
        return True
    if len(trace) < 2:
        return False
    return trace.steps[-2].train_rmse - trace.steps[-1].train_rmse < delta


def train_sequential(
    d: RatingsDataset,
    cfg: TrainConfig,
    test: Optional[RatingsDataset] = None,
    *,
    early_stop: bool = True,
    timing: bool = True,
) -> TrainResult:
    """Plain SGD: one row-major pass over all entries per outer step.

    Grid and worker fields of cfg are ignored. Deterministic for a fixed
    seed; bit-identical to train_blocked with a 1x1 grid and Constant(1).
    """
    whole = partition(d, 1, 1).block(0, 0)
    model = init_factors(d.n, d.m, cfg.k, cfg.seed)
    evaluator = (
        HoldoutEvaluator(d, test) if test is not None and len(test) > 0 else None
    )
    trace = ConvergenceTrace()
    stop_reason: StopReason = "max_steps"
    for step in range(1, cfg.outer_steps + 1):
        t0 = time.perf_counter()
        task = task_from_block(whole, model, cfg.alpha, cfg.beta, 1)
        try:
            stats = sgd_block(task)
        except DivergenceError as exc:
            exc.step = step
            exc.partial_trace = trace
            raise
        _finish_step(
            trace, step, stats.sse_after, stats.entries, evaluator, model, t0, timing
        )
        if early_stop and _should_stop(trace, stats.entries, cfg.delta):
            stop_reason = "converged"
            break
    return TrainResult(model=model, trace=trace, stop_reason=stop_reason)


def train_sync_parallel(
    d: RatingsDataset,
    cfg: TrainConfig,
    test: Optional[RatingsDataset] = None,
    *,
    early_stop: bool = True,
    timing: bool = True,
) -> TrainResult:
    """Row-sharded SGD with a synchronization barrier after every sweep.

    Entries are split by global row into cfg.workers contiguous shards.
    Within a sweep each shard's worker updates its own u rows in place
    (shard-exclusive) and a private copy of the whole v matrix; at the
    barrier the shards' v deltas are summed onto the shared v in shard
    order. A single shard works on the shared v directly, which makes
    workers=1 bit-identical to train_sequential. Deterministic for a
    fixed shard count; different worker counts give different (equally
    valid) trajectories because the v merge changes.
    """
    whole = partition(d, 1, 1).block(0, 0)
    model = init_factors(d.n, d.m, cfg.k, cfg.seed)
    evaluator = (
        HoldoutEvaluator(d, test) if test is not None and len(test) > 0 else None
    )
    shards = min(cfg.workers, max(d.n, 1))
    # whole.rows is sorted, so each shard is one contiguous slice
    shard_edges = np.searchsorted(whole.rows, split_bounds(d.n, shards))

    trace = ConvergenceTrace()
    stop_reason: StopReason = "max_steps"
    executor = ThreadPoolExecutor(shards) if shards > 1 else None

    def run_shard(w: int, v_target: np.ndarray):
        lo, hi = shard_edges[w], shard_edges[w + 1]
        sse_before, sse_after, bad_entry, bad_iter = _kernels.sgd_sweeps(
            whole.rows[lo:hi],
            whole.cols[lo:hi],
            whole.values[lo:hi],
            model.u,
            v_target,
            cfg.alpha,
            cfg.beta,
            1,
        )
        if bad_entry >= 0:
            raise DivergenceError(
                f"shard {w}: non-finite residual at entry {bad_entry}; reduce alpha",
                entry=int(bad_entry),
                iteration=int(bad_iter),
            )
        return sse_after, int(hi - lo)

    try:
        for step in range(1, cfg.outer_steps + 1):
            t0 = time.perf_counter()
            try:
                if shards == 1:
                    results = [run_shard(0, model.v)]
                else:
                    v_start = model.v.copy()
                    privates = [v_start.copy() for _ in range(shards)]
                    results = list(
                        executor.map(run_shard, range(shards), privates)
                    )
                    delta = np.zeros_like(model.v)
                    for v_w in privates:
                        delta += v_w - v_start
                    model.v[:] = v_start + delta
            except DivergenceError as exc:
                exc.step = step
                exc.partial_trace = trace
                raise
            sse = sum(r[0] for r in results)
            count = sum(r[1] for r in results)
            _finish_step(trace, step, sse, count, evaluator, model, t0, timing)
            if early_stop and _should_stop(trace, count, cfg.delta):
                stop_reason = "converged"
                break
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    return TrainResult(model=model, trace=trace, stop_reason=stop_reason)
