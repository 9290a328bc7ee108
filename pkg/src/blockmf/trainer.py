"""Blocked training loop: outer steps over scheduled batches of block kernels.

Each outer step resolves the inner-iteration count, walks the step's
batches in order, runs the blocks of a batch concurrently on the worker
pool (their factor slices are disjoint by construction), and joins at a
barrier before the next batch. Per-block SSE from the kernels is merged
into the step's train RMSE, so no extra pass over the data is needed.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Literal, Optional

from .core import (
    AdaptiveDecreasing,
    Constant,
    ConvergeEachBlock,
    ConvergenceTrace,
    Decreasing,
    DivergenceError,
    FactorModel,
    IncreasingEvery,
    InnerSchedule,
    RatingsDataset,
    TraceStep,
    TrainConfig,
    init_factors,
)
from .kernel import BlockTask, sgd_block, task_from_block
from .metrics import HoldoutEvaluator, RmseAccumulator, finalize, merge, rmse
from .partition import partition
from .scheduler import plan_step

StopReason = Literal["converged", "max_steps", "diverged"]

# Called around every kernel invocation (in the worker thread) when set;
# tests use it to observe scheduling and slice ownership.
BlockHook = Callable[[str, BlockTask], None]


@dataclass(frozen=True)
class TrainResult:
    model: FactorModel
    trace: ConvergenceTrace
    stop_reason: StopReason


def resolve_inner_iters(
    schedule: InnerSchedule, step: int, prev_improvement_ratio: float = 1.0
) -> Optional[int]:
    """Inner sweep count for outer step `step` (1-based).

    Returns None for ConvergeEachBlock, whose count is decided inside the
    kernel. prev_improvement_ratio is the relative RMSE improvement of the
    previous step, defined as 1 for step 1; only AdaptiveDecreasing uses it.
    """
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if isinstance(schedule, Constant):
        return schedule.iters
    if isinstance(schedule, IncreasingEvery):
        return min(math.ceil(step / schedule.period), schedule.cap)
    if isinstance(schedule, Decreasing):
        return max(schedule.start - step + 1, 1)
    if isinstance(schedule, AdaptiveDecreasing):
        return max(round(schedule.start * prev_improvement_ratio), 1)
    if isinstance(schedule, ConvergeEachBlock):
        return None
    raise TypeError(f"not a schedule: {schedule!r}")


def train_blocked(
    d: RatingsDataset,
    cfg: TrainConfig,
    test: Optional[RatingsDataset] = None,
    *,
    early_stop: bool = True,
    timing: bool = True,
    block_hook: Optional[BlockHook] = None,
) -> TrainResult:
    """Blocked factorization of d under cfg.

    Runs up to cfg.outer_steps steps; per step every block is visited once
    via the rotating schedule, with cfg.inner_schedule's sweep count. Stops
    early when train RMSE improves by less than cfg.delta (disable with
    early_stop=False to run the full budget). Fixed cfg gives bit-identical
    results for any worker count. timing=False records 0.0 seconds per step
    so traces are byte-reproducible.

    Raises DivergenceError on the first non-finite residual; the exception
    carries the block, step, and the trace so far (partial_trace).
    """
    blocked = partition(d, cfg.grid_i, cfg.grid_j)
    model = init_factors(d.n, d.m, cfg.k, cfg.seed)
    evaluator = (
        HoldoutEvaluator(d, test) if test is not None and len(test) > 0 else None
    )
    tol = (
        cfg.inner_schedule.tol
        if isinstance(cfg.inner_schedule, ConvergeEachBlock)
        else 0.0
    )
    adaptive = isinstance(cfg.inner_schedule, AdaptiveDecreasing)
    # RMSE_0 seeds the adaptive ratio at step 2
    rmse_hist = [rmse(model, d)] if adaptive and len(d) else [0.0]

    trace = ConvergenceTrace()
    stop_reason: StopReason = "max_steps"
    executor = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None

    def run_one(task: BlockTask):
        if block_hook is None:
            return sgd_block(task)
        block_hook("start", task)
        try:
            return sgd_block(task)
        finally:
            block_hook("end", task)

    try:
        for step in range(1, cfg.outer_steps + 1):
            if adaptive and step >= 2:
                prev, cur = rmse_hist[-2], rmse_hist[-1]
                ratio = (prev - cur) / prev if prev > 0 else 0.0
            else:
                ratio = 1.0
            g = resolve_inner_iters(cfg.inner_schedule, step, ratio)

            t0 = time.perf_counter()
            acc = RmseAccumulator()
            max_iters = 0
            capped = 0
            try:
                for batch in plan_step(cfg.grid_i, cfg.grid_j, step - 1):
                    tasks = [
                        task_from_block(
                            blocked.block(bi, bj), model, cfg.alpha, cfg.beta, g, tol
                        )
                        for bi, bj in batch
                    ]
                    if executor is not None and len(tasks) > 1:
                        stats = list(executor.map(run_one, tasks))
                    else:
                        stats = [run_one(t) for t in tasks]
                    for s in stats:
                        acc = merge(acc, RmseAccumulator(s.sse_after, s.entries))
                        max_iters = max(max_iters, s.iters_used)
                        capped += s.capped
            except DivergenceError as exc:
                exc.step = step
                exc.partial_trace = trace
                raise

            train_rmse = finalize(acc)
            trace.append(
                TraceStep(
                    step=step,
                    train_rmse=train_rmse,
                    test_rmse=evaluator.rmse(model) if evaluator else None,
                    seconds=time.perf_counter() - t0 if timing else 0.0,
                    inner_iters=max_iters,
                    capped_blocks=capped,
                )
            )
            rmse_hist.append(train_rmse)

            if early_stop:
                if acc.count == 0:
                    stop_reason = "converged"
                    break
                if len(trace) >= 2:
                    improvement = trace.steps[-2].train_rmse - train_rmse
                    if improvement < cfg.delta:
                        stop_reason = "converged"
                        break
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    return TrainResult(model=model, trace=trace, stop_reason=stop_reason)


@dataclass(frozen=True)
class SweepPoint:
    """Outcome of one (outer, inner) split of a fixed iteration budget."""

    outer: int
    inner: int
    final_rmse: float
    seconds: float


def auto_splits(total_budget: int) -> list[tuple[int, int]]:
    """All (outer, inner) factorizations of the budget, ascending outer."""
    if total_budget < 1:
        raise ValueError(f"budget must be >= 1, got {total_budget}")
    return [
        (outer, total_budget // outer)
        for outer in range(1, total_budget + 1)
        if total_budget % outer == 0
    ]


def sweep_budget(
    d: RatingsDataset,
    cfg: TrainConfig,
    total_budget: int,
    splits: list[tuple[int, int]],
    *,
    timing: bool = True,
) -> list[SweepPoint]:
    """Train once per (outer, inner) split of a fixed total iteration budget.

    Each split runs Constant(inner) for exactly `outer` steps, early
    stopping disabled, from the same seeded initialization, so the points
    differ only in how the budget is divided.

    final_rmse is recomputed on the finished model over the whole dataset
    rather than taken from the trace: the trace accumulates per-block SSE
    measured right after each block's own inner sweeps, which flatters
    large inner counts and is not comparable across splits.
    """
    for outer, inner in splits:
        if outer < 1 or inner < 1 or outer * inner != total_budget:
            raise ValueError(
                f"split ({outer}, {inner}) does not factor budget {total_budget}"
            )
    points = []
    for outer, inner in splits:
        run_cfg = replace(cfg, outer_steps=outer, inner_schedule=Constant(inner))
        t0 = time.perf_counter()
        result = train_blocked(d, run_cfg, early_stop=False, timing=timing)
        seconds = time.perf_counter() - t0 if timing else 0.0
        points.append(
            SweepPoint(
                outer=outer,
                inner=inner,
                final_rmse=rmse(result.model, d),
                seconds=seconds,
            )
        )
    return points
