"""Block-partitioned parallel matrix factorization.

A sparse ratings matrix is split into an I x J grid of blocks. Blocks
that share no rows or columns train concurrently; a rotating schedule
visits every block exactly once per outer step without factor conflicts.
Sequential and synchronized-parallel trainers over the same update rule
serve as baselines.
"""

from .core import (
    AdaptiveDecreasing,
    Constant,
    ConvergeEachBlock,
    ConvergenceTrace,
    DataError,
    Decreasing,
    DivergenceError,
    FactorModel,
    IncreasingEvery,
    InnerSchedule,
    RatingsDataset,
    RatingTriple,
    TraceStep,
    TrainConfig,
    format_schedule,
    init_factors,
    parse_schedule,
    validate_dataset,
)
from .partition import (
    Block,
    BlockedDataset,
    BlockGrid,
    block_dataset,
    locate,
    make_grid,
    partition,
    permute_dataset,
    split_bounds,
)
from .kernel import (
    BlockStats,
    BlockTask,
    batch_gradient_block,
    block_gradients,
    block_objective,
    sgd_block,
    task_from_block,
)
from .scheduler import Batch, StepPlan, format_plan, plan_step, validate_plan
from .metrics import HoldoutEvaluator, RmseAccumulator, finalize, merge, rmse, test_rmse
from .trainer import (
    SweepPoint,
    TrainResult,
    auto_splits,
    resolve_inner_iters,
    sweep_budget,
    train_blocked,
)
from .baselines import train_sequential, train_sync_parallel
from .data_io import (
    SyntheticSpec,
    gen_synthetic,
    load,
    load_model,
    read_trace,
    save_dataset,
    save_model,
    split,
    write_trace,
)

__all__ = [
    "AdaptiveDecreasing",
    "Batch",
    "Block",
    "BlockedDataset",
    "BlockGrid",
    "BlockStats",
    "BlockTask",
    "Constant",
    "ConvergeEachBlock",
    "ConvergenceTrace",
    "DataError",
    "Decreasing",
    "DivergenceError",
    "FactorModel",
    "HoldoutEvaluator",
    "IncreasingEvery",
    "InnerSchedule",
    "RatingTriple",
    "RatingsDataset",
    "RmseAccumulator",
    "StepPlan",
    "SweepPoint",
    "SyntheticSpec",
    "TraceStep",
    "TrainConfig",
    "TrainResult",
    "auto_splits",
    "batch_gradient_block",
    "block_dataset",
    "block_gradients",
    "block_objective",
    "finalize",
    "format_plan",
    "format_schedule",
    "gen_synthetic",
    "init_factors",
    "load",
    "load_model",
    "locate",
    "make_grid",
    "merge",
    "parse_schedule",
    "partition",
    "permute_dataset",
    "plan_step",
    "read_trace",
    "resolve_inner_iters",
    "rmse",
    "save_dataset",
    "save_model",
    "sgd_block",
    "split",
    "split_bounds",
    "sweep_budget",
    "task_from_block",
    "test_rmse",
    "train_blocked",
    "train_sequential",
    "train_sync_parallel",
    "validate_dataset",
    "validate_plan",
    "write_trace",
]

__version__ = "0.1.0"
