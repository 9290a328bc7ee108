"""Command-line interface.

Commands: gen, train, evaluate, benchmark, sweep, schedule-dump. Exit
codes: 0 success, 1 usage, 2 data error, 3 divergence. Artifacts are
written to a .part file and renamed on completion, so a failed run never
leaves a partial file at the target path. Every CSV starts with a
`# config:` comment recording the fully resolved settings.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Callable, IO

from . import report
from .baselines import train_sequential, train_sync_parallel
from .core import (
    DataError,
    DivergenceError,
    TrainConfig,
    format_schedule,
    parse_schedule,
)
from .data_io import (
    FORMATS,
    SyntheticSpec,
    gen_synthetic,
    load,
    load_model,
    save_dataset,
    save_model,
    split,
    write_trace,
)
from .metrics import rmse
from .scheduler import format_plan, plan_step
from .trainer import auto_splits, sweep_budget, train_blocked

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3

VARIANTS = {
    "bgmf": train_blocked,
    "cmf": train_sequential,
    "cpmf": train_sync_parallel,
}


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        i, _, j = text.partition("x")
        grid = (int(i), int(j))
    except ValueError:
        raise ValueError(f"malformed grid {text!r}: expected IxJ") from None
    if grid[0] < 1 or grid[1] < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {text!r}")
    return grid


def _parse_splits(text: str, budget: int) -> list[tuple[int, int]]:
    if text == "auto":
        return auto_splits(budget)
    splits = []
    for part in text.split(","):
        outer, _, inner = part.partition("x")
        try:
            splits.append((int(outer), int(inner)))
        except ValueError:
            raise ValueError(f"malformed split {part!r}: expected OUTERxINNER") from None
    return splits


def _emit(path: str, write_fn: Callable[[IO[str]], None]) -> None:
    """Write an artifact atomically: full file or nothing."""
    tmp = path + ".part"
    try:
        with open(tmp, "w", encoding="ascii") as f:
            write_fn(f)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _render(path: str, render_fn: Callable[..., None], *args) -> None:
    tmp = path + ".part.png"
    try:
        render_fn(*args, tmp)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _load_or_gen(args) -> tuple:
    """Dataset for benchmark/sweep: a file when given, else seeded synthetic."""
    if args.data:
        d = load(args.data, args.format)
        source = {"data": args.data, "format": args.format}
    else:
        d = gen_synthetic(
            SyntheticSpec(args.n, args.m, args.low, args.high, args.seed, args.density)
        )
        source = {
            "synthetic": f"{args.n}x{args.m}",
            "low": args.low,
            "high": args.high,
            "density": args.density,
        }
    return d, source


def _train_config(args) -> TrainConfig:
    grid = _parse_grid(args.grid)
    return TrainConfig(
        k=args.k,
        alpha=args.alpha,
        beta=args.beta,
        delta=args.delta,
        outer_steps=args.outer_steps,
        inner_schedule=parse_schedule(args.inner_schedule),
        grid_i=grid[0],
        grid_j=grid[1],
        workers=args.workers,
        seed=args.seed,
    )


def _cfg_comment(cfg: TrainConfig) -> dict:
    return {
        "k": cfg.k,
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "delta": cfg.delta,
        "outer_steps": cfg.outer_steps,
        "schedule": format_schedule(cfg.inner_schedule),
        "grid": f"{cfg.grid_i}x{cfg.grid_j}",
        "workers": cfg.workers,
        "seed": cfg.seed,
    }


def cmd_gen(args) -> int:
    d = gen_synthetic(
        SyntheticSpec(args.n, args.m, args.low, args.high, args.seed, args.density)
    )
    _emit(args.out, lambda f: save_dataset(d, f))
    print(f"wrote {len(d)} entries ({d.n}x{d.m}) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _train_config(args)
    trainer = VARIANTS[args.variant]
    d = load(args.data, args.format)
    if args.test_fraction > 0:
        train_d, test_d = split(d, args.test_fraction, args.seed)
    else:
        train_d, test_d = d, None
    result = trainer(
        train_d,
        cfg,
        test_d,
        early_stop=not args.no_early_stop,
        timing=not args.no_timing,
    )
    config = {
        "variant": args.variant,
        "data": args.data,
        "format": args.format,
        "test_fraction": args.test_fraction,
        **_cfg_comment(cfg),
        "timing": not args.no_timing,
        "early_stop": not args.no_early_stop,
    }
    if args.trace:
        _emit(args.trace, lambda f: write_trace(result.trace, f, config))
        if not args.no_plot:
            png = os.path.splitext(args.trace)[0] + ".png"
            _render(png, report.render_trace, {args.variant: result.trace})
    if args.model_out:
        _emit(args.model_out, lambda f: save_model(result.model, f))
    last = result.trace.last()
    line = (
        f"{args.variant}: {len(result.trace)} steps, stop={result.stop_reason}, "
        f"train_rmse={last.train_rmse:.6f}"
    )
    if last.test_rmse is not None:
        line += f", test_rmse={last.test_rmse:.6f}"
    print(line)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    d = load(args.data, args.format)
    print(f"rmse {rmse(model, d)!r}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _train_config(args)
    d, source = _load_or_gen(args)
    rows = []
    traces = {}
    for variant in ("cmf", "cpmf", "bgmf"):
        t0 = time.perf_counter()
        result = VARIANTS[variant](d, cfg)
        wall = time.perf_counter() - t0
        steps = len(result.trace)
        rows.append(
            report.BenchmarkRow(
                variant=variant,
                sec_per_iter=wall / steps,
                iters=steps,
                final_rmse=result.trace.last().train_rmse,
            )
        )
        traces[variant] = result.trace
    config = {**source, **_cfg_comment(cfg)}
    csv_path = args.out + ".csv"
    _emit(csv_path, lambda f: report.write_benchmark(rows, f, config))
    if not args.no_plot:
        _render(args.out + ".png", report.render_benchmark, rows, traces)
    print(report.BENCHMARK_HEADER)
    for r in rows:
        print(f"{r.variant},{r.sec_per_iter:.4f},{r.iters},{r.final_rmse:.6f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _train_config(args)
    splits = _parse_splits(args.splits, args.budget)
    d, source = _load_or_gen(args)
    points = sweep_budget(d, cfg, args.budget, splits, timing=not args.no_timing)
    config = {**source, "budget": args.budget, **_cfg_comment(cfg)}
    _emit(args.out + ".csv", lambda f: report.write_sweep(points, f, config))
    if not args.no_plot:
        _render(args.out + ".png", report.render_sweep, points, args.budget)
    print(report.SWEEP_HEADER)
    for p in points:
        print(f"{p.outer},{p.inner},{p.final_rmse:.6f},{p.seconds:.3f}")
    return EXIT_OK


def cmd_schedule_dump(args) -> int:
    grid = _parse_grid(args.grid)
    print(format_plan(plan_step(grid[0], grid[1], args.step)))
    return EXIT_OK


def _add_hyper_flags(p: argparse.ArgumentParser, k_default: int) -> None:
    p.add_argument("--k", type=int, default=k_default, help="latent dimension")
    p.add_argument("--alpha", type=float, default=1e-4, help="learning rate")
    p.add_argument("--beta", type=float, default=1e-2, help="regularization weight")
    p.add_argument("--delta", type=float, default=1e-2,
                   help="early-stop threshold on per-step RMSE improvement")
    p.add_argument("--outer-steps", type=int, default=100)
    p.add_argument("--inner-schedule", default="const:1",
                   help="const:G | inc:PERIOD,CAP | dec:START | adaptive:START | converge:TOL")
    p.add_argument("--grid", default="4x4", help="block grid as IxJ")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def _add_synthetic_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--low", type=int, default=1)
    p.add_argument("--high", type=int, default=30)
    p.add_argument("--density", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockmf",
        description="Block-partitioned parallel matrix factorization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic ratings file")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--low", type=int, default=1)
    p.add_argument("--high", type=int, default=30)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train one variant and record its trace")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--variant", choices=sorted(VARIANTS), default="bgmf")
    _add_hyper_flags(p, k_default=30)
    p.add_argument("--test-fraction", type=float, default=0.2,
                   help="held-out fraction; 0 trains on everything")
    p.add_argument("--trace", help="write the per-step CSV here")
    p.add_argument("--model-out", help="write the trained factors here")
    p.add_argument("--no-timing", action="store_true",
                   help="record 0.0 seconds per step for byte-reproducible traces")
    p.add_argument("--no-early-stop", action="store_true",
                   help="always run the full outer-step budget")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="print a saved model's RMSE on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark",
                       help="run cmf, cpmf, and bgmf on one dataset and tabulate")
    p.add_argument("--data", help="ratings file; omitted means synthetic")
    p.add_argument("--format", choices=FORMATS, default="csv")
    _add_synthetic_flags(p)
    _add_hyper_flags(p, k_default=10)
    p.add_argument("--out", default="benchmark", help="output path prefix")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_benchmark, grid="8x8", workers=4)

    p = sub.add_parser("sweep",
                       help="split a fixed iteration budget between outer and inner")
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--splits", default="auto",
                   help="'auto' for every factorization, or e.g. 40x1,20x2,8x5")
    p.add_argument("--data", help="ratings file; omitted means synthetic")
    p.add_argument("--format", choices=FORMATS, default="csv")
    _add_synthetic_flags(p)
    _add_hyper_flags(p, k_default=10)
    p.add_argument("--out", default="sweep", help="output path prefix")
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep, grid="8x8")

    p = sub.add_parser("schedule-dump", help="print the batch plan for one step")
    p.add_argument("--grid", required=True, help="block grid as IxJ")
    p.add_argument("--step", type=int, default=0)
    p.set_defaults(func=cmd_schedule_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
