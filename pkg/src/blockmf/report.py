"""Figure rendering and result tables for the CLI's report outputs.

Every plot goes to a file next to its CSV (headless Agg backend, no
display), so a training or benchmark run leaves both the delimited data
and a rendered view of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import ConvergenceTrace
from .trainer import SweepPoint

plt.rcParams["figure.dpi"] = 120
plt.rcParams["savefig.bbox"] = "tight"
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3
plt.rcParams["lines.linewidth"] = 1.8
plt.rcParams["font.size"] = 10


@dataclass(frozen=True)
class BenchmarkRow:
    """One variant's outcome row: timing, steps, final error."""

    variant: str
    sec_per_iter: float
    iters: int
    final_rmse: float


BENCHMARK_HEADER = "variant,sec_per_iter,iters,final_rmse"
SWEEP_HEADER = "outer,inner,final_rmse,seconds"


def write_benchmark(rows: Sequence[BenchmarkRow], f: IO[str], config: dict | None = None) -> None:
    if config:
        f.write("# config: " + " ".join(f"{k}={v}" for k, v in config.items()) + "\n")
    f.write(BENCHMARK_HEADER + "\n")
    for r in rows:
        f.write(f"{r.variant},{float(r.sec_per_iter)!r},{r.iters},{float(r.final_rmse)!r}\n")


def write_sweep(points: Sequence[SweepPoint], f: IO[str], config: dict | None = None) -> None:
    if config:
        f.write("# config: " + " ".join(f"{k}={v}" for k, v in config.items()) + "\n")
    f.write(SWEEP_HEADER + "\n")
    for p in points:
        f.write(f"{p.outer},{p.inner},{float(p.final_rmse)!r},{float(p.seconds)!r}\n")


def _save(fig, path: str) -> None:
    fig.savefig(path)
    plt.close(fig)


def render_trace(traces: dict[str, ConvergenceTrace], path: str) -> None:
    """RMSE against outer step, one solid line per labelled trace.

    Test RMSE, where present, is the dashed line in the same color.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, trace in traces.items():
        steps = [s.step for s in trace]
        (line,) = ax.plot(steps, [s.train_rmse for s in trace], label=f"{label} train")
        if any(s.test_rmse is not None for s in trace):
            ax.plot(
                steps,
                [s.test_rmse for s in trace],
                linestyle="--",
                color=line.get_color(),
                label=f"{label} test",
            )
    ax.set_xlabel("outer step")
    ax.set_ylabel("RMSE")
    ax.legend()
    _save(fig, path)


def render_benchmark(
    rows: Sequence[BenchmarkRow], traces: dict[str, ConvergenceTrace], path: str
) -> None:
    """Two panels: seconds per outer step by variant, and convergence curves."""
    fig, (ax_time, ax_conv) = plt.subplots(1, 2, figsize=(11, 4.5))
    variants = [r.variant for r in rows]
    ax_time.bar(variants, [r.sec_per_iter for r in rows], color="tab:blue")
    ax_time.set_ylabel("seconds per outer step")
    for label, trace in traces.items():
        ax_conv.plot([s.step for s in trace], [s.train_rmse for s in trace], label=label)
    ax_conv.set_xlabel("outer step")
    ax_conv.set_ylabel("train RMSE")
    ax_conv.legend()
    _save(fig, path)


def render_sweep(points: Sequence[SweepPoint], budget: int, path: str) -> None:
    """Final RMSE for each (outer, inner) split of the fixed budget."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [p.outer for p in points]
    ax.plot(xs, [p.final_rmse for p in points], marker="o")
    for p in points:
        ax.annotate(
            f"{p.outer}x{p.inner}",
            (p.outer, p.final_rmse),
            textcoords="offset points",
            xytext=(4, 4),
            fontsize=8,
        )
    ax.set_xscale("log")
    ax.set_xlabel(f"outer steps (inner = {budget} / outer)")
    ax.set_ylabel("final train RMSE")
    _save(fig, path)
