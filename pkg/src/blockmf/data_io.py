"""Dataset ingestion, synthetic generation, splitting, and persistence.

All randomness uses numpy's default PCG64 generator seeded explicitly, so
every artifact is reproducible across platforms from its seed alone.
Text outputs are newline-terminated ASCII; floats are written with repr,
which round-trips doubles exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .core import (
    ConvergenceTrace,
    DataError,
    FactorModel,
    RatingsDataset,
    TraceStep,
    validate_dataset,
)

log = logging.getLogger(__name__)

FORMATS = ("ml-100k", "ml-1m", "ml-20m", "jester", "csv")

# Rating scale per format, for out-of-scale warnings (values are kept).
_SCALES = {"ml-100k": (1.0, 5.0), "ml-1m": (1.0, 5.0), "ml-20m": (0.5, 5.0),
           "jester": (-10.0, 10.0)}

_JESTER_MISSING = 99.0


@dataclass(frozen=True)
class SyntheticSpec:
    """Uniform-integer synthetic dataset description."""

    n: int
    m: int
    low: int
    high: int
    seed: int
    density: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"dimensions must be >= 1, got {self.n}x{self.m}")
        if self.low > self.high:
            raise ValueError(f"low must be <= high, got [{self.low}, {self.high}]")
        if not 0 < self.density <= 1:
            raise ValueError(f"density must be in (0, 1], got {self.density}")


def gen_synthetic(spec: SyntheticSpec) -> RatingsDataset:
    """Deterministic uniform-integer dataset per spec.

    density 1.0 fills every cell in row-major order; lower densities sample
    that many cells uniformly without replacement (still row-major order).
    The same spec always yields the identical dataset.
    """
    rng = np.random.default_rng(spec.seed)
    total = spec.n * spec.m
    if spec.density == 1.0:
        rows = np.repeat(np.arange(spec.n, dtype=np.int64), spec.m)
        cols = np.tile(np.arange(spec.m, dtype=np.int64), spec.n)
        count = total
    else:
        count = max(int(round(total * spec.density)), 1)
        flat = rng.choice(total, size=count, replace=False)
        flat.sort()
        rows = flat // spec.m
        cols = flat % spec.m
    values = rng.integers(spec.low, spec.high + 1, size=count).astype(np.float64)
    return RatingsDataset(spec.n, spec.m, rows, cols, values,
                          density_hint=count / total)


def _parse_lines(
    lines: Iterable[str], path: str, sep: str | None, skip_header: bool
) -> tuple[list[int], list[int], list[float]]:
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if skip_header:
            skip_header = False
            continue
        fields = line.split(sep)
        if len(fields) < 3:
            raise DataError(f"{path}:{lineno}: expected at least 3 fields, got {len(fields)}")
        try:
            rows.append(int(fields[0]))
            cols.append(int(fields[1]))
            vals.append(float(fields[2]))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    return rows, cols, vals


def _scan_shape_comment(path: str) -> tuple[int, int] | None:
    with open(path, "r", encoding="ascii") as f:
        for line in f:
            if not line.startswith("#"):
                return None
            parts = line[1:].split()
            if len(parts) == 3 and parts[0] == "shape:":
                return int(parts[1]), int(parts[2])
    return None


def _load_jester(path: str) -> RatingsDataset:
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    width = 0
    with open(path, "r", encoding="ascii") as f:
        user = 0
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            width = max(width, len(cells))
            for j, cell in enumerate(cells):
                try:
                    value = float(cell)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
                if value == _JESTER_MISSING:
                    continue
                rows.append(user)
                cols.append(j)
                vals.append(value)
            user += 1
    if user == 0:
        raise DataError(f"{path}: empty file")
    return RatingsDataset(user, width, np.array(rows), np.array(cols), np.array(vals))


def load(path: str, fmt: str) -> RatingsDataset:
    """Parse a ratings file into a validated RatingsDataset.

    ml-100k: tab-separated `user item rating timestamp`, 1-based ids.
    ml-1m: `::`-separated, 1-based ids. ml-20m: comma-separated with a
    header line, 1-based ids. jester: dense comma-separated rows, cell
    value 99 meaning missing. csv: `row,col,value` 0-based triples, with
    an optional `# shape: n m` comment declaring dimensions.

    Dimensions default to max index + 1. Values outside the format's usual
    rating scale are kept and counted in a single warning.
    """
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    if fmt == "jester":
        d = _load_jester(path)
    else:
        sep = {"ml-100k": "\t", "ml-1m": "::", "ml-20m": ",", "csv": ","}[fmt]
        one_based = fmt.startswith("ml-")
        with open(path, "r", encoding="ascii") as f:
            rows, cols, vals = _parse_lines(f, path, sep, skip_header=fmt == "ml-20m")
        if not rows:
            raise DataError(f"{path}: empty file")
        r = np.array(rows, dtype=np.int64)
        c = np.array(cols, dtype=np.int64)
        v = np.array(vals)
        if one_based:
            r -= 1
            c -= 1
        n, m = int(r.max()) + 1, int(c.max()) + 1
        if fmt == "csv":
            declared = _scan_shape_comment(path)
            if declared is not None:
                n, m = declared
        d = RatingsDataset(n, m, r, c, v)
    scale = _SCALES.get(fmt)
    if scale is not None:
        outside = int(np.count_nonzero((d.values < scale[0]) | (d.values > scale[1])))
        if outside:
            log.warning(
                "%s: %d values outside the usual %s scale [%g, %g]; kept",
                path, outside, fmt, scale[0], scale[1],
            )
    validate_dataset(d)
    return d


def save_dataset(d: RatingsDataset, f: IO[str]) -> None:
    """Write csv-format triples with a `# shape` comment preserving n and m."""
    f.write(f"# shape: {d.n} {d.m}\n")
    for r, c, v in zip(d.rows, d.cols, d.values):
        f.write(f"{r},{c},{float(v)!r}\n")


def split(
    d: RatingsDataset, test_fraction: float, seed: int
) -> tuple[RatingsDataset, RatingsDataset]:
    """Disjoint train/test split; test gets round(len * fraction) entries.

    Entries are chosen by a seeded permutation, so the same arguments
    always produce the same split. Both halves keep the global dimensions.
    """
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    count = len(d)
    n_test = int(round(count * test_fraction))
    perm = np.random.default_rng(seed).permutation(count)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    def take(idx: np.ndarray) -> RatingsDataset:
        return RatingsDataset(d.n, d.m, d.rows[idx], d.cols[idx], d.values[idx])

    return take(train_idx), take(test_idx)


def save_model(model: FactorModel, f: IO[str]) -> None:
    """Text dump: header `n m k`, then n rows of u and m rows of v."""
    if model.k < 1:
        raise ValueError("cannot save a model with k < 1")
    f.write(f"{model.u.shape[0]} {model.v.shape[0]} {model.k}\n")
    for mat in (model.u, model.v):
        for row in mat:
            f.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_model(path: str) -> FactorModel:
    """Inverse of save_model; bit-exact round trip."""
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().split()
        if len(header) != 3:
            raise DataError(f"{path}: malformed header, expected 'n m k'")
        try:
            n, m, k = (int(x) for x in header)
        except ValueError:
            raise DataError(f"{path}: malformed header, expected 'n m k'") from None
        if n < 1 or m < 1 or k < 1:
            raise DataError(f"{path}: header dimensions must be >= 1")
        body = f.read().split("\n")
    rows = [line for line in body if line.strip()]
    if len(rows) != n + m:
        raise DataError(f"{path}: expected {n + m} factor rows, found {len(rows)}")

    def parse(lines: list[str], width: int, what: str) -> np.ndarray:
        out = np.empty((len(lines), width))
        for i, line in enumerate(lines):
            fields = line.split()
            if len(fields) != width:
                raise DataError(f"{path}: {what} row {i} has {len(fields)} values, expected {width}")
            out[i] = [float(x) for x in fields]
        return out

    return FactorModel(parse(rows[:n], k, "u"), parse(rows[n:], k, "v"))


TRACE_HEADER = "step,train_rmse,test_rmse,seconds,inner_iters"


def write_trace(trace: ConvergenceTrace, f: IO[str], config: dict | None = None) -> None:
    """Trace CSV: a `# config:` provenance comment, header, one row per step.

    Floats use repr so identical runs produce identical bytes; an absent
    test RMSE is an empty field.
    """
    if config:
        f.write("# config: " + " ".join(f"{k}={v}" for k, v in config.items()) + "\n")
    f.write(TRACE_HEADER + "\n")
    for s in trace:
        test = repr(float(s.test_rmse)) if s.test_rmse is not None else ""
        f.write(
            f"{s.step},{float(s.train_rmse)!r},{test},"
            f"{float(s.seconds)!r},{s.inner_iters}\n"
        )


def read_trace(path: str) -> tuple[dict, ConvergenceTrace]:
    """Parse a trace CSV back into (config dict, ConvergenceTrace)."""
    config: dict[str, str] = {}
    trace = ConvergenceTrace()
    with open(path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if line.startswith("# config:"):
                for pair in line[len("# config:"):].split():
                    key, _, value = pair.partition("=")
                    config[key] = value
                continue
            if not line or line.startswith("#") or line == TRACE_HEADER:
                continue
            fields = line.split(",")
            if len(fields) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 fields")
            try:
                trace.append(
                    TraceStep(
                        step=int(fields[0]),
                        train_rmse=float(fields[1]),
                        test_rmse=float(fields[2]) if fields[2] else None,
                        seconds=float(fields[3]),
                        inner_iters=int(fields[4]),
                    )
                )
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return config, trace
