"""Rotating conflict-free block schedule.

One outer step processes every block exactly once, grouped into batches
whose blocks share no block-row and no block-column, so their factor
slices are disjoint and they can run concurrently. Batch 0 of step 0 is
the main diagonal; each later batch shifts every column's active block
one block-row downward with wraparound, and each later step starts one
diagonal further down. The same-row waiting rule becomes a barrier
between batches.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Batch:
    """Blocks safe to factorize concurrently: distinct rows, distinct cols."""

    blocks: tuple[tuple[int, int], ...]

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class StepPlan:
    """Ordered batches covering the whole grid exactly once."""

    grid_i: int
    grid_j: int
    batches: tuple[Batch, ...]

    def __iter__(self):
        return iter(self.batches)

    def __len__(self) -> int:
        return len(self.batches)


def plan_step(grid_i: int, grid_j: int, step: int) -> StepPlan:
    """Conflict-free batches for one outer step of an I x J grid.

    Wave t assigns column j the block-row (j + step + t) mod I; as t runs
    0..I-1 every column meets every block-row exactly once. For square
    grids each wave is already conflict-free (I batches of J blocks). When
    J > I a wave repeats block-rows, so it is split greedily: columns in
    ascending order, each block placed in the first sub-batch whose rows
    it does not collide with.
    """
    if grid_i < 1 or grid_j < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {grid_i}x{grid_j}")
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    batches: list[Batch] = []
    for t in range(grid_i):
        wave = [((j + step + t) % grid_i, j) for j in range(grid_j)]
        if grid_j <= grid_i:
            # distinct j < J <= I give distinct rows mod I
            batches.append(Batch(tuple(wave)))
            continue
        subs: list[list[tuple[int, int]]] = []
        for block in wave:
            for sub in subs:
                if all(block[0] != other[0] for other in sub):
                    sub.append(block)
                    break
            else:
                subs.append([block])
        batches.extend(Batch(tuple(sub)) for sub in subs)
    return StepPlan(grid_i=grid_i, grid_j=grid_j, batches=tuple(batches))


def validate_plan(plan: StepPlan, grid_i: int, grid_j: int) -> None:
    """Check exact cover and per-batch row/column distinctness.

    Raises ValueError naming the first violating batch and coordinate.
    """
    seen: set[tuple[int, int]] = set()
    for b, batch in enumerate(plan):
        rows_in_batch: set[int] = set()
        cols_in_batch: set[int] = set()
        for bi, bj in batch:
            if not (0 <= bi < grid_i and 0 <= bj < grid_j):
                raise ValueError(
                    f"batch {b}: block ({bi}, {bj}) outside {grid_i}x{grid_j} grid"
                )
            if (bi, bj) in seen:
                raise ValueError(f"batch {b}: block ({bi}, {bj}) scheduled twice")
            seen.add((bi, bj))
            if bi in rows_in_batch:
                raise ValueError(f"batch {b}: block-row {bi} appears twice")
            if bj in cols_in_batch:
                raise ValueError(f"batch {b}: block-col {bj} appears twice")
            rows_in_batch.add(bi)
            cols_in_batch.add(bj)
    if len(seen) != grid_i * grid_j:
        missing = next(
            (bi, bj)
            for bi in range(grid_i)
            for bj in range(grid_j)
            if (bi, bj) not in seen
        )
        raise ValueError(f"plan never schedules block {missing}")


def format_plan(plan: StepPlan) -> str:
    """One batch per line, blocks as (bi,bj) pairs."""
    return "\n".join(
        " ".join(f"({bi},{bj})" for bi, bj in batch) for batch in plan
    )
