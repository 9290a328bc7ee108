"""Numba JIT loops behind the block kernel.

All functions release the GIL so the trainer's thread pool gets real
concurrency; the caller guarantees that concurrently running invocations
hold disjoint u/v slices. Divergence is signalled by returning the index
of the first entry whose residual went non-finite (-1 when clean) instead
of raising, since numba exceptions are expensive and lose context.
"""

import numba
import numpy as np

JIT = numba.njit(cache=True, nogil=True, fastmath=False)


@JIT
def block_sse(rows, cols, vals, u, v):
    """Sum of squared residuals over the given entries; no mutation."""
    k = u.shape[1]
    sse = 0.0
    for idx in range(rows.shape[0]):
        e = vals[idx]
        r = rows[idx]
        c = cols[idx]
        for g in range(k):
            e -= u[r, g] * v[c, g]
        sse += e * e
    return sse


@JIT
def sgd_sweeps(rows, cols, vals, u, v, alpha, beta, iters):
    """`iters` row-major SGD sweeps over the entries.

    Per entry: e = x - u_r.v_c, then u_r and v_c move together using the
    pre-update vectors. Returns (sse_before, sse_after, bad_entry,
    bad_iter); bad_entry is -1 unless a residual went non-finite, in which
    case the sweep stops there.
    """
    k = u.shape[1]
    sse_before = block_sse(rows, cols, vals, u, v)
    for it in range(iters):
        for idx in range(rows.shape[0]):
            r = rows[idx]
            c = cols[idx]
            e = vals[idx]
            for g in range(k):
                e -= u[r, g] * v[c, g]
            if not np.isfinite(e):
                return sse_before, np.nan, idx, it
            for g in range(k):
                ug = u[r, g]
                vg = v[c, g]
                u[r, g] = ug + alpha * (2.0 * e * vg - beta * ug)
                v[c, g] = vg + alpha * (2.0 * e * ug - beta * vg)
    sse_after = block_sse(rows, cols, vals, u, v)
    if not np.isfinite(sse_after):
        return sse_before, np.nan, rows.shape[0] - 1, iters - 1
    return sse_before, sse_after, -1, -1


@JIT
def sgd_converge(rows, cols, vals, u, v, alpha, beta, tol, cap):
    """SGD sweeps until the block's RMSE improvement drops below tol.

    Returns (sse_before, sse_after, iters_used, capped, bad_entry,
    bad_iter). capped is 1 when the sweep count hit `cap` before
    converging.
    """
    k = u.shape[1]
    count = rows.shape[0]
    sse_before = block_sse(rows, cols, vals, u, v)
    if count == 0:
        return 0.0, 0.0, 0, 0, -1, -1
    rmse_prev = np.sqrt(sse_before / count)
    sse = sse_before
    iters = 0
    while iters < cap:
        for idx in range(count):
            r = rows[idx]
            c = cols[idx]
            e = vals[idx]
            for g in range(k):
                e -= u[r, g] * v[c, g]
            if not np.isfinite(e):
                return sse_before, np.nan, iters + 1, 0, idx, iters
            for g in range(k):
                ug = u[r, g]
                vg = v[c, g]
                u[r, g] = ug + alpha * (2.0 * e * vg - beta * ug)
                v[c, g] = vg + alpha * (2.0 * e * ug - beta * vg)
        iters += 1
        sse = block_sse(rows, cols, vals, u, v)
        if not np.isfinite(sse):
            return sse_before, np.nan, iters, 0, count - 1, iters - 1
        rmse_now = np.sqrt(sse / count)
        if rmse_prev - rmse_now < tol:
            return sse_before, sse, iters, 0, -1, -1
        rmse_prev = rmse_now
    return sse_before, sse, iters, 1, -1, -1


@JIT
def gradient_steps(rows, cols, vals, u, v, alpha, beta, iters):
    """Full-batch block gradient updates, `iters` times.

    Each iteration accumulates the residual-weighted factor sums over
    observed entries, then moves every row of both slices at once:
    u' = u + alpha*(2*E.v - beta*u), v' = v + alpha*(2*E'.u - beta*v),
    both sides using pre-update values. Returns (sse_before, sse_after,
    bad_entry, bad_iter).
    """
    k = u.shape[1]
    sse_before = block_sse(rows, cols, vals, u, v)
    du = np.empty_like(u)
    dv = np.empty_like(v)
    for it in range(iters):
        du[:] = 0.0
        dv[:] = 0.0
        for idx in range(rows.shape[0]):
            r = rows[idx]
            c = cols[idx]
            e = vals[idx]
            for g in range(k):
                e -= u[r, g] * v[c, g]
            if not np.isfinite(e):
                return sse_before, np.nan, idx, it
            for g in range(k):
                du[r, g] += 2.0 * e * v[c, g]
                dv[c, g] += 2.0 * e * u[r, g]
        for r in range(u.shape[0]):
            for g in range(k):
                u[r, g] += alpha * (du[r, g] - beta * u[r, g])
        for c in range(v.shape[0]):
            for g in range(k):
                v[c, g] += alpha * (dv[c, g] - beta * v[c, g])
    sse_after = block_sse(rows, cols, vals, u, v)
    if not np.isfinite(sse_after):
        return sse_before, np.nan, rows.shape[0] - 1, iters - 1
    return sse_before, sse_after, -1, -1
