"""Numba kernels for grid traversal and Kaczmarz sweeps.

These are the two inner loops that dominate runtime (hundreds of thousands of
ray-grid traversals per system, millions of row projections per solve).  All
kernels use strict IEEE arithmetic (no fastmath) so results are bit-reproducible
across runs.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def traverse_segment(ox, oy, n, d, ax, ay, bx, by, out_idx, out_w):
    """Per-cell intersection lengths of segment (a, b) with an n x n grid.

    Writes (linear cell index, length) pairs into out_idx/out_w in traversal
    order and returns the entry count.  Crossing parameters are recomputed from
    grid-line positions (not accumulated), and each cell is identified from the
    midpoint of its parameter interval, which keeps the result symmetric under
    segment reversal and additive under splitting.  Intervals shorter than
    1e-12*d (corner grazes) are dropped.

    Output arrays must hold at least 2*n + 4 entries.
    """
    dx = bx - ax
    dy = by - ay
    seg_len = np.sqrt(dx * dx + dy * dy)
    if seg_len == 0.0:
        return 0
    hi_x = ox + n * d
    hi_y = oy + n * d

    # clip parameter range to the grid box (Liang-Barsky)
    t0 = 0.0
    t1 = 1.0
    if dx == 0.0:
        if ax < ox or ax > hi_x:
            return 0
    else:
        ta = (ox - ax) / dx
        tb = (hi_x - ax) / dx
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    if dy == 0.0:
        if ay < oy or ay > hi_y:
            return 0
    else:
        ta = (oy - ay) / dy
        tb = (hi_y - ay) / dy
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    if t1 <= t0:
        return 0

    # vertical grid-line crossings strictly inside (t0, t1), ordered by t
    nx_cross = 0
    tx = np.empty(n + 1)
    if dx != 0.0:
        x_enter = ax + t0 * dx
        x_exit = ax + t1 * dx
        if dx > 0.0:
            k_lo = int(np.floor((x_enter - ox) / d)) + 1
            k_hi = int(np.ceil((x_exit - ox) / d)) - 1
            for k in range(k_lo, k_hi + 1):
                t = (ox + k * d - ax) / dx
                if t0 < t < t1:
                    tx[nx_cross] = t
                    nx_cross += 1
        else:
            k_lo = int(np.ceil((x_enter - ox) / d)) - 1
            k_hi = int(np.floor((x_exit - ox) / d)) + 1
            for k in range(k_lo, k_hi - 1, -1):
                t = (ox + k * d - ax) / dx
                if t0 < t < t1:
                    tx[nx_cross] = t
                    nx_cross += 1
    ny_cross = 0
    ty = np.empty(n + 1)
    if dy != 0.0:
        y_enter = ay + t0 * dy
        y_exit = ay + t1 * dy
        if dy > 0.0:
            k_lo = int(np.floor((y_enter - oy) / d)) + 1
            k_hi = int(np.ceil((y_exit - oy) / d)) - 1
            for k in range(k_lo, k_hi + 1):
                t = (oy + k * d - ay) / dy
                if t0 < t < t1:
                    ty[ny_cross] = t
                    ny_cross += 1
        else:
            k_lo = int(np.ceil((y_enter - oy) / d)) - 1
            k_hi = int(np.floor((y_exit - oy) / d)) + 1
            for k in range(k_lo, k_hi - 1, -1):
                t = (oy + k * d - ay) / dy
                if t0 < t < t1:
                    ty[ny_cross] = t
                    ny_cross += 1

    # merge the two sorted crossing lists and emit one entry per interval
    w_min = 1e-12 * d
    count = 0
    ix_ptr = 0
    iy_ptr = 0
    t_prev = t0
    while True:
        if ix_ptr < nx_cross and (iy_ptr >= ny_cross or tx[ix_ptr] <= ty[iy_ptr]):
            t_next = tx[ix_ptr]
            ix_ptr += 1
        elif iy_ptr < ny_cross:
            t_next = ty[iy_ptr]
            iy_ptr += 1
        else:
            t_next = t1
        w = (t_next - t_prev) * seg_len
        if w > w_min:
            tm = 0.5 * (t_prev + t_next)
            ci = int(np.floor((ax + tm * dx - ox) / d))
            cj = int(np.floor((ay + tm * dy - oy) / d))
            if ci < 0:
                ci = 0
            elif ci >= n:
                ci = n - 1
            if cj < 0:
                cj = 0
            elif cj >= n:
                cj = n - 1
            out_idx[count] = cj * n + ci
            out_w[count] = w
            count += 1
        t_prev = t_next
        if t_next >= t1:
            break
    return count


@njit(cache=True)
def kaczmarz_sweep(indptr, indices, weights, times, row_norms_sq, x, relaxation):
    """One cyclic pass of row projections over a CSR system, updating x in place."""
    r = times.shape[0]
    for j in range(r):
        start = indptr[j]
        end = indptr[j + 1]
        dot = 0.0
        for k in range(start, end):
            dot += weights[k] * x[indices[k]]
        coef = relaxation * (times[j] - dot) / row_norms_sq[j]
        for k in range(start, end):
            x[indices[k]] += coef * weights[k]
