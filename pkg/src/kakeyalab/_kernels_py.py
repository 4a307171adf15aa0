"""Pure numpy implementations of the hot loops.

These are the reference versions; ``_kernels_cy`` must agree with them
bit-for-bit on integer-weighted input.
"""
from __future__ import annotations

import numpy as np

_EPS = 1e-12


def _tube_window(origin, h, shape, center, direction, radius, margin):
    n = len(shape)
    lo_idx, hi_idx = [], []
    for i in range(n):
        vi = abs(direction[i])
        ext = 0.5 * vi + radius * np.sqrt(max(0.0, 1.0 - vi * vi)) + margin + h
        lo = int(np.floor((center[i] - ext - origin[i]) / h))
        hi = int(np.ceil((center[i] + ext - origin[i]) / h)) + 1
        lo_idx.append(max(lo, 0))
        hi_idx.append(min(hi, shape[i]))
    return lo_idx, hi_idx


def raster_tubes(out, origin, h, centers, dirs, radius, margin, weights):
    """Add ``weights[i]`` at every cell whose midpoint lies in ``N_margin(T_i)``.

    ``T_i`` is the closed cylinder of half-height 1/2 and radius ``radius``
    about ``centers[i] + t dirs[i]``.
    """
    shape = out.shape
    n = out.ndim
    origin = np.asarray(origin, dtype=float)
    for c, v, w in zip(centers, dirs, weights):
        lo, hi = _tube_window(origin, h, shape, c, v, radius, margin)
        if any(a >= b for a, b in zip(lo, hi)):
            continue
        axes = [origin[i] + (np.arange(lo[i], hi[i]) + 0.5) * h - c[i] for i in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        along = sum(mesh[i] * v[i] for i in range(n))
        sq = sum(m * m for m in mesh)
        perp = np.sqrt(np.maximum(sq - along * along, 0.0))
        if margin > 0:
            da = np.maximum(np.abs(along) - 0.5, 0.0)
            dr = np.maximum(perp - radius, 0.0)
            mask = da * da + dr * dr <= margin * margin + _EPS
        else:
            mask = (np.abs(along) <= 0.5 + _EPS) & (perp <= radius + _EPS)
        window = tuple(slice(a, b) for a, b in zip(lo, hi))
        out[window] += w * mask
    return out


def ball_sums(grid, starts, counts, stride, offsets):
    """Sum ``grid`` over ``offsets`` around each lattice index.

    Lattice point ``j`` (multi-index) sits at ``starts + j * stride``;
    ``counts`` gives the lattice extent per axis.  Out-of-range cells count
    as zero.
    """
    n = grid.ndim
    pad = int(np.max(np.abs(offsets))) if len(offsets) else 0
    padded = np.pad(grid, pad)
    out = np.zeros(tuple(counts), dtype=float)
    for off in offsets:
        sl = tuple(
            slice(starts[i] + off[i] + pad, starts[i] + off[i] + pad + stride * (counts[i] - 1) + 1, stride)
            for i in range(n)
        )
        out += padded[sl]
    return out
