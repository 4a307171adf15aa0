"""Kernel backend selection.

The compiled extension is used when it imports; set ``KAKEYALAB_PURE=1`` to
force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if not os.environ.get("KAKEYALAB_PURE"):
    try:
        from . import _kernels_cy as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def raster_tubes(out, origin, h, centers, dirs, radius, margin=0.0, weights=None):
    import numpy as np

    # copies: the compiled kernel needs writable buffers
    centers = np.array(centers, dtype=float).reshape(-1, out.ndim)
    dirs = np.array(dirs, dtype=float).reshape(-1, out.ndim)
    if weights is None:
        weights = np.ones(len(centers))
    if len(centers) == 0:
        return out
    return kernels.raster_tubes(out, np.array(origin, float), float(h), centers, dirs,
                                float(radius), float(margin), np.asarray(weights, float))


def ball_sums(grid, starts, counts, stride, offsets):
    import numpy as np

    if not grid.flags.writeable or not grid.flags.c_contiguous:
        grid = np.array(grid, dtype=float, order="C")
    offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, grid.ndim)
    return kernels.ball_sums(grid, [int(s) for s in starts], [int(c) for c in counts],
                             int(stride), offsets)
