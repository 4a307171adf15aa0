import os
import subprocess
import sys

import numpy as np
import pytest

from kakeyalab import _kernels_py

cy = pytest.importorskip("kakeyalab._kernels_cy")


@pytest.mark.parametrize("n", [2, 3])
def test_raster_backends_agree(n):
    rng = np.random.default_rng(n)
    shape = (80,) * n if n == 2 else (40,) * n
    origin = -np.ones(n)
    h = 2.0 / shape[0]
    c = rng.uniform(-0.8, 0.8, (30, n))
    d = rng.standard_normal((30, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    w = rng.uniform(0.5, 2, 30)
    for margin in (0.0, 0.03):
        a = _kernels_py.raster_tubes(np.zeros(shape), origin, h, c, d, 0.05, margin, w)
        b = cy.raster_tubes(np.zeros(shape), origin, h, c.copy(), d.copy(), 0.05, margin, w.copy())
        assert np.array_equal(a, b)


@pytest.mark.parametrize("n", [2, 3])
def test_ball_sums_backends_agree(n):
    rng = np.random.default_rng(10 + n)
    grid = rng.uniform(size=(30,) * n)
    r = np.arange(-2, 3)
    mesh = np.stack(np.meshgrid(*([r] * n), indexing="ij"), -1).reshape(-1, n)
    offsets = mesh[np.sum(mesh ** 2, axis=1) <= 4].astype(np.int64)
    starts, counts = [3] * n, [8] * n
    a = _kernels_py.ball_sums(grid, starts, counts, 3, offsets)
    b = cy.ball_sums(grid, starts, counts, 3, offsets)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_pure_switch_gives_same_norm():
    code = ("from kakeyalab import BACKEND; from kakeyalab.generators import *; from kakeyalab.norms import lp_norm;"
            "f = generate(GeneratorSpec('random_separated', 2, 0.02, count=40, seed=3));"
            "print(BACKEND, repr(lp_norm(f, 2.0)))")
    outs = {}
    for pure in ("", "1"):
        env = dict(os.environ, KAKEYALAB_PURE=pure)
        outs[pure] = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                    text=True, check=True).stdout.split()
    assert outs[""][0] == "cython" and outs["1"][0] == "python"
    assert outs[""][1] == outs["1"][1]
