"""Seeded configurations and inequality checks for the broad-norm lemmas.

Each check returns ``(lhs, rhs, q)``; the inequality under test is
``lhs <= rhs + q`` with ``q`` three times an estimated quadrature error.
"""
import numpy as np

from kakeyalab.generators import GeneratorSpec, generate
from kakeyalab.geometry import Box, cap_decompose
from kakeyalab.norms import BroadParams, broad_norm, default_candidates, lp_norm, union

DELTA = 1 / 16
BETA = 0.25


def config(seed, count=24):
    # centres packed in a small ball so several caps share most delta-balls
    spec = GeneratorSpec("random_separated", 2, DELTA, count=count, seed=seed, extra={"center_radius": 0.15})
    f = generate(spec)
    caps = cap_decompose(f, BETA)
    cands = default_candidates(caps.centers, 2, 2, net_size=4, seed=seed)
    return f, caps, cands


def quad_slack(f, p, region, value):
    """``3 * |N_h^p - N_{h/2}^p|`` relative, scaled to ``value``."""
    a = lp_norm(f, p, region, f.delta / 4) ** p
    b = lp_norm(f, p, region, f.delta / 8) ** p
    return 3 * abs(a - b) / max(a, 1e-300) * value + 1e-12


def subadditivity(seed, p):
    f, caps, cands = config(seed)
    P = BroadParams(2, 1, p, BETA, cands)
    lo, hi = f.bounding_box()
    rng = np.random.default_rng(1000 + seed)
    cut = rng.uniform(0.3, 0.7) * (hi - lo) + lo
    U1 = Box(lo, np.array([cut[0] + 0.1, hi[1]]))
    U2 = Box(np.array([cut[0] - 0.1, lo[1]]), hi)
    lhs = broad_norm(f, union(U1, U2), P, caps=caps).value ** p
    rhs = broad_norm(f, U1, P, caps=caps).value ** p + broad_norm(f, U2, P, caps=caps).value ** p
    return lhs, rhs, quad_slack(f, p, Box(lo, hi), rhs)


def triangle(seed, p):
    f, caps, cands = config(seed)
    rng = np.random.default_rng(2000 + seed)
    mask = rng.uniform(size=len(f)) < 0.5
    mask[0], mask[-1] = True, False
    f1, f2 = f.subset(np.flatnonzero(mask)), f.subset(np.flatnonzero(~mask))
    lo, hi = f.bounding_box()
    U = Box(lo, hi)
    P1 = BroadParams(2, 1, p, BETA, cands)
    lhs = broad_norm(f, U, P1.with_(A=2), caps=caps).value ** p
    rhs = 2 ** (p - 1) * (
        broad_norm(f1, U, P1).value ** p + broad_norm(f2, U, P1).value ** p
    )
    return lhs, rhs, quad_slack(f, p, U, rhs)


def log_convexity(seed, p):
    f, caps, cands = config(seed)
    # 1/p = (1 - theta)/p0 + theta/p1 with theta = 1/2
    p0, p1 = {1.5: (1.0, 3.0), 2.0: (1.5, 3.0)}[p]
    theta = 0.5
    lo, hi = f.bounding_box()
    U = Box(lo, hi)
    P = BroadParams(2, 1, p, BETA, cands)
    lhs = broad_norm(f, U, P.with_(A=2), caps=caps).value
    b0 = broad_norm(f, U, P.with_(p=p0), caps=caps).value
    b1 = broad_norm(f, U, P.with_(p=p1), caps=caps).value
    rhs = b0 ** (1 - theta) * b1 ** theta
    return lhs, rhs, quad_slack(f, p, U, rhs ** p) ** (1 / p)


LEMMAS = {"subadditivity": subadditivity, "triangle": triangle, "log_convexity": log_convexity}
