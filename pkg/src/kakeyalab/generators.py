"""Seeded tube configurations with post-construction contract checks."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .geometry import (
    Ball,
    TubeFamily,
    Variety,
    direction_separated,
    normalize,
    tangency_check,
    variety_from_dict,
)
from .geometry.caps import _fibonacci_hemisphere

KINDS = ("bush", "random_separated", "parallel_slab", "tangent_to_variety", "two_cap_transversal")


class GeneratorError(ValueError):
    """Infeasible request or failed post-construction contract."""


@dataclass
class GeneratorSpec:
    kind: str
    n: int
    delta: float
    count: Optional[int] = None
    seed: int = 0
    variety: Optional[dict] = None
    ball_center: Optional[list] = None
    ball_radius: Optional[float] = None
    beta: float = 0.25
    c_tang: float = 0.1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeneratorError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.n not in (2, 3):
            raise GeneratorError("generators support n in {2, 3}")
        if not 0 < self.delta <= 0.1:
            raise GeneratorError("delta must lie in (0, 1/10]")
        if isinstance(self.variety, Variety):
            self.variety = self.variety.to_dict()

    def with_(self, **kw) -> "GeneratorSpec":
        d = self.to_dict()
        d.update(kw)
        return GeneratorSpec(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        return cls(**d)


# -- direction sets -------------------------------------------------------------


def _angles_2d(spacing: float) -> np.ndarray:
    m = int(math.floor(math.pi / spacing))
    return np.arange(m) * math.pi / m


@lru_cache(maxsize=16)
def _separated_3d(spacing: float) -> np.ndarray:
    # Fibonacci seeding at a tenth of the spacing, then greedy thinning
    fine = spacing / 10
    cand = _fibonacci_hemisphere(int(math.ceil(2 * math.pi / fine ** 2)))
    thresh = math.cos(spacing)
    keep = []
    blocked = np.zeros(len(cand), dtype=bool)
    for i in range(len(cand)):
        if blocked[i]:
            continue
        keep.append(i)
        blocked |= np.abs(cand @ cand[i]) > thresh
    return cand[keep]


def separated_directions(n: int, spacing: float) -> np.ndarray:
    """Maximal ``spacing``-separated set of lines (as unit vectors)."""
    if n == 2:
        th = _angles_2d(spacing)
        return np.column_stack([np.cos(th), np.sin(th)])
    return _separated_3d(float(spacing)).copy()


def _choose(rng, dirs, count, what):
    if count is None:
        return dirs
    if count > len(dirs):
        raise GeneratorError(f"{what}: count {count} exceeds the {len(dirs)} available separated directions")
    idx = np.sort(rng.choice(len(dirs), size=count, replace=False))
    return dirs[idx]


def _uniform_ball(rng, count, n, radius=1.0):
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(0, 1, count) ** (1.0 / n)
    return g * r[:, None]


# -- kinds ------------------------------------------------------------------------


def _bush(spec, rng):
    # directions 2 delta apart through a common point
    dirs = separated_directions(spec.n, 2 * spec.delta)
    if spec.count is not None:
        if spec.count > len(dirs):
            raise GeneratorError(f"bush: count {spec.count} exceeds {len(dirs)}")
        idx = np.round(np.linspace(0, len(dirs), spec.count, endpoint=False)).astype(int)
        dirs = dirs[idx]
    centers = np.zeros_like(dirs)
    return TubeFamily(centers, normalize(dirs), spec.delta, spec.n)


def _random_separated(spec, rng):
    dirs = _choose(rng, separated_directions(spec.n, spec.delta), spec.count, "random_separated")
    centers = _uniform_ball(rng, len(dirs), spec.n, spec.extra.get("center_radius", 1.0))
    return TubeFamily(centers, normalize(dirs), spec.delta, spec.n)


def _parallel_slab(spec, rng):
    count = spec.count if spec.count is not None else int(1 / (2 * spec.delta))
    v = normalize(rng.standard_normal(spec.n))
    w = rng.standard_normal(spec.n)
    w = normalize(w - (w @ v) * v)
    offsets = rng.uniform(-0.5, 0.5, count)
    centers = offsets[:, None] * w
    return TubeFamily(centers, np.tile(v, (count, 1)), spec.delta, spec.n)


def _tangent(spec, rng):
    if spec.variety is None or spec.ball_radius is None:
        raise GeneratorError("tangent_to_variety needs a variety and a ball")
    Z = variety_from_dict(spec.variety)
    x0 = np.zeros(spec.n) if spec.ball_center is None else np.asarray(spec.ball_center, dtype=float)
    B = Ball(x0, spec.ball_radius)
    count = spec.count if spec.count is not None else 20
    centers, dirs = [], []
    for _ in range(count):
        p = x0 + _uniform_ball(rng, 1, spec.n, spec.ball_radius / 2)[0]
        z = Z.project(p[None])[0]
        if np.linalg.norm(z - x0) > spec.ball_radius:
            raise GeneratorError("variety does not pass through the ball")
        tb = Z.tangent_basis(z)
        if len(tb) == 0:
            raise GeneratorError("variety has no tangent directions")
        v = normalize(rng.standard_normal(len(tb)) @ tb)
        normal = rng.standard_normal(spec.n)
        normal -= tb.T @ (tb @ normal)
        if np.linalg.norm(normal) > 1e-12:
            normal = normalize(normal) * rng.uniform(0, spec.delta / 2)
        else:
            normal = np.zeros(spec.n)
        centers.append(z + normal)
        dirs.append(v)
    return TubeFamily(centers, normalize(dirs), spec.delta, spec.n), Z, B


def _two_cap(spec, rng):
    per = spec.count if spec.count is not None else 8
    half = spec.beta / 2
    w1 = normalize(rng.standard_normal(spec.n))
    w2 = rng.standard_normal(spec.n)
    w2 = normalize(w2 - (w2 @ w1) * w1)
    all_dirs = separated_directions(spec.n, spec.delta)
    groups = []
    for w in (w1, w2):
        ang = np.arccos(np.clip(np.abs(all_dirs @ w), 0, 1))
        pool = all_dirs[ang <= half]
        if len(pool) < per:
            raise GeneratorError(f"two_cap_transversal: only {len(pool)} separated directions in a cap")
        groups.append(_choose(rng, pool, per, "two_cap_transversal"))
    dirs = np.vstack(groups)
    centers = _uniform_ball(rng, len(dirs), spec.n, 0.25)
    return TubeFamily(centers, normalize(dirs), spec.delta, spec.n)


def generate(spec: GeneratorSpec, check: bool = True) -> TubeFamily:
    """Build the family described by ``spec`` and verify its contract."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "bush":
        f = _bush(spec, rng)
    elif spec.kind == "random_separated":
        f = _random_separated(spec, rng)
    elif spec.kind == "parallel_slab":
        f = _parallel_slab(spec, rng)
    elif spec.kind == "two_cap_transversal":
        f = _two_cap(spec, rng)
    else:
        f, Z, B = _tangent(spec, rng)
        if check:
            for i, t in enumerate(f):
                res = tangency_check(t, Z, B, spec.c_tang)
                if not res:
                    raise GeneratorError(f"tangent_to_variety: tube {i} fails the tangency check ({res})")
        return f
    if check and spec.kind in ("bush", "random_separated", "two_cap_transversal"):
        if not direction_separated(f):
            raise GeneratorError(f"{spec.kind}: generated directions are not delta-separated")
    return f


def single_tube(n: int, delta: float) -> TubeFamily:
    e = np.zeros(n)
    e[0] = 1.0
    return TubeFamily(np.zeros((1, n)), e[None], delta, n)


__all__ = ["GeneratorSpec", "GeneratorError", "KINDS", "generate", "separated_directions", "single_tube"]
