"""Sampled lower bounds for the linear and polynomial Wolff axiom constants.

A family satisfies the linear axiom with constant N if every rectangular
box E contains at most ``N |E| / delta^(n-1)`` tubes, and the polynomial
axiom if, for every semialgebraic E of bounded complexity and every
``lambda >= delta``, at most ``N |E| delta^-(n-1) lambda^-n`` tubes meet E
in a set of measure ``>= lambda |T|``.  Sups over finite shape samples are
lower bounds for the true constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from .algebra import MPoly
from .geometry import TubeFamily, normalize, unit_ball_volume
from .geometry.varieties import _null_space


class ShapeVolumeUnknown(ValueError):
    pass


def _rotation(rng, n) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return (q * np.sign(np.diag(r))).T


class Shape:
    kind = "shape"
    complexity: Tuple[int, int] = (0, 0)

    def contains(self, x) -> np.ndarray:
        raise NotImplementedError

    @property
    def volume(self) -> float:
        raise NotImplementedError

    def bounds(self):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def description(self) -> str:
        return self.kind


@dataclass(eq=False)
class BoxShape(Shape):
    """Rectangular box ``{c + sum s_i u_i : |s_i| <= h_i}`` with orthonormal rows ``u_i``."""

    center: np.ndarray
    axes: np.ndarray
    half: np.ndarray
    kind = "box"

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.axes = np.asarray(self.axes, dtype=float)
        self.half = np.asarray(self.half, dtype=float)
        if np.abs(self.axes @ self.axes.T - np.eye(len(self.axes))).max() > 1e-9:
            raise ValueError("box axes must be orthonormal")

    @property
    def complexity(self):
        return (2 * len(self.center), 1)

    @property
    def volume(self):
        return float(np.prod(2 * self.half))

    def contains(self, x):
        rel = np.asarray(x, dtype=float) - self.center
        return np.all(np.abs(rel @ self.axes.T) <= self.half, axis=-1)

    def bounds(self):
        ext = np.abs(self.axes).T @ self.half
        return self.center - ext, self.center + ext

    def to_dict(self):
        return {"kind": "box", "center": self.center.tolist(), "axes": self.axes.tolist(), "half": self.half.tolist()}


@dataclass(eq=False)
class BallShape(Shape):
    center: np.ndarray
    radius: float
    kind = "ball"
    complexity = (1, 2)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)

    @property
    def volume(self):
        return unit_ball_volume(len(self.center)) * self.radius ** len(self.center)

    def contains(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1) <= self.radius

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(eq=False)
class EllipsoidShape(Shape):
    center: np.ndarray
    axes: np.ndarray
    semi: np.ndarray
    kind = "ellipsoid"
    complexity = (1, 2)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.axes = np.asarray(self.axes, dtype=float)
        self.semi = np.asarray(self.semi, dtype=float)

    @property
    def volume(self):
        return unit_ball_volume(len(self.center)) * float(np.prod(self.semi))

    def contains(self, x):
        rel = (np.asarray(x, dtype=float) - self.center) @ self.axes.T
        return np.sum((rel / self.semi) ** 2, axis=-1) <= 1

    def bounds(self):
        ext = np.sqrt((self.axes.T ** 2) @ (self.semi ** 2))
        return self.center - ext, self.center + ext

    def to_dict(self):
        return {"kind": "ellipsoid", "center": self.center.tolist(), "axes": self.axes.tolist(), "semi": self.semi.tolist()}


@dataclass(eq=False)
class SlabBallShape(Shape):
    """``{|x . u - s| <= w} cap B(0, R)``: a neighbourhood of a hyperplane in a ball."""

    normal: np.ndarray
    offset: float
    width: float
    R: float
    kind = "slab"
    complexity = (3, 2)

    def __post_init__(self):
        self.normal = normalize(self.normal)

    def _section(self, t):
        # antiderivative of the (n-1)-volume of the ball section at height t
        R, n = self.R, len(self.normal)
        t = np.clip(t, -R, R)
        if n == 2:
            return t * np.sqrt(R * R - t * t) + R * R * np.arcsin(t / R)
        return math.pi * (R * R * t - t ** 3 / 3)

    @property
    def volume(self):
        return float(self._section(self.offset + self.width) - self._section(self.offset - self.width))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (np.abs(x @ self.normal - self.offset) <= self.width) & (np.linalg.norm(x, axis=-1) <= self.R)

    def bounds(self):
        n = len(self.normal)
        return -self.R * np.ones(n), self.R * np.ones(n)

    def to_dict(self):
        return {"kind": "slab", "normal": self.normal.tolist(), "offset": self.offset, "width": self.width, "R": self.R}


@dataclass(eq=False)
class CylinderShape(Shape):
    """Solid cylinder of radius ``w`` and length ``ell`` about a segment."""

    center: np.ndarray
    direction: np.ndarray
    w: float
    ell: float
    kind = "cylinder"
    complexity = (3, 2)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.direction = normalize(self.direction)

    @property
    def volume(self):
        n = len(self.center)
        return unit_ball_volume(n - 1) * self.w ** (n - 1) * self.ell

    def contains(self, x):
        rel = np.asarray(x, dtype=float) - self.center
        a = rel @ self.direction
        perp = np.sqrt(np.maximum(np.sum(rel * rel, axis=-1) - a * a, 0))
        return (np.abs(a) <= self.ell / 2) & (perp <= self.w)

    def bounds(self):
        ext = 0.5 * self.ell * np.abs(self.direction) + self.w
        return self.center - ext, self.center + ext

    def to_dict(self):
        return {"kind": "cylinder", "center": self.center.tolist(), "direction": self.direction.tolist(),
                "w": self.w, "ell": self.ell}


@dataclass(eq=False)
class ShellShape(Shape):
    """``w``-neighbourhood of the sphere ``|x - c| = R`` (requires ``w <= R``)."""

    center: np.ndarray
    R: float
    w: float
    kind = "shell"
    complexity = (2, 2)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.w > self.R:
            raise ValueError("shell width must not exceed its radius")

    @property
    def volume(self):
        n = len(self.center)
        return unit_ball_volume(n) * ((self.R + self.w) ** n - (self.R - self.w) ** n)

    def contains(self, x):
        d = np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)
        return np.abs(d - self.R) <= self.w

    def bounds(self):
        return self.center - self.R - self.w, self.center + self.R + self.w

    def to_dict(self):
        return {"kind": "shell", "center": self.center.tolist(), "R": self.R, "w": self.w}


class ConstraintShape(Shape):
    """``{x in box : P_j(x) >= 0 for all j}``; volume by scrambled Sobol
    quadrature, rejected unless its standard error is below 1%."""

    kind = "semialgebraic"

    def __init__(self, polys: Sequence[MPoly], lo, hi, seed: int = 0, log2_points: int = 15, reps: int = 8):
        self.polys = list(polys)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.seed = seed
        n = len(self.lo)
        box = float(np.prod(self.hi - self.lo))
        ests = []
        for r in range(reps):
            pts = qmc.Sobol(n, scramble=True, seed=seed * 1000 + r).random_base2(log2_points)
            ests.append(np.mean(self.contains(self.lo + pts * (self.hi - self.lo))) * box)
        self._volume = float(np.mean(ests))
        self.volume_se = float(np.std(ests, ddof=1) / math.sqrt(reps))
        if self._volume <= 0 or self.volume_se > 0.01 * self._volume:
            raise ShapeVolumeUnknown(
                f"constraint shape volume {self._volume:.4g} has standard error {self.volume_se:.2g} above 1%"
            )

    @property
    def complexity(self):
        return (len(self.polys) + 2 * len(self.lo), max([1] + [p.degree for p in self.polys]))

    @property
    def volume(self):
        return self._volume

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        ok = np.all((x >= self.lo) & (x <= self.hi), axis=-1)
        for p in self.polys:
            ok &= p(x) >= 0
        return ok

    def bounds(self):
        return self.lo, self.hi

    def to_dict(self):
        return {"kind": "semialgebraic", "polys": [p.to_json() for p in self.polys],
                "lo": self.lo.tolist(), "hi": self.hi.tolist(), "seed": self.seed}


def shape_from_dict(d: dict) -> Shape:
    kind = d["kind"]
    if kind == "box":
        return BoxShape(d["center"], d["axes"], d["half"])
    if kind == "ball":
        return BallShape(d["center"], float(d["radius"]))
    if kind == "ellipsoid":
        return EllipsoidShape(d["center"], d["axes"], d["semi"])
    if kind == "slab":
        return SlabBallShape(np.asarray(d["normal"], float), float(d["offset"]), float(d["width"]), float(d["R"]))
    if kind == "cylinder":
        return CylinderShape(d["center"], d["direction"], float(d["w"]), float(d["ell"]))
    if kind == "shell":
        return ShellShape(d["center"], float(d["R"]), float(d["w"]))
    if kind == "semialgebraic":
        return ConstraintShape([MPoly.from_json(p) for p in d["polys"]], d["lo"], d["hi"], int(d.get("seed", 0)))
    raise ValueError(f"unknown shape kind {kind!r}")


@dataclass
class ShapeCatalog:
    shapes: List[Shape]
    D: Tuple[int, int] = (8, 2)  # (number of polynomials, max degree)

    def __post_init__(self):
        for i, s in enumerate(self.shapes):
            k, deg = s.complexity
            if k > self.D[0] or deg > self.D[1]:
                raise ValueError(f"shape {i} ({s.kind}) has complexity {s.complexity} above D={self.D}")
            if not (s.volume > 0 and math.isfinite(s.volume)):
                raise ShapeVolumeUnknown(f"shape {i} ({s.kind}) has no finite positive volume")

    def __len__(self):
        return len(self.shapes)

    def extended(self, more: Sequence[Shape]) -> "ShapeCatalog":
        return ShapeCatalog(self.shapes + list(more), self.D)

    def to_list(self) -> list:
        return [s.to_dict() for s in self.shapes]

    @classmethod
    def from_list(cls, rows, D=(8, 2)) -> "ShapeCatalog":
        return cls([shape_from_dict(r) for r in rows], tuple(D))


# -- catalog builders ---------------------------------------------------------------


def random_boxes(n: int, count: int, delta: float, seed: int = 0, f: Optional[TubeFamily] = None,
                 adapted_fraction: float = 0.5) -> List[BoxShape]:
    """Random rotated boxes with log-uniform side lengths in ``[delta, 2]``;
    when a family is given, a share are aligned with a tube and just contain it."""
    rng = np.random.default_rng(seed)
    out = []
    n_adapted = int(round(adapted_fraction * count)) if f is not None and len(f) else 0
    lo, hi = (f.bounding_box() if f is not None and len(f) else (-np.ones(n), np.ones(n)))
    for _ in range(count - n_adapted):
        half = np.exp(rng.uniform(math.log(delta), math.log(1.0), n))
        out.append(BoxShape(rng.uniform(lo, hi), _rotation(rng, n), half))
    for _ in range(n_adapted):
        i = rng.integers(len(f))
        v = f.dirs[i]
        axes = np.vstack([v, _null_space(v[None], n)])
        grow = np.exp(rng.uniform(0, math.log(1 / delta), n))
        half = np.concatenate([[0.5], np.full(n - 1, f.delta)]) * grow
        half[0] = min(half[0], 2.0)
        out.append(BoxShape(f.centers[i], axes, half))
    return out


def builtin_catalog(n: int, delta: float, count: int = 200, seed: int = 0,
                    f: Optional[TubeFamily] = None) -> ShapeCatalog:
    """A mix of every shape kind, positioned around the family (if any)."""
    rng = np.random.default_rng(seed)
    lo, hi = (f.bounding_box() if f is not None and len(f) else (-np.ones(n), np.ones(n)))
    per = max(1, count // 6)
    shapes: List[Shape] = random_boxes(n, per, delta, seed, f)
    for _ in range(per):
        shapes.append(BallShape(rng.uniform(lo, hi), math.exp(rng.uniform(math.log(delta), 0))))
        shapes.append(EllipsoidShape(rng.uniform(lo, hi), _rotation(rng, n),
                                     np.exp(rng.uniform(math.log(delta), 0, n))))
        w = math.exp(rng.uniform(math.log(delta), 0))
        shapes.append(SlabBallShape(normalize(rng.standard_normal(n)), float(rng.uniform(-0.5, 0.5)), w,
                                    float(rng.uniform(0.5, 1.5))))
        shapes.append(CylinderShape(rng.uniform(lo, hi), normalize(rng.standard_normal(n)),
                                    math.exp(rng.uniform(math.log(delta), math.log(0.5))), float(rng.uniform(0.2, 2))))
        R = float(rng.uniform(0.2, 1.5))
        shapes.append(ShellShape(rng.uniform(lo, hi), R, min(R, math.exp(rng.uniform(math.log(delta), 0)))))
    return ShapeCatalog(shapes)


# -- estimators ---------------------------------------------------------------------


def tube_containment(f: TubeFamily, boxes: Sequence[BoxShape], chunk: int = 512) -> np.ndarray:
    """``out[b, t]`` is True iff tube ``t`` lies in box ``b``.

    A convex tube lies in a box iff along every box axis ``u`` its support
    ``|<c - b0, u>| + |<v, u>|/2 + delta sqrt(1 - <v, u>^2)`` is at most the
    half-width.
    """
    out = np.zeros((len(boxes), len(f)), dtype=bool)
    if not len(f) or not len(boxes):
        return out
    for s in range(0, len(boxes), chunk):
        blk = boxes[s : s + chunk]
        C = np.array([b.center for b in blk])
        U = np.array([b.axes for b in blk])  # (B, n, n)
        H = np.array([b.half for b in blk])  # (B, n)
        cu = np.einsum("bij,tj->bti", U, f.centers) - np.einsum("bij,bj->bi", U, C)[:, None, :]
        vu = np.einsum("bij,tj->bti", U, f.dirs)
        sup = np.abs(cu) + 0.5 * np.abs(vu) + f.delta * np.sqrt(np.clip(1 - vu * vu, 0, None))
        out[s : s + len(blk)] = np.all(sup <= H[:, None, :] * (1 + 1e-12), axis=2)
    return out


@dataclass
class WolffReport:
    N_linear: Optional[float] = None
    N_poly: Optional[float] = None
    witness_shape: Optional[int] = None
    witness_lambda: Optional[float] = None
    rows: list = field(default_factory=list, repr=False)  # (shape, kind, lambda, count, volume, N)

    def csv_rows(self):
        yield ("shape", "kind", "lambda", "count", "volume", "N")
        yield from self.rows


def linear_wolff_N(f: TubeFamily, boxes: Sequence[BoxShape]) -> WolffReport:
    """``sup_E #{T subset E} delta^(n-1) / |E|`` over the given boxes."""
    if not len(boxes):
        raise ValueError("box sample must be nonempty")
    contained = tube_containment(f, boxes)
    counts = contained.sum(axis=1)
    vols = np.array([b.volume for b in boxes])
    N = counts * f.delta ** (f.n - 1) / vols
    best = int(np.argmax(N))
    rows = [(i, "box", 1.0, int(counts[i]), float(vols[i]), float(N[i])) for i in np.flatnonzero(counts)]
    return WolffReport(N_linear=float(N[best]), witness_shape=best if counts[best] else None,
                       witness_lambda=1.0, rows=rows)


def stratified_pattern(n: int, samples: int = 1000, seed: int = 0) -> np.ndarray:
    """Jittered ``(t, w)`` samples of the reference tube ``|t| <= 1/2, |w| <= 1``
    (cross-section in units of delta), one per stratum."""
    rng = np.random.default_rng(seed)
    if n == 2:
        nt = int(round(math.sqrt(samples * 2.5)))
        nw = max(1, samples // nt)
        t = (np.arange(nt)[:, None] + rng.uniform(size=(nt, nw))) / nt - 0.5
        w = (np.arange(nw)[None, :] + rng.uniform(size=(nt, nw))) / nw * 2 - 1
        return np.column_stack([t.ravel(), w.ravel()])
    nt = max(1, int(round(samples / 25)))
    nr, na = 5, 5
    t = (np.arange(nt)[:, None, None] + rng.uniform(size=(nt, nr, na))) / nt - 0.5
    # equal-area radial strata
    rad = np.sqrt((np.arange(nr)[None, :, None] + rng.uniform(size=(nt, nr, na))) / nr)
    ang = (np.arange(na)[None, None, :] + rng.uniform(size=(nt, nr, na))) / na * 2 * math.pi
    return np.column_stack([t.ravel(), (rad * np.cos(ang)).ravel(), (rad * np.sin(ang)).ravel()])


def intersection_fractions(f: TubeFamily, shape: Shape, pattern: np.ndarray) -> np.ndarray:
    """Sampled ``|T cap E| / |T|`` for every tube."""
    out = np.zeros(len(f))
    if not len(f):
        return out
    lo, hi = shape.bounds()
    reach = 0.5 + f.delta
    near = np.all((f.centers + reach >= lo) & (f.centers - reach <= hi), axis=1)
    for i in np.flatnonzero(near):
        v = f.dirs[i]
        basis = _null_space(v[None], f.n)
        pts = f.centers[i] + pattern[:, :1] * v + f.delta * pattern[:, 1:] @ basis
        out[i] = np.count_nonzero(shape.contains(pts)) / len(pattern)
    return out


def default_lambdas(delta: float, count: int = 40) -> np.ndarray:
    return np.unique(np.concatenate([np.geomspace(delta, 1.0, count), [1.0]]))


def poly_wolff_N(f: TubeFamily, catalog: ShapeCatalog, lambdas=None, samples: int = 1000,
                 seed: int = 0) -> WolffReport:
    """``sup_{E, lambda} #{T : |T cap E| >= lambda |T|} delta^(n-1) lambda^n / |E|``."""
    lambdas = default_lambdas(f.delta) if lambdas is None else np.sort(np.asarray(lambdas, dtype=float))
    if len(lambdas) and lambdas[0] < f.delta * (1 - 1e-12):
        raise ValueError("every lambda must be at least delta")
    if samples < 1000:
        raise ValueError("at least 10^3 samples per tube are required")
    pattern = stratified_pattern(f.n, samples, seed)
    best, wit = 0.0, (None, None)
    rows = []
    for s, shape in enumerate(catalog.shapes):
        frac = intersection_fractions(f, shape, pattern)
        if not frac.any():
            continue
        counts = np.count_nonzero(frac[None, :] >= lambdas[:, None] - 1e-12, axis=1)
        N = counts * f.delta ** (f.n - 1) * lambdas ** f.n / shape.volume
        j = int(np.argmax(N))
        rows.append((s, shape.kind, float(lambdas[j]), int(counts[j]), float(shape.volume), float(N[j])))
        if N[j] > best:
            best, wit = float(N[j]), (s, float(lambdas[j]))
    return WolffReport(N_poly=best, witness_shape=wit[0], witness_lambda=wit[1], rows=rows)
