"""Tubes, tube families, balls and the JSON family format."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence, Union

import numpy as np

UNIT_TOL = 1e-12
# readers accept JSON produced by other tools, where 1e-12 is too strict
READ_TOL = 1e-9


class GeometryError(ValueError):
    pass


def unit_ball_volume(m: int) -> float:
    """Volume of the unit ball in R^m (``v_0 = 1``, ``v_1 = 2``, ``v_2 = pi``)."""
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Tube:
    """Closed cylinder ``{c + t v + w : |t| <= 1/2, w . v = 0, |w| <= delta}``."""

    center: np.ndarray
    direction: np.ndarray
    delta: float

    def __post_init__(self):
        c = _frozen(self.center)
        v = _frozen(self.direction)
        if c.shape != v.shape or c.ndim != 1:
            raise GeometryError("center and direction must be vectors of equal length")
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise GeometryError(f"tube direction must be a unit vector, |dir| = {np.linalg.norm(v)!r}")
        if not self.delta > 0:
            raise GeometryError("tube radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "direction", v)

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n - 1) * self.delta ** (self.n - 1)

    def contains(self, x) -> Union[bool, np.ndarray]:
        return tube_contains(self, x)

    def __eq__(self, other):
        return (
            isinstance(other, Tube)
            and self.delta == other.delta
            and np.array_equal(self.center, other.center)
            and np.array_equal(self.direction, other.direction)
        )

    def __repr__(self):
        return f"Tube(center={self.center.tolist()}, direction={self.direction.tolist()}, delta={self.delta})"


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


class TubeFamily:
    """A family of ``delta``-tubes in ``R^n`` stored as coordinate arrays."""

    def __init__(self, centers, dirs, delta: float, n: int | None = None):
        centers = np.array(centers, dtype=float)
        dirs = np.array(dirs, dtype=float)
        if n is None:
            if centers.ndim != 2 or centers.size == 0:
                raise GeometryError("dimension n is required for an empty family")
            n = centers.shape[1]
        centers = centers.reshape(-1, n)
        dirs = dirs.reshape(-1, n)
        if centers.shape != dirs.shape:
            raise GeometryError("centers and dirs must have matching shapes")
        if len(dirs):
            err = np.abs(np.linalg.norm(dirs, axis=1) - 1.0)
            if err.max() > UNIT_TOL:
                bad = int(err.argmax())
                raise GeometryError(f"tube {bad} has non-unit direction (|dir| - 1 = {err[bad]:.3g})")
        if not delta > 0:
            raise GeometryError("delta must be positive")
        centers.setflags(write=False)
        dirs.setflags(write=False)
        self.centers = centers
        self.dirs = dirs
        self.delta = float(delta)
        self.n = int(n)

    @classmethod
    def from_tubes(cls, tubes: Sequence[Tube], delta: float | None = None, n: int | None = None):
        tubes = list(tubes)
        if tubes:
            deltas = {t.delta for t in tubes}
            if len(deltas) != 1:
                raise GeometryError("all tubes in a family must share delta")
            delta = deltas.pop()
            n = tubes[0].n
        return cls([t.center for t in tubes], [t.direction for t in tubes], delta, n)

    def __len__(self) -> int:
        return len(self.centers)

    def __getitem__(self, i) -> Tube:
        return Tube(self.centers[i], self.dirs[i], self.delta)

    def __iter__(self) -> Iterator[Tube]:
        for i in range(len(self)):
            yield self[i]

    @property
    def tubes(self):
        return list(self)

    @property
    def tube_volume(self) -> float:
        return unit_ball_volume(self.n - 1) * self.delta ** (self.n - 1)

    @property
    def total_volume(self) -> float:
        return len(self) * self.tube_volume

    def subset(self, idx) -> "TubeFamily":
        idx = np.asarray(idx, dtype=int)
        return TubeFamily(self.centers[idx], self.dirs[idx], self.delta, self.n)

    def union(self, other: "TubeFamily") -> "TubeFamily":
        if other.delta != self.delta or other.n != self.n:
            raise GeometryError("families must share delta and dimension")
        return TubeFamily(
            np.vstack([self.centers, other.centers]),
            np.vstack([self.dirs, other.dirs]),
            self.delta,
            self.n,
        )

    def bounding_box(self, pad: float = 0.0):
        if not len(self):
            z = np.zeros(self.n)
            return z - pad, z + pad
        ext = 0.5 * np.abs(self.dirs) + self.delta * np.sqrt(np.clip(1 - self.dirs ** 2, 0, None))
        lo = (self.centers - ext).min(axis=0) - pad
        hi = (self.centers + ext).max(axis=0) + pad
        return lo, hi

    def __eq__(self, other):
        return (
            isinstance(other, TubeFamily)
            and self.n == other.n
            and self.delta == other.delta
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.dirs, other.dirs)
        )

    def __repr__(self):
        return f"TubeFamily(n={self.n}, delta={self.delta}, tubes={len(self)})"

    # -- JSON format ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "delta": self.delta,
            "tubes": [
                {"center": c.tolist(), "dir": v.tolist()} for c, v in zip(self.centers, self.dirs)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TubeFamily":
        try:
            n = int(data["n"])
            delta = float(data["delta"])
            raw = data["tubes"]
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"tube family JSON needs keys n, delta, tubes: {exc}") from None
        centers, dirs = [], []
        for i, t in enumerate(raw):
            c = np.asarray(t["center"], dtype=float)
            v = np.asarray(t["dir"], dtype=float)
            if c.shape != (n,) or v.shape != (n,):
                raise GeometryError(f"tube {i}: center and dir must have length {n}")
            norm = float(np.linalg.norm(v))
            if abs(norm - 1.0) > READ_TOL:
                raise GeometryError(f"tube {i}: direction {v.tolist()} is not a unit vector (norm {norm!r})")
            if abs(norm - 1.0) > UNIT_TOL:
                v = v / norm
            centers.append(c)
            dirs.append(v)
        return cls(centers, dirs, delta, n)

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "TubeFamily":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "TubeFamily":
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(self.center))
        if not self.radius > 0:
            raise GeometryError("ball radius must be positive")

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.radius ** self.n

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.center, axis=-1) <= self.radius

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)

    def bounds(self):
        return self.center - self.radius, self.center + self.radius


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-parallel box ``[lo, hi]``; used as a quadrature region."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _frozen(self.lo))
        object.__setattr__(self, "hi", _frozen(self.hi))
        if np.any(self.hi <= self.lo):
            raise GeometryError("box must have positive side lengths")

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo) & (x <= self.hi), axis=-1)

    def bounds(self):
        return self.lo, self.hi


def tube_contains(t: Tube, x) -> Union[bool, np.ndarray]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != t.n:
        raise GeometryError(f"point has dimension {x.shape[-1]}, tube lives in R^{t.n}")
    rel = x - t.center
    along = rel @ t.direction
    perp = np.sqrt(np.maximum(np.sum(rel * rel, axis=-1) - along * along, 0.0))
    inside = (np.abs(along) <= 0.5) & (perp <= t.delta)
    return bool(inside) if inside.ndim == 0 else inside


def projective_angle(u, v) -> np.ndarray:
    """Unsigned angle in ``[0, pi/2]`` between lines spanned by ``u`` and ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cos = np.abs(np.sum(u * v, axis=-1)) / (np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1))
    return np.arccos(np.clip(cos, 0.0, 1.0))


def pairwise_projective_angles(dirs) -> np.ndarray:
    dirs = normalize(dirs)
    cos = np.clip(np.abs(dirs @ dirs.T), 0.0, 1.0)
    return np.arccos(cos)


def direction_separated(f: TubeFamily, tol: float = 1e-12) -> bool:
    """True iff all pairwise projective angles are at least ``delta``."""
    if len(f) < 2:
        return True
    ang = pairwise_projective_angles(f.dirs)
    np.fill_diagonal(ang, np.inf)
    return bool(ang.min() >= f.delta - tol)


def _orthonormal_basis(V) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    q, r = np.linalg.qr(V.T)
    if np.min(np.abs(np.diag(r))) < 1e-12:
        raise GeometryError("degenerate subspace basis")
    return q.T


def angle_to_subspace(v, V, beta: float | None = None) -> float:
    """Angle between a direction (or a cap) and a linear subspace.

    ``V`` is a basis given as rows.  For a cap pass its centre as ``v`` and
    its diameter as ``beta``: the infimum over the cap is
    ``max(0, angle(centre, V) - beta/2)``.  A ``beta >= 2`` cap is the whole
    sphere and meets every subspace.
    """
    v = np.asarray(v, dtype=float)
    basis = _orthonormal_basis(V)
    n = len(v)
    if not 1 <= len(basis) <= n - 1:
        raise GeometryError("subspace dimension must lie in [1, n-1]")
    v = v / np.linalg.norm(v)
    proj = np.linalg.norm(basis @ v)
    ang = float(np.arccos(np.clip(proj, 0.0, 1.0)))
    if beta is None:
        return ang
    if beta >= 2:
        return 0.0
    return max(0.0, ang - beta / 2)


def angles_to_subspaces(points, bases) -> np.ndarray:
    """Matrix ``[a, b]`` of angles between unit ``points[a]`` and the span of ``bases[b]``."""
    points = np.asarray(points, dtype=float)
    out = np.empty((len(points), len(bases)))
    for b, V in enumerate(bases):
        Q = _orthonormal_basis(V)
        proj = np.linalg.norm(points @ Q.T, axis=1)
        out[:, b] = np.arccos(np.clip(proj, 0.0, 1.0))
    return out
