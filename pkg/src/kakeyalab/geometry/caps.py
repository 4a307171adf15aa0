"""Cap decompositions of the direction sphere and the cap rescaling map."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from .tubes import GeometryError, TubeFamily, normalize, projective_angle


def _fibonacci_hemisphere(count: int) -> np.ndarray:
    # points on the upper half of S^2; antipodes are identified downstream
    i = np.arange(count) + 0.5
    z = 1.0 - i / count
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(np.clip(1 - z * z, 0, None))
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


@lru_cache(maxsize=32)
def _sphere_net_cached(n: int, beta: float) -> np.ndarray:
    if n == 2:
        m = max(1, math.ceil(math.pi / beta))
        theta = np.arange(m) * math.pi / m
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3:
        # greedy separation 0.45 beta over a candidate set 10x finer, so the
        # covering radius stays below beta / 2
        spacing = 0.05 * beta
        count = int(math.ceil(2 * math.pi / spacing ** 2))
        cand = _fibonacci_hemisphere(count)
        covered = np.zeros(len(cand), dtype=bool)
        net = []
        thresh = math.cos(0.45 * beta)
        for i in range(len(cand)):
            if covered[i]:
                continue
            net.append(cand[i])
            covered |= np.abs(cand @ cand[i]) >= thresh
        return np.array(net)
    raise GeometryError("sphere nets are implemented for n in {2, 3} only")


def sphere_net(n: int, beta: float) -> np.ndarray:
    """Deterministic projective net whose points are centres of ``beta``-caps
    covering the sphere (covering radius ``<= beta / 2``).

    The net depends only on ``(n, beta)``, so every family decomposed with
    the same ``beta`` uses the same caps.
    """
    if beta >= 2:
        e = np.zeros(n)
        e[-1] = 1.0
        return e[None, :]
    return _sphere_net_cached(int(n), float(beta)).copy()


@dataclass(frozen=True)
class Cap:
    center: np.ndarray
    members: Tuple[int, ...]
    net_index: int


@dataclass
class CapDecomposition:
    beta: float
    caps: List[Cap]
    assignment: np.ndarray  # cap position (into ``caps``) of each tube
    net: np.ndarray = field(repr=False)

    @property
    def whole_sphere(self) -> bool:
        return self.beta >= 2

    @property
    def centers(self) -> np.ndarray:
        if not self.caps:
            return np.zeros((0, self.net.shape[1]))
        return np.array([c.center for c in self.caps])

    def __len__(self):
        return len(self.caps)

    def family_of(self, f: TubeFamily, cap_pos: int) -> TubeFamily:
        return f.subset(list(self.caps[cap_pos].members))

    def overlap_multiplicity(self, dirs) -> int:
        """Largest number of (closed) caps containing any of ``dirs``."""
        if not self.caps or len(dirs) == 0:
            return 0
        if self.whole_sphere:
            return 1
        ang = projective_angle(np.asarray(dirs)[:, None, :], self.centers[None, :, :])
        return int((ang <= self.beta / 2 + 1e-12).sum(axis=1).max())


def cap_decompose(f: TubeFamily, beta: float) -> CapDecomposition:
    """Assign every tube to its nearest point of the ``beta``-net.

    Only nonempty caps are kept; ``assignment[i]`` indexes into ``caps``.
    """
    if beta < f.delta or beta <= 0:
        raise GeometryError(f"cap diameter beta={beta} must be at least delta={f.delta}")
    net = sphere_net(f.n, beta)
    if not len(f):
        return CapDecomposition(beta, [], np.zeros(0, dtype=int), net)
    if beta >= 2:
        nearest = np.zeros(len(f), dtype=int)
    else:
        cos = np.abs(f.dirs @ net.T)
        nearest = np.argmax(cos, axis=1)
    used = sorted(set(nearest.tolist()))
    pos = {j: i for i, j in enumerate(used)}
    caps = [
        Cap(center=net[j], members=tuple(np.flatnonzero(nearest == j).tolist()), net_index=j)
        for j in used
    ]
    assignment = np.array([pos[j] for j in nearest], dtype=int)
    return CapDecomposition(beta, caps, assignment, net)


def rescale_map(omega, beta: float) -> np.ndarray:
    """Matrix of the linear map fixing ``omega`` and dilating its orthogonal
    complement by ``1/beta``."""
    w = normalize(omega)
    P = np.outer(w, w)
    return P + (np.eye(len(w)) - P) / beta


@dataclass
class RescaledFamily:
    family: TubeFamily
    cover: List[List[int]]  # output tube indices covering each input tube
    matrix: np.ndarray

    @property
    def max_cover(self) -> int:
        return max((len(c) for c in self.cover), default=0)


def rescale_cap(f: TubeFamily, beta: float, omega=None, tol: float = 1e-9) -> RescaledFamily:
    """Image of a single-cap family under the cap rescaling, covered by
    ``delta/beta``-tubes.

    Each image ``L(T)`` lies within ``delta/beta`` of the segment
    ``L(c) + t L(v)``; its axial extent is widened by the largest axial
    component of ``L(w)`` over the cross-section, and the resulting interval
    is covered by as few unit segments as possible.
    """
    if not 0 < beta <= 1:
        raise GeometryError("beta must lie in (0, 1]")
    if omega is None:
        if not len(f):
            raise GeometryError("cannot infer cap centre of an empty family")
        ref = f.dirs[0]
        signs = np.sign(f.dirs @ ref)
        signs[signs == 0] = 1
        omega = (f.dirs * signs[:, None]).sum(axis=0)
    omega = normalize(omega)
    L = rescale_map(omega, beta)
    if len(f):
        ang = projective_angle(f.dirs, omega[None, :])
        if ang.max() > beta + tol:
            bad = int(ang.argmax())
            raise GeometryError(f"tube {bad} is at angle {ang[bad]:.4g} > beta={beta} from the cap centre")

    centers, dirs, cover = [], [], []
    for c, v in zip(f.centers, f.dirs):
        if v @ omega < 0:
            v = -v
        Lc = L @ c
        Lv = L @ v
        length = float(np.linalg.norm(Lv))
        u = Lv / length
        Lu = L @ u
        perp = Lu - (Lu @ v) * v
        half = 0.5 * length + f.delta * float(np.linalg.norm(perp))
        k = max(1, math.ceil(2 * half - 1e-12))
        if k == 1:
            offsets = [0.0]
        else:
            step = (2 * half - 1) / (k - 1)
            offsets = [-half + 0.5 + i * step for i in range(k)]
        idx = []
        for s in offsets:
            idx.append(len(centers))
            centers.append(Lc + s * u)
            dirs.append(u)
        cover.append(idx)
    out = TubeFamily(centers, normalize(dirs) if dirs else dirs, f.delta / beta, f.n)
    return RescaledFamily(out, cover, L)
