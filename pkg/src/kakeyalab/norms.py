"""L^p and k-broad norms of sums of tube indicators.

All integrals are midpoint-grid quadratures at a resolution of at most
``delta / 4``.  The broad norm lives on a lattice of ``delta``-balls whose
centres are grid midpoints, so every ball integral is an exact finite sum
over the same cells; the subadditivity, triangle and log-convexity
inequalities therefore hold for the discrete quantities up to rounding.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _backend
from .geometry.caps import CapDecomposition, cap_decompose
from .geometry.tubes import Ball, Box, TubeFamily, angles_to_subspaces


# Empirical constant in broad <= C * klinear, calibrated once on 50 seeded
# two-cap families (n=2, delta=1/32, beta=1/4, 6 tubes per cap, p in {3/2, 2});
# the largest observed ratio was 0.44.
KLINEAR_CONSTANT = 0.5


class ResolutionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# regions and grids


@dataclass(frozen=True, eq=False)
class RegionUnion:
    parts: Tuple

    def contains(self, x):
        out = self.parts[0].contains(x)
        for r in self.parts[1:]:
            out = out | r.contains(x)
        return out

    def bounds(self):
        los, his = zip(*(r.bounds() for r in self.parts))
        return np.min(los, axis=0), np.max(his, axis=0)

    @property
    def n(self):
        return self.parts[0].n


def union(*regions) -> RegionUnion:
    return RegionUnion(tuple(regions))


@dataclass(frozen=True)
class Grid:
    """Cells ``origin + [i, i+1) h`` with midpoints ``origin + (i + 1/2) h``."""

    origin: np.ndarray
    h: float
    shape: Tuple[int, ...]

    @classmethod
    def covering(cls, lo, hi, h: float) -> "Grid":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        shape = tuple(int(max(1, math.ceil((b - a) / h))) for a, b in zip(lo, hi))
        return cls(lo, float(h), shape)

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    def axes(self):
        return [self.origin[i] + (np.arange(self.shape[i]) + 0.5) * self.h for i in range(self.n)]

    def midpoints(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), -1)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=np.float64)

    def indicator(self, region) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=np.float64)
        # slab-wise to keep the midpoint array small
        axes = self.axes()
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), -1)
        for i, x0 in enumerate(axes[0]):
            pts = np.concatenate([np.full(rest.shape[:-1] + (1,), x0), rest], axis=-1)
            mask[i] = region.contains(pts)
        return mask


def count_grid(f: TubeFamily, grid: Grid, margin: float = 0.0, idx=None) -> np.ndarray:
    """``sum_T chi_{N_margin T}`` at every grid midpoint."""
    out = grid.zeros()
    centers, dirs = (f.centers, f.dirs) if idx is None else (f.centers[idx], f.dirs[idx])
    return _backend.raster_tubes(out, grid.origin, grid.h, centers, dirs, f.delta, margin)


def _check_resolution(f: TubeFamily, resolution: float) -> None:
    if resolution > f.delta / 4 * (1 + 1e-12):
        raise ResolutionError(f"resolution {resolution} exceeds delta/4 = {f.delta / 4}")


def _default_region(f: TubeFamily):
    lo, hi = f.bounding_box()
    return Box(lo, hi + 1e-12)


def lp_norm(f: TubeFamily, p: float, region=None, resolution: Optional[float] = None) -> float:
    """``(int_region (sum_T chi_T)^p)^{1/p}`` by midpoint quadrature."""
    if p < 1:
        raise ValueError("p must be >= 1")
    resolution = resolution or f.delta / 4
    _check_resolution(f, resolution)
    if not len(f):
        return 0.0
    region = region if region is not None else _default_region(f)
    lo, hi = region.bounds()
    grid = Grid.covering(lo, hi, resolution)
    counts = count_grid(f, grid)
    weights = grid.indicator(region)
    return float((np.sum(counts ** p * weights) * grid.cell_volume) ** (1.0 / p))


# ---------------------------------------------------------------------------
# ball covers


@dataclass
class BallCover:
    """``delta``-balls centred on a sub-lattice of grid midpoints.

    Lattice spacing is ``stride * h <= 2 delta / sqrt(n)``, so the balls
    cover the lattice box; ``offsets`` lists the cells of one ball.
    """

    grid: Grid
    delta: float
    stride: int
    starts: Tuple[int, ...]
    counts: Tuple[int, ...]
    offsets: np.ndarray
    lo: np.ndarray = field(repr=False)
    hi: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, lo, hi, delta: float, h: float) -> "BallCover":
        """Every lattice ball meeting ``[lo, hi]``.

        Grid cells and lattice points are anchored at the origin, so covers
        of different regions at the same ``(delta, h)`` share balls.
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = len(lo)
        stride = max(1, int(math.floor(2 * delta / math.sqrt(n) / h + 1e-9)))
        spacing = stride * h
        rad = int(math.floor(delta / h + 1e-9))
        jlo = np.floor((lo - delta - 0.5 * h) / spacing).astype(int)
        jhi = np.ceil((hi + delta - 0.5 * h) / spacing).astype(int)
        counts = tuple(int(c) for c in jhi - jlo + 1)
        pad = rad + 1
        origin = (jlo * stride - pad) * h
        shape = tuple(2 * pad + 1 + (c - 1) * stride for c in counts)
        grid = Grid(origin.astype(float), h, shape)
        rng = np.arange(-rad, rad + 1)
        offs = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), -1).reshape(-1, n)
        offs = offs[np.sum((offs * h) ** 2, axis=1) <= delta ** 2 * (1 + 1e-12)]
        return cls(grid, delta, stride, (pad,) * n, counts, offs, lo, hi)

    @property
    def n(self):
        return self.grid.n

    @property
    def n_balls(self) -> int:
        return int(np.prod(self.counts))

    @property
    def ball_volume(self) -> float:
        return len(self.offsets) * self.grid.cell_volume

    @property
    def centers(self) -> np.ndarray:
        axes = [
            self.grid.origin[i] + (self.starts[i] + np.arange(self.counts[i]) * self.stride + 0.5) * self.grid.h
            for i in range(self.n)
        ]
        return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, self.n)

    def sums(self, values: np.ndarray) -> np.ndarray:
        """Integral of the grid function ``values`` over each ball (flattened)."""
        s = _backend.ball_sums(values, self.starts, self.counts, self.stride, self.offsets)
        return s.reshape(-1) * self.grid.cell_volume

    def multiplicity(self) -> int:
        ones = np.zeros(self.grid.shape)
        idx = tuple(
            slice(self.starts[i], self.starts[i] + (self.counts[i] - 1) * self.stride + 1, self.stride)
            for i in range(self.n)
        )
        ones[idx] = 1.0
        # number of lattice centres within delta of each cell
        return int(round(_backend.ball_sums(ones, (0,) * self.n, self.grid.shape, 1, self.offsets).max()))

    def weights(self, region) -> np.ndarray:
        """``|B cap U| / |B|`` for every ball."""
        ind = self.grid.indicator(region)
        return self.sums(ind) / self.ball_volume


# ---------------------------------------------------------------------------
# broad norms


@dataclass
class BroadParams:
    k: int
    A: int
    p: float
    beta: float
    candidate_subspaces: List[np.ndarray]

    def __post_init__(self):
        if self.A < 1:
            raise ValueError("A must be >= 1")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if not self.candidate_subspaces:
            raise ValueError("candidate subspace list must be nonempty")
        cleaned = []
        for V in self.candidate_subspaces:
            V = np.atleast_2d(np.asarray(V, dtype=float))
            if len(V) != self.k - 1:
                raise ValueError(f"candidate subspaces must have dimension k-1={self.k - 1}")
            if np.abs(V @ V.T - np.eye(len(V))).max() > 1e-10:
                raise ValueError("candidate bases must be orthonormal to 1e-10")
            cleaned.append(V)
        self.candidate_subspaces = cleaned

    def with_(self, **kw) -> "BroadParams":
        d = dict(k=self.k, A=self.A, p=self.p, beta=self.beta, candidate_subspaces=self.candidate_subspaces)
        d.update(kw)
        return BroadParams(**d)


def orthonormal(V) -> np.ndarray:
    q, r = np.linalg.qr(np.atleast_2d(np.asarray(V, dtype=float)).T)
    return q.T[: r.shape[0]]


def grassmannian_net(k_minus_1: int, n: int, size: int, seed: int = 0) -> List[np.ndarray]:
    """``size`` subspaces of dimension ``k-1``; quasi-uniform by farthest-point
    selection from a seeded random pool."""
    if size <= 0:
        return []
    rng = np.random.default_rng(seed)
    pool = [orthonormal(rng.standard_normal((k_minus_1, n))) for _ in range(max(8 * size, 64))]
    projs = np.array([V.T @ V for V in pool])
    chosen = [0]
    dist = np.linalg.norm(projs - projs[0], axis=(1, 2))
    while len(chosen) < min(size, len(pool)):
        j = int(np.argmax(dist))
        chosen.append(j)
        dist = np.minimum(dist, np.linalg.norm(projs - projs[j], axis=(1, 2)))
    return [pool[j] for j in chosen]


def default_candidates(
    cap_centers, k: int, n: int, net_size: int = 0, extra: Sequence = (), seed: int = 0
) -> List[np.ndarray]:
    """Spans of ``(k-1)``-subsets of cap centres, a Grassmannian net and
    caller-supplied subspaces; near-duplicates are dropped."""
    cands = [orthonormal(V) for V in extra]
    centers = np.asarray(cap_centers, dtype=float)
    if k - 1 >= 1:
        for combo in itertools.combinations(range(len(centers)), k - 1):
            M = centers[list(combo)]
            if np.linalg.matrix_rank(M, tol=1e-9) == k - 1:
                cands.append(orthonormal(M))
    cands.extend(grassmannian_net(k - 1, n, net_size, seed))
    unique, projs = [], []
    for V in cands:
        P = V.T @ V
        if any(np.abs(P - Q).max() < 1e-12 for Q in projs):
            continue
        unique.append(V)
        projs.append(P)
    return unique


def exclusion_matrix(cap_centers, candidates, beta: float) -> np.ndarray:
    """``excl[v, c]`` is True when cap ``c`` makes angle ``<= beta`` with
    candidate ``v`` (cap angle = centre angle minus ``beta / 2``)."""
    centers = np.asarray(cap_centers, dtype=float)
    if not len(centers):
        return np.zeros((len(candidates), 0), dtype=bool)
    if beta >= 2:
        return np.ones((len(candidates), len(centers)), dtype=bool)
    ang = angles_to_subspaces(centers, candidates)  # (caps, cands)
    cap_angle = np.maximum(0.0, ang - beta / 2)
    return (cap_angle <= beta + 1e-12).T


def _coverable(target: int, masks: Sequence[int], budget: int) -> bool:
    # can ``budget`` of ``masks`` jointly cover every bit of ``target``?
    if target == 0:
        return True
    if budget == 0:
        return False
    low = target & -target
    for m in masks:
        if m & low and _coverable(target & ~m, masks, budget - 1):
            return True
    return False


def minmax_masses(masses: np.ndarray, excl: np.ndarray, A: int) -> np.ndarray:
    """Per-row ``min`` over ``A``-tuples of candidates of the ``max`` mass
    among caps no tuple member excludes.

    With masses sorted descending the answer is the first mass whose prefix
    cannot be covered by ``A`` candidates; prefixes are tested by an exact
    branch-on-lowest-element search.
    """
    masses = np.asarray(masses, dtype=float)
    nb, nc = masses.shape
    out = np.zeros(nb)
    if nc == 0:
        return out
    if A == 1:
        surv = ~excl  # (nv, nc)
        for s in range(0, nb, 2048):
            blk = masses[s : s + 2048]
            vals = np.max(blk[:, None, :] * surv[None, :, :], axis=2, initial=0.0)
            out[s : s + 2048] = vals.min(axis=1)
        return out
    cand_bits = [sum(1 << c for c in np.flatnonzero(row)) for row in excl]
    cache: Dict[Tuple[int, ...], int] = {}
    for b in range(nb):
        row = masses[b]
        pos = np.flatnonzero(row > 0)
        if not len(pos):
            continue
        order = tuple(pos[np.argsort(-row[pos], kind="stable")].tolist())
        j = cache.get(order)
        if j is None:
            relevant = sum(1 << c for c in order)
            masks = sorted({m & relevant for m in cand_bits if m & relevant}, key=lambda m: -bin(m).count("1"))
            lo, hi = 0, len(order)  # largest coverable prefix length in [lo, hi]
            while lo < hi:
                mid = (lo + hi + 1) // 2
                target = sum(1 << c for c in order[:mid])
                if _coverable(target, masks, A):
                    lo = mid
                else:
                    hi = mid - 1
            j = lo
            cache[order] = j
        out[b] = 0.0 if j >= len(order) else row[order[j]]
    return out


def cap_ball_masses(f: TubeFamily, caps: CapDecomposition, cover: BallCover, p: float) -> np.ndarray:
    """``masses[b, c] = int_{B_b} (sum_{T in cap c} chi_T)^p``."""
    out = np.zeros((cover.n_balls, len(caps)))
    for c, cap in enumerate(caps.caps):
        grid_vals = count_grid(f, cover.grid, idx=list(cap.members))
        out[:, c] = cover.sums(grid_vals ** p)
    return out


@dataclass
class NormResult:
    value: float
    quadrature_resolution: float
    per_ball_mu: Optional[np.ndarray] = None
    ball_centers: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    @property
    def n_balls(self) -> int:
        return 0 if self.weights is None else int(np.count_nonzero(self.weights))

    def to_dict(self) -> dict:
        return {"value": self.value, "resolution": self.quadrature_resolution, "n_balls": self.n_balls}


def mu(
    f: TubeFamily,
    caps: CapDecomposition,
    B: Ball,
    params: BroadParams,
    resolution: Optional[float] = None,
) -> float:
    """``mu_T(B)`` for one ``delta``-ball, by quadrature over ``B``."""
    resolution = resolution or f.delta / 4
    _check_resolution(f, resolution)
    if not len(f) or not len(caps):
        return 0.0
    grid = Grid.covering(B.center - B.radius, B.center + B.radius, resolution)
    ind = grid.indicator(B)
    masses = np.array(
        [[np.sum(count_grid(f, grid, idx=list(cap.members)) ** params.p * ind) * grid.cell_volume for cap in caps.caps]]
    )
    excl = exclusion_matrix(caps.centers, params.candidate_subspaces, params.beta)
    return float(minmax_masses(masses, excl, params.A)[0])


def broad_norm(
    f: TubeFamily,
    U=None,
    params: BroadParams = None,
    resolution: Optional[float] = None,
    caps: Optional[CapDecomposition] = None,
    masses: Optional[np.ndarray] = None,
) -> NormResult:
    """``(sum_B |B cap U|/|B| mu(B))^{1/p}`` over a lattice cover of ``U``."""
    if params is None:
        raise ValueError("broad_norm needs BroadParams")
    resolution = resolution or f.delta / 4
    _check_resolution(f, resolution)
    if not len(f):
        return NormResult(0.0, resolution)
    U = U if U is not None else _default_region(f)
    caps = caps or cap_decompose(f, params.beta)
    lo, hi = U.bounds()
    cover = BallCover.build(lo, hi, f.delta, resolution)
    w = cover.weights(U)
    if masses is None:
        masses = cap_ball_masses(f, caps, cover, params.p)
    excl = exclusion_matrix(caps.centers, params.candidate_subspaces, params.beta)
    live = w > 0
    mus = np.zeros(cover.n_balls)
    mus[live] = minmax_masses(masses[live], excl, params.A)
    value = float(np.sum(w * mus)) ** (1.0 / params.p)
    return NormResult(value, resolution, mus, cover.centers, w)


def wedge_norm(vectors) -> float:
    """``|v_1 ^ ... ^ v_k| = sqrt(det Gram)``."""
    V = np.asarray(vectors, dtype=float)
    return float(math.sqrt(max(np.linalg.det(V @ V.T), 0.0)))


def transversal_tuples(caps: CapDecomposition, k: int, beta: float) -> List[Tuple[int, ...]]:
    centers = caps.centers
    thr = beta ** (k - 1) / 2
    return [
        combo
        for combo in itertools.combinations(range(len(caps)), k)
        if wedge_norm(centers[list(combo)]) >= thr
    ]


def klinear_rhs(
    f: TubeFamily,
    caps: CapDecomposition,
    k: int,
    p: float,
    resolution: Optional[float] = None,
) -> float:
    """``(sum over transversal k-tuples of ||prod_j (sum chi_{N_2delta T_j})^{1/k}||_p^p)^{1/p}``."""
    resolution = resolution or f.delta / 4
    _check_resolution(f, resolution)
    if k > f.n:
        raise ValueError("k must not exceed n")
    tuples = transversal_tuples(caps, k, caps.beta)
    if not tuples or not len(f):
        return 0.0
    lo, hi = f.bounding_box(pad=2 * f.delta + resolution)
    grid = Grid.covering(lo, hi, resolution)
    used = sorted({c for t in tuples for c in t})
    nbhd = {c: count_grid(f, grid, margin=2 * f.delta, idx=list(caps.caps[c].members)) for c in used}
    total = 0.0
    for combo in tuples:
        prod = np.ones(grid.shape)
        for c in combo:
            prod = prod * nbhd[c]
        total += float(np.sum(prod ** (p / k)))
    return (total * grid.cell_volume) ** (1.0 / p)
