"""Varieties with distance oracles, tube tangency and neighbourhood volumes.

Exact oracles exist for the catalog (affine subspaces, spheres, graphs of
quadratics).  Any other zero set is handled through a dense point cloud.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from ..algebra import MPoly
from .tubes import Ball, GeometryError, Tube, normalize


class OracleUnavailable(GeometryError):
    pass


class Variety:
    """Common zero set of ``polynomials`` with a distance oracle."""

    kind = "abstract"
    exact = True
    constant_tangent = False

    n: int
    dimension: int

    @property
    def polynomials(self) -> List[MPoly]:
        raise NotImplementedError

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.polynomials)

    def distance(self, x) -> np.ndarray:
        raise NotImplementedError

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def tangent_basis(self, z) -> np.ndarray:
        """Orthonormal rows spanning ``T_z Z``."""
        raise NotImplementedError

    def points_near(self, x, radius: float, spacing: float) -> np.ndarray:
        """Points of ``Z`` within ``radius`` of ``x``, spaced at most ``spacing``."""
        x = np.asarray(x, dtype=float)
        p = self.project(x[None])[0]
        if np.linalg.norm(p - x) > radius:
            return np.zeros((0, self.n))
        if self.dimension == 0:
            return p[None]
        basis = self.tangent_basis(p)
        steps = np.arange(-radius, radius + spacing / 2, spacing)
        grid = np.stack(np.meshgrid(*([steps] * self.dimension), indexing="ij"), -1).reshape(-1, self.dimension)
        cand = self.project(p + grid @ basis)
        keep = np.linalg.norm(cand - x, axis=1) <= radius
        return cand[keep]

    def to_dict(self) -> dict:
        raise NotImplementedError


def _null_space(rows: np.ndarray, n: int) -> np.ndarray:
    if len(rows) == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(np.atleast_2d(rows))
    rank = int((s > 1e-12).sum())
    return vt[rank:]


class AffineSubspace(Variety):
    """``point + span(tangent)``; a hyperplane, line or point."""

    kind = "affine"
    constant_tangent = True

    def __init__(self, point, tangent=None, normals=None):
        self.point = np.asarray(point, dtype=float)
        self.n = len(self.point)
        if tangent is not None:
            t = np.atleast_2d(np.asarray(tangent, dtype=float)).reshape(-1, self.n)
            if len(t):
                q, _ = np.linalg.qr(t.T)
                t = q.T[: len(t)]
            self.tangent = t
            self.normals = _null_space(t, self.n) if len(t) else np.eye(self.n)
        elif normals is not None:
            nr = np.atleast_2d(np.asarray(normals, dtype=float))
            self.tangent = _null_space(nr, self.n)
            q, _ = np.linalg.qr(nr.T)
            self.normals = q.T[: len(nr)]
        else:
            raise GeometryError("give a tangent basis or normals")
        self.dimension = len(self.tangent)

    @classmethod
    def hyperplane(cls, normal, offset: float) -> "AffineSubspace":
        """``{x : normal . x = offset}``."""
        normal = np.asarray(normal, dtype=float)
        nn = float(normal @ normal)
        return cls(normal * offset / nn, normals=[normal])

    @property
    def polynomials(self):
        return [MPoly.linear(list(nv), -float(nv @ self.point)) for nv in self.normals]

    def distance(self, x):
        rel = np.asarray(x, dtype=float) - self.point
        return np.linalg.norm(rel @ self.normals.T, axis=-1)

    def project(self, x):
        rel = np.asarray(x, dtype=float) - self.point
        return self.point + (rel @ self.tangent.T) @ self.tangent if self.dimension else np.broadcast_to(self.point, rel.shape).copy()

    def tangent_basis(self, z=None):
        return self.tangent

    def to_dict(self):
        if self.dimension == self.n - 1:
            nv = self.normals[0]
            return {"kind": "hyperplane", "coeffs": nv.tolist() + [float(-(nv @ self.point))]}
        return {"kind": "affine", "point": self.point.tolist(), "tangent": self.tangent.tolist()}


class Sphere(Variety):
    kind = "sphere"

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0:
            raise GeometryError("sphere radius must be positive")
        self.n = len(self.center)
        self.dimension = self.n - 1

    @property
    def polynomials(self):
        p = MPoly.constant(self.n, -Fraction(self.radius) ** 2)
        for i, c in enumerate(self.center):
            xi = MPoly.variable(self.n, i) - c
            p = p + xi * xi
        return [p]

    def distance(self, x):
        return np.abs(np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1) - self.radius)

    def project(self, x):
        rel = np.asarray(x, dtype=float) - self.center
        norm = np.linalg.norm(rel, axis=-1, keepdims=True)
        norm = np.where(norm == 0, 1.0, norm)
        return self.center + self.radius * rel / norm

    def tangent_basis(self, z):
        normal = normalize(np.asarray(z, dtype=float) - self.center)
        return _null_space(normal[None], self.n)

    def to_dict(self):
        return {"kind": "sphere", "coeffs": self.center.tolist() + [self.radius]}


class QuadricGraph(Variety):
    """Graph ``x_n = x'^T Q x' + b . x' + c`` over ``x' in R^{n-1}``."""

    kind = "quadric_graph"

    def __init__(self, Q, b=None, c: float = 0.0):
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.Q = 0.5 * (self.Q + self.Q.T)
        m = len(self.Q)
        self.b = np.zeros(m) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)
        self.n = m + 1
        self.dimension = m

    def height(self, u):
        u = np.asarray(u, dtype=float)
        return np.einsum("...i,ij,...j->...", u, self.Q, u) + u @ self.b + self.c

    @property
    def polynomials(self):
        m = self.n - 1
        xs = [MPoly.variable(self.n, i) for i in range(self.n)]
        p = xs[-1] - self.c
        for i in range(m):
            p = p - xs[i] * float(self.b[i])
            for j in range(m):
                if self.Q[i, j]:
                    p = p - xs[i] * xs[j] * float(self.Q[i, j])
        return [p]

    def project(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        shape = x.shape
        x = x.reshape(-1, self.n)
        out = np.empty_like(x)
        for k, pt in enumerate(x):
            out[k] = self._foot(pt)
        return out.reshape(shape)

    def _lagrange_candidates(self, xp, xn):
        # In the eigenbasis of Q a critical point has
        # u_i = (xp_i - lam b_i) / (1 + 2 lam q_i) with lam = h(u) - xn, so lam
        # is a root of a scalar rational function; bracket roots between poles.
        q, R = np.linalg.eigh(self.Q)
        bp, xq = R.T @ self.b, R.T @ xp

        def u_of(lam):
            return (xq - lam * bp) / (1 + 2 * lam * q)

        def g(lam):
            u = u_of(lam)
            return float(np.sum(q * u * u) + bp @ u + self.c - xn - lam)

        poles = sorted({-1 / (2 * qi) for qi in q if abs(qi) > 1e-14})
        scale = 1.0 + abs(xn) + float(np.abs(xp).sum()) + float(np.abs(self.b).sum()) + abs(self.c)
        edges = [-1e3 * scale] + poles + [1e3 * scale]
        out = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            w = hi - lo
            ts = lo + w * (0.5 - 0.5 * np.cos(np.linspace(0, math.pi, 401)))[1:-1]
            vals = [g(t) for t in ts]
            for t0, t1, v0, v1 in zip(ts[:-1], ts[1:], vals[:-1], vals[1:]):
                if not (np.isfinite(v0) and np.isfinite(v1)):
                    continue
                if v0 == 0:
                    out.append(R @ u_of(t0))
                elif v0 * v1 < 0:
                    out.append(R @ u_of(brentq(g, t0, t1, xtol=1e-15)))
        return out

    def _newton(self, u, xp, xn):
        for _ in range(100):
            hval = self.height(u) - xn
            g_h = 2 * self.Q @ u + self.b
            grad = (u - xp) + hval * g_h
            hess = np.eye(len(u)) + np.outer(g_h, g_h) + hval * 2 * self.Q
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = grad
            if not np.all(np.isfinite(step)):
                break
            # backtracking on the objective
            f0 = 0.5 * (np.sum((u - xp) ** 2) + hval ** 2)
            t = 1.0
            while t > 1e-8:
                un = u - t * step
                fn = 0.5 * (np.sum((un - xp) ** 2) + (self.height(un) - xn) ** 2)
                if fn <= f0:
                    break
                t *= 0.5
            else:
                break
            u = un
            if np.linalg.norm(t * step) < 1e-15:
                break
        return u

    def _foot(self, x):
        xp, xn = x[:-1], x[-1]
        starts = [xp.copy(), np.zeros_like(xp)] + self._lagrange_candidates(xp, xn)
        # the focal case leaves u undetermined along an eigenvector; probe both sides
        _, R = np.linalg.eigh(self.Q)
        reach = 1.0 + float(np.linalg.norm(x))
        for col in R.T:
            starts += [xp + reach * col, xp - reach * col]
        best, best_d = None, math.inf
        for u in starts:
            u = self._newton(np.array(u, dtype=float), xp, xn)
            z = np.append(u, self.height(u))
            d = np.linalg.norm(z - x)
            if d < best_d:
                best, best_d = z, d
        return best

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(self.project(x) - x, axis=-1)

    def tangent_basis(self, z):
        z = np.asarray(z, dtype=float)
        g_h = 2 * self.Q @ z[:-1] + self.b
        normal = normalize(np.append(-g_h, 1.0))
        return _null_space(normal[None], self.n)

    def to_dict(self):
        return {"kind": "quadric_graph", "Q": self.Q.tolist(), "b": self.b.tolist(), "c": self.c}


class PointCloudVariety(Variety):
    """Zero set of a single polynomial sampled densely inside a box.

    Distances are measured to the sample, so they are accurate to the
    sampling spacing; tangent spaces come from the exact gradient.
    """

    kind = "poly"
    exact = False

    def __init__(self, poly: MPoly, lo, hi, spacing: float):
        self.poly = poly
        self.n = poly.nvars
        self.dimension = self.n - 1
        self.spacing = float(spacing)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.samples = self._sample()
        self._tree = cKDTree(self.samples) if len(self.samples) else None

    @property
    def polynomials(self):
        return [self.poly]

    def _sample(self) -> np.ndarray:
        # sign changes along grid edges, located by linear interpolation
        h = self.spacing / 2
        axes = [np.arange(a, b + h, h) for a, b in zip(self.lo, self.hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
        vals = self.poly(mesh)
        pts = [mesh[vals == 0]]
        for ax in range(self.n):
            sl0 = [slice(None)] * self.n
            sl1 = [slice(None)] * self.n
            sl0[ax] = slice(0, -1)
            sl1[ax] = slice(1, None)
            v0, v1 = vals[tuple(sl0)], vals[tuple(sl1)]
            cross = (v0 * v1) < 0
            if cross.any():
                t = (v0[cross] / (v0[cross] - v1[cross]))[:, None]
                p0 = mesh[tuple(sl0)][cross]
                p1 = mesh[tuple(sl1)][cross]
                pts.append(p0 + t * (p1 - p0))
        return np.vstack(pts) if pts else np.zeros((0, self.n))

    def _require(self):
        if self._tree is None:
            raise OracleUnavailable("the sampled zero set is empty inside the sampling box")

    def distance(self, x):
        self._require()
        d, _ = self._tree.query(np.asarray(x, dtype=float))
        return d

    def project(self, x):
        self._require()
        _, idx = self._tree.query(np.asarray(x, dtype=float))
        return self.samples[idx]

    def tangent_basis(self, z):
        grad = np.array([g(np.asarray(z, dtype=float)) for g in self.poly.gradient()])
        if np.linalg.norm(grad) == 0:
            raise GeometryError("singular point of the zero set")
        return _null_space(normalize(grad)[None], self.n)

    def points_near(self, x, radius, spacing=None):
        self._require()
        idx = self._tree.query_ball_point(np.asarray(x, dtype=float), radius)
        return self.samples[sorted(idx)]

    def to_dict(self):
        return {"kind": "poly", "coeffs": self.poly.to_json()}


def variety_from_dict(data: dict, box=None, spacing: float | None = None) -> Variety:
    """Build a variety from ``{"kind": ..., "coeffs": [...]}``.

    ``hyperplane``: ``[a_1..a_n, b]`` for ``a . x + b = 0``;
    ``sphere``: ``[c_1..c_n, R]``;
    ``poly``: rows ``[e_1..e_n, coef]`` -- needs ``box`` and ``spacing`` for
    its point-cloud oracle.
    """
    kind = data.get("kind")
    if kind == "hyperplane":
        co = [float(c) for c in data["coeffs"]]
        return AffineSubspace.hyperplane(co[:-1], -co[-1])
    if kind == "sphere":
        co = [float(c) for c in data["coeffs"]]
        return Sphere(co[:-1], co[-1])
    if kind == "affine":
        return AffineSubspace(data["point"], tangent=data["tangent"])
    if kind == "quadric_graph":
        return QuadricGraph(data["Q"], data.get("b"), data.get("c", 0.0))
    if kind == "poly":
        poly = MPoly.from_json(data["coeffs"])
        if box is None or spacing is None:
            raise OracleUnavailable("a 'poly' variety needs a sampling box and spacing for its point cloud")
        return PointCloudVariety(poly, box[0], box[1], spacing)
    raise GeometryError(f"unknown variety kind {kind!r}")


def load_variety(text: str, **kw) -> Variety:
    return variety_from_dict(json.loads(text), **kw)


# ---------------------------------------------------------------------------


def tube_samples(t: Tube, spacing: float, ball: Optional[Ball] = None) -> np.ndarray:
    """Grid of points of ``t`` in its own ``(axial, cross-section)`` coordinates."""
    n = t.n
    ts = np.arange(-0.5, 0.5 + spacing / 2, spacing)
    ts = np.clip(ts, -0.5, 0.5)
    basis = _null_space(t.direction[None], n)
    w1 = np.arange(-t.delta, t.delta + spacing / 2, spacing)
    w1 = np.clip(w1, -t.delta, t.delta)
    cross = np.stack(np.meshgrid(*([w1] * (n - 1)), indexing="ij"), -1).reshape(-1, n - 1)
    cross = cross[np.linalg.norm(cross, axis=1) <= t.delta + 1e-15]
    if ball is not None:
        # restrict the axial range to the ball before building the grid
        a0 = float((ball.center - t.center) @ t.direction)
        reach = ball.radius + t.delta
        ts = ts[np.abs(ts - a0) <= reach + spacing]
    pts = t.center + ts[:, None, None] * t.direction + (cross @ basis)[None, :, :]
    pts = pts.reshape(-1, n)
    if ball is not None:
        pts = pts[ball.contains(pts)]
    return pts


@dataclass(frozen=True)
class TangencyResult:
    meets: bool  # condition i)
    aligned: bool  # condition ii)
    inclusion: bool  # T within 2B lies in the 2 delta-neighbourhood
    max_angle: float
    threshold: float

    def __bool__(self):
        return self.meets and self.aligned and self.inclusion


def _affine_patch_meets(Z: AffineSubspace, x, rad_x, x0, rad_0) -> np.ndarray:
    # does Z meet both B(x, rad_x) and B(x0, rad_0)?  Two balls in the flat.
    d1 = Z.distance(x)
    d0 = float(Z.distance(x0[None])[0])
    if d0 > rad_0:
        return np.zeros(len(x), dtype=bool)
    r1 = np.sqrt(np.clip(rad_x ** 2 - d1 ** 2, 0, None))
    r0 = math.sqrt(max(rad_0 ** 2 - d0 ** 2, 0.0))
    gap = np.linalg.norm(Z.project(x) - Z.project(x0[None])[0], axis=1)
    return (d1 <= rad_x) & (gap <= r1 + r0)


def _line_subspace_angle(v, basis) -> float:
    if len(basis) == 0:
        return math.pi / 2
    proj = np.linalg.norm(basis @ v)
    return float(np.arccos(np.clip(proj, 0.0, 1.0)))


def tangency_check(
    t: Tube, Z: Variety, B: Ball, c_tang: float = 0.1, spacing: float | None = None
) -> TangencyResult:
    """Sampled test that ``t`` is tangent to ``Z`` in ``B``.

    i) the tube meets ``B`` within ``delta`` of ``Z``; ii) at every ``z`` of
    ``Z`` in ``2B`` lying ``4 delta``-close to a point of the tube, the tube
    direction is within ``c_tang delta / r`` of ``T_z Z``; plus the derived
    inclusion of ``T`` in ``2B`` in the ``2 delta``-neighbourhood of ``Z``.
    Samples are spaced ``delta / 4`` unless told otherwise.
    """
    delta, r = t.delta, B.radius
    if not delta < r:
        raise GeometryError("tangency needs delta < r")
    h = spacing or delta / 4
    B2 = B.scaled(2)
    pts = tube_samples(t, h, B2)
    thr = c_tang * delta / r
    if not len(pts):
        return TangencyResult(False, True, True, 0.0, thr)
    dist = Z.distance(pts)
    in_B = B.contains(pts)
    meets = bool(np.any(in_B & (dist <= delta)))
    inclusion = bool(np.all(dist <= 2 * delta))

    near = dist <= 4 * delta
    max_angle = 0.0
    if np.any(near):
        if Z.constant_tangent:
            ok = _affine_patch_meets(Z, pts[near], 4 * delta, B.center, 2 * r)
            if ok.any():
                max_angle = _line_subspace_angle(t.direction, Z.tangent_basis())
        else:
            seen = set()
            for x in pts[near]:
                for z in Z.points_near(x, 4 * delta, h):
                    if not B2.contains(z):
                        continue
                    key = tuple(np.round(z / (h / 4)).astype(int))
                    if key in seen:
                        continue
                    seen.add(key)
                    max_angle = max(max_angle, _line_subspace_angle(t.direction, Z.tangent_basis(z)))
    aligned = max_angle <= thr + 1e-15
    return TangencyResult(meets, aligned, inclusion, max_angle, thr)


def neighborhood_volume(Z: Variety, B: Ball, delta: float, grid_res: float) -> float:
    """Midpoint-grid estimate of ``|B ∩ N_delta Z|``."""
    if grid_res > delta / 4 + 1e-15:
        raise GeometryError("grid_res must be at most delta / 4")
    lo, hi = B.bounds()
    counts = np.ceil((hi - lo) / grid_res).astype(int)
    total = 0
    # slab-by-slab along the first axis to bound memory
    axes = [lo[i] + (np.arange(counts[i]) + 0.5) * grid_res for i in range(B.n)]
    for x0 in axes[0]:
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), -1).reshape(-1, B.n - 1)
        pts = np.column_stack([np.full(len(rest), x0), rest])
        pts = pts[B.contains(pts)]
        if len(pts):
            total += int(np.count_nonzero(Z.distance(pts) <= delta))
    return total * grid_res ** B.n
