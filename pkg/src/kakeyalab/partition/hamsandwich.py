"""Polynomial ham-sandwich cuts of finite planar measures."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from ..algebra import MPoly, monomials_up_to, veronese_dimension


class BudgetTooSmall(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


class Measure:
    """Finitely many atoms: points (or centres of delta-balls) with masses."""

    def __init__(self, points, masses=None, radius: float = 0.0):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        m = np.ones(len(pts)) if masses is None else np.asarray(masses, dtype=float).reshape(-1)
        if len(m) != len(pts):
            raise ValueError("points and masses differ in length")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        if not m.sum() > 0:
            raise ValueError("a measure needs positive total mass")
        self.points = pts
        self.masses = m
        self.radius = float(radius)

    def __len__(self):
        return len(self.points)

    @property
    def total(self) -> float:
        return math.fsum(self.masses)

    def subset(self, idx) -> "Measure":
        idx = np.asarray(idx, dtype=int)
        return Measure(self.points[idx], self.masses[idx], self.radius)

    @classmethod
    def uniform(cls, count: int, seed: int = 0, lo=(0.0, 0.0), hi=(1.0, 1.0), radius: float = 0.0) -> "Measure":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(lo, hi, (count, 2)), np.ones(count), radius)

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "masses": self.masses.tolist(), "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "Measure":
        return cls(d["points"], d.get("masses"), d.get("radius", 0.0))

    @classmethod
    def load(cls, path) -> "Measure":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))


@dataclass
class Frame:
    """Affine normalisation ``u = (x - center) / scale`` with rational data."""

    center: tuple
    scale: Fraction

    @classmethod
    def around(cls, points) -> "Frame":
        """Dyadic centre and power-of-two scale, keeping pulled-back
        coefficients short; ``|u| <= 1 + 2^-10`` on the points."""
        lo, hi = points.min(axis=0), points.max(axis=0)
        c = tuple(Fraction(round(float(v) * 1024), 1024) for v in (lo + hi) / 2)
        half = max(float((hi - lo).max()) / 2, 2.0 ** -20)
        return cls(c, Fraction(2) ** math.ceil(math.log2(half)))

    def apply(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - np.array([float(c) for c in self.center])) / float(self.scale)

    def pull_back(self, coeffs: Sequence[Fraction], monos) -> MPoly:
        """The polynomial ``x -> sum c_ab T_a(u_1) T_b(u_2)`` with
        ``u = (x - center)/scale``, expanded exactly."""
        power = chebyshev_to_power(coeffs, monos)
        u = [(MPoly.variable(2, i) - self.center[i]) * (1 / self.scale) for i in range(2)]
        powers = [[MPoly.constant(2, 1)] for _ in range(2)]
        deg = max((sum(m) for m in monos), default=0)
        for i in range(2):
            for _ in range(deg):
                powers[i].append(powers[i][-1] * u[i])
        out = MPoly(2)
        for (a, b), c in power.items():
            if c:
                out = out + powers[0][a] * powers[1][b] * c
        return out


def chebyshev_table(D: int) -> List[List[int]]:
    """Integer power coefficients of ``T_0 .. T_D``."""
    T = [[1], [0, 1]]
    for k in range(1, D):
        nxt = [0] + [2 * v for v in T[k]]
        for i, v in enumerate(T[k - 1]):
            nxt[i] -= v
        T.append(nxt)
    return T[: D + 1]


def chebyshev_to_power(coeffs: Sequence[Fraction], monos) -> dict:
    """Exact power-basis coefficients of ``sum c_ab T_a(u) T_b(v)``."""
    deg = max((max(m) for m in monos), default=0)
    T = chebyshev_table(max(deg, 1))
    out: dict = {}
    for c, (a, b) in zip(coeffs, monos):
        if not c:
            continue
        for i, ti in enumerate(T[a]):
            if ti:
                for j, tj in enumerate(T[b]):
                    if tj:
                        out[(i, j)] = out.get((i, j), 0) + c * ti * tj
    return out


def features(u: np.ndarray, monos) -> np.ndarray:
    """Tensor Chebyshev features ``T_a(u_1) T_b(u_2)``; far better
    conditioned on ``[-1, 1]^2`` than raw monomials."""
    deg = max((max(m) for m in monos), default=0)
    V = [np.polynomial.chebyshev.chebvander(u[:, i], deg) for i in range(2)]
    return np.column_stack([V[0][:, a] * V[1][:, b] for a, b in monos])


def imbalances(values: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``|m_+ - m_-|`` for every column of the atom-by-measure weight matrix."""
    return np.abs(np.sign(values) @ W)


def _allowed(W: np.ndarray, tol: float) -> np.ndarray:
    # an odd count of equal atoms cannot be split evenly: allow one atom
    return np.maximum(tol * W.sum(axis=0), W.max(axis=0))


def _score(values, W, allowed):
    return float(np.max(imbalances(values, W) / allowed))


def _line_search(Phi, c, e, W, allowed, k=60):
    """Best discrete score along ``c + t e`` over the ``k`` nearest sign
    breakpoints on either side of ``t = 0``."""
    a, b = Phi @ c, Phi @ e
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -a / b
    t = t[np.isfinite(t)]
    pos = np.sort(t[t > 0])[:k]
    neg = np.sort(t[t < 0])[::-1][:k]
    bps = np.concatenate([neg[::-1], [0.0], pos])
    cand = np.concatenate([(bps[:-1] + bps[1:]) / 2, [0.0]]) if len(bps) > 1 else np.array([0.0])
    vals = a[None, :] + cand[:, None] * b[None, :]
    scores = np.max(np.abs(np.sign(vals) @ W) / allowed, axis=1)
    j = int(np.argmin(scores))
    return cand[j], scores[j]


def _repair(Phi, c, W, allowed, rng, iters=300):
    """Flip the atoms nearest the zero set on the heavy side of every
    unbalanced measure by a minimum-norm coefficient change."""
    score = _score(Phi @ c, W, allowed)
    member = W > 0
    for _ in range(iters):
        if score <= 1:
            break
        v = Phi @ c
        signed = np.sign(v) @ W
        bad = np.flatnonzero(np.abs(signed) > allowed)
        rows, targets = [], []
        for j in bad:
            heavy = np.flatnonzero(member[:, j] & (np.sign(v) == np.sign(signed[j])))
            if not len(heavy):
                continue
            need = (abs(signed[j]) - allowed[j]) / 2
            order = heavy[np.argsort(np.abs(v[heavy]))]
            moved = np.cumsum(W[order, j])
            k = int(np.searchsorted(moved, need - 1e-12)) + 1
            k = min(len(order), max(1, k + int(rng.integers(0, 2))))
            for i in order[:k]:
                rows.append(i)
                targets.append(-0.5 * v[i])
        if not rows:
            break
        A = Phi[rows]
        dc = np.linalg.lstsq(A, np.array(targets) - A @ c * 0 - v[rows], rcond=None)[0]
        improved = False
        for scale in (1.0, 0.5, 0.25, 1.5):
            cn = c + scale * dc
            sn = _score(Phi @ cn, W, allowed)
            if sn < score or (sn == score and rng.uniform() < 0.3):
                c, score, improved = cn, sn, True
                break
        if not improved:
            e = rng.standard_normal(len(c)) * np.linalg.norm(c)
            t, sn = _line_search(Phi, c, e, W, allowed)
            if sn <= score:
                c, score = c + t * e, sn
    return c, score


def _median_rows(v, W):
    """Per measure, the pair of consecutive atoms (in ``v`` order) between
    which the zero set must pass for the best split."""
    pairs = []
    for j in range(W.shape[1]):
        idx = np.flatnonzero(W[:, j] > 0)
        order = idx[np.argsort(v[idx], kind="stable")]
        cum = np.cumsum(W[order, j])
        k = int(np.argmin(np.abs(2 * cum - cum[-1])))
        b = order[min(k + 1, len(order) - 1)]
        pairs.append((order[k], b))
    return pairs


def _median_newton(Phi, c, W, allowed, iters=60):
    """Damped minimum-norm Newton steps on the piecewise linear map sending
    ``c`` to the mid-gap values of every measure's weighted median."""
    best_c, best_s = c, _score(Phi @ c, W, allowed)
    for _ in range(iters):
        if best_s <= 1:
            break
        v = Phi @ c
        pairs = _median_rows(v, W)
        A = np.array([(Phi[a] + Phi[b]) / 2 for a, b in pairs])
        r = np.array([(v[a] + v[b]) / 2 for a, b in pairs])
        dc = np.linalg.lstsq(A, -r, rcond=None)[0]
        step = None
        for t in (1.0, 0.5, 0.25, 0.1):
            cn = c + t * dc
            sn = _score(Phi @ cn, W, allowed)
            if step is None or sn < step[1]:
                step = (cn, sn)
            if sn < best_s:
                break
        c = step[0] / np.linalg.norm(step[0])
        if step[1] < best_s:
            best_c, best_s = c, step[1]
    return best_c, best_s


def _surrogate(Phi, c, W, allowed, rng, refine_steps):
    """``tanh`` least squares at shrinking widths, then discrete repair and
    line searches along coordinate and random directions."""
    N = Phi.shape[1]
    Mj = W.sum(axis=0)
    spread = np.std(Phi @ c) or 1.0
    for sig in (1.0, 0.3, 0.1, 0.03):
        s = sig * spread

        def resid(x, s=s):
            v = np.tanh(Phi @ x / s)
            return np.append(v @ W / Mj, np.linalg.norm(x) - 1)

        def jac(x, s=s):
            g = (1 - np.tanh(Phi @ x / s) ** 2) / s
            J = (W * g[:, None]).T @ Phi / Mj[:, None]
            return np.vstack([J, x / max(np.linalg.norm(x), 1e-300)])

        c = least_squares(resid, c, jac=jac, method="lm" if W.shape[1] + 1 >= N else "trf",
                          max_nfev=200).x
    c, score = _repair(Phi, c, W, allowed, rng)
    for step in range(refine_steps):
        if score <= 1:
            break
        e = np.zeros(N)
        if step % 3 == 0:
            e[step // 3 % N] = 1.0
        else:
            e = rng.standard_normal(N)
        e *= np.linalg.norm(c)
        t, s_new = _line_search(Phi, c, e, W, allowed)
        if s_new <= score:
            c, score = c + t * e, s_new
    return c / np.linalg.norm(c), score


def solve_bisection(Phi: np.ndarray, W: np.ndarray, tol: float = 0.02, max_restarts: int = 30,
                    seed: int = 0, refine_steps: int = 400, surrogate: bool = True):
    """Coefficient vector ``c`` with ``sign(Phi c)`` bisecting every column of ``W``.

    Random starts on the unit sphere are driven by Newton steps on the
    measures' medians.  If none succeeds and ``surrogate`` is set, a smooth
    ``tanh`` surrogate with discrete repair gets a third as many restarts.
    Returns ``(c, score)`` with ``score <= 1`` on success.
    """
    rng = np.random.default_rng(seed)
    N = Phi.shape[1]
    allowed = _allowed(W, tol)
    best_c, best_s = None, math.inf
    starts = rng.standard_normal((max_restarts, N))
    for c in starts:
        c, score = _median_newton(Phi, c / np.linalg.norm(c), W, allowed)
        if score < best_s:
            best_c, best_s = c, score
        if best_s <= 1:
            return best_c, best_s
    if surrogate:
        for c in starts[: max(1, max_restarts // 3)]:
            c, score = _surrogate(Phi, c / np.linalg.norm(c), W, allowed, rng, refine_steps)
            if score < best_s:
                best_c, best_s = c, score
            if best_s <= 1:
                break
    return best_c, best_s


def rationalize(c: np.ndarray, bits: int = 30) -> List[Fraction]:
    """Dyadic rationals ``k / 2^bits`` after scaling the largest entry to 1."""
    c = c / np.max(np.abs(c))
    return [Fraction(int(round(float(v) * 2 ** bits)), 2 ** bits) for v in c]


def ham_sandwich_lifted(measures: Sequence[Measure], degree_budget: int, tol: float = 0.02,
                        max_restarts: int = 30, seed: int = 0, frame: Optional[Frame] = None) -> MPoly:
    """A polynomial of degree ``<= degree_budget`` whose zero set bisects
    every measure to within ``max(tol * mass, largest atom)``.

    The polynomial has rational coefficients; the bisection is re-audited
    with exact signs of the returned polynomial.
    """
    measures = list(measures)
    dim = veronese_dimension(2, degree_budget)
    if len(measures) > dim:
        raise BudgetTooSmall(f"{len(measures)} measures exceed the lift dimension {dim} at degree {degree_budget}")
    pts = np.vstack([m.points for m in measures])
    W = np.zeros((len(pts), len(measures)))
    k = 0
    for j, m in enumerate(measures):
        W[k : k + len(m), j] = m.masses
        k += len(m)
    frame = frame or Frame.around(pts)
    monos = monomials_up_to(2, degree_budget)
    Phi = features(frame.apply(pts), monos)
    c, score = solve_bisection(Phi, W, tol, max_restarts, seed)
    coeffs = rationalize(c)
    P = frame.pull_back(coeffs, monos)
    audit = bisection_imbalance(P, measures)
    limits = [max(tol * m.total, float(m.masses.max())) for m in measures]
    if score > 1 or any(a > l * (1 + 1e-9) for a, l in zip(audit, limits)):
        raise NonConvergence(
            f"no bisecting polynomial of degree {degree_budget} within tolerance after {max_restarts} restarts "
            f"(worst imbalance ratio {score:.3g})"
        )
    return P


def exact_signs(P: MPoly, points) -> np.ndarray:
    """Signs of ``P`` at ``points`` (floats taken exactly)."""
    return np.array([int(np.sign(P.evaluate_exact(p))) for p in np.asarray(points, dtype=float).tolist()])


def bisection_imbalance(P: MPoly, measures: Sequence[Measure]) -> List[float]:
    out = []
    for m in measures:
        s = exact_signs(P, m.points)
        out.append(abs(math.fsum(m.masses[s > 0]) - math.fsum(m.masses[s < 0])))
    return out
