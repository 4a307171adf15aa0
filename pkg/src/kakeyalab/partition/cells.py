"""Degree-d partitions of planar measures into delta-shrunken cells."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import ndimage

from ..algebra import MPoly, monomials_up_to, product, veronese_dimension
from .hamsandwich import (
    Frame,
    Measure,
    NonConvergence,
    _allowed,
    exact_signs,
    features,
    rationalize,
    solve_bisection,
)

# Empirical constants, frozen after calibration on uniform 10^3-atom measures.
CELL_COUNT_CONSTANT = 4  # nonempty cells <= C d^2
CELLULAR_FRACTION = 0.5  # cellular needs >= c d^2 balanced cells


def round_degree(clusters: int, slack: float = 1.0) -> int:
    """Least degree whose Veronese lift has ``slack`` times as many free
    coefficients as there are measures to bisect."""
    D = 1
    while veronese_dimension(2, D) < slack * clusters:
        D += 1
    return D


def round_count(d: int) -> int:
    return max(1, math.ceil(2 * math.log2(d))) if d > 1 else 1


@dataclass
class Cell:
    label: int
    mass: float
    atoms: np.ndarray
    pixels: int
    diameter: float


@dataclass
class Partition:
    P: MPoly
    rounds: List[MPoly]
    degree: int
    d: int
    delta: float
    cells: List[Cell]
    near_mass: float
    near_atoms: np.ndarray
    total: float
    labels: np.ndarray = field(repr=False)
    origin: np.ndarray = field(repr=False)
    h: float = 0.0
    round_scores: List[float] = field(default_factory=list)

    @property
    def cell_masses(self) -> np.ndarray:
        return np.array([c.mass for c in self.cells])

    @property
    def n_components(self) -> int:
        return int(self.labels.max())

    def label_at(self, x) -> np.ndarray:
        """Cell label of each point (0 = within delta of Z(P) or outside the box)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        idx = np.floor((x - self.origin) / self.h).astype(int)
        ok = np.all((idx >= 0) & (idx < np.array(self.labels.shape)), axis=1)
        out = np.zeros(len(x), dtype=int)
        out[ok] = self.labels[idx[ok, 0], idx[ok, 1]]
        return out

    def to_json(self) -> str:
        return json.dumps({"degree": self.degree, "d": self.d, "delta": self.delta,
                           "P": self.P.to_json(), "rounds": [r.to_json() for r in self.rounds]})

    def cell_rows(self):
        yield ("cell", "mass", "atoms", "pixels", "diameter")
        for c in self.cells:
            yield (c.label, c.mass, len(c.atoms), c.pixels, c.diameter)


def _disc(radius_px: int) -> np.ndarray:
    r = np.arange(-radius_px, radius_px + 1)
    return (r[:, None] ** 2 + r[None, :] ** 2) <= radius_px ** 2


def partition_measure(F: Measure, d: int, delta: float, tol: float = 0.02, seed: int = 0,
                      max_restarts: int = 30, box=None,
                      slack: float = 1.0) -> Partition:
    """Product of ``ceil(2 log2 d)`` rounds of simultaneous bisections.

    Round ``j`` bisects each of the (up to ``2^j``) sign-pattern clusters of
    the earlier rounds with a polynomial of the least adequate degree.
    ``round_scores`` holds each round's worst imbalance over its allowance.
    """
    if not 1 <= d <= 16:
        raise ValueError("d must lie in [1, 16]")
    pts, mass = F.points, F.masses
    frame = Frame.around(pts)
    u = frame.apply(pts)
    code = np.zeros(len(pts), dtype=np.int64)
    alive = np.ones(len(pts), dtype=bool)  # not on Z of an earlier round
    rounds, scores, coeff_list = [], [], []
    for j in range(round_count(d)):
        keys, inv = np.unique(code[alive], return_inverse=True)
        W = np.zeros((len(pts), len(keys)))
        idx = np.flatnonzero(alive)
        W[idx, inv] = mass[idx]
        W = W[:, W.sum(axis=0) > 0]
        D0 = round_degree(W.shape[1], slack)
        # a nearly square lift can stall; retry with up to two extra degrees
        for D in range(D0, D0 + 3):
            monos = monomials_up_to(2, D)
            Phi = features(u, monos)
            c, score = solve_bisection(Phi, W, tol, max_restarts if D == D0 + 2 else 10,
                                       seed + 7919 * j, surrogate=D == D0 + 2)
            coeffs = rationalize(c)
            P_j = frame.pull_back(coeffs, monos)
            # exact audit of the rational round polynomial
            sgn = np.zeros(len(pts))
            sgn[idx] = exact_signs(P_j, pts[idx])
            audit = float(np.max(np.abs(sgn @ W) / _allowed(W, tol)))
            if score <= 1 and audit <= 1 + 1e-9:
                break
        else:
            raise NonConvergence(f"round {j} ({W.shape[1]} clusters, degrees {D0}..{D}): "
                                 f"imbalance {max(score, audit):.3g} times the allowance")
        cf = np.array([float(v) for v in coeffs])
        code = code * 2 + (sgn > 0)
        alive &= sgn != 0
        scores.append(audit)
        coeff_list.append((cf, monos))
        rounds.append(P_j)
    P = product(rounds)

    # grid of resolution delta/4 over the padded box
    h = delta / 4
    if box is None:
        lo, hi = pts.min(axis=0) - 2 * delta, pts.max(axis=0) + 2 * delta
    else:
        lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
    shape = tuple(int(math.ceil(v)) for v in (hi - lo) / h)
    xs = [lo[i] + (np.arange(shape[i]) + 0.5) * h for i in range(2)]
    grid = np.stack(np.meshgrid(*xs, indexing="ij"), -1).reshape(-1, 2)
    ug = frame.apply(grid)
    disc = _disc(int(math.floor(delta / h)))
    keep = np.ones(shape, dtype=bool)
    for cf, monos in coeff_list:
        v = (features(ug, monos) @ cf).reshape(shape)
        # a pixel survives if every pixel within delta shares its strict sign
        keep &= ndimage.binary_erosion(v > 0, disc, border_value=1) | ndimage.binary_erosion(v < 0, disc, border_value=1)
    labels, ncomp = ndimage.label(keep, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])

    pix = np.floor((pts - lo) / h).astype(int)
    inside = np.all((pix >= 0) & (pix < np.array(shape)), axis=1)
    atom_label = np.zeros(len(pts), dtype=int)
    atom_label[inside] = labels[pix[inside, 0], pix[inside, 1]]
    cells = []
    if ncomp:
        sizes = np.bincount(labels.ravel(), minlength=ncomp + 1)
        for lab in np.unique(atom_label[atom_label > 0]):
            members = np.flatnonzero(atom_label == lab)
            cells.append(Cell(int(lab), math.fsum(mass[members]), members, int(sizes[lab]),
                              _diameter(labels == lab, h)))
    near = np.flatnonzero(atom_label == 0)
    return Partition(P, rounds, P.degree, d, delta, cells, math.fsum(mass[near]), near, F.total,
                     labels, lo, h, scores)


def _diameter(mask: np.ndarray, h: float) -> float:
    ij = np.argwhere(mask)
    if len(ij) < 2:
        return 0.0
    # extreme points along a few directions bound the diameter from below
    best = 0.0
    for a in np.linspace(0, math.pi, 16, endpoint=False):
        proj = ij @ np.array([math.cos(a), math.sin(a)])
        best = max(best, float(proj.max() - proj.min()))
    return (best + 1) * h


@dataclass
class DichotomyResult:
    branch: str  # "cellular" or "algebraic"
    retained: List[Cell]
    retained_mass: float
    near_mass: float
    threshold: float
    witness: Optional[MPoly] = None


def classify_dichotomy(F: Measure, part: Partition, c: float = CELLULAR_FRACTION) -> DichotomyResult:
    """Cellular when at least ``c d^2`` cells of comparable mass carry half
    of the cell-assigned mass (and cells carry most of the total);
    algebraic otherwise, with the near-``Z(P)`` mass as the witness."""
    cells = [cl for cl in part.cells if cl.mass > 0]
    cell_mass = math.fsum(cl.mass for cl in cells)
    best: List[Cell] = []
    best_mass = 0.0
    if cells:
        logm = np.log2([cl.mass for cl in cells])
        # dyadic pigeonholing over shifted dyadic grids
        for shift in np.arange(16) / 16:
            bins = np.floor(logm - shift)
            for b in np.unique(bins):
                group = [cl for cl, bb in zip(cells, bins) if bb == b]
                gm = math.fsum(cl.mass for cl in group)
                if gm > best_mass:
                    best, best_mass = group, gm
    threshold = c * part.d ** 2
    cellular = (
        len(best) >= threshold
        and best_mass >= 0.5 * cell_mass
        and part.near_mass <= 0.5 * part.total
    )
    if cellular:
        return DichotomyResult("cellular", best, best_mass, part.near_mass, threshold)
    return DichotomyResult("algebraic", best, best_mass, part.near_mass, threshold, witness=part.P)
