"""Certified counts of the cells a tube core can enter."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ..algebra import MPoly, as_fraction, count_roots_open, upoly_degree, upoly_trim

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class CrossingReport:
    observed: int  # sign runs of P along the core at the sample points
    certified: int  # Sturm: distinct interior roots + 1
    restriction_bound: int  # deg(P o line) + 1
    degree_bound: int  # deg P + 1
    roots: int
    cells_visited: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.observed <= self.certified <= self.restriction_bound <= self.degree_bound

    def to_row(self):
        return (self.observed, self.certified, self.restriction_bound, self.degree_bound,
                "" if self.cells_visited is None else self.cells_visited)


def _integer_signs(q, samples: int) -> np.ndarray:
    """Exact signs of ``q(k/N - 1/2)`` for ``k = 0..N`` via integer Horner."""
    den = math.lcm(*(c.denominator for c in q))
    d = len(q) - 1
    N2 = 2 * samples
    # q(x / N2) N2^d den = sum S_i x^i with integer S_i
    S = [int(c * den) * N2 ** (d - i) for i, c in enumerate(q)]
    out = np.empty(samples + 1, dtype=int)
    for k in range(samples + 1):
        x = 2 * k - samples
        acc = 0
        for c in reversed(S):
            acc = acc * x + c
        out[k] = (acc > 0) - (acc < 0)
    return out


def _sign_runs(signs: np.ndarray) -> int:
    s = signs[signs != 0]
    if not len(s):
        return 0
    return int(1 + np.count_nonzero(s[1:] != s[:-1]))


def cells_entered(tube, P: MPoly, partition=None, samples: int = 1024) -> CrossingReport:
    """Crossing report for the core ``c + t v, |t| <= 1/2`` of ``tube``
    (a Tube or a ``(point, direction)`` pair) against ``Z(P)``."""
    if hasattr(tube, "center"):
        c, v = tube.center, tube.direction
    else:
        c, v = tube
    q = upoly_trim(P.restrict_to_line([as_fraction(float(x)) for x in c], [as_fraction(float(x)) for x in v]))
    dP = P.degree + 1
    if not q:
        # the core lies in Z(P)
        return CrossingReport(0, 0, 0, dP, 0, 0 if partition is not None else None)
    r = count_roots_open(q, -HALF, HALF)
    signs = _integer_signs(q, samples)
    visited = None
    if partition is not None:
        t = np.linspace(-0.5, 0.5, samples + 1)
        lab = partition.label_at(np.asarray(c, float) + t[:, None] * np.asarray(v, float))
        visited = len(set(lab[lab > 0].tolist()))
    return CrossingReport(_sign_runs(signs), r + 1, upoly_degree(q) + 1, dP, r, visited)
