"""Exact polynomial arithmetic over the rationals.

``MPoly`` is a sparse multivariate polynomial with :class:`Fraction`
coefficients.  Univariate polynomials are plain coefficient lists, lowest
degree first, and are what Sturm sequences operate on.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from itertools import product as iproduct
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

Monomial = Tuple[int, ...]


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))  # exact binary value


class MPoly:
    """Sparse polynomial in ``nvars`` variables with rational coefficients."""

    __slots__ = ("nvars", "terms", "_float_cache")

    def __init__(self, nvars: int, terms: Dict[Monomial, Fraction] | None = None):
        self.nvars = nvars
        clean = {}
        for mono, c in (terms or {}).items():
            c = as_fraction(c)
            if c != 0:
                if len(mono) != nvars:
                    raise ValueError(f"monomial {mono} has wrong arity for {nvars} variables")
                clean[tuple(int(e) for e in mono)] = c
        self.terms = clean
        self._float_cache = None

    # -- constructors ----------------------------------------------------
    @classmethod
    def constant(cls, nvars: int, c) -> "MPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "MPoly":
        mono = [0] * nvars
        mono[i] = 1
        return cls(nvars, {tuple(mono): Fraction(1)})

    @classmethod
    def linear(cls, coeffs: Sequence, const=0) -> "MPoly":
        """``sum coeffs[i] x_i + const``."""
        nv = len(coeffs)
        terms = {(0,) * nv: as_fraction(const)}
        for i, a in enumerate(coeffs):
            mono = [0] * nv
            mono[i] = 1
            terms[tuple(mono)] = as_fraction(a)
        return cls(nv, terms)

    @classmethod
    def from_coefficient_vector(cls, monomials: Sequence[Monomial], coeffs: Sequence) -> "MPoly":
        nv = len(monomials[0])
        terms: Dict[Monomial, Fraction] = {}
        for mono, c in zip(monomials, coeffs):
            terms[mono] = terms.get(mono, Fraction(0)) + as_fraction(c)
        return cls(nv, terms)

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "MPoly":
        if isinstance(other, MPoly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different rings")
            return other
        return MPoly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return MPoly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        terms: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, Fraction(0)) + c1 * c2
        return MPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = MPoly.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.constant(self.nvars, other)
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "MPoly(0)"
        parts = []
        for mono, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            vars_ = "*".join(f"x{i}^{e}" if e > 1 else f"x{i}" for i, e in enumerate(mono) if e)
            parts.append(f"{c}" + (f"*{vars_}" if vars_ else ""))
        return "MPoly(" + " + ".join(parts) + ")"

    # -- queries -----------------------------------------------------------
    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(m) for m in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def _float_terms(self):
        if self._float_cache is None:
            monos = np.array(list(self.terms.keys()), dtype=np.int64).reshape(-1, self.nvars)
            coefs = np.array([float(c) for c in self.terms.values()])
            self._float_cache = (monos, coefs)
        return self._float_cache

    def __call__(self, x) -> np.ndarray:
        """Floating-point evaluation at points ``x`` of shape ``(..., nvars)``."""
        x = np.asarray(x, dtype=float)
        monos, coefs = self._float_terms()
        if not len(coefs):
            return np.zeros(x.shape[:-1])
        maxdeg = int(monos.max()) if monos.size else 0
        powers = [np.stack([x[..., i] ** e for e in range(maxdeg + 1)]) for i in range(self.nvars)]
        out = np.zeros(x.shape[:-1])
        for mono, c in zip(monos, coefs):
            term = c
            for i, e in enumerate(mono):
                if e:
                    term = term * powers[i][e]
            out = out + term
        return out

    def evaluate_exact(self, point: Sequence) -> Fraction:
        pt = [as_fraction(v) for v in point]
        total = Fraction(0)
        for mono, c in self.terms.items():
            term = c
            for v, e in zip(pt, mono):
                if e:
                    term *= v ** e
            total += term
        return total

    def partial(self, i: int) -> "MPoly":
        terms = {}
        for mono, c in self.terms.items():
            e = mono[i]
            if e:
                m = list(mono)
                m[i] -= 1
                terms[tuple(m)] = c * e
        return MPoly(self.nvars, terms)

    def gradient(self) -> List["MPoly"]:
        return [self.partial(i) for i in range(self.nvars)]

    def restrict_to_line(self, point: Sequence, direction: Sequence) -> List[Fraction]:
        """Coefficients (low first) of ``t -> P(point + t direction)``, exactly."""
        p0 = [as_fraction(v) for v in point]
        v = [as_fraction(w) for w in direction]
        deg = max(self.degree, 0)
        cache = []
        for i in range(self.nvars):
            pw = [[Fraction(1)]]
            lin = [p0[i], v[i]]
            for _ in range(deg):
                pw.append(upoly_mul(pw[-1], lin))
            cache.append(pw)
        out = [Fraction(0)] * (deg + 1)
        for mono, c in self.terms.items():
            acc = [c]
            for i, e in enumerate(mono):
                if e:
                    acc = upoly_mul(acc, cache[i][e])
            for j, a in enumerate(acc):
                out[j] += a
        return upoly_trim(out)

    # -- serialisation -------------------------------------------------------
    def to_json(self) -> list:
        """Rows ``[e_1, ..., e_n, "num/den"]``."""
        return [list(m) + [str(c)] for m, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, rows: Iterable[Sequence]) -> "MPoly":
        rows = list(rows)
        if not rows:
            raise ValueError("empty polynomial description; pass nvars explicitly")
        nv = len(rows[0]) - 1
        terms = {}
        for row in rows:
            mono = tuple(int(e) for e in row[:-1])
            c = Fraction(row[-1]) if isinstance(row[-1], str) else as_fraction(row[-1])
            terms[mono] = terms.get(mono, Fraction(0)) + c
        return cls(nv, terms)


def monomials_up_to(nvars: int, degree: int, include_constant: bool = True) -> List[Monomial]:
    """All exponent tuples of total degree ``<= degree``, graded order."""
    out = []
    for total in range(0 if include_constant else 1, degree + 1):
        for mono in iproduct(range(total + 1), repeat=nvars):
            if sum(mono) == total:
                out.append(mono)
    return out


def veronese_dimension(nvars: int, degree: int) -> int:
    """Dimension of the space of non-constant monomials of degree ``<= degree``."""
    return math.comb(nvars + degree, nvars) - 1


def product(polys: Iterable[MPoly]) -> MPoly:
    polys = list(polys)
    return reduce(lambda a, b: a * b, polys[1:], polys[0])


# ---------------------------------------------------------------------------
# univariate helpers (coefficient lists, lowest degree first)


def upoly_trim(p: List[Fraction]) -> List[Fraction]:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def upoly_degree(p: Sequence) -> int:
    return len(upoly_trim(list(p))) - 1


def upoly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> List[Fraction]:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def upoly_derivative(p: Sequence[Fraction]) -> List[Fraction]:
    return upoly_trim([i * c for i, c in enumerate(p)][1:])


def upoly_rem(a: Sequence[Fraction], b: Sequence[Fraction]) -> List[Fraction]:
    a = upoly_trim(list(a))
    b = upoly_trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    lead = b[-1]
    while len(a) >= len(b):
        f = a[-1] / lead
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] -= f * c
        a = upoly_trim(a)
    return a


def _primitive_ints(p: Sequence) -> List[int]:
    # scale by a positive rational so coefficients are coprime integers
    if not p:
        return []
    den = reduce(math.lcm, (Fraction(c).denominator for c in p), 1)
    ints = [int(c * den) for c in p]
    g = reduce(math.gcd, ints, 0) or 1
    return [v // g for v in ints]


def _int_rem(a: List[int], b: List[int]) -> List[int]:
    # remainder of a by b scaled by |lc(b)|^k > 0, so signs match the true remainder
    a = upoly_trim(a)
    s, sg = abs(b[-1]), (1 if b[-1] > 0 else -1)
    while len(a) >= len(b):
        f = a[-1] * sg
        shift = len(a) - len(b)
        a = [s * x for x in a]
        for i, c in enumerate(b):
            a[shift + i] -= f * c
        a = upoly_trim(a)
    return a


def sturm_sequence(p: Sequence[Fraction]) -> List[List[Fraction]]:
    """Canonical Sturm chain ``p, p', -rem(p, p'), ...``.

    Each member is rescaled by a positive constant, which leaves sign
    variation counts unchanged while keeping coefficient growth in check.
    """
    p = _primitive_ints(upoly_trim(list(p)))
    if not p:
        raise ValueError("Sturm sequence of the zero polynomial")
    seq = [p]
    dp = _primitive_ints(upoly_trim([i * c for i, c in enumerate(p)][1:]))
    if dp:
        seq.append(dp)
        while True:
            r = _int_rem(seq[-2], seq[-1])
            if not r:
                break
            seq.append(_primitive_ints([-c for c in r]))
    return [[Fraction(c) for c in q] for q in seq]


def upoly_eval(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def sign_at(p: Sequence[Fraction], x: Fraction) -> int:
    """Exact sign of ``p(x)`` using integer arithmetic on ``x = a/b``."""
    x = as_fraction(x)
    a, b = x.numerator, x.denominator
    d = len(p) - 1
    if d < 0:
        return 0
    # b^d p(a/b) = sum c_i a^i b^(d-i), and b^d > 0
    den = reduce(math.lcm, (c.denominator for c in p), 1)
    total = 0
    apow = 1
    bpows = [1]
    for _ in range(d):
        bpows.append(bpows[-1] * b)
    for i, c in enumerate(p):
        total += int(c * den) * apow * bpows[d - i]
        apow *= a
    return (total > 0) - (total < 0)


def sign_variations(seq: Sequence[Sequence[Fraction]], x: Fraction) -> int:
    signs = [s for s in (sign_at(p, x) for p in seq) if s != 0]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def _deflate(p: List[Fraction], root: Fraction) -> List[Fraction]:
    # synthetic division by (t - root) while root is a root
    while p and upoly_eval(p, root) == 0:
        out = [Fraction(0)] * (len(p) - 1)
        carry = Fraction(0)
        for i in range(len(p) - 1, 0, -1):
            carry = carry * root + p[i]
            out[i - 1] = carry
        p = upoly_trim(out)
    return p


def count_roots_open(p: Sequence[Fraction], a, b) -> int:
    """Number of distinct real roots of ``p`` in the open interval ``(a, b)``."""
    a, b = as_fraction(a), as_fraction(b)
    if a >= b:
        return 0
    q = upoly_trim(list(p))
    if not q:
        raise ValueError("the zero polynomial has infinitely many roots")
    q = _deflate(_deflate(q, a), b)
    if len(q) <= 1:
        return 0
    seq = sturm_sequence(q)
    return sign_variations(seq, a) - sign_variations(seq, b)


def isolate_roots(p: Sequence[Fraction], a, b, max_width=Fraction(1, 2**20)) -> List[Tuple[Fraction, Fraction]]:
    """Disjoint intervals each holding exactly one distinct root in ``(a, b)``.

    A degenerate interval ``(r, r)`` marks an exact rational root.
    """
    a, b = as_fraction(a), as_fraction(b)
    q = upoly_trim(list(p))
    out: List[Tuple[Fraction, Fraction]] = []
    stack = [(a, b)]
    while stack:
        lo, hi = stack.pop()
        k = count_roots_open(q, lo, hi)
        if k == 0:
            continue
        if k == 1 and hi - lo <= max_width:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        if upoly_eval(q, mid) == 0:
            out.append((mid, mid))
        stack.append((lo, mid))
        stack.append((mid, hi))
    return sorted(out)
