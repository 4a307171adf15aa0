"""Exact exponent bookkeeping for the Kakeya maximal problem.

Every closed-form quantity here is a :class:`fractions.Fraction`; floating
point only appears where the mathematics is irrational (the omega constant
and the real-exponent radius recursion).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

Rational = Fraction

__all__ = [
    "Rational",
    "Attribution",
    "ExponentReport",
    "GammaSolution",
    "HistoryWord",
    "ScaleState",
    "broad_exponent",
    "bg_exponent",
    "p_n",
    "alpha_n",
    "best_known",
    "improved_dimensions",
    "kakeya_dim_bound",
    "conjugate",
    "omega_inverse",
    "gamma_closed_form",
    "gamma_solve_system",
    "system_residuals",
    "theta_chain",
    "run_history",
    "SingularSystemError",
    "theta_residuals",
    "scale_recursion",
]


class Attribution(str, enum.Enum):
    CORDOBA = "Cordoba"
    WOLFF = "Wolff"
    GUTH_ZAHL = "GuthZahl"
    KATZ_TAO = "KatzTao"
    THIS_PAPER = "ThisPaper"


class SingularSystemError(ArithmeticError):
    pass


def _check_nk(n: int, k: int) -> None:
    if n < 2:
        raise ValueError(f"dimension n must be >= 2, got {n}")
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, {n}], got {k}")


def broad_exponent(n: int, k: int) -> Fraction:
    """Lower endpoint of the k-broad range: 1 + (n/(n-1))^(n-k) / (n-1)."""
    _check_nk(n, k)
    return 1 + Fraction(1, n - 1) * Fraction(n, n - 1) ** (n - k)


def bg_exponent(n: int, k: int) -> Fraction:
    """Exponent needed to pass from k-broad to linear estimates: (n-k+2)/(n-k+1)."""
    _check_nk(n, k)
    return Fraction(n - k + 2, n - k + 1)


def p_n(n: int) -> Tuple[Fraction, int]:
    """Return ``(p_n, k_star)``.

    ``p_n`` is the min over ``2 <= k <= n`` of ``max(broad, bg)``; ``k_star``
    is the smallest minimiser.
    """
    if n < 2:
        raise ValueError(f"dimension n must be >= 2, got {n}")
    best: Fraction | None = None
    k_star = 2
    for k in range(2, n + 1):
        value = max(broad_exponent(n, k), bg_exponent(n, k))
        if best is None or value < best:
            best, k_star = value, k
    assert best is not None
    return best, k_star


def alpha_n(n: int) -> Fraction:
    """``(p_n - 1)(n - 1)``, the normalised gain over the endpoint 1."""
    return (p_n(n)[0] - 1) * (n - 1)


def conjugate(p: Fraction) -> Fraction:
    if p <= 1:
        raise ValueError("conjugate exponent needs p > 1")
    return p / (p - 1)


def kakeya_dim_bound(n: int) -> Fraction:
    """Hausdorff dimension lower bound ``p_n'`` implied by the range ``p >= p_n``."""
    return conjugate(p_n(n)[0])


# Literature bounds, tabulated rather than derived.
def _wolff(n: int) -> Fraction:
    return Fraction(n + 2, n)


def _katz_tao(n: int) -> Fraction:
    return 1 + Fraction(7, 4) / (n - 1)


_CORDOBA_N2 = Fraction(2)
_GUTH_ZAHL_N4 = Fraction(85, 57)


@dataclass(frozen=True)
class ExponentReport:
    n: int
    k_star: int
    p_n: Fraction
    broad_term: Fraction
    bg_term: Fraction
    best_known: Fraction
    attribution: Attribution
    candidates: Dict[Attribution, Fraction] = field(default_factory=dict, compare=False)


def best_known(n: int, conjecture: str = "pwa") -> ExponentReport:
    """State-of-the-art exponent in dimension ``n``.

    ``conjecture`` is ``"pwa"`` (polynomial Wolff axioms) or ``"maximal"``
    (direction-separated families, where the Katz--Tao bound also applies).
    Ties go to the earlier literature bound, so ``n = 6`` is credited to Wolff.
    """
    if conjecture not in ("pwa", "maximal"):
        raise ValueError(f"unknown conjecture {conjecture!r}; use 'pwa' or 'maximal'")
    pn, k_star = p_n(n)
    candidates: Dict[Attribution, Fraction] = {}
    if n == 2:
        candidates[Attribution.CORDOBA] = _CORDOBA_N2
    candidates[Attribution.WOLFF] = _wolff(n)
    if n == 4:
        candidates[Attribution.GUTH_ZAHL] = _GUTH_ZAHL_N4
    if conjecture == "maximal":
        candidates[Attribution.KATZ_TAO] = _katz_tao(n)
    candidates[Attribution.THIS_PAPER] = pn

    attribution, value = None, None
    for who, bound in candidates.items():  # insertion order = tie priority
        if value is None or bound < value:
            attribution, value = who, bound
    return ExponentReport(
        n=n,
        k_star=k_star,
        p_n=pn,
        broad_term=broad_exponent(n, k_star) - 1,
        bg_term=bg_exponent(n, k_star) - 1,
        best_known=value,
        attribution=attribution,
        candidates=candidates,
    )


def improved_dimensions(n_max: int) -> List[int]:
    """Dimensions ``n <= n_max`` where ``p_n`` beats both Wolff and Katz--Tao."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    return [n for n in range(2, n_max + 1) if p_n(n)[0] < min(_wolff(n), _katz_tao(n))]


def omega_inverse(tolerance: float = 1e-12) -> float:
    """Reciprocal of the omega constant, ``Omega * exp(Omega) = 1``.

    Bisection on ``[1/2, 1]``; stops once the residual ``|Omega e^Omega - 1|``
    drops below ``tolerance``.
    """
    if not 0 < tolerance <= 1e-3:
        raise ValueError("tolerance must lie in (0, 1e-3]")
    lo, hi = 0.5, 1.0
    mid = 0.75
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        resid = mid * math.exp(mid) - 1.0
        if abs(resid) < tolerance:
            break
        if resid > 0:
            hi = mid
        else:
            lo = mid
    return 1.0 / mid


@dataclass(frozen=True)
class GammaSolution:
    n: int
    m: int
    gamma: Dict[int, Fraction]
    p_chain: Dict[int, Fraction]

    @property
    def p(self) -> Fraction:
        return self.p_chain[self.n]


def _p_chain(n: int, m: int, gamma: Dict[int, Fraction]) -> Dict[int, Fraction]:
    # (1 - 1/p_i)^{-1} = m + sum_{j=m}^{i-1} (n - j) gamma_j
    chain = {}
    acc = Fraction(m)
    for i in range(m, n + 1):
        if i > m:
            acc += (n - (i - 1)) * gamma[i - 1]
        chain[i] = conjugate(acc)
    return chain


def _check_nm(n: int, m: int) -> None:
    if not 2 <= m <= n:
        raise ValueError(f"need 2 <= m <= n, got n={n}, m={m}")


def gamma_closed_form(n: int, m: int) -> GammaSolution:
    _check_nm(n, m)
    ratio = 1 - Fraction(1, n)
    gamma = {j: Fraction(1, n) * ratio ** (j - m) for j in range(m, n)}
    gamma[n] = 1 - sum(gamma.values(), Fraction(0))
    return GammaSolution(n, m, gamma, _p_chain(n, m, gamma))


def _solve_exact(matrix: List[List[Fraction]], rhs: List[Fraction]) -> List[Fraction]:
    """Gauss--Jordan elimination over the rationals."""
    size = len(matrix)
    aug = [row[:] + [b] for row, b in zip(matrix, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularSystemError(f"singular system at column {col}")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][size] for r in range(size)]


def gamma_solve_system(n: int, m: int) -> GammaSolution:
    """Solve ``sum_{j=m}^{i-1} (n+i-j-1) gamma_j = i - m`` (``m < i <= n``) exactly.

    Unknowns are ``gamma_m .. gamma_{n-1}``; ``gamma_n`` closes the simplex
    constraint ``sum gamma_j = 1``.
    """
    _check_nm(n, m)
    unknowns = list(range(m, n))
    matrix = []
    rhs = []
    for i in range(m + 1, n + 1):
        matrix.append([Fraction(n + i - j - 1) if j <= i - 1 else Fraction(0) for j in unknowns])
        rhs.append(Fraction(i - m))
    solution = _solve_exact(matrix, rhs) if unknowns else []
    gamma = dict(zip(unknowns, solution))
    gamma[n] = 1 - sum(solution, Fraction(0))
    return GammaSolution(n, m, gamma, _p_chain(n, m, gamma))


def system_residuals(sol: GammaSolution) -> List[Fraction]:
    n, m, g = sol.n, sol.m, sol.gamma
    return [
        sum((n + i - j - 1) * g[j] for j in range(m, i)) - (i - m)
        for i in range(m + 1, n + 1)
    ]


def theta_chain(sol: GammaSolution) -> Dict[int, Fraction]:
    """``Theta_l = (1 - 1/p_l)^{-1} (1 - 1/p)`` with ``p = p_n``; ``Theta_n = 1``."""
    q = 1 - 1 / sol.p
    return {ell: conjugate(p_ell) * q for ell, p_ell in sol.p_chain.items()}


def theta_residuals(sol: GammaSolution) -> Tuple[Dict[int, Fraction], Dict[int, Fraction]]:
    """The ``X_i`` (``m <= i < n``) and ``Y_i`` (``m-1 <= i < n``) balance terms.

    Both vanish identically when the exponents are chosen consistently.
    """
    n, m, g = sol.n, sol.m, sol.gamma
    theta = theta_chain(sol)
    q = 1 - 1 / sol.p
    xs = {i: theta[i + 1] - theta[i] - (n - i) * g[i] * q for i in range(m, n)}
    ys = {}
    for i in range(m - 1, n):
        partial = sum((g[j] for j in range(m, i + 1)), Fraction(0))
        ys[i] = theta[i + 1] - (1 + i * (1 - partial)) * q
    return xs, ys


@dataclass(frozen=True)
class HistoryWord:
    letters: str
    eps_circ: float
    r0: float
    d: int = 2
    A: int = 1
    n: int = 2

    def __post_init__(self):
        if set(self.letters) - {"a", "c"}:
            raise ValueError(f"history words use the alphabet {{a, c}}, got {self.letters!r}")
        if not 0 < self.eps_circ <= 0.1:
            raise ValueError("eps_circ must lie in (0, 1/10]")
        if not 0 < self.r0 <= 1:
            raise ValueError("r0 must lie in (0, 1]")
        if self.d < 2:
            raise ValueError("d must be >= 2")

    @property
    def n_alg(self) -> int:
        return self.letters.count("a")

    @property
    def n_cell(self) -> int:
        return self.letters.count("c")


@dataclass(frozen=True)
class ScaleState:
    r: float
    C: float
    A: int
    log_C: float
    n_alg: int
    n_cell: int


def scale_recursion(h: HistoryWord) -> ScaleState:
    """Radius, coefficient and broadness parameter after the history ``h``.

    ``c`` halves the radius and ``a`` raises it to the power ``1 + eps``.
    The coefficient ``d^{#c eps} d^{#a (n + eps)}`` is accumulated in log
    space and exponentiated at the end (``inf`` on overflow).
    """
    eps = h.eps_circ
    n_a, n_c = h.n_alg, h.n_cell
    if h.A % (2 ** n_a):
        raise ValueError(f"A={h.A} is not divisible by 2^{n_a}")
    r = h.r0
    for letter in h.letters:
        r = r / 2 if letter == "c" else r ** (1 + eps)

    # radius bounds: r_j <= r0^{(1+eps)^{#a}} and r_j <= 2^{-#c} r0
    log_r0 = math.log(h.r0)
    slack = 1e-12 * max(1.0, abs(math.log(r)) if r > 0 else 1.0)
    if r > 0:
        if math.log(r) > log_r0 * (1 + eps) ** n_a + slack:
            raise ArithmeticError("radius bound r_j <= r0^{(1+eps)^#a} violated")
        if math.log(r) > log_r0 - n_c * math.log(2) + slack:
            raise ArithmeticError("radius bound r_j <= 2^{-#c} r0 violated")

    log_C = (n_c * eps + n_a * (h.n + eps)) * math.log(h.d)
    try:
        C = math.exp(log_C)
    except OverflowError:
        C = math.inf
    return ScaleState(r=r, C=C, A=h.A // (2 ** n_a), log_C=log_C, n_alg=n_a, n_cell=n_c)


def run_history(
    letters: Sequence[str], eps_circ: float, delta: float
) -> Tuple[str, float]:
    """Append letters from ``letters`` starting at ``r0 = delta^eps`` until the
    tiny-scale stop ``r <= delta^{1-eps}`` fires; returns the truncated word
    and the final radius."""
    r = delta ** eps_circ
    stop = delta ** (1 - eps_circ)
    word = []
    for letter in letters:
        if r <= stop:
            break
        word.append(letter)
        r = r / 2 if letter == "c" else r ** (1 + eps_circ)
    return "".join(word), r
