"""Acceptance criteria 1 to 10, each checked at its tolerance and time limit."""
import math
import time
from fractions import Fraction as F

import numpy as np

from _lemmas import LEMMAS
from kakeyalab import exponents as ex
from kakeyalab.algebra import MPoly, monomials_up_to
from kakeyalab.generators import GeneratorSpec, generate
from kakeyalab.geometry import AffineSubspace, Ball, cap_decompose
from kakeyalab.harness import planar_log_law
from kakeyalab.norms import BroadParams, broad_norm, default_candidates
from kakeyalab.partition import Measure, cells_entered, partition_measure, round_count

TABLE = {
    2: F(2),
    5: 1 + F(5**2, 4**3),
    7: 1 + F(7**3, 6**4),
    8: 1 + F(8**4, 7**5),
    9: 1 + F(9**4, 8**5),
    10: 1 + F(10**5, 9**6),
    11: F(7, 6),
    12: 1 + F(12**6, 11**7),
    13: F(8, 7),
    14: 1 + F(14**7, 13**8),
    15: 1 + F(15**8, 14**9),
}

DIMENSIONS = [
    5, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 30, 31, 32, 33,
    34, 35, 37, 39, 40, 41, 42, 44, 46, 47, 48, 49, 51, 53, 55, 56, 58, 60, 62, 65, 67, 69, 72, 74, 76, 81,
    83, 90, 97,
]


def test_criterion_01_exponent_table(criterion):
    t = time.perf_counter()
    got = {n: ex.p_n(n)[0] for n in TABLE}
    dt = time.perf_counter() - t
    bad = [n for n in TABLE if got[n] != TABLE[n]]
    assert criterion(1, not bad, f"p_n exact for {len(TABLE)} dimensions, mismatches {bad}", dt, 1)


def test_criterion_02_dimension_list(criterion):
    t = time.perf_counter()
    dims = ex.improved_dimensions(100)
    dt = time.perf_counter() - t
    assert len(DIMENSIONS) == 56
    assert criterion(2, dims == DIMENSIONS, f"{len(dims)} improved dimensions, 5 through {dims[-1]}", dt, 1)


def test_criterion_03_corollary_bounds(criterion):
    t = time.perf_counter()
    ok = ex.kakeya_dim_bound(7) == 1 + F(6**4, 7**3) and ex.kakeya_dim_bound(9) == 1 + F(8**5, 9**4)
    assert criterion(3, ok, "dimension bounds for n = 7, 9 exact", time.perf_counter() - t)


def test_criterion_04_omega(criterion):
    t = time.perf_counter()
    inv = ex.omega_inverse(1e-9)
    alphas = [ex.alpha_n(n) for n in range(2, 1001)]
    below = all(a < inv for a in alphas)
    gap = abs(float(alphas[-1]) - inv)
    ok = 1.7632 < inv < 1.7633 and below and gap < 0.02
    assert criterion(4, ok, f"Omega^-1 = {inv:.10f}, all alpha_n below, |alpha_1000 - Omega^-1| = {gap:.4g}",
                     time.perf_counter() - t)


def test_criterion_05_gamma_system(criterion):
    t = time.perf_counter()
    bad = []
    for n in range(2, 31):
        for m in range(2, n + 1):
            a, b = ex.gamma_solve_system(n, m), ex.gamma_closed_form(n, m)
            if a.gamma != b.gamma or ex.conjugate(b.p) != 1 + (n - 1) * (1 - F(1, n)) ** (n - m):
                bad.append((n, m))
    assert criterion(5, not bad, f"435 (n, m) pairs exact, mismatches {bad}", time.perf_counter() - t, 10)


def test_criterion_06_vanishing(criterion):
    t = time.perf_counter()
    delta = 2.0 ** -7
    r = delta ** 0.9
    values = []
    for n in (2, 3):
        normal = np.zeros(n)
        normal[-1] = 1
        Z = AffineSubspace.hyperplane(normal, 0.0)
        for seed in range(20):
            f = generate(GeneratorSpec("tangent_to_variety", n, delta, count=20, seed=seed, variety=Z,
                                       ball_radius=r))
            caps = cap_decompose(f, 1 / 8)
            cands = default_candidates(caps.centers, n, n, extra=[Z.tangent_basis()])
            values.append(broad_norm(f, Ball(np.zeros(n), r), BroadParams(n, 1, 2, 1 / 8, cands), caps=caps).value)
    nonzero = sum(v != 0 for v in values)
    assert criterion(6, nonzero == 0, f"{len(values)} tangent families, {nonzero} nonzero broad norms",
                     time.perf_counter() - t, 120)


def test_criterion_07_bezout(criterion):
    t = time.perf_counter()
    rng = np.random.default_rng(2024)
    violations = trials = 0
    while trials < 1000:
        deg = int(rng.integers(1, 7))
        monos = monomials_up_to(2, deg)
        P = MPoly.from_coefficient_vector(monos, [F(int(c), int(rng.integers(1, 9)))
                                                  for c in rng.integers(-20, 21, len(monos))])
        if P.is_zero():
            continue
        a = rng.uniform(0, 2 * math.pi)
        rep = cells_entered((rng.uniform(-1, 1, 2), (math.cos(a), math.sin(a))), P)
        violations += not (rep.observed <= rep.certified <= P.degree + 1)
        trials += 1
    assert criterion(7, violations == 0, f"{trials} polynomial/tube pairs, {violations} violations",
                     time.perf_counter() - t, 60)


def test_criterion_08_partition_balance(criterion):
    t = time.perf_counter()
    worst_mass = worst_count = 0.0
    for d in (4, 8):
        for seed in range(3):
            F_ = Measure.uniform(1000, seed)
            p = partition_measure(F_, d, 1 / 256, seed=seed)
            worst_mass = max(worst_mass, p.cell_masses.max() / (0.52 ** round_count(d) * F_.total))
            worst_count = max(worst_count, len(p.cells) / (4 * d * d))
    ok = worst_mass <= 1 and worst_count <= 1
    assert criterion(8, ok, f"max cell mass / bound = {worst_mass:.3f}, cell count / 4d^2 = {worst_count:.3f}",
                     time.perf_counter() - t, 300)


def test_criterion_09_lemma_suite(criterion):
    t = time.perf_counter()
    failures, worst = [], {}
    for name, check in sorted(LEMMAS.items()):
        for p in (1.5, 2.0):
            for seed in range(50):
                lhs, rhs, q = check(seed, p)
                if lhs > rhs + q:
                    failures.append((name, p, seed))
                worst[name] = max(worst.get(name, 0.0), lhs / rhs if rhs else 0.0)
    ratios = ", ".join(f"{k} {v:.2f}" for k, v in sorted(worst.items()))
    assert criterion(9, not failures, f"300 checks, failures {failures}, max lhs/rhs: {ratios}",
                     time.perf_counter() - t, 600)


def test_criterion_10_planar_log_law(criterion):
    t = time.perf_counter()
    r = planar_log_law()
    assert criterion(10, r.passed, f"ratios {', '.join(f'{v:.2f}' for v in r.ratios)}; slope {r.slope:.3f}, "
                     f"r^2 {r.r_squared:.4f}", time.perf_counter() - t, 600)
