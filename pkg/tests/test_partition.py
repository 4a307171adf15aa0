import math
from fractions import Fraction

import numpy as np
import pytest

from kakeyalab.algebra import MPoly, monomials_up_to
from kakeyalab.generators import GeneratorSpec, generate
from kakeyalab.partition import (
    BudgetTooSmall,
    Measure,
    bisection_imbalance,
    cells_entered,
    classify_dichotomy,
    ham_sandwich_lifted,
    partition_measure,
    round_count,
    round_degree,
)

X, Y = MPoly.variable(2, 0), MPoly.variable(2, 1)


@pytest.fixture(scope="module")
def uniform_parts():
    F = Measure.uniform(1000, 0)
    return F, {d: partition_measure(F, d, 1 / 256, seed=0) for d in (2, 4, 8)}


def test_two_point_masses_split():
    m = Measure([[0.0, 0.0], [1.0, 0.5]])
    P = ham_sandwich_lifted([m], 1)
    assert bisection_imbalance(P, [m]) == [0.0]


def test_two_symmetric_pairs_budget_one():
    a = Measure([[-1.0, 0.0], [1.0, 0.0]])
    b = Measure([[0.0, 2.0], [0.0, -2.0]])
    P = ham_sandwich_lifted([a, b], 1)
    assert bisection_imbalance(P, [a, b]) == [0.0, 0.0]


def test_three_measures_on_a_conic():
    ms = [Measure.uniform(100, s) for s in range(3)]
    P = ham_sandwich_lifted(ms, 2, seed=1)
    assert P.degree <= 2
    for imb, m in zip(bisection_imbalance(P, ms), ms):
        assert imb <= max(0.02 * m.total, 1.0)


def test_budget_too_small():
    with pytest.raises(BudgetTooSmall):
        ham_sandwich_lifted([Measure.uniform(10, s) for s in range(4)], 1)


def test_round_schedule():
    assert [round_degree(2 ** j) for j in range(6)] == [1, 1, 2, 3, 5, 7]
    assert round_count(8) == 6 and round_count(4) == 4


def test_single_atom():
    F = Measure([[0.3, 0.4]])
    p = partition_measure(F, 4, 0.01)
    assert len(p.cells) + (p.near_mass > 0) == 1
    assert classify_dichotomy(F, p).branch == "algebraic"


def test_grid_atoms_balanced():
    g = np.stack(np.meshgrid(np.arange(4), np.arange(4)), -1).reshape(-1, 2) / 3
    F = Measure(g)
    p = partition_measure(F, 4, 0.01)
    bound = (0.5 + 0.02) ** round_count(4) * F.total
    assert all(c.mass <= max(bound, 1.0) for c in p.cells)


def test_mass_conservation_and_degree(uniform_parts):
    F, parts = uniform_parts
    for d, p in parts.items():
        assert math.fsum(p.cell_masses) + p.near_mass == F.total
        assert sum(len(c.atoms) for c in p.cells) + len(p.near_atoms) == len(F)
        assert p.degree <= 3 * d
        assert max(p.round_scores) <= 1


def test_cell_count_and_balance(uniform_parts):
    F, parts = uniform_parts
    p = parts[8]
    assert len(p.cells) <= 4 * 8 ** 2
    assert p.cell_masses.max() <= 0.52 ** round_count(8) * F.total


def test_cell_diameter_halves(uniform_parts):
    _, parts = uniform_parts
    diam = {d: max(c.diameter for c in p.cells) for d, p in parts.items()}
    for d in (2, 4):
        assert 1 <= diam[d] / diam[2 * d] <= 4


def test_uniform_is_cellular(uniform_parts):
    F, parts = uniform_parts
    r = classify_dichotomy(F, parts[4])
    assert r.branch == "cellular"
    avg = r.retained_mass / len(r.retained)
    assert all(avg / 2 <= c.mass <= 2 * avg for c in r.retained)


def test_line_concentrated_is_algebraic():
    rng = np.random.default_rng(0)
    t = rng.uniform(0, 1, 1000)
    F = Measure(np.c_[t, 0.3 + 0.5 * t + rng.uniform(-0.01, 0.01, 1000)])
    p = partition_measure(F, 8, 0.01)
    r = classify_dichotomy(F, p)
    assert r.branch == "algebraic" and r.witness is not None
    assert r.near_mass > 0.5 * F.total


def test_bisection_audit_exact(uniform_parts):
    F, parts = uniform_parts
    p = parts[4]
    # every round polynomial halves the mass left by the previous rounds
    first = p.rounds[0]
    assert bisection_imbalance(first, [F])[0] <= max(0.02 * F.total, 1)


def test_xy_line_example():
    v = np.array([1.0, 1.0]) / math.sqrt(2)
    rep = cells_entered(((0.15, -0.15), v), X * Y)
    assert rep.roots == 2 and rep.certified == 3 and rep.observed <= 3 and rep.degree_bound == 3


def test_core_inside_zero_set():
    rep = cells_entered(((0.0, 0.0), (1.0, 0.0)), X * Y)
    assert rep.observed == 0 and rep.certified == 0


def test_random_crossings_certified():
    rng = np.random.default_rng(5)
    for _ in range(200):
        deg = int(rng.integers(1, 7))
        monos = monomials_up_to(2, deg)
        P = MPoly.from_coefficient_vector(monos, [Fraction(int(c)) for c in rng.integers(-9, 10, len(monos))])
        if P.is_zero():
            continue
        a = rng.uniform(0, 2 * math.pi)
        rep = cells_entered((rng.uniform(-0.5, 0.5, 2), (math.cos(a), math.sin(a))), P)
        assert rep.ok


def test_crossings_for_generated_tubes(uniform_parts):
    _, parts = uniform_parts
    p = parts[4]
    f = generate(GeneratorSpec("random_separated", 2, 0.05, count=20, seed=3))
    for t in f:
        rep = cells_entered(t, p.P, partition=p, samples=256)
        assert rep.ok and rep.degree_bound == p.degree + 1
