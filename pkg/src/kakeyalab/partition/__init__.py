"""Polynomial partitioning of planar measures."""
from .cells import (
    CELL_COUNT_CONSTANT,
    CELLULAR_FRACTION,
    Cell,
    DichotomyResult,
    Partition,
    classify_dichotomy,
    partition_measure,
    round_count,
    round_degree,
)
from .crossings import CrossingReport, cells_entered
from .hamsandwich import (
    BudgetTooSmall,
    Frame,
    Measure,
    NonConvergence,
    bisection_imbalance,
    exact_signs,
    ham_sandwich_lifted,
)

__all__ = [
    "BudgetTooSmall", "CELL_COUNT_CONSTANT", "CELLULAR_FRACTION", "Cell", "CrossingReport",
    "DichotomyResult", "Frame", "Measure", "NonConvergence", "Partition", "bisection_imbalance",
    "cells_entered", "classify_dichotomy", "exact_signs", "ham_sandwich_lifted", "partition_measure",
    "round_count", "round_degree",
]
