"""Computational laboratory for the Kakeya maximal problem.

``exponents`` holds the exact exponent engine; ``geometry``, ``norms``,
``wolff``, ``partition`` and ``generators`` make up the tube simulator and
``harness`` drives scale sweeps.
"""
from ._backend import BACKEND

__version__ = "0.1.0"
