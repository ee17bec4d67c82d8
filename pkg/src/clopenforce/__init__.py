"""Exact-arithmetic desk-scale checker for clopen-algebra forcing
combinatorics: binomial tail budgets, halving lemmas, incompatibility
covers, diagonal chains, and summable null covers.

Everything computes over exact rationals and integer node bitmasks; the
brute-force oracles shipped next to the closed forms are the reference.
"""

from .cantor import ClopenSet, LevelSet
from .coverlemmas import WeightFamily
from .diagonal import DiagonalChain, ParamSchedule, ProductCondition
from .nullcover import BlockTree, IntervalPartition, LevelCover
from .numerics import Rational, binom, epsilon, min_k_for
from .perfectposet import DeskPoset, PCondition
from .soft import FinitePoset, NameTable

__version__ = "0.1.0"

__all__ = [
    "BlockTree",
    "ClopenSet",
    "DeskPoset",
    "DiagonalChain",
    "FinitePoset",
    "IntervalPartition",
    "LevelCover",
    "LevelSet",
    "NameTable",
    "PCondition",
    "ParamSchedule",
    "ProductCondition",
    "Rational",
    "WeightFamily",
    "binom",
    "epsilon",
    "min_k_for",
]
