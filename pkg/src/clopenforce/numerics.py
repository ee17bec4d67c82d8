"""Exact rational arithmetic and the binomial tail quantity eps(k, k').

Every quantity in the package is a `fractions.Fraction` (or an int); there
is no floating point anywhere.  Rationals serialize as "p/q" ("p" when the
denominator is 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

Rational = Fraction


def rational(text: str | int | Fraction) -> Fraction:
    """Parse the "p/q" / "p" wire form (ints and Fractions pass through)."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def rational_str(x: Fraction | int) -> str:
    return str(Fraction(x))


def binom(n: int, j: int) -> int:
    """C(n, j); 0 when j > n."""
    if n < 0 or j < 0:
        raise ValueError("binom requires nonnegative arguments")
    if j > n:
        return 0
    return math.comb(n, j)


@dataclass(frozen=True)
class EpsilonQuery:
    k: int
    k_prime: int

    def __post_init__(self) -> None:
        if not 1 <= self.k_prime <= self.k:
            raise ValueError(f"need 1 <= k' <= k, got k'={self.k_prime}, k={self.k}")


def epsilon(k: int, k_prime: int) -> Fraction:
    """2^(1-k) * sum_{j<k'} C(k, j), the leading 1 read as C(k, 0).

    Equals twice the lower binomial tail P(Bin(k, 1/2) < k'), hence the
    exact loss budget of one halving round.  Accepts k' = k (where the
    value exceeds 1 and the halving bound is vacuous).
    """
    EpsilonQuery(k, k_prime)
    tail = sum(binom(k, j) for j in range(k_prime))
    return Fraction(2 * tail, 2**k)


def min_k_for(k_prime: int, bound: Fraction) -> int:
    """Least k > k' with epsilon(k, k') <= bound.

    Terminates for every positive bound: at fixed k' the tail sum is
    polynomial in k while the 2^(1-k) factor decays.
    """
    if k_prime < 1:
        raise ValueError("k' must be positive")
    bound = Fraction(bound)
    if bound <= 0:
        raise ValueError("bound must be positive")
    k = k_prime + 1
    while epsilon(k, k_prime) > bound:
        k += 1
    return k
