"""Single halving of a hit set and its m-fold iteration.

A weight family puts nonnegative rational masses on subsets T of one node
level, each meeting the current hit set Z in at least k nodes.  One
halving round finds Z' of at most half the size keeping all but an
eps(k, k') fraction of the mass hitting k' deep; iterating down a schedule
of k's shrinks Z geometrically while keeping nonempty intersection for
almost all mass.  Searches are exhaustive with a fixed order, so results
are reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .cantor import LevelSet
from .errors import InsufficientK, LemmaViolated
from .numerics import epsilon, min_k_for

__all__ = [
    "WeightFamily",
    "halve_once",
    "schedule",
    "shrink",
    "split_goodness",
]


def _positions(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _gosper(width: int, size: int):
    """All width-bit masks of the given popcount, in ascending value."""
    if size == 0:
        yield 0
        return
    v = (1 << size) - 1
    top = 1 << width
    while v < top:
        yield v
        c = v & -v
        r = v + c
        v = (((r ^ v) >> 2) // c) | r


@dataclass(frozen=True)
class WeightFamily:
    n: int
    k: int
    Z: LevelSet
    weights: tuple[tuple[int, Fraction], ...]

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("level must be nonnegative")
        if not 1 <= self.k <= (1 << self.n):
            raise ValueError("need 1 <= k <= 2^n")
        if self.Z.level != self.n:
            raise ValueError("hit set must live at the family's level")
        seen = set()
        for T, a in self.weights:
            if not 0 <= T < (1 << (1 << self.n)):
                raise ValueError("weighted set out of range")
            if T in seen:
                raise ValueError("duplicate weighted set")
            seen.add(T)
            if a < 0:
                raise ValueError("weights must be nonnegative")
            if (T & self.Z.mask).bit_count() < self.k:
                raise ValueError("every weighted set must meet Z in >= k nodes")

    @classmethod
    def from_weights(cls, n: int, k: int, Z: LevelSet, weights) -> "WeightFamily":
        items = weights.items() if hasattr(weights, "items") else weights
        return cls(n, k, Z, tuple((T, Fraction(a)) for T, a in items))

    def total(self) -> Fraction:
        return sum((a for _, a in self.weights), Fraction(0))


def hit_weight(W: WeightFamily, zmask: int, k_prime: int) -> Fraction:
    """Mass of the sets meeting zmask in at least k' nodes."""
    return sum(
        (a for T, a in W.weights if (T & zmask).bit_count() >= k_prime), Fraction(0)
    )


def halve_once(W: WeightFamily, k_prime: int) -> LevelSet:
    """Smallest (then numerically least) Z' of size <= |Z|/2 keeping mass
    (1 - eps(k, k')) * total on sets still hit k' deep."""
    if not 1 <= k_prime <= W.k:
        raise ValueError("need 1 <= k' <= k")
    total = W.total()
    target = (1 - epsilon(W.k, k_prime)) * total
    pos = _positions(W.Z.mask)
    for size in range(len(pos) // 2 + 1):
        for packed in _gosper(len(pos), size):
            zp = 0
            y = packed
            while y:
                low = y & -y
                zp |= 1 << pos[low.bit_length() - 1]
                y ^= low
            if hit_weight(W, zp, k_prime) >= target:
                return LevelSet(W.n, zp)
    raise LemmaViolated(
        f"no half-size subset of Z keeps {1 - epsilon(W.k, k_prime)} of the mass"
    )


def split_goodness(Z: LevelSet, T: int | LevelSet, k_prime: int) -> Fraction:
    """Exact fraction of subsets Z' of Z with both Z' and Z \\ Z' meeting T
    in at least k' nodes, the counting heart of the halving argument."""
    tmask = T.mask if isinstance(T, LevelSet) else T
    if k_prime < 0:
        raise ValueError("k' must be nonnegative")
    if k_prime == 0:
        return Fraction(1)
    if (tmask & Z.mask).bit_count() < k_prime:
        raise ValueError("T must meet Z in at least k' nodes")
    zmask = Z.mask
    if zmask.bit_count() > 20:
        raise ValueError("exhaustive count restricted to |Z| <= 20")
    good = 0
    sub = zmask
    while True:
        if (sub & tmask).bit_count() >= k_prime and (
            (zmask ^ sub) & tmask
        ).bit_count() >= k_prime:
            good += 1
        if sub == 0:
            break
        sub = (sub - 1) & zmask
    return Fraction(good, 1 << zmask.bit_count())


def schedule(eps_budget: Fraction, m: int) -> list[int]:
    """Thresholds k_0=1 < k_1 < ... < k_m with per-round loss <= eps/m.

    The product of the survival factors is checked exactly before
    returning; the per-round budget makes it at least 1 - eps.
    """
    eps_budget = Fraction(eps_budget)
    if not 0 < eps_budget < 1:
        raise ValueError("need 0 < eps < 1")
    if m < 1:
        raise ValueError("m must be positive")
    per_round = eps_budget / m
    ks = [1]
    for _ in range(m):
        ks.append(min_k_for(ks[-1], per_round))
    product = Fraction(1)
    for i in range(m):
        product *= 1 - epsilon(ks[i + 1], ks[i])
    assert product >= 1 - eps_budget, "per-round budgets cannot miss the product bound"
    return ks


def shrink(W: WeightFamily, eps_budget: Fraction, m: int) -> LevelSet:
    """Halve the full node level m times down the schedule, ending with a
    set of at most 2^(n-m) nodes that still meets all but an eps fraction
    of the mass."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    full = (1 << (1 << W.n)) - 1
    if W.Z.mask != full:
        raise ValueError("shrink starts from the full level")
    if m == 0:
        return LevelSet(W.n, full)
    ks = schedule(eps_budget, m)
    if W.k < ks[m]:
        raise InsufficientK(f"family k={W.k} below required k_m={ks[m]}")
    zcur = full
    weights = W.weights
    for i in range(m, 0, -1):
        active = tuple(
            (T, a) for T, a in weights if (T & zcur).bit_count() >= ks[i]
        )
        step = WeightFamily(W.n, ks[i], LevelSet(W.n, zcur), active)
        zcur = halve_once(step, ks[i - 1]).mask
        weights = active
    return LevelSet(W.n, zcur)
