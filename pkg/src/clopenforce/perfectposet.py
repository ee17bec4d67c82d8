"""The clopen-pair forcing poset at a fixed desk depth.

A condition is a positive-measure clopen set together with a commitment
level n; extension keeps the level-n trace frozen.  The dense part keeps
at least half a cylinder of mass below every committed node.  Everything
here is integer bitmask arithmetic on node sets; the brute-force oracle
(`compat_oracle`, `cover_oracle`) is the normative reference the closed
forms are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .cantor import (
    ClopenSet,
    cyl_mask,
    density_ok,
    full_set,
    levelset_mask,
    parse_clopen,
    clopen_from_json,
    clopen_to_json,
)
from .errors import DepthExhausted, PruneFailed

__all__ = [
    "PCondition",
    "DeskPoset",
    "OracleReport",
    "compat_oracle",
    "cover_oracle",
    "enumerate_pprime",
    "in_pprime",
    "iterate_cover",
    "main_cover",
    "p_compatible",
    "p_leq",
    "prune_to_dense",
    "top_condition",
]


@dataclass(frozen=True)
class PCondition:
    B: ClopenSet
    n: int

    def __post_init__(self) -> None:
        if not 0 <= self.n <= self.B.depth:
            raise ValueError(f"commitment level {self.n} out of range")
        if self.B.mask == 0:
            raise ValueError("conditions need positive measure")

    @property
    def depth(self) -> int:
        return self.B.depth

    @property
    def height(self) -> int:
        return self.n

    def __str__(self) -> str:
        return f"({self.B}, n={self.n})"


def top_condition(depth: int) -> PCondition:
    return PCondition(full_set(depth), 0)


def in_pprime(c: PCondition) -> bool:
    return density_ok(c.B, c.n)


def _same_depth(c1: PCondition, c2: PCondition) -> int:
    if c1.depth != c2.depth:
        raise ValueError("conditions live at different depths")
    return c1.depth


@lru_cache(maxsize=None)
def _cyls(depth: int, level: int) -> tuple[int, ...]:
    return tuple(cyl_mask(depth, level, j) for j in range(1 << level))


def _positions(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _leq_masks(am: int, an: int, bm: int, bn: int, depth: int) -> bool:
    return (
        an >= bn
        and am & ~bm == 0
        and levelset_mask(am, depth, bn) == levelset_mask(bm, depth, bn)
    )


def p_leq(c1: PCondition, c2: PCondition) -> bool:
    """c1 extends c2: subset, deeper commitment, same trace at c2's level."""
    depth = _same_depth(c1, c2)
    return _leq_masks(c1.B.mask, c1.n, c2.B.mask, c2.n, depth)


def _compat_masks(am: int, an: int, bm: int, bn: int, depth: int) -> bool:
    """Closed form: with an >= bn, the traces at bn agree and every committed
    node of the finer condition keeps joint mass.  Frozen after exhaustive
    agreement with `compat_oracle` (the oracle is normative)."""
    if an < bn:
        am, an, bm, bn = bm, bn, am, an
    if levelset_mask(am, depth, bn) != levelset_mask(bm, depth, bn):
        return False
    inter = am & bm
    cyls = _cyls(depth, an)
    lv = levelset_mask(am, depth, an)
    while lv:
        low = lv & -lv
        if inter & cyls[low.bit_length() - 1] == 0:
            return False
        lv ^= low
    return True


def p_compatible(c1: PCondition, c2: PCondition) -> bool:
    depth = _same_depth(c1, c2)
    return _compat_masks(c1.B.mask, c1.n, c2.B.mask, c2.n, depth)


def compat_oracle(c1: PCondition, c2: PCondition) -> bool:
    """Existential ground truth: some condition at this depth extends both.

    Any common extension (E, k) must satisfy E inside the intersection and
    k >= max(n, m), so enumerating submasks of the intersection is the full
    search.  Exponential in the intersection's node count; desk scale only.
    """
    depth = _same_depth(c1, c2)
    inter = c1.B.mask & c2.B.mask
    if inter.bit_count() > 24:
        raise ValueError("oracle restricted to intersections of <= 24 nodes")
    lv1 = levelset_mask(c1.B.mask, depth, c1.n)
    lv2 = levelset_mask(c2.B.mask, depth, c2.n)
    e = inter
    while True:
        if e != 0:
            if (
                levelset_mask(e, depth, c1.n) == lv1
                and levelset_mask(e, depth, c2.n) == lv2
            ):
                return True
        if e == 0:
            break
        e = (e - 1) & inter
    return False


def prune_to_dense(B: ClopenSet, n: int) -> PCondition:
    """Drop level-n nodes too thin for the dense part, never inventing mass.

    Cylinders at one level are disjoint, so removal cannot thin a survivor;
    the loop is a fixpoint check.  Fails when every node dies.
    """
    if n > B.depth:
        raise ValueError("level exceeds depth")
    mask = B.mask
    depth = B.depth
    need = 1 << (depth - n - 1) if n < depth else 1
    cyls = _cyls(depth, n)
    while True:
        thin = 0
        lv = levelset_mask(mask, depth, n)
        while lv:
            low = lv & -lv
            j = low.bit_length() - 1
            if (mask & cyls[j]).bit_count() < need:
                thin |= cyls[j]
            lv ^= low
        if thin == 0:
            break
        mask &= ~thin
    if mask == 0:
        raise PruneFailed(f"no level-{n} node of {B} retains enough mass")
    return PCondition(ClopenSet(depth, mask), n)


def _dense_mask(mask: int, depth: int, level: int) -> bool:
    if level >= depth:
        return True
    need = 1 << (depth - level - 1)
    cyls = _cyls(depth, level)
    lv = levelset_mask(mask, depth, level)
    while lv:
        low = lv & -lv
        if (mask & cyls[low.bit_length() - 1]).bit_count() < need:
            return False
        lv ^= low
    return True


def _subset_dp(universe: int, pieces: list[int], level: int, proj_shifts: list[int]):
    """Tables over all subsets of the nodes in `universe` (a level set).

    Returns (pos, T, U, projs) where for subset x: T[x] is the chosen node
    mask, U[x] the union of the matching pieces, and projs[i][x] the node
    mask projected proj_shifts[i] levels up.
    """
    pos = _positions(universe)
    size = 1 << len(pos)
    T = [0] * size
    U = [0] * size
    projs = [[0] * size for _ in proj_shifts]
    for x in range(1, size):
        low = x & -x
        j = low.bit_length() - 1
        y = x ^ low
        T[x] = T[y] | (1 << pos[j])
        U[x] = U[y] | pieces[j]
        for pi, shift in enumerate(proj_shifts):
            projs[pi][x] = projs[pi][y] | (1 << (pos[j] >> shift))
    return pos, T, U, projs


def main_cover(b: PCondition, c: PCondition, k: int) -> list[PCondition]:
    """The finite family below c that fences off everything incompatible
    with b up to height k.

    Per height ell the candidates are cylinder surgeries on c: either the
    level-ell trace already disagrees with b's, or the trace agrees and the
    mass below one committed node of b is cut away.  Candidates outside the
    dense part are dropped; a dropped candidate can dominate no dense
    condition either, so nothing dense is lost.
    """
    depth = _same_depth(b, c)
    if not in_pprime(b) or not in_pprime(c):
        raise ValueError("main_cover expects dense-part conditions")
    if k > depth:
        raise DepthExhausted(f"height bound {k} exceeds depth {depth}")
    n, m = b.n, c.n
    bmask, cmask = b.B.mask, c.B.mask
    lv_b = [levelset_mask(bmask, depth, lv) for lv in range(depth + 1)]
    lv_c = [levelset_mask(cmask, depth, lv) for lv in range(depth + 1)]
    found: set[tuple[int, int]] = set()

    for ell in range(m, k + 1):
        need = 1 << (depth - ell - 1) if ell < depth else 1
        if ell < n:
            # trace-mismatch family at level ell
            cyls = _cyls(depth, ell)
            pos, T, U, (pm,) = _subset_dp(
                lv_c[ell],
                [cmask & cyls[j] for j in _positions(lv_c[ell])],
                ell,
                [ell - m],
            )
            dense = [
                (cmask & cyls[j]).bit_count() >= need for j in _positions(lv_c[ell])
            ]
            bad = [0] * len(T)
            for x in range(1, len(T)):
                low = x & -x
                bad[x] = bad[x ^ low] + (0 if dense[low.bit_length() - 1] else 1)
            for x in range(1, len(T)):
                if pm[x] == lv_c[m] and T[x] != lv_b[ell] and bad[x] == 0:
                    found.add((U[x], ell))
            # families over level-n traces: agree with b at ell, then either
            # miss one of b's nodes outright or cut its mass away
            cyls_n = _cyls(depth, n)
            pos_n = _positions(lv_c[n])
            pieces_n = [cmask & cyls_n[j] for j in pos_n]
            _, Tn, Un, (pm_n, pl_n) = _subset_dp(
                lv_c[n], pieces_n, n, [n - m, n - ell]
            )
            for x in range(1, len(Tn)):
                if pm_n[x] != lv_c[m] or pl_n[x] != lv_b[ell]:
                    continue
                if Tn[x] & lv_b[n] != lv_b[n]:
                    if _dense_mask(Un[x], depth, ell):
                        found.add((Un[x], ell))
                else:
                    for t in _positions(lv_b[n]):
                        special = cmask & cyls_n[t] & ~bmask
                        if special == 0:
                            continue
                        cand = (Un[x] & ~cyls_n[t]) | special
                        if _dense_mask(cand, depth, ell):
                            found.add((cand, ell))
        else:
            cyls = _cyls(depth, ell)
            pos = _positions(lv_c[ell])
            pieces = [cmask & cyls[j] for j in pos]
            _, T, U, (pm, pn) = _subset_dp(lv_c[ell], pieces, ell, [ell - m, ell - n])
            dense = [piece.bit_count() >= need for piece in pieces]
            bad = [0] * len(T)
            for x in range(1, len(T)):
                low = x & -x
                bad[x] = bad[x ^ low] + (0 if dense[low.bit_length() - 1] else 1)
            for x in range(1, len(T)):
                if pm[x] != lv_c[m]:
                    continue
                if pn[x] != lv_b[n]:
                    if bad[x] == 0:
                        found.add((U[x], ell))
                else:
                    for bit_j, t in enumerate(pos):
                        if not T[x] >> t & 1:
                            continue
                        special = pieces[bit_j] & ~bmask
                        if special == 0 or special.bit_count() < need:
                            continue
                        if bad[x] - (0 if dense[bit_j] else 1) != 0:
                            continue
                        found.add(((U[x] & ~cyls[t]) | special, ell))
    return [
        PCondition(ClopenSet(depth, mask), ell)
        for ell, mask in sorted((ell, mask) for mask, ell in found)
    ]


def iterate_cover(ps: Sequence[PCondition], k: int) -> list[PCondition]:
    """Fence off everything (up to height k) incompatible with all of ps by
    refining the cover one condition at a time, starting from the top."""
    if not ps:
        raise ValueError("iterate_cover needs at least one condition")
    depth = ps[0].depth
    for p in ps:
        if p.depth != depth:
            raise ValueError("conditions live at different depths")
    family = main_cover(ps[0], top_condition(depth), k)
    for p in ps[1:]:
        refined: dict[tuple[int, int], PCondition] = {}
        for q in family:
            for r in main_cover(p, q, k):
                refined[(r.n, r.B.mask)] = r
        family = [refined[key] for key in sorted(refined)]
    return family


@dataclass(frozen=True)
class OracleReport:
    bad_members: tuple[PCondition, ...]
    uncovered: tuple[PCondition, ...]
    checked: int

    @property
    def ok(self) -> bool:
        return not self.bad_members and not self.uncovered


def cover_oracle(
    b: PCondition, c: PCondition, k: int, members: Sequence[PCondition]
) -> OracleReport:
    """Exhaustively audit a claimed cover.

    Every dense-part condition below c that is incompatible with b and of
    height <= k must extend some member, and every member must itself sit
    below c and be incompatible with b.  Enumerates all submasks of c's
    set, so desk scale only.
    """
    depth = _same_depth(b, c)
    bad_members = tuple(
        q for q in members if not (p_leq(q, c) and not p_compatible(q, b))
    )
    kk = min(k, depth)
    m = c.n
    cmask = c.B.mask
    if cmask.bit_count() > 24:
        raise ValueError("oracle restricted to sets of <= 24 nodes")
    lv_c_m = levelset_mask(cmask, depth, m)
    buckets: dict[tuple[int, int], list[int]] = {}
    for q in members:
        key = (q.n, levelset_mask(q.B.mask, depth, q.n))
        buckets.setdefault(key, []).append(q.B.mask)
    bmask, n = b.B.mask, b.n
    uncovered: list[PCondition] = []
    checked = 0
    e = cmask
    while True:
        if e and levelset_mask(e, depth, m) == lv_c_m:
            lv_e = [levelset_mask(e, depth, lv) for lv in range(depth + 1)]
            for ell in range(m, kk + 1):
                if not _dense_mask(e, depth, ell):
                    continue
                if _compat_masks(e, ell, bmask, n, depth):
                    continue
                checked += 1
                if not any(
                    e & ~mem == 0
                    for lp in range(m, ell + 1)
                    for mem in buckets.get((lp, lv_e[lp]), ())
                ):
                    uncovered.append(PCondition(ClopenSet(depth, e), ell))
        if e == 0:
            break
        e = (e - 1) & cmask
    return OracleReport(bad_members, tuple(uncovered), checked)


def enumerate_pprime(depth: int, max_n: int | None = None) -> tuple[PCondition, ...]:
    """All dense-part conditions at this depth with commitment <= max_n."""
    if max_n is None:
        max_n = depth
    out = []
    for n in range(max_n + 1):
        for mask in range(1, 1 << (1 << depth)):
            if _dense_mask(mask, depth, n):
                out.append(PCondition(ClopenSet(depth, mask), n))
    return tuple(out)


class DeskPoset:
    """The dense part at one depth as a poset the soft machinery accepts.

    Order and compatibility are the closed forms above (oracle-validated),
    so antichain and cover checks over hundreds of conditions stay fast.
    """

    def __init__(self, depth: int, max_n: int | None = None) -> None:
        self.depth = depth
        self.elements = enumerate_pprime(depth, max_n)
        self.index = {e: i for i, e in enumerate(self.elements)}
        self.top = top_condition(depth)
        if self.top not in self.index:
            raise ValueError("desk poset must contain the top condition")
        self._lv = {
            e: tuple(levelset_mask(e.B.mask, depth, lv) for lv in range(depth + 1))
            for e in self.elements
        }
        self._rows: list[int] | None = None

    def leq(self, a: PCondition, b: PCondition) -> bool:
        return (
            a.n >= b.n
            and a.B.mask & ~b.B.mask == 0
            and self._lv[a][b.n] == self._lv[b][b.n]
        )

    def compatible(self, a: PCondition, b: PCondition) -> bool:
        if a.n < b.n:
            a, b = b, a
        if self._lv[a][b.n] != self._lv[b][b.n]:
            return False
        inter = a.B.mask & b.B.mask
        cyls = _cyls(self.depth, a.n)
        lv = self._lv[a][a.n]
        while lv:
            low = lv & -lv
            if inter & cyls[low.bit_length() - 1] == 0:
                return False
            lv ^= low
        return True

    def heights(self) -> dict[PCondition, int]:
        return {e: e.n for e in self.elements}

    def compat_rows(self) -> list[int]:
        """Row i is the bitmask of elements compatible with element i."""
        if self._rows is None:
            size = len(self.elements)
            rows = [0] * size
            for i in range(size):
                rows[i] |= 1 << i
                for j in range(i + 1, size):
                    if self.compatible(self.elements[i], self.elements[j]):
                        rows[i] |= 1 << j
                        rows[j] |= 1 << i
            self._rows = rows
        return self._rows


def pcondition_to_json(c: PCondition) -> dict:
    return {"B": clopen_to_json(c.B), "n": c.n}


def pcondition_from_json(obj: dict) -> PCondition:
    return PCondition(clopen_from_json(obj["B"]), obj["n"])


def parse_pcondition(text: str) -> PCondition:
    """Parse the `(d=3:{000,001}, n=1)` wire form."""
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ValueError(f"bad condition literal: {text!r}")
    body, _, tail = text[1:-1].rpartition(",")
    tail = tail.strip()
    if not tail.startswith("n="):
        raise ValueError(f"bad condition literal: {text!r}")
    return PCondition(parse_clopen(body.strip()), int(tail[2:]))
