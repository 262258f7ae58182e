"""Non-crossing arc diagrams of a 2N-gon and their canonical numbering.

A diagram is stored as a sorted tuple of arcs ``(a, b)`` with ``a < b`` and
1-based vertex labels. Its *partner sequence* lists, for each vertex in
order, the vertex it is joined to; diagrams are compared through it.

Canonical numbering
-------------------
For each ``N`` the diagrams with an explicit formula come first, in the
order of their formula index. All other diagrams follow in lexicographic
order of their partner sequences. Each of them is a rotation of exactly
one formula diagram, and the table records the rotation step count.

==  =====  =================================  ======================
N   sigma  arcs                               formula
==  =====  =================================  ======================
1   1      (1,2)                              two-point power
2   1      (1,4) (2,3)                        rectangle Pi_1
3   1      (1,6) (2,3) (4,5)                  hexagon Pi_1
3   2      (1,6) (2,5) (3,4)                  hexagon Pi_2 (rainbow)
4   1      (1,8) (2,3) (4,5) (6,7)            octagon Pi_1
4   2      (1,8) (2,7) (3,4) (5,6)            octagon Pi_2
4   3      (1,8) (2,7) (3,6) (4,5)            octagon Pi_3 (rainbow)
==  =====  =================================  ======================

For ``N >= 5`` only the rainbow ``(j, 2N + 1 - j)`` and its rotations carry
a formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError

__all__ = [
    "Diagram",
    "canonical_table",
    "diagram_from_arcs",
    "enumerate_diagrams",
    "rainbow_arcs",
    "rotate_arcs",
]

MAX_N = 8

# Formula diagrams keyed by (N, formula index).
_BASE_ARCS = {
    (1, 1): ((1, 2),),
    (2, 1): ((1, 4), (2, 3)),
    (3, 1): ((1, 6), (2, 3), (4, 5)),
    (3, 2): ((1, 6), (2, 5), (3, 4)),
    (4, 1): ((1, 8), (2, 3), (4, 5), (6, 7)),
    (4, 2): ((1, 8), (2, 7), (3, 4), (5, 6)),
    (4, 3): ((1, 8), (2, 7), (3, 6), (4, 5)),
}
_FAMILY = {1: "n1", 2: "rect", 3: "hex", 4: "oct"}


@dataclass(frozen=True)
class Diagram:
    """A polygon diagram with its canonical index and evaluation recipe.

    Attributes
    ----------
    arcs : tuple of (int, int)
        Sorted arcs with 1-based vertices.
    sigma : int
        Canonical index, starting at 1.
    family : str
        ``"n1"``, ``"rect"``, ``"hex"``, ``"oct"`` or ``"rainbow"``.
    base : int
        Formula index of the diagram this one is a rotation of.
    steps : int
        Rotation steps applied to the formula diagram.
    """

    arcs: tuple[tuple[int, int], ...]
    sigma: int
    family: str
    base: int
    steps: int

    @property
    def N(self) -> int:
        return len(self.arcs)

    def partners(self) -> tuple[int, ...]:
        return partner_sequence(self.arcs)


def partner_sequence(arcs) -> tuple[int, ...]:
    p = [0] * (2 * len(arcs))
    for a, b in arcs:
        p[a - 1] = b
        p[b - 1] = a
    return tuple(p)


def diagram_from_arcs(arcs) -> tuple[tuple[int, int], ...]:
    """Normalize arcs to sorted ``(a, b)`` pairs and check non-crossing."""
    out = tuple(sorted((min(a, b), max(a, b)) for a, b in arcs))
    n = 2 * len(out)
    seen = sorted(v for arc in out for v in arc)
    if seen != list(range(1, n + 1)):
        raise DomainError("arcs must pair every vertex exactly once")
    for a, b in out:
        for c, d in out:
            if a < c < b < d:
                raise DomainError(f"arcs {(a, b)} and {(c, d)} cross")
    return out


def rotate_arcs(arcs, steps: int):
    """Shift every vertex label by ``steps`` modulo ``2N``."""
    n = 2 * len(arcs)
    return diagram_from_arcs(
        (((a - 1 + steps) % n) + 1, ((b - 1 + steps) % n) + 1) for a, b in arcs)


def rainbow_arcs(N: int):
    """Arcs ``(j, 2N + 1 - j)`` of the rainbow diagram."""
    return tuple((j, 2 * N + 1 - j) for j in range(1, N + 1))


def _matchings(lo: int, hi: int):
    """All non-crossing perfect matchings of ``lo..hi``."""
    if lo > hi:
        yield ()
        return
    for partner in range(lo + 1, hi + 1, 2):
        for inner in _matchings(lo + 1, partner - 1):
            for outer in _matchings(partner + 1, hi):
                yield ((lo, partner),) + inner + outer


@lru_cache(maxsize=None)
def canonical_table(N: int) -> tuple[Diagram, ...]:
    """All ``C_N`` diagrams in canonical order with evaluation recipes."""
    if int(N) != N or not 1 <= N <= MAX_N:
        raise DomainError(f"N must be an integer in 1..{MAX_N}")
    N = int(N)
    all_arcs = [diagram_from_arcs(m) for m in _matchings(1, 2 * N)]
    if N <= 4:
        family = _FAMILY[N]
        bases = [(k, _BASE_ARCS[(N, k)]) for k in sorted(k for (n, k) in _BASE_ARCS if n == N)]
    else:
        family = "rainbow"
        bases = [(1, rainbow_arcs(N))]
    base_set = {arcs for _, arcs in bases}
    rest = sorted((a for a in all_arcs if a not in base_set), key=partner_sequence)
    table = [Diagram(arcs, sigma, family, k, 0)
             for sigma, (k, arcs) in enumerate(bases, start=1)]
    for arcs in rest:
        recipe = None
        for k, barcs in bases:
            for s in range(1, 2 * N):
                if rotate_arcs(barcs, s) == arcs:
                    recipe = (k, s)
                    break
            if recipe:
                break
        if recipe is None:
            # Only possible for N >= 5, where most diagrams have no formula.
            recipe = (0, 0)
        table.append(Diagram(arcs, len(table) + 1, family, *recipe))
    return tuple(table)


def enumerate_diagrams(N: int) -> list[Diagram]:
    """All non-crossing matchings of ``2N`` vertices in canonical order."""
    return list(canonical_table(N))
