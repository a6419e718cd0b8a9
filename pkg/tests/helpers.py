"""Independent oracles and generators shared by the test modules.

Everything here deliberately avoids the code paths it is used to check:
evaluation oracles use Fractions and the literal defining formulas, the
smallness and affineness oracles work by brute-force grid enumeration.
"""

from __future__ import annotations

import random
from fractions import Fraction

from thompson.dyadic import Dyadic, StdInterval
from thompson.elements import CellMap, identity, standard_generator


def x0_formula(t: Fraction) -> Fraction:
    """The classical three-branch slope-1/2,1,2 map, straight from its
    piecewise definition."""
    if t <= Fraction(1, 2):
        return t / 2
    if t <= Fraction(3, 4):
        return t - Fraction(1, 4)
    return 2 * t - 1


def grid(level: int) -> list[Dyadic]:
    return [Dyadic(k, level) for k in range(1 << level)]


def grid_equal(g: CellMap, h: CellMap, level: int | None = None) -> bool:
    """Functional equality by exhaustive evaluation on a dyadic grid one
    level below every cell of either map (each affine piece is sampled at
    two or more points, which pins the piece down exactly)."""
    if level is None:
        level = max(g.max_level, h.max_level) + 1
    return all(g.evaluate(x) == h.evaluate(x) for x in grid(level))


def brute_small(g: CellMap) -> StdInterval | None:
    """Smallness by enumerating every standard interval of level at most
    the cell depth of g and grid-checking identity on it."""
    L = g.max_level
    for n in range(L + 1):
        for k in range(1 << n):
            cell = StdInterval(k, n)
            step = Dyadic(1, L + 1)
            x = cell.left
            ok = True
            while x < cell.right:
                if g.evaluate(x) != x:
                    ok = False
                    break
                x = x + step
            if ok:
                return cell
    return None


def brute_affine_on(g: CellMap, cell: StdInterval) -> bool:
    """Affineness on a standard interval by second differences on a grid
    strictly finer than every cell of g: a PL map with breakpoints on the
    grid is affine exactly when consecutive grid increments agree."""
    L = max(g.max_level, cell.n) + 2
    step = Dyadic(1, L)
    xs = []
    x = cell.left
    while x < cell.right:
        xs.append(g.evaluate(x))
        x = x + step
    diffs = {(b - a).as_fraction() for a, b in zip(xs, xs[1:])}
    return len(diffs) == 1


def brute_crossing_count(g: CellMap) -> int:
    """Independent count of the standard intervals (level >= 1) on which
    g fails to be affine, by grid enumeration."""
    total = 0
    for n in range(1, g.max_level + 1):
        for k in range(1 << n):
            if not brute_affine_on(g, StdInterval(k, n)):
                total += 1
    return total


SYM_GENS = None


def symmetrized_standard_generators() -> list[CellMap]:
    global SYM_GENS
    if SYM_GENS is None:
        gens = [standard_generator(n) for n in ("x0", "x1", "pi0", "pi1")]
        SYM_GENS = gens + [g.inverse() for g in gens]
    return SYM_GENS


def random_word(rng: random.Random, max_len: int, gens=None) -> CellMap:
    gens = gens or symmetrized_standard_generators()
    g = identity()
    for _ in range(rng.randint(0, max_len)):
        g = rng.choice(gens).compose(g)
    return g


def random_refinement(rng: random.Random, g: CellMap, splits: int) -> list:
    """An unreduced presentation of g: split random pairs into children."""
    pairs = list(g.pairs)
    for _ in range(splits):
        i = rng.randrange(len(pairs))
        d, r = pairs[i]
        dl, dr = d.children()
        rl, rr = r.children()
        pairs[i : i + 1] = [(dl, rl), (dr, rr)]
    rng.shuffle(pairs)
    return pairs
