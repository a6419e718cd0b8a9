"""Elements of Thompson's groups F, T and V as exact cell-pair maps.

An element is a bijection of [0,1) presented as a reduced ordered pairing
of two partitions of [0,1) into standard dyadic intervals; each domain
cell is carried onto its range cell by the orientation-preserving affine
map, whose slope is automatically a power of two.  The reduced pairing is
a canonical form: two presentations define the same function iff their
reduced records are identical, so equality and hashing are structural.

The convention throughout is right-continuity: every map is a bijection
of the half-open interval [0,1), and the classical closed-interval (F, T)
statements are recovered by the exact one-sided-limit check
(:meth:`CellMap.circle_continuous`).

Composition convention: ``(g * h)(x) == g(h(x))``.
"""

from __future__ import annotations

from functools import lru_cache

from .dyadic import (
    Dyadic,
    StdInterval,
    UNIT,
    LEFT_HALF,
    RIGHT_HALF,
    ZERO,
)

__all__ = [
    "AffinePatch",
    "CellMap",
    "MalformedPartition",
    "OutOfDomain",
    "standard_generator",
    "arc_subgroup_generators",
    "rotation",
    "supported_copy",
    "identity",
]


class MalformedPartition(ValueError):
    """A claimed cell list does not partition [0,1)."""


class OutOfDomain(ValueError):
    """Evaluation outside [0,1)."""


# ---------------------------------------------------------------------------
# affine patches
# ---------------------------------------------------------------------------


class AffinePatch:
    """x |-> 2**slope_exp * x + offset on a standard interval.

    The image of the domain is required to be a standard interval again;
    that invariant is what keeps restriction data canonical.
    """

    __slots__ = ("domain", "slope_exp", "offset")

    def __init__(self, domain: StdInterval, slope_exp: int, offset: Dyadic):
        jn = domain.n - slope_exp
        if jn < 0 or (offset.m != 0 and offset.e > jn):
            raise ValueError("patch image is not a standard interval")
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "slope_exp", slope_exp)
        object.__setattr__(self, "offset", offset)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("AffinePatch is immutable")

    @property
    def image(self) -> StdInterval:
        jn = self.domain.n - self.slope_exp
        jk = self.domain.k + (self.offset.m << (jn - self.offset.e))
        return StdInterval(jk, jn)

    def apply(self, x: Dyadic) -> Dyadic:
        return x.scaled(self.slope_exp) + self.offset

    def is_identity(self) -> bool:
        return self.slope_exp == 0 and self.offset.m == 0

    def key(self) -> tuple[int, int, int, int, int]:
        return (self.domain.k, self.domain.n, self.slope_exp, self.offset.m, self.offset.e)

    @classmethod
    def from_key(cls, key: tuple[int, int, int, int, int]) -> "AffinePatch":
        dk, dn, e, cm, ce = key
        return cls(StdInterval(dk, dn), e, Dyadic(cm, ce))

    def __eq__(self, other):
        return isinstance(other, AffinePatch) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"AffinePatch({self.domain!r}, {self.slope_exp}, {self.offset!r})"

    def __str__(self):
        return f"{self.domain} -> {self.image} (x |-> 2^{self.slope_exp} x + {self.offset})"


# ---------------------------------------------------------------------------
# integer helpers shared with the coset-graph module
# ---------------------------------------------------------------------------


def _transfer(src: StdInterval, dst: StdInterval, sub: StdInterval) -> StdInterval:
    """Image of sub (contained in src) under the canonical map src -> dst."""
    d = sub.n - src.n
    rel = sub.k - (src.k << d)
    return StdInterval((dst.k << d) + rel, dst.n + d)


def _left_le(ak: int, an: int, bk: int, bn: int) -> bool:
    """ak/2^an <= bk/2^bn (both interval left endpoints)."""
    q = max(an, bn)
    return (ak << (q - an)) <= (bk << (q - bn))


def _locate(cells, k: int, n: int) -> int:
    """Index of the cell containing the point k/2^n, cells sorted by left."""
    lo, hi = 0, len(cells) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        d = cells[mid][0]
        if _left_le(d.k, d.n, k, n):
            lo = mid
        else:
            hi = mid - 1
    return lo


def _reduce_pairs(pairs):
    """Stack merge of sibling cell pairs until fully reduced."""
    out = []
    for pair in pairs:
        out.append(pair)
        while len(out) >= 2:
            d0, r0 = out[-2]
            d1, r1 = out[-1]
            if (
                d0.n == d1.n
                and r0.n == r1.n
                and d0.k % 2 == 0
                and d1.k == d0.k + 1
                and r0.k % 2 == 0
                and r1.k == r0.k + 1
            ):
                out[-2:] = [
                    (StdInterval(d0.k >> 1, d0.n - 1), StdInterval(r0.k >> 1, r0.n - 1))
                ]
            else:
                break
    return out


def _check_partition(cells, side: str) -> None:
    pos_k, pos_n = 0, 0  # current position as pos_k / 2^pos_n
    for c in cells:
        q = max(pos_n, c.n)
        if (pos_k << (q - pos_n)) != (c.k << (q - c.n)):
            raise MalformedPartition(f"{side} cells do not partition [0,1) at {c}")
        pos_k, pos_n = c.k + 1, c.n
    if (pos_k << max(0, -pos_n)) != (1 << max(0, pos_n)):
        raise MalformedPartition(f"{side} cells do not cover [0,1)")


# ---------------------------------------------------------------------------
# cell maps
# ---------------------------------------------------------------------------


class CellMap:
    """A Thompson group element: a reduced pairing of two standard partitions."""

    __slots__ = ("pairs", "_cls", "_hash")

    def __init__(self, pairs, *, _reduced: bool = False):
        pairs = [
            (d, r) if isinstance(d, StdInterval) else (StdInterval(*d), StdInterval(*r))
            for d, r in pairs
        ]
        if not _reduced:
            if not pairs:
                raise MalformedPartition("empty cell list")
            L = max(d.n for d, _ in pairs)
            Lr = max(r.n for _, r in pairs)
            pairs.sort(key=lambda p: p[0].k << (L - p[0].n))
            _check_partition([d for d, _ in pairs], "domain")
            _check_partition(sorted((r for _, r in pairs), key=lambda r: r.k << (Lr - r.n)),
                             "range")
            pairs = _reduce_pairs(pairs)
        object.__setattr__(self, "pairs", tuple(pairs))
        object.__setattr__(self, "_cls", None)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("CellMap is immutable")

    # -- basic structure ----------------------------------------------

    def __eq__(self, other):
        return isinstance(other, CellMap) and self.pairs == other.pairs

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self.pairs)
            object.__setattr__(self, "_hash", h)
        return h

    def __len__(self):
        return len(self.pairs)

    def is_identity(self) -> bool:
        return self.pairs == ((UNIT, UNIT),)

    @property
    def max_level(self) -> int:
        return max(max(d.n, r.n) for d, r in self.pairs)

    @property
    def group_class(self) -> str:
        """'F', 'T' or 'V': whether range cells appear in increasing order,
        a cyclic rotation of it, or neither."""
        cls = self._cls
        if cls is None:
            rs = [r for _, r in self.pairs]
            wraps = 0
            for i, r in enumerate(rs):
                nxt = rs[(i + 1) % len(rs)]
                # right endpoint of r equals left endpoint of nxt, mod 1
                rk, rn = r.k + 1, r.n
                if rk == (1 << rn):
                    rk = 0
                q = max(rn, nxt.n)
                if (rk << (q - rn)) != (nxt.k << (q - nxt.n)):
                    wraps += 1
            if wraps == 0:
                cls = "F" if rs[0].k == 0 else "T"
            else:
                cls = "V"
            object.__setattr__(self, "_cls", cls)
        return cls

    # -- group operations ----------------------------------------------

    def compose(self, other: "CellMap") -> "CellMap":
        """self o other, i.e. (self * other)(x) = self(other(x))."""
        gp = self.pairs
        out = []
        for d, r in other.pairs:
            i = _locate(gp, r.k, r.n)
            e, s = gp[i]
            if e.n <= r.n:  # e contains r
                out.append((d, _transfer(e, s, r)))
                continue
            # run of self-domain cells inside r
            while i < len(gp):
                e, s = gp[i]
                if e.n <= r.n or (e.k >> (e.n - r.n)) != r.k:
                    break
                out.append((_transfer(r, d, e), s))
                i += 1
        return CellMap(_reduce_pairs(out), _reduced=True)

    __mul__ = compose

    def inverse(self) -> "CellMap":
        pairs = [(r, d) for d, r in self.pairs]
        L = max(d.n for d, _ in pairs)
        pairs.sort(key=lambda p: p[0].k << (L - p[0].n))
        return CellMap(_reduce_pairs(pairs), _reduced=True)

    def __pow__(self, k: int) -> "CellMap":
        base = self if k >= 0 else self.inverse()
        result = identity()
        for _ in range(abs(k)):
            result = base.compose(result)
        return result

    def conjugate(self, by: "CellMap") -> "CellMap":
        """by o self o by^-1."""
        return by.compose(self).compose(by.inverse())

    # -- evaluation and restriction -------------------------------------

    def evaluate(self, x: Dyadic) -> Dyadic:
        if not (ZERO <= x and x < Dyadic(1, 0)):
            raise OutOfDomain(f"{x} is outside [0,1)")
        if x.e <= 0:  # x == 0
            i = 0
        else:
            i = _locate(self.pairs, x.m, x.e)
        d, r = self.pairs[i]
        return r.left + (x - d.left).scaled(d.n - r.n)

    __call__ = evaluate

    def restrict(self, interval: StdInterval) -> tuple[AffinePatch, ...]:
        """The canonical patch decomposition of the restriction to *interval*.

        The patches partition the interval; each carries one affine law and
        has a standard image; sibling patches whose merged image is again
        standard are merged, so the result depends only on the function.
        """
        raw = []
        i = _locate(self.pairs, interval.k, interval.n)
        d, r = self.pairs[i]
        if d.n <= interval.n:  # one cell covers the whole interval
            law_e = d.n - r.n
            off = r.left - d.left.scaled(law_e)
            return (AffinePatch(interval, law_e, off),)
        while i < len(self.pairs):
            d, r = self.pairs[i]
            if d.n <= interval.n or (d.k >> (d.n - interval.n)) != interval.k:
                break
            law_e = d.n - r.n
            off = r.left - d.left.scaled(law_e)
            raw.append((d.k, d.n, law_e, off.m, off.e))
            i += 1
        return tuple(AffinePatch.from_key(k) for k in merge_patch_keys(raw))

    def breakpoints(self) -> tuple[Dyadic, ...]:
        """Left endpoints of the maximal half-open affine pieces, excluding 0.

        The map is affine on [a,b) iff no breakpoint lies in the open (a,b);
        for discontinuous (V) elements a jump counts as a breakpoint.
        """
        bps = []
        prev_law = None
        for d, r in self.pairs:
            law_e = d.n - r.n
            off = r.left - d.left.scaled(law_e)
            law = (law_e, off.m, off.e)
            if prev_law is not None and law != prev_law:
                bps.append(d.left)
            prev_law = law
        return tuple(bps)

    # -- predicates ------------------------------------------------------

    def is_identity_on(self, interval: StdInterval) -> bool:
        return all(p.is_identity() for p in self.restrict(interval))

    def fixes_half(self) -> bool:
        """Membership in the subgroup acting as the identity on [0,1/2).

        For F and T the closed-interval version follows by continuity, so
        this single predicate serves all three groups.
        """
        return self.is_identity_on(LEFT_HALF)

    def is_small(self) -> StdInterval | None:
        """A standard interval on which the map is the identity, or None.

        In reduced form, the map is the identity on some standard interval
        iff some pair is a cell paired with itself (an affine non-identity
        map fixes no subinterval), so this scan is exact.
        """
        for d, r in self.pairs:
            if d == r:
                return d
        return None

    def support(self) -> tuple[StdInterval, ...]:
        """The minimal union of standard intervals off which the map is
        the identity (empty for the identity)."""
        out = []
        for d, r in self.pairs:
            if d == r:
                continue
            out.append(d)
            while len(out) >= 2:
                a, b = out[-2], out[-1]
                if a.n == b.n and a.k % 2 == 0 and b.k == a.k + 1:
                    out[-2:] = [StdInterval(a.k >> 1, a.n - 1)]
                else:
                    break
        return tuple(out)

    def order_up_to(self, bound: int) -> int | None:
        """Least n <= bound with self**n == identity, else None."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        p = self
        for n in range(1, bound + 1):
            if p.is_identity():
                return n
            p = self.compose(p)
        return None

    def circle_continuous(self) -> bool:
        """Exact check that the map extends continuously to the circle:
        one-sided limits agree at every breakpoint (incl. wrap at 0~1)."""
        return self.group_class in ("F", "T")

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        return ", ".join(f"{d.serialize()} -> {r.serialize()}" for d, r in self.pairs)

    @classmethod
    def from_text(cls, text: str) -> "CellMap":
        pairs = []
        for chunk in text.split(","):
            lhs, _, rhs = chunk.partition("->")
            pairs.append((StdInterval.parse(lhs), StdInterval.parse(rhs)))
        return cls(pairs)

    def __repr__(self):
        return f"CellMap[{self.to_text()}]"


def merge_patch_keys(keys):
    """Merge sibling patch keys (dk, dn, e, cm, ce) whenever both the
    domains and the images are siblings; returns the canonical coarsest
    list.  Keys must be in domain order."""
    out = []
    for key in keys:
        out.append(key)
        while len(out) >= 2:
            k0, n0, e0, m0, c0 = out[-2]
            k1, n1, e1, m1, c1 = out[-1]
            if (
                n0 == n1
                and e0 == e1
                and m0 == m1
                and c0 == c1
                and k0 % 2 == 0
                and k1 == k0 + 1
                and (m0 == 0 or c0 < n0 - e0)
            ):
                out[-2:] = [(k0 >> 1, n0 - 1, e0, m0, c0)]
            else:
                break
    return out


def identity() -> CellMap:
    return CellMap([(UNIT, UNIT)], _reduced=True)


# ---------------------------------------------------------------------------
# standard generators
# ---------------------------------------------------------------------------


def _cm(*pairs) -> CellMap:
    return CellMap([(StdInterval(*d), StdInterval(*r)) for d, r in pairs])


@lru_cache(maxsize=None)
def standard_generator(name: str) -> CellMap:
    """The four standard generators.

    x0, x1 generate F; adding pi0 gives T; adding pi1 gives V.  x0 is the
    classical map with slopes 1/2, 1, 2 on [0,1/2], [1/2,3/4], [3/4,1];
    x1 is its copy supported on [1/2,1]; pi0 cyclically rotates the cells
    [0,1/2), [1/2,3/4), [3/4,1); pi1 swaps [1/2,3/4) and [3/4,1).
    """
    if name == "x0":
        return _cm(((0, 1), (0, 2)), ((2, 2), (1, 2)), ((3, 2), (1, 1)))
    if name == "x1":
        return _cm(
            ((0, 1), (0, 1)), ((2, 2), (4, 3)), ((6, 3), (5, 3)), ((7, 3), (3, 2))
        )
    if name == "pi0":
        return _cm(((0, 1), (2, 2)), ((2, 2), (3, 2)), ((3, 2), (0, 1)))
    if name == "pi1":
        return _cm(((0, 1), (0, 1)), ((2, 2), (3, 2)), ((3, 2), (2, 2)))
    raise ValueError(f"unknown generator {name!r}")


def rotation(j: int, n: int) -> CellMap:
    """The rigid circle rotation by j/2^n (an element of T)."""
    size = 1 << n
    j %= size
    if j == 0:
        return identity()
    return CellMap(
        [(StdInterval(k, n), StdInterval((k + j) % size, n)) for k in range(size)]
    )


def _complement_cells(cell: StdInterval) -> list[StdInterval]:
    """Siblings along the path to the root: the canonical standard
    decomposition of [0,1) minus the cell."""
    out = []
    k, n = cell.k, cell.n
    while n > 0:
        out.append(StdInterval(k ^ 1, n))
        k >>= 1
        n -= 1
    return out


def supported_copy(g: CellMap, cell: StdInterval) -> CellMap:
    """The copy of g squeezed onto a standard cell, the identity elsewhere."""
    pairs = [(_transfer(UNIT, cell, d), _transfer(UNIT, cell, r)) for d, r in g.pairs]
    pairs += [(c, c) for c in _complement_cells(cell)]
    return CellMap(pairs)


@lru_cache(maxsize=None)
def arc_subgroup_generators(which: str) -> tuple[CellMap, CellMap]:
    """Two generators of the copy of F supported on a circle arc.

    Under t -> (cos 2 pi t, sin 2 pi t) the arcs are U = (0,1/2),
    D = (1/2,1), L = (1/4,3/4) and the wrap-around R = (3/4,5/4).  The U
    generators are x0, x1 squeezed onto [0,1/2); the others are their
    conjugates by quarter / half rotations, which keeps the wrap-around
    case free of special handling.  Every generator is small.
    """
    u = (
        supported_copy(standard_generator("x0"), LEFT_HALF),
        supported_copy(standard_generator("x1"), LEFT_HALF),
    )
    if which == "U":
        return u
    if which == "L":
        r4 = rotation(1, 2)
        return tuple(g.conjugate(r4) for g in u)
    r2 = rotation(1, 1)
    if which == "D":
        return tuple(g.conjugate(r2) for g in u)
    if which == "R":
        return tuple(g.conjugate(r2) for g in arc_subgroup_generators("L"))
    raise ValueError(f"unknown arc {which!r}; expected L, R, U or D")


GROUP_ORDER = {"F": 0, "T": 1, "V": 2}


def class_le(a: str, b: str) -> bool:
    """Containment F <= T <= V on class tags."""
    return GROUP_ORDER[a] <= GROUP_ORDER[b]
