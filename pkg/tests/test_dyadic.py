import random
from fractions import Fraction

import pytest

from thompson.dyadic import (
    Dyadic,
    Relation,
    StdInterval,
    UNIT,
    LEFT_HALF,
    RIGHT_HALF,
    compare,
)


def rand_dyadic(rng, max_level=40):
    e = rng.randint(0, max_level)
    return Dyadic(rng.randint(-(1 << 20), 1 << 20), e)


def test_canonical_form_examples():
    assert (Dyadic(6, 3).m, Dyadic(6, 3).e) == (3, 2)
    assert (Dyadic(0, 7).m, Dyadic(0, 7).e) == (0, 0)
    assert (Dyadic(4, 0).m, Dyadic(4, 0).e) == (1, -2)  # the integer 4
    neg = -Dyadic(0, 0)
    assert (neg.m, neg.e) == (0, 0)


def test_canonicalization_idempotent_and_value_preserving():
    rng = random.Random(1)
    for _ in range(10_000):
        m = rng.randint(-(1 << 30), 1 << 30)
        e = rng.randint(0, 50)
        d = Dyadic(m, e)
        assert d.m % 2 == 1 or d.m % 2 == -1 or (d.m, d.e) == (0, 0)
        assert d.as_fraction() == Fraction(m, 1 << e)
        again = Dyadic(d.m, d.e)
        assert (again.m, again.e) == (d.m, d.e)


def test_arith_against_fraction_oracle():
    rng = random.Random(2)
    for _ in range(10_000):
        a, b = rand_dyadic(rng), rand_dyadic(rng)
        fa, fb = a.as_fraction(), b.as_fraction()
        assert (a + b).as_fraction() == fa + fb
        assert (a - b).as_fraction() == fa - fb
        assert (a * b).as_fraction() == fa * fb
        assert (-a).as_fraction() == -fa
        assert compare(a, b) == (fa > fb) - (fa < fb)


def test_simple_arithmetic_values():
    half, quarter = Dyadic(1, 1), Dyadic(1, 2)
    assert str(half + quarter) == "3/4"
    assert str(Dyadic(3, 2) * Dyadic(1, -1)) == "3/2"  # 3/4 * 2
    assert compare(Dyadic(3, 3), half) == -1
    assert compare(Dyadic(7, 3), Dyadic(3, 2)) == 1
    assert compare(half, half) == 0


def test_parse_and_format():
    assert Dyadic.parse("3/4") == Dyadic(3, 2)
    assert Dyadic.parse("3/2^2") == Dyadic(3, 2)
    assert Dyadic.parse("0.75") == Dyadic(3, 2)
    assert Dyadic.parse("2") == Dyadic(1, -1)
    assert str(Dyadic.parse("1/2")) == "1/2"
    with pytest.raises(ValueError):
        Dyadic.parse("1/3")
    with pytest.raises(ValueError):
        Dyadic.parse("0.1")  # 1/10 is not dyadic
    with pytest.raises(ValueError):
        Dyadic.parse("x")


def test_scaled():
    assert Dyadic(3, 2).scaled(1) == Dyadic(3, 1)
    assert Dyadic(3, 2).scaled(-2) == Dyadic(3, 4)


def rand_interval(rng, max_level=10):
    n = rng.randint(0, max_level)
    return StdInterval(rng.randrange(1 << n), n)


def test_interval_relate_examples():
    assert LEFT_HALF.relate(StdInterval(1, 2)) == Relation.CONTAINS
    assert StdInterval(1, 2).relate(LEFT_HALF) == Relation.INSIDE
    assert LEFT_HALF.relate(RIGHT_HALF) == Relation.DISJOINT
    assert UNIT.relate(UNIT) == Relation.EQUAL


def test_interval_relate_symmetry_and_trichotomy():
    rng = random.Random(3)
    for _ in range(5_000):
        i, j = rand_interval(rng), rand_interval(rng)
        r, s = i.relate(j), j.relate(i)
        flip = {
            Relation.EQUAL: Relation.EQUAL,
            Relation.DISJOINT: Relation.DISJOINT,
            Relation.INSIDE: Relation.CONTAINS,
            Relation.CONTAINS: Relation.INSIDE,
        }
        assert s == flip[r]
        # nesting law: never partial overlap
        li, ri_ = i.left.as_fraction(), i.right.as_fraction()
        lj, rj = j.left.as_fraction(), j.right.as_fraction()
        overlap = max(li, lj) < min(ri_, rj)
        assert (r == Relation.DISJOINT) == (not overlap)


def test_children_partition():
    rng = random.Random(4)
    for _ in range(500):
        i = rand_interval(rng, 8)
        l, r = i.children()
        assert l.left == i.left and r.right == i.right and l.right == r.left
        assert l.parent() == i and r.parent() == i


def test_contains_point():
    cell = RIGHT_HALF
    assert cell.contains_point(Dyadic(3, 2), strict=True)
    assert not cell.contains_point(Dyadic(1, 1), strict=True)
    assert cell.contains_point(Dyadic(1, 1), strict=False)
    assert not cell.contains_point(Dyadic(1, 2))


def test_interval_serialize_roundtrip():
    rng = random.Random(5)
    for _ in range(200):
        i = rand_interval(rng)
        assert StdInterval.parse(i.serialize()) == i
