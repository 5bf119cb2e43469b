import pytest

from su2kms import HalfInt


def test_construction_and_value():
    assert HalfInt(3).value == 1.5
    assert HalfInt.of(2).twice == 4
    assert HalfInt.of(1.5).twice == 3
    assert HalfInt.of(HalfInt(5)).twice == 5


def test_rejects_non_half_integers():
    with pytest.raises(ValueError):
        HalfInt.of(0.3)
    with pytest.raises(TypeError):
        HalfInt(1.5)


def test_arithmetic_is_exact():
    a, b = HalfInt.of(0.5), HalfInt.of(1.5)
    assert (a + b).twice == 4
    assert (a - b).twice == -2
    assert (-a).twice == -1
    assert (a + 1).twice == 3
    assert (2 - a).twice == 3
    assert (a * 3).twice == 3
    # no floating rounding: repeated halves sum exactly
    total = HalfInt(0)
    for _ in range(1001):
        total = total + HalfInt(1)
    assert total.twice == 1001


def test_comparisons_and_hash():
    assert HalfInt(2) == 1
    assert HalfInt(1) == 0.5
    assert HalfInt(1) < HalfInt(2)
    assert HalfInt(3) >= 1.5
    assert hash(HalfInt(4)) == hash(HalfInt.of(2))
    d = {HalfInt(0): "a"}
    assert d[HalfInt.of(0)] == "a"


def test_parity_and_str():
    assert HalfInt(4).is_integer()
    assert not HalfInt(3).is_integer()
    assert str(HalfInt(4)) == "2"
    assert str(HalfInt(3)) == "3/2"
    assert HalfInt(3).casimir() == 1.5 * 2.5
