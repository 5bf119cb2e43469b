"""Exact half-integer arithmetic for spin quantum numbers."""

from __future__ import annotations

import numbers
from dataclasses import dataclass

__all__ = ["HalfInt"]


@dataclass(frozen=True, eq=False)
class HalfInt:
    """A spin-type quantum number stored as twice its value.

    Spin labels s, magnetic numbers m, tensor ranks k, and components q are all
    half-integers.  Keeping ``twice`` as an int makes sums, differences, and
    selection-rule comparisons exact; there is no 0.5-representation rounding.
    """

    twice: int

    def __post_init__(self):
        if isinstance(self.twice, bool) or not isinstance(self.twice, numbers.Integral):
            raise TypeError(f"twice must be an integer, got {self.twice!r}")
        object.__setattr__(self, "twice", int(self.twice))

    @classmethod
    def of(cls, x) -> "HalfInt":
        """Coerce an int, float, or HalfInt; reject anything not a half-integer."""
        if isinstance(x, HalfInt):
            return x
        if isinstance(x, bool):
            raise TypeError("bool is not a quantum number")
        if isinstance(x, numbers.Integral):
            return cls(2 * int(x))
        doubled = float(x) * 2.0
        nearest = round(doubled)
        if abs(doubled - nearest) > 1e-9:
            raise ValueError(f"{x!r} is not a half-integer")
        return cls(int(nearest))

    @property
    def value(self) -> float:
        return self.twice / 2.0

    def is_integer(self) -> bool:
        return self.twice % 2 == 0

    def casimir(self) -> float:
        """s(s+1) for this value of s."""
        return self.twice * (self.twice + 2) / 4.0

    # Exact arithmetic; mixing with ints/floats coerces through `of`.
    def __add__(self, other):
        return HalfInt(self.twice + HalfInt.of(other).twice)

    __radd__ = __add__

    def __sub__(self, other):
        return HalfInt(self.twice - HalfInt.of(other).twice)

    def __rsub__(self, other):
        return HalfInt(HalfInt.of(other).twice - self.twice)

    def __neg__(self):
        return HalfInt(-self.twice)

    def __abs__(self):
        return HalfInt(abs(self.twice))

    def __mul__(self, n):
        if isinstance(n, bool) or not isinstance(n, numbers.Integral):
            return NotImplemented
        return HalfInt(self.twice * int(n))

    __rmul__ = __mul__

    def __float__(self):
        return self.twice / 2.0

    def _coerced(self, other):
        try:
            return HalfInt.of(other)
        except (TypeError, ValueError):
            return None

    def __eq__(self, other):
        o = self._coerced(other)
        return NotImplemented if o is None else self.twice == o.twice

    def __lt__(self, other):
        o = self._coerced(other)
        return NotImplemented if o is None else self.twice < o.twice

    def __le__(self, other):
        o = self._coerced(other)
        return NotImplemented if o is None else self.twice <= o.twice

    def __gt__(self, other):
        o = self._coerced(other)
        return NotImplemented if o is None else self.twice > o.twice

    def __ge__(self, other):
        o = self._coerced(other)
        return NotImplemented if o is None else self.twice >= o.twice

    def __hash__(self):
        return hash(("HalfInt", self.twice))

    def __repr__(self):
        return f"HalfInt({self.twice})"

    def __str__(self):
        if self.twice % 2 == 0:
            return str(self.twice // 2)
        return f"{self.twice}/2"
