"""Natural numbers extended by a single absorbing infinity.

Every bound the engine manipulates lives in this domain: a cover with
n+1 pieces is recorded as the value n, and "no bound known" is Infinity.
Addition and maximum treat Infinity as absorbing, the supremum of an
empty collection is 0, and finite results past 2**32 - 1 raise rather
than wrap.

>>> ExtNat(3) + ExtNat(2)
ExtNat(5)
>>> supremum([]) == ExtNat(0)
True
>>> INF + ExtNat(7) == INF
True
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

FINITE_MAX = 2**32 - 1


@dataclass(frozen=True, order=False)
class ExtNat:
    'A natural number or None for infinity.'

    v: Optional[int] = None

    def __post_init__(self) -> None:
        if self.v is not None:
            if not isinstance(self.v, int) or isinstance(self.v, bool):
                raise TypeError(f"ExtNat wants an int or None, got {self.v!r}")
            if self.v < 0:
                raise ValueError(f"ExtNat is non-negative, got {self.v}")
            if self.v > FINITE_MAX:
                raise OverflowError(f"finite value {self.v} exceeds {FINITE_MAX}")

    @property
    def is_finite(self) -> bool:
        return self.v is not None

    def __add__(self, other: Union["ExtNat", int]) -> "ExtNat":
        other = _coerce(other)
        if self.v is None or other.v is None:
            return INF
        total = self.v + other.v
        if total > FINITE_MAX:
            raise OverflowError(f"sum {total} exceeds {FINITE_MAX}")
        return ExtNat(total)

    __radd__ = __add__

    def __lt__(self, other: Union["ExtNat", int]) -> bool:
        other = _coerce(other)
        if self.v is None:
            return False
        if other.v is None:
            return True
        return self.v < other.v

    def __le__(self, other: Union["ExtNat", int]) -> bool:
        other = _coerce(other)
        return self == other or self < other

    def __gt__(self, other: Union["ExtNat", int]) -> bool:
        return not self <= _coerce(other)

    def __ge__(self, other: Union["ExtNat", int]) -> bool:
        return not self < _coerce(other)

    def __repr__(self) -> str:
        return "INF" if self.v is None else f"ExtNat({self.v})"

    def __str__(self) -> str:
        return "inf" if self.v is None else str(self.v)

    def to_json(self) -> Union[int, str]:
        'JSON form: plain integer, or the string "inf".'
        return "inf" if self.v is None else self.v

    @staticmethod
    def from_json(raw: Union[int, str]) -> "ExtNat":
        if raw == "inf":
            return INF
        if isinstance(raw, int) and not isinstance(raw, bool):
            return ExtNat(raw)
        raise ValueError(f"not an extended natural: {raw!r}")


INF = ExtNat(None)
ZERO = ExtNat(0)


def _coerce(x: Union[ExtNat, int]) -> ExtNat:
    if isinstance(x, ExtNat):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return ExtNat(x)
    raise TypeError(f"cannot treat {x!r} as an extended natural")


def ext_max(a: Union[ExtNat, int], b: Union[ExtNat, int]) -> ExtNat:
    a, b = _coerce(a), _coerce(b)
    return b if a <= b else a


def supremum(values: Iterable[Union[ExtNat, int]]) -> ExtNat:
    'Largest value of the collection; 0 when it is empty.'
    best = ZERO
    for x in values:
        best = ext_max(best, x)
    return best
