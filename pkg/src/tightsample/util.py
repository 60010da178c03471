"""Small shared helpers: error types, rounding, and an O(1)-pick set."""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal


class ConfigError(ValueError):
    """Invalid user-supplied configuration. Maps to CLI exit code 2."""


class DataError(ValueError):
    """Unreadable or inconsistent input data. Maps to CLI exit code 3."""


def round_half_up(x: float, ndigits: int = 2) -> float:
    """Round half away from zero; builtin round() is banker's rounding."""
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


class IndexedSet:
    """Set of hashables with O(1) add/discard and O(1) uniform random pick.

    Backed by a list plus a position map (swap-remove on discard). Iteration
    order depends on the mutation history but is deterministic for a fixed
    sequence of operations, which is all the samplers need.
    """

    __slots__ = ("_items", "_pos")

    def __init__(self, items=()):
        self._items: list = []
        self._pos: dict = {}
        for item in items:
            self.add(item)

    def add(self, item) -> None:
        if item not in self._pos:
            self._pos[item] = len(self._items)
            self._items.append(item)

    def discard(self, item) -> None:
        pos = self._pos.pop(item, None)
        if pos is None:
            return
        last = self._items.pop()
        if last != item:
            self._items[pos] = last
            self._pos[last] = pos

    def pick(self, rng):
        """Uniform random element; ``rng`` is a numpy Generator."""
        if not self._items:
            raise IndexError("pick from an empty IndexedSet")
        return self._items[int(rng.integers(len(self._items)))]

    def items(self) -> list:
        """The backing list (do not mutate)."""
        return self._items

    def __contains__(self, item) -> bool:
        return item in self._pos

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)
