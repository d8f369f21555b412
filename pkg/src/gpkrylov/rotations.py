"""Plane-rotation kernel and banded scalar storage shared by the sliding factorizations."""

import math

__all__ = ["plane_rotation", "Band", "SingularWindowError"]


class SingularWindowError(RuntimeError):
    """A sliding-factorization pivot vanished (rotation denominator zero)."""


def plane_rotation(a: float, b: float) -> tuple[float, float, float]:
    """Return (c, s, r) with r = sqrt(a^2 + b^2), c = a/r, s = b/r.

    r is nonnegative; c and s carry the signs of a and b.  When both inputs
    vanish the rotation degenerates to the identity with r = 0, which callers
    must treat as a singular pivot.
    """
    r = math.hypot(a, b)
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return a / r, b / r, r


class Band:
    """Append-only scalar sequence indexed from ``first``.

    Reads below ``first`` return 0.0 (band entries that fall outside the
    factor are zero by convention); reads past the last pushed entry raise,
    since they signal an ordering bug in the sliding window.
    """

    __slots__ = ("first", "_vals")

    def __init__(self, first: int = 1):
        self.first = first
        self._vals: list[float] = []

    def push(self, value: float) -> None:
        self._vals.append(float(value))

    @property
    def last_index(self) -> int:
        return self.first + len(self._vals) - 1

    def __getitem__(self, idx: int) -> float:
        if idx < self.first:
            return 0.0
        off = idx - self.first
        if off >= len(self._vals):
            raise IndexError(f"band entry {idx} has not been computed yet")
        return self._vals[off]

    def __len__(self) -> int:
        return len(self._vals)
