"""Deterministic 64-bit pseudorandom primitives.

Packet generation must be bit-reproducible across platforms and runs, so all
randomness in this package comes from a fixed, versioned generator family:
splitmix64 applied to a Weyl counter (``GENERATOR = "splitmix64-counter"``,
``GENERATOR_VERSION = 1``). Pure integer arithmetic, no platform dependence.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

# Weyl increment (golden-ratio constant) and splitmix64 mixing multipliers.
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

GENERATOR = "splitmix64-counter"
GENERATOR_VERSION = 1


def splitmix64(x: int) -> int:
    """Finalizer of the splitmix64 generator: a 64-bit bijective mix."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def derive_seed(*parts: int) -> int:
    """Combine integers into a 64-bit stream seed.

    Chained splitmix64 over the parts; order-sensitive, so
    ``derive_seed(a, b) != derive_seed(b, a)`` in general.
    """
    h = _GOLDEN
    for p in parts:
        h = splitmix64((h + _GOLDEN) ^ (p & MASK64))
    return h


class CounterRng:
    """splitmix64 counter stream: output i is ``splitmix64(seed + (i+1)*GOLDEN)``."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        x = self._state
        x = ((x ^ (x >> 30)) * _MIX1) & MASK64
        x = ((x ^ (x >> 27)) * _MIX2) & MASK64
        return x ^ (x >> 31)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 1.1102230246251565e-16  # 2**-53

    def randbelow(self, n: int) -> int:
        """Integer in [0, n) via the multiply-shift reduction."""
        return (self.next_u64() * n) >> 64
