"""Deterministic random streams, pinned so results agree across platforms.

The generator is a 64-bit linear congruential generator with the MMIX
multiplier.  The exact recurrence, reproduced here so an independent
implementation can re-derive any stream:

    x[n+1] = (6364136223846793005 * x[n] + 1442695040888963407) mod 2**64
    u[n]   = (x[n+1] >> 11) / 2**53          # uniform in [0, 1)

with x[0] = seed mod 2**64.

Stream assignment within a simulation:

* arrivals:     Lcg64(seed).  Each step draws one uniform per approach in
  the fixed order front, behind, left, right; an arrival occurs when the
  draw is < rate*dt (the draw happens whether or not the entrance is
  blocked, and also when the rate is zero).
* sensor noise: Lcg64(seed XOR 0xA5A5A5A5A5A5A5A5), standard Box-Muller on
  consecutive uniform pairs with the first uniform shifted into (0, 1].
"""

from __future__ import annotations

import math

_MULT = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1
_INV_2_53 = 2.0 ** -53

SENSOR_STREAM_XOR = 0xA5A5A5A5A5A5A5A5


class Lcg64:
    """The documented 64-bit LCG stream."""

    __slots__ = ("state", "_spare_gauss")

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK
        self._spare_gauss: float | None = None

    def next_u64(self) -> int:
        self.state = (_MULT * self.state + _INC) & _MASK
        return self.state

    def uniform(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def gauss(self) -> float:
        """Standard normal via Box-Muller, consuming two uniforms per pair."""
        if self._spare_gauss is not None:
            z = self._spare_gauss
            self._spare_gauss = None
            return z
        u1 = ((self.next_u64() >> 11) + 1) * _INV_2_53  # (0, 1]: log-safe
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_gauss = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)
