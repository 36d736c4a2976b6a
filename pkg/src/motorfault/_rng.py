"""Seeded random numbers, defined in-repo so datasets are reproducible.

Generator: SplitMix64 (Steele, Lea & Flood 2014). State advances by
0x9E3779B97F4A7C15 per draw; output is the standard mix with shifts
30/27/31 and multipliers 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB.

Derived values:

* ``uniform()`` - top 53 bits scaled by 2**-53, in [0, 1).
* ``below(n)`` - unbiased integer in [0, n) by rejection on the top bits.
* ``normal()`` - Box-Muller on (1 - u1, u2); both outputs of each pair are
  used, cosine branch first.
* ``shuffle(seq)`` - Fisher-Yates from the last index down.
"""
import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed, stream):
    """Independent sub-seed for a named integer stream of ``seed``."""
    return _mix((seed + (stream + 1) * _GOLDEN) & _MASK)


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK
        self._spare = None

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        return _mix(self.state)

    def uniform(self):
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform_range(self, low, high):
        return low + (high - low) * self.uniform()

    def below(self, n):
        if n <= 0:
            raise ValueError("n must be positive")
        bits = max(1, (n - 1).bit_length())
        while True:
            r = self.next_u64() >> (64 - bits)
            if r < n:
                return r

    def normal(self):
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.uniform()  # (0, 1]
        u2 = self.uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = radius * math.sin(theta)
        return radius * math.cos(theta)

    def shuffle(self, items):
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items
