"""Bit-string solutions, bit-wise mutation and deterministic randomness.

Solutions of length n are stored as Python integers used as packed bit
masks (bit i of the mask is position i, counted from the left), with the
one-bit count cached.  The mask representation keeps mutation and
popcounts cheap enough for sweeps that execute 10^8+ iterations.

Randomness policy: the only generator is CPython's Mersenne Twister
(MT19937, ``random.Random``), consumed exclusively through ``random()``
and ``getrandbits()``.  Every derived sampler (flip counts, positions,
seed mixing) is implemented in this module, so identical seeds reproduce
identical streams bit-exactly across platforms and Python builds.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from functools import lru_cache

_MASK64 = (1 << 64) - 1


def splitmix64(z: int) -> int:
    """One step of the splitmix64 mixing function (public-domain constants)."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of a string, for stable cell identifiers."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def mix_seed(master: int, *parts: int | str) -> int:
    """Derive an independent 64-bit seed from a master seed and context parts.

    Each part (trial index, cell id, ...) is folded in with splitmix64 so
    that seeds for different contexts are decorrelated and independent of
    scheduling order.
    """
    z = int(master) & _MASK64
    for part in parts:
        p = fnv1a64(part) if isinstance(part, str) else int(part) & _MASK64
        z = splitmix64(z ^ p)
    return z


class RandomSource:
    """Deterministic pseudo-random stream seeded by a 64-bit value.

    Single-owner: never share one instance across concurrent trials; use
    :meth:`spawn` (or :func:`mix_seed`) to derive independent streams.
    """

    __slots__ = ("seed", "_random", "_getrandbits")

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        rng = random.Random(self.seed)
        self._random = rng.random
        self._getrandbits = rng.getrandbits

    def unit(self) -> float:
        """Uniform float in [0, 1)."""
        return self._random()

    def bits(self, k: int) -> int:
        """Integer with k independent uniform bits (0 for k = 0)."""
        return self._getrandbits(k) if k > 0 else 0

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection from getrandbits."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        k = (bound - 1).bit_length()
        if k == 0:
            return 0
        grb = self._getrandbits
        while True:
            v = grb(k)
            if v < bound:
                return v

    def spawn(self, *parts: int | str) -> "RandomSource":
        """Independent stream derived from this seed and the given parts."""
        return RandomSource(mix_seed(self.seed, *parts))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed:#x})"


class BitString:
    """Immutable bit string of length n with cached one-bit count.

    Position 0 is the leftmost character of the 0/1 text form; for sorted
    linear objectives it carries the largest weight.
    """

    __slots__ = ("n", "mask", "ones")

    def __init__(self, n: int, mask: int):
        if n < 1:
            raise ValueError("bit-string length must be at least 1")
        if mask < 0 or mask >> n:
            raise ValueError("mask has bits outside the string length")
        self.n = n
        self.mask = mask
        self.ones = mask.bit_count()

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(n, 0)

    @classmethod
    def prefix_ones(cls, n: int, j: int) -> "BitString":
        """The string 1^j 0^(n-j)."""
        if not 0 <= j <= n:
            raise ValueError("prefix length out of range")
        return cls(n, (1 << j) - 1)

    @classmethod
    def from01(cls, text: str) -> "BitString":
        mask = 0
        for i, ch in enumerate(text):
            if ch == "1":
                mask |= 1 << i
            elif ch != "0":
                raise ValueError(f"invalid bit character {ch!r}")
        return cls(len(text), mask)

    def to01(self) -> str:
        m = self.mask
        return "".join("1" if (m >> i) & 1 else "0" for i in range(self.n))

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> bool:
        if not 0 <= i < self.n:
            raise IndexError("bit index out of range")
        return bool((self.mask >> i) & 1)

    def __iter__(self):
        m = self.mask
        for i in range(self.n):
            yield bool((m >> i) & 1)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitString)
            and self.n == other.n
            and self.mask == other.mask
        )

    def __hash__(self) -> int:
        return hash((self.n, self.mask))

    def __repr__(self) -> str:
        return f"BitString('{self.to01()}')"


def sample_uniform(n: int, rng: RandomSource) -> BitString:
    """Uniformly random bit string: each bit is 1 with probability 1/2."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return BitString(n, rng.bits(n))


@lru_cache(maxsize=None)
def flip_count_cdf(n: int) -> tuple[float, ...]:
    """Cumulative law of the flip count under independent 1/n bit flips.

    Entry l is P(L <= l) for L ~ Binomial(n, 1/n), computed from exact
    integer counts before the single rounding to float.
    """
    total = n**n
    acc = 0
    out = []
    for flips in range(n + 1):
        acc += math.comb(n, flips) * (n - 1) ** (n - flips)
        out.append(acc / total)
    out[-1] = 1.0
    return tuple(out)


def sample_flip_mask(n: int, rng: RandomSource, cdf: tuple[float, ...] | None = None) -> int:
    """Random flip mask equal in law to flipping each of n bits with prob 1/n.

    Draws the flip count from the exact binomial law, then a uniform subset
    of positions of that size; by exchangeability this matches independent
    per-bit flips.
    """
    if cdf is None:
        cdf = flip_count_cdf(n)
    count = bisect_right(cdf, rng.unit())
    if count == 0:
        return 0
    if count == 1:
        return 1 << rng.below(n)
    mask = 0
    remaining = count
    below = rng.below
    while remaining:
        bit = 1 << below(n)
        if not mask & bit:
            mask |= bit
            remaining -= 1
    return mask


def mutate(x: BitString, rng: RandomSource) -> BitString:
    """Flip each bit of x independently with probability 1/n (x unchanged)."""
    return BitString(x.n, x.mask ^ sample_flip_mask(x.n, rng))


def hamming(x: BitString, y: BitString) -> int:
    """Number of positions where x and y differ."""
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} != {y.n}")
    return (x.mask ^ y.mask).bit_count()
