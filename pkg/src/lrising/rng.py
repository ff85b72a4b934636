"""Deterministic random numbers shared by both backends.

xoshiro256** seeded through splitmix64.  The compiled kernels implement the
identical integer recurrence, so a chain produces byte-for-byte the same
trajectory whichever backend runs it.  Replicas derive their seeds as
base XOR replica_index.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def splitmix64_stream(seed: int, n: int) -> list[int]:
    out = []
    x = seed & MASK64
    for _ in range(n):
        x = (x + 0x9E3779B97F4A7C15) & MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro:
    """xoshiro256**; state is four 64-bit words."""

    def __init__(self, seed: int):
        s = splitmix64_stream(seed & MASK64, 4)
        if not any(s):
            s[0] = 1
        self.s = s

    @classmethod
    def from_state(cls, state) -> "Xoshiro":
        obj = cls.__new__(cls)
        obj.s = [int(w) & MASK64 for w in state]
        return obj

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n); n must be far below 2^53."""
        return int(self.uniform() * n)

    def state(self) -> tuple[int, int, int, int]:
        return tuple(self.s)


def replica_seed(base_seed: int, replica: int) -> int:
    return (base_seed ^ replica) & MASK64
