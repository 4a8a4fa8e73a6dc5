"""Deterministic random numbers for the example generators.

The generator is xoshiro256** (Blackman & Vigna), seeded through splitmix64,
so instance data can be reproduced from the published constants in any
language:

* splitmix64: state += 0x9E3779B97F4A7C15; z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31).
* xoshiro256**: result = rotl(s1 * 5, 7) * 9; t = s1 << 17;
  s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45).
* uniform double in [0, 1): (next() >> 11) * 2**-53.
* standard normals: Box-Muller on consecutive uniform pairs,
  z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2),
  with u1 drawn again while it is exactly 0.

All arithmetic is on 64-bit unsigned integers (mod 2**64).
"""

import math

_MASK = (1 << 64) - 1


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """Seedable stream of uniforms and normals; pure function of the seed."""

    def __init__(self, seed: int):
        sm = seed & _MASK
        s = []
        for _ in range(4):
            sm, out = _splitmix64(sm)
            s.append(out)
        if not any(s):  # all-zero state is invalid for xoshiro
            s[0] = 1
        self._s = s
        self._spare_normal = None

    def next_uint64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_uint64() >> 11) * 2.0**-53
        return low + (high - low) * u

    def uniforms(self, n: int, low: float = 0.0, high: float = 1.0):
        return [self.uniform(low, high) for _ in range(n)]

    def normal(self) -> float:
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        u1 = self.uniform()
        while u1 == 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int):
        return [self.normal() for _ in range(n)]

    def ball_point(self, dim: int, radius: float):
        """Uniform draw from the L2 ball of the given radius."""
        g = self.normals(dim)
        norm = math.sqrt(sum(v * v for v in g))
        while norm == 0.0:
            g = self.normals(dim)
            norm = math.sqrt(sum(v * v for v in g))
        scale = radius * self.uniform() ** (1.0 / dim) / norm
        return [v * scale for v in g]
