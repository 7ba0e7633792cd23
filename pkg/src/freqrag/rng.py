"""Deterministic 64-bit PRNG used for every random draw in the package.

The generator is a counter-based mixer: the state advances by a fixed odd
increment and each output is a finalizer hash of the new state,

    state' = state + 0x9E3779B97F4A7C15        (mod 2**64)
    out    = mix(state')

with ``mix`` the 30/27/31-shift multiply finalizer below.  Doubles take the
53 high bits of an output over 2**53, giving uniforms in [0, 1).  Gaussians
come from the Box-Muller transform on consecutive uniform pairs.

Everything downstream (synthetic data, parameter init, epoch shuffling,
fold assignment) derives from this one generator so that identical seeds
reproduce identical bytes.
"""

import math

_MASK64 = (1 << 64) - 1
_INCREMENT = 0x9E3779B97F4A7C15
_TWO53 = float(1 << 53)


def mix64(z: int) -> int:
    """Finalizer hash of a 64-bit value."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, tag: str) -> int:
    """Fold a stream label into a seed.

    Gives independent, reproducible sub-streams (e.g. parameter init vs.
    epoch shuffling) from one user-facing seed.
    """
    h = mix64(seed & _MASK64)
    for b in tag.encode("utf-8"):
        h = mix64(h ^ b)
    return h


class Rng:
    """Seeded generator; all methods consume the single state in call order."""

    __slots__ = ("_state", "_spare_gauss")

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_gauss: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _INCREMENT) & _MASK64
        return mix64(self._state)

    def next_double(self) -> float:
        """Uniform in [0, 1) with 53 bits of resolution."""
        return (self.next_u64() >> 11) / _TWO53

    def next_gauss(self) -> float:
        """Standard normal draw.

        Box-Muller on a uniform pair; the sine component is cached and
        returned by the following call.  A zero first uniform (probability
        2**-53) is clamped to keep the log finite.
        """
        if self._spare_gauss is not None:
            g = self._spare_gauss
            self._spare_gauss = None
            return g
        u1 = self.next_double()
        u2 = self.next_double()
        if u1 == 0.0:
            u1 = 2.0 ** -53
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_gauss = r * math.sin(theta)
        return r * math.cos(theta)

    def gauss_list(self, n: int) -> list[float]:
        return [self.next_gauss() for _ in range(n)]

    def below(self, n: int) -> int:
        """Integer in [0, n). Floor of a scaled uniform; the negligible
        floor bias is irrelevant for shuffling."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return min(int(self.next_double() * n), n - 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
