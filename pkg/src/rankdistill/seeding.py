"""Deterministic seed derivation.

Every stochastic draw in the package (dropout masks, batch shuffles,
synthetic fixtures) takes a seed produced by :func:`mix_seed`, so runs are
bit-reproducible given the top-level seed.  The mixer is a SplitMix64-style
sequential hash over the integer parts; it is pure integer arithmetic and
therefore identical on every platform.
"""

_MASK64 = 0xFFFFFFFFFFFFFFFF


def mix_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed.

    Order matters: mix_seed(a, b) != mix_seed(b, a) in general.
    """
    state = 0x9E3779B97F4A7C15
    for part in parts:
        state ^= part & _MASK64
        state = (state * 0xBF58476D1CE4E5B9) & _MASK64
        state ^= state >> 27
        state = (state * 0x94D049BB133111EB) & _MASK64
        state ^= state >> 31
    return state
