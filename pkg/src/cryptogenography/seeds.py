"""Per-trial seed derivation for reproducible, parallelizable experiments.

A base seed and a stream index are mixed through a fixed 64-bit
multiply-xor finalizer (odd constants, splitmix-style). Trials use indices
0, 1, 2, ...; auxiliary streams (codebooks, warmup draws) use indices
offset by 2**32 so they never collide with trial indices.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_MIX1 = 0x9E3779B97F4A7C15
_MIX2 = 0xBF58476D1CE4E5B9
_MIX3 = 0x94D049BB133111EB

AUX_STREAM_OFFSET = 1 << 32


def derive_seed(base_seed: int, index: int) -> int:
    """Deterministic 64-bit seed for stream `index` of experiment `base_seed`."""
    z = (base_seed ^ (index * _MIX1)) & MASK64
    z = ((z ^ (z >> 30)) * _MIX2) & MASK64
    z = ((z ^ (z >> 27)) * _MIX3) & MASK64
    return (z ^ (z >> 31)) & MASK64
