"""Deterministic replica streams.

Every replica owns a counter-based Philox-4x64 stream whose 128-bit key is
derived from ``(master_seed, replica_id)`` with the SplitMix64 finalizer.
Replicas are therefore independent of execution order and thread count, and
a replica can be regenerated in isolation from its two integers.

Draw order inside one time-step is fixed: one uniform per process in
process order, then (only when source categories are tracked) one uniform
for the category label.  Both kernel backends consume the stream in exactly
this order, which makes their trajectories bit-identical.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """One SplitMix64 step: advance by the golden-ratio increment and mix."""
    z = (value + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def replica_key(master_seed: int, replica_id: int) -> tuple[int, int]:
    """128-bit Philox key for one replica stream."""
    k0 = splitmix64(master_seed & _MASK64)
    k1 = splitmix64(k0 ^ splitmix64(replica_id & _MASK64))
    return k0, k1


def replica_bitgen(master_seed: int, replica_id: int) -> np.random.Philox:
    k0, k1 = replica_key(master_seed, replica_id)
    return np.random.Philox(key=np.array([k0, k1], dtype=np.uint64))
