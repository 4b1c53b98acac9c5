"""Counter-based random streams for reproducible, order-independent simulation.

Every trial owns a private stream identified by a 64-bit key. The n-th value
of a stream is a pure function of (key, n), so a stream can be consumed one
value at a time (scalar replay) or in vectorized blocks across many trials
with bit-identical results. No global RNG state exists anywhere.

Construction: SplitMix64-style finalizer applied twice,

    value(key, n) = mix64(key ^ mix64((n + 1) * GOLDEN))

where GOLDEN is the 64-bit golden-ratio increment and mix64 is the standard
xor-shift/multiply finalizer. Stream keys are themselves derived with the
same primitive: split_seed(master, i) = value(master, i). The integer layer
is exactly portable; uniform doubles are (value >> 11) * 2**-53 in [0, 1).

All arithmetic is done on uint64 ndarrays (numpy wraps unsigned array ops
silently; uint64 *scalars* would raise overflow warnings).
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_DOUBLE_SCALE = 2.0**-53

MASK64 = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer (bijective on uint64), elementwise."""
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def raw64(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """64-bit stream output for each (key, counter) pair, elementwise."""
    return mix64(keys ^ mix64((counters + np.uint64(1)) * _GOLDEN))


def uniforms(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Uniform doubles in [0, 1) for each (key, counter) pair."""
    return (raw64(keys, counters) >> _S11) * _DOUBLE_SCALE


def split_seed(master_seed: int, stream_id: int | np.ndarray) -> int | np.ndarray:
    """Derive per-stream 64-bit keys from a master seed.

    Pure counter-based hash: independent of evaluation order, so any subset
    of streams can be regenerated in isolation. Accepts a scalar stream_id
    (returns int) or an ndarray of ids (returns uint64 ndarray).
    """
    master = np.asarray([master_seed & MASK64], dtype=np.uint64)
    if np.isscalar(stream_id) or isinstance(stream_id, int):
        ctr = np.asarray([int(stream_id) & MASK64], dtype=np.uint64)
        return int(raw64(master, ctr)[0])
    ctr = np.asarray(stream_id, dtype=np.uint64)
    return raw64(master[0], ctr)


class Stream:
    """Sequential view of one counter-based stream (scalar consumption).

    Used by the per-trial reference simulation path and by tests; the batch
    engine consumes the same (key, counter) sequence in vectorized form.
    """

    __slots__ = ("_key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self._key = np.asarray([key & MASK64], dtype=np.uint64)
        self.counter = counter

    @property
    def key(self) -> int:
        return int(self._key[0])

    def uniform(self) -> float:
        u = uniforms(self._key, np.asarray([self.counter], dtype=np.uint64))[0]
        self.counter += 1
        return float(u)

    def uniform_block(self, k: int) -> np.ndarray:
        """k consecutive uniforms, counter-order. Matches k uniform() calls."""
        ctrs = np.arange(self.counter, self.counter + k, dtype=np.uint64)
        vals = uniforms(self._key, ctrs)
        self.counter += k
        return vals
