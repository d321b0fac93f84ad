"""Counter-based 64-bit step streams.

Every replica owns a key ``mix_seed(master_seed, replica)``; word ``k`` of its
stream is ``mix64(key + (k + 1) * GOLDEN)`` (the SplitMix64 sequence), so any
word can be produced without touching the others.  Walk step ``t`` is bit
``t % 64`` of word ``t // 64``: 1 means +1, 0 means -1.

The numba kernels in :mod:`favdown._kernels` regenerate exactly the same
streams; ``tests/test_rng.py`` pins the two implementations together.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def mix64(z):
    """SplitMix64 finalizer, elementwise on uint64 arrays (wraps mod 2**64)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def mix_seeds(master_seed: int, replicas) -> np.ndarray:
    """Stream keys for an array of replica indices; each depends only on (seed, index)."""
    a = mix64(np.uint64(master_seed & _MASK64))
    r = np.asarray(replicas, dtype=np.uint64)
    with np.errstate(over="ignore"):
        b = mix64(r * GOLDEN + GOLDEN)
    return mix64(a ^ b)


def mix_seed(master_seed: int, replica: int) -> int:
    """Stream key for ``replica`` under ``master_seed``."""
    return int(mix_seeds(master_seed, replica & _MASK64))


def words(key: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` of the stream for ``key``."""
    k = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key & _MASK64) + k * GOLDEN
    return mix64(z)


def steps_from_words(w: np.ndarray) -> np.ndarray:
    """Unpack words into +-1 steps (int8), least significant bit first."""
    bits = np.unpackbits(np.ascontiguousarray(w, dtype="<u8").view(np.uint8), bitorder="little")
    return (bits.astype(np.int8) << 1) - 1


class StepStream:
    """Sequential reader of fair +-1 steps for one replica.

    >>> s = StepStream(seed=7)
    >>> a = s.take(100)
    >>> b = StepStream(seed=7).take(100)
    >>> bool((a == b).all())
    True
    """

    def __init__(self, seed: int = 0, replica: int = 0):
        self.seed = seed
        self.replica = replica
        self.key = mix_seed(seed, replica)
        self.position = 0  # steps consumed
        self._buf = np.empty(0, dtype=np.int8)
        self._buf_start = 0

    def take(self, n: int) -> np.ndarray:
        """Next ``n`` steps as an int8 array."""
        out = np.empty(n, dtype=np.int8)
        filled = 0
        while filled < n:
            off = self.position - self._buf_start
            if off < 0 or off >= len(self._buf):
                self._refill(max(n - filled, 4096))
                continue
            m = min(n - filled, len(self._buf) - off)
            out[filled:filled + m] = self._buf[off:off + m]
            filled += m
            self.position += m
        return out

    def next_step(self) -> int:
        return int(self.take(1)[0])

    def _refill(self, n_steps: int) -> None:
        first_word = self.position // 64
        n_words = (self.position + n_steps + 63) // 64 - first_word
        self._buf = steps_from_words(words(self.key, first_word, n_words))
        self._buf_start = first_word * 64


def chunked_steps(seed: int, replica: int, total: int, chunk: int = 1 << 20):
    """Yield the first ``total`` steps of a stream in chunks (multiple of 64)."""
    key = mix_seed(seed, replica)
    chunk = max(64, chunk - chunk % 64)
    done = 0
    while done < total:
        m = min(chunk, total - done)
        w = words(key, done // 64, (m + 63) // 64)
        yield steps_from_words(w)[:m]
        done += m
