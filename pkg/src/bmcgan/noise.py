"""Seeded Brownian increment streams.

Every stream is a Philox4x64 counter-based generator whose 128-bit key is
derived from ``(seed, stream_id)`` through :class:`numpy.random.SeedSequence`.
Distinct keys give statistically independent streams with no shared state, so
trajectories can be generated in any order or in parallel and still replay
exactly.

Gaussian variates come from numpy's ziggurat sampler
(``Generator.standard_normal``) and are scaled by ``sqrt(dt)``. Draws are
sequential in the underlying counter, so requesting increments one at a time
or in blocks of any size yields the same sequence.
"""
import math

import numpy as np

B1 = 0
B2 = 1

_MASK64 = (1 << 64) - 1


def splitmix64(x):
    """One round of the SplitMix64 finalizer on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed, *indices):
    """Mix a base seed with a tuple of non-negative indices into a new 64-bit seed.

    ``derive_seed(s, i, j)`` is ``s XOR h`` where ``h`` folds each index through
    SplitMix64 in turn. The result depends only on its arguments, never on
    how many other seeds were derived.
    """
    h = 0
    for idx in indices:
        if idx < 0:
            raise ValueError("indices must be non-negative")
        h = splitmix64(h ^ (idx & _MASK64))
    return (int(base_seed) & _MASK64) ^ h


def _check_dt(dt):
    if not dt > 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be a positive finite number, got {dt!r}")


class NoiseStream:
    """A single one-dimensional Brownian motion driven by a keyed Philox generator.

    Streams are single-owner: do not share one instance between threads while
    drawing. Constructing a second stream with the same ``(seed, stream_id)``
    replays the same increments from the start.
    """

    def __init__(self, seed, stream_id=B1):
        if stream_id < 0:
            raise ValueError("stream_id must be non-negative")
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id)
        self.cursor = 0
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        key = ss.generate_state(2, dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"NoiseStream(seed={self.seed}, stream_id={self.stream_id}, cursor={self.cursor})"

    def increment(self, dt):
        """Draw one increment ``B(t + dt) - B(t) ~ N(0, dt)``."""
        _check_dt(dt)
        self.cursor += 1
        return math.sqrt(dt) * float(self._gen.standard_normal())

    def increments(self, n, dt):
        """Draw ``n`` consecutive increments as a float64 array."""
        _check_dt(dt)
        if n < 0:
            raise ValueError("n must be non-negative")
        out = self._gen.standard_normal(n)
        out *= math.sqrt(dt)
        self.cursor += n
        return out

    def path(self, n_steps, dt):
        """Brownian path ``B(0) = 0, B(t_1), ..., B(t_n)`` of length ``n_steps + 1``."""
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        out = np.zeros(n_steps + 1)
        np.cumsum(self.increments(n_steps, dt), out=out[1:])
        return out


def increment(stream, dt):
    return stream.increment(dt)


def path(stream, n_steps, dt):
    return stream.path(n_steps, dt)
