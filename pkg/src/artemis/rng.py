"""Counter-based random streams.

Every draw in a simulation is addressed by ``(seed, purpose, iteration,
worker)``.  The address is turned into a Philox key/counter pair, so a draw
never depends on how many numbers were consumed before it.  Two algorithm
variants simulated with the same seed therefore see the same mini-batches,
the same participation patterns and the same compression uniforms.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

_MASK64 = (1 << 64) - 1

#: worker index used for draws that cover every worker at once (one row each)
ALL_WORKERS = -1


@lru_cache(maxsize=None)
def purpose_tag(purpose: str) -> int:
    """Stable 64-bit tag for a purpose string (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(purpose.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    """A deterministic stream keyed by (seed, purpose, iteration, worker).

    ``worker=ALL_WORKERS`` denotes a block stream: callers draw an array whose
    first axis is the worker index and read row ``i`` for worker ``i``.
    """

    seed: int
    purpose: str = "default"
    iteration: int = 0
    worker: int = ALL_WORKERS

    def at(self, iteration: int | None = None, worker: int | None = None,
           purpose: str | None = None) -> "RngStream":
        changes = {}
        if iteration is not None:
            changes["iteration"] = iteration
        if worker is not None:
            changes["worker"] = worker
        if purpose is not None:
            changes["purpose"] = purpose
        return replace(self, **changes)

    def generator(self) -> np.random.Generator:
        key = [self.seed & _MASK64, purpose_tag(self.purpose)]
        # word 0 is the running counter; the address lives in the upper words
        counter = [0, 0, self.iteration & _MASK64, (self.worker + 1) & _MASK64]
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def uniform(self, size) -> np.ndarray:
        return self.generator().random(size)

    def normal(self, size) -> np.ndarray:
        return self.generator().standard_normal(size)


class ChunkedUniforms:
    """Per-iteration uniform blocks of a fixed shape, generated in chunks.

    The block for iteration ``k`` is row ``k % chunk`` of the array drawn from
    ``RngStream(seed, purpose, iteration=k // chunk)``, so it depends only on
    ``(seed, purpose, k, shape, chunk)`` and never on the access pattern.
    """

    def __init__(self, seed: int, purpose: str, shape, chunk: int = 128):
        self.stream = RngStream(seed, purpose)
        self.shape = tuple(np.atleast_1d(shape).tolist())
        self.chunk = chunk
        self._index = None
        self._block = None

    def __call__(self, k: int) -> np.ndarray:
        index, row = divmod(k, self.chunk)
        if index != self._index:
            self._block = self.stream.at(iteration=index).uniform((self.chunk,) + self.shape)
            self._index = index
        return self._block[row]
