"""Unbiased compression operators and their bit accounting.

Three operators are provided:

* :class:`Identity` -- the dense 32-bit baseline,
* :class:`Quantization` -- stochastic s-level quantization (one norm, a sign
  vector and integer levels per coordinate),
* :class:`Sparsification` -- keep each coordinate with probability ``q`` and
  rescale it by ``1/q``.

All of them satisfy ``E[C(v)] = v`` and ``E||C(v) - v||^2 <= omega ||v||^2``.
Bit costs are *accounted*, not encoded: quantized messages are charged the
Elias-code upper bound, sparse messages a value+index cost.

Randomness enters only through an array of uniforms in ``[0, 1)`` with one
entry per coordinate, so every operator consumes exactly the same draws for a
given address of the stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .rng import RngStream

FLOAT_BITS = 32


@dataclass(frozen=True)
class Identity:
    def omega(self, dim: int) -> float:
        return 0.0

    def message_bits(self, dim: int) -> int:
        return FLOAT_BITS * dim

    def __str__(self) -> str:
        return "identity"


@dataclass(frozen=True)
class Quantization:
    s: int = 1

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError(f"quantization level must be a positive integer, got {self.s!r}")

    def omega(self, dim: int) -> float:
        return min(dim / self.s**2, math.sqrt(dim) / self.s)

    def message_bits(self, dim: int) -> int:
        return elias_bit_bound(dim, self.s)

    def __str__(self) -> str:
        return f"quantization:{self.s}"


@dataclass(frozen=True)
class Sparsification:
    q: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"keep-probability must lie in (0, 1], got {self.q!r}")

    def omega(self, dim: int) -> float:
        return 1.0 / self.q - 1.0

    def message_bits(self, dim: int) -> int:
        """Expected cost, used to size the catch-up buffer."""
        return sparse_bits(math.ceil(self.q * dim), dim)

    def __str__(self) -> str:
        return f"sparsification:{self.q:g}"


CompressionKind = Union[Identity, Quantization, Sparsification]

IDENTITY = Identity()


@dataclass(frozen=True)
class CompressedMessage:
    payload: np.ndarray
    bits: int
    kind: CompressionKind


def parse_kind(text: str | CompressionKind) -> CompressionKind:
    """Parse ``identity``, ``quantization:<s>`` or ``sparsification:<q>``."""
    if isinstance(text, (Identity, Quantization, Sparsification)):
        return text
    name, _, arg = str(text).strip().lower().partition(":")
    if name in ("identity", "none"):
        return IDENTITY
    if name in ("quantization", "quantize", "qsgd"):
        return Quantization(int(arg) if arg else 1)
    if name in ("sparsification", "sparsify"):
        if not arg:
            raise ValueError("sparsification needs a keep-probability, e.g. sparsification:0.25")
        return Sparsification(float(arg))
    raise ValueError(f"unknown compression operator {text!r}")


def omega(kind: CompressionKind, dim: int) -> float:
    """Variance factor of ``kind`` in dimension ``dim``."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    return kind.omega(dim)


def elias_bit_bound(dim: int, s: int) -> int:
    """Bits needed to send an s-quantized vector with Elias coding.

    The bound is ``(3 + 1.5 log2(2(s^2+d) / (s(s+sqrt d)))) s(s+sqrt d) + 32``
    rounded up; the vanishing lower-order term is dropped.
    """
    if dim < 1 or s < 1:
        raise ValueError("dim and s must be >= 1")
    support = s * (s + math.sqrt(dim))
    ratio = 2.0 * (s * s + dim) / support
    return math.ceil((3.0 + 1.5 * math.log2(ratio)) * support + FLOAT_BITS)


def sparse_bits(nnz: int, dim: int) -> int:
    """Value + index cost of a sparse vector, capped by the dense cost."""
    index_bits = max(1, math.ceil(math.log2(dim))) if dim > 1 else 1
    return min(FLOAT_BITS * dim, nnz * (FLOAT_BITS + index_bits))


def compress_rows(rows: np.ndarray, kind: CompressionKind, uniforms: np.ndarray):
    """Compress each row of ``rows`` independently.

    ``uniforms`` has the same shape as ``rows``.  Returns ``(payload, bits)``
    with ``bits`` an integer array holding one cost per row.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ValueError("compress_rows expects a 2-d array")
    if not np.all(np.isfinite(rows)):
        raise ValueError("cannot compress a non-finite vector")
    m, d = rows.shape
    if isinstance(kind, Identity):
        return rows.copy(), np.full(m, FLOAT_BITS * d, dtype=np.int64)
    if isinstance(kind, Quantization):
        return _quantize_rows(rows, kind.s, uniforms)
    if isinstance(kind, Sparsification):
        mask = uniforms < kind.q
        payload = np.where(mask, rows / kind.q, 0.0)
        nnz = np.count_nonzero(payload, axis=1)
        bits = np.array([sparse_bits(int(c), d) for c in nnz], dtype=np.int64)
        return payload, bits
    raise TypeError(f"unsupported compression kind {kind!r}")


def _quantize_rows(rows, s, uniforms):
    m, d = rows.shape
    norms = np.sqrt(np.einsum("ij,ij->i", rows, rows))
    live = norms > 0.0
    if live.all():
        return _quantize_live(rows, norms, s, uniforms), np.full(m, elias_bit_bound(d, s), dtype=np.int64)
    payload = np.zeros_like(rows)
    bits = np.full(m, FLOAT_BITS, dtype=np.int64)  # a zero row only ships its norm
    if live.any():
        payload[live] = _quantize_live(rows[live], norms[live], s, uniforms[live])
        bits[live] = elias_bit_bound(d, s)
    return payload, bits


def _quantize_live(v, norms, s, uniforms):
    nrm = norms[:, None]
    ratio = np.minimum(s * np.abs(v) / nrm, s)
    level = np.floor(ratio)
    # exact levels give zero probability of rounding up
    psi = level + (uniforms < ratio - level)
    return np.sign(v) * nrm * psi / s


def compress(v, kind: CompressionKind, rng) -> CompressedMessage:
    """Compress a single vector.

    ``rng`` is an :class:`RngStream`, a ``numpy.random.Generator`` or an
    explicit array of ``len(v)`` uniforms.
    """
    v = np.asarray(v, dtype=float).ravel()
    if isinstance(rng, RngStream):
        u = rng.uniform(v.size)
    elif isinstance(rng, np.random.Generator):
        u = rng.random(v.size)
    else:
        u = np.asarray(rng, dtype=float).ravel()
        if u.shape != v.shape:
            raise ValueError("need one uniform per coordinate")
    payload, bits = compress_rows(v[None, :], kind, u[None, :])
    return CompressedMessage(payload[0], int(bits[0]), kind)


def sparsify_with_mask(v, mask, q: float) -> np.ndarray:
    """Sparsification for an explicit 0/1 mask."""
    return np.where(np.asarray(mask, dtype=bool), np.asarray(v, dtype=float) / q, 0.0)


def sparsify_diff_property_check(x, y, mask, q: float) -> bool:
    """Check ``C(x) - C(y) == C(x - y)`` under a shared sparsification mask."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lhs = sparsify_with_mask(x, mask, q) - sparsify_with_mask(y, mask, q)
    rhs = sparsify_with_mask(x - y, mask, q)
    return bool(np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1.0 + np.abs(rhs).max(initial=0.0))))
