"""
Compression operators and their bit cost
========================================

Every message in the protocol goes through a random, unbiased compressor.
This script draws many compressions of one vector and compares the
empirical variance with the ``omega`` constant used by the step-size rules.
"""
import numpy as np

from artemis.compression import (Quantization, Sparsification, compress, compress_rows,
                                 elias_bit_bound, omega)
from artemis.rng import RngStream

########################################################################
# A single compression
# --------------------
# With ``s = 1`` every coordinate is sent as its sign times 0 or the norm.

v = np.array([0.3, -1.2, 2.0, 0.0, 0.7, -0.1, 1.1, 0.05])
msg = compress(v, Quantization(1), RngStream(seed=3, purpose="demo"))
print("v         ", v)
print("C(v)      ", np.round(msg.payload, 3))
print("bits      ", msg.bits, "vs", 32 * v.size, "uncompressed")

########################################################################
# Variance against omega
# ----------------------

draws = 50_000
u = RngStream(1, "demo").uniform((draws, v.size))
print(f"\n{'compressor':>18} {'omega':>7} {'E|C(v)-v|^2 / |v|^2':>22}")
for kind in (Quantization(1), Quantization(4), Sparsification(0.5), Sparsification(0.1)):
    out, _ = compress_rows(np.tile(v, (draws, 1)), kind, u)
    ratio = np.mean(np.sum((out - v) ** 2, axis=1)) / (v @ v)
    print(f"{str(kind):>18} {omega(kind, v.size):7.3f} {ratio:22.3f}")

########################################################################
# Bits per message
# ----------------
# The Elias-coded quantizer is far below 32 bits per coordinate once the
# dimension is moderate.

for d in (1, 8, 16, 20, 100, 1000):
    print(f"d={d:5d}: s=1 costs {elias_bit_bound(d, 1):6d} bits, dense costs {32 * d:6d}")
