"""Counter-based random streams (Philox4x64-10), vectorized in NumPy.

Every simulated path owns an independent stream keyed by (seed, path index);
draw j of a stream is a pure function of the key and the counter, so results
are bit-reproducible for any chunking of paths across workers.  The compiled
kernel re-implements the same function in C; equality is pinned by tests
against ``numpy.random.Philox`` raw output.

Counter layout (4 x 64-bit words), key = (seed, path_index):

* ``(m, 0, 0, 0)`` — trajectory block m, serving steps 2m and 2m+1: outputs
  0/1 are the Gaussian and boundary-test uniforms of step 2m, outputs 2/3
  those of step 2m+1.
* ``(0, 1, 0, 0)`` — per-path block: output 0 feeds the exponential clock
  threshold.
* ``(i, 2, 0, 0)`` with key (seed, 0) — seed derivation for substream i.
"""

import numpy as np

PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)

_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_SHIFT11 = np.uint64(11)
_TWO_NEG53 = 2.0 ** -53


def _mulhilo(a, b):
    """Full 64x64 -> 128 bit product as (high, low) words."""
    lo = a * b
    ah = a >> _SHIFT32
    al = a & _MASK32
    bh = b >> _SHIFT32
    bl = b & _MASK32
    t = ah * bl + ((al * bl) >> _SHIFT32)
    hi = ah * bh + (t >> _SHIFT32) + (((t & _MASK32) + al * bh) >> _SHIFT32)
    return hi, lo


def philox4x64(c0, c1, c2, c3, k0, k1):
    """One Philox4x64-10 block; arguments are uint64 scalars or arrays."""
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi0, lo0 = _mulhilo(PHILOX_M0, c0)
            hi1, lo1 = _mulhilo(PHILOX_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
    return c0, c1, c2, c3


def uniform_from_bits(o):
    """Map a uint64 to a double in (0, 1), strictly excluding the endpoints."""
    return ((o >> _SHIFT11).astype(np.float64) + 0.5) * _TWO_NEG53


def trajectory_block(seed, path_ids, block_index):
    """The four outputs serving steps 2m and 2m+1 of the given paths."""
    z = np.zeros_like(path_ids)
    c0 = np.full_like(path_ids, np.uint64(block_index))
    return philox4x64(c0, z, z.copy(), z.copy(), np.full_like(path_ids, seed), path_ids)


def exp_variates(seed, path_ids):
    """Unit-rate exponential threshold per path (clock firing level)."""
    z = np.zeros_like(path_ids)
    one = np.ones_like(path_ids)
    o0, _, _, _ = philox4x64(
        z, one, z.copy(), z.copy(), np.full_like(path_ids, seed), path_ids
    )
    return -np.log(uniform_from_bits(o0))


def derive_seed(seed, index) -> int:
    """Stable substream seed for task index (grid point, control run, ...)."""
    u = np.uint64
    o0, _, _, _ = philox4x64(
        u(int(index) & 0xFFFFFFFFFFFFFFFF),
        u(2),
        u(0),
        u(0),
        u(int(seed) & 0xFFFFFFFFFFFFFFFF),
        u(0),
    )
    return int(o0)
