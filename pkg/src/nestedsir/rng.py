"""Counter-based random streams.

Every random quantity in the package is a pure function of a 64-bit seed,
a stream tag and an integer key (vertex coordinates, a pair of vertices,
a replica number).  Draws are therefore independent of traversal order and
of how work is split across processes.  The mixing function is the
SplitMix64 finalizer, applied in vectorised numpy ``uint64`` arithmetic
(wrap-around is the intended behaviour).

Sequential streams (binomial counts, subset choices) use numpy's Philox
bit generator keyed the same way.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO53 = 2.0 ** -53

# stream tags
HEIGHT = 0x48454947
PAIR_NESTED = 0x50524E31
PAIR_DISTANCE = 0x50524432
REPLICA = 0x5245504C
LONGRANGE = 0x4C4F4E47
LADDER = 0x4C414444


def mix64(x):
    """SplitMix64 finalizer on a uint64 array (or scalar)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x ^ (x >> _S30)
        x = x * _M1
        x = x ^ (x >> _S27)
        x = x * _M2
        x = x ^ (x >> _S31)
    return x


def _as_u64(v):
    # signed ints map injectively onto uint64 via two's complement
    return np.asarray(v, dtype=np.int64).astype(np.uint64)


def _seed_u64(seed):
    if isinstance(seed, (int, np.integer)) and not isinstance(seed, bool):
        return np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return _as_u64(seed)


def stream_key(seed, tag: int):
    """Per-stream key; ``seed`` may be an integer array (one key per seed)."""
    s = _seed_u64(seed)
    t = np.uint64(int(tag) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        out = mix64(np.asarray(s ^ mix64(np.array([t]))[0]))
    return np.uint64(out) if out.ndim == 0 else out


def hash_coords(coords) -> np.ndarray:
    """Seed-free hash of integer coordinates; ``coords`` has shape (..., d)."""
    coords = _as_u64(coords)
    h = np.full(coords.shape[:-1], np.uint64(0x6A09E667F3BCC909), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for i in range(coords.shape[-1]):
            h = mix64(h + _GOLDEN * (coords[..., i] + np.uint64(i + 1)))
    return h


def keyed_bits(seed, tag: int, *keys) -> np.ndarray:
    """64 random bits for each element of the broadcast ``(seed, *keys)``."""
    h = stream_key(seed, tag)
    shape = np.broadcast_shapes(np.shape(h), *[np.shape(k) for k in keys])
    out = np.broadcast_to(np.asarray(h, dtype=np.uint64), shape).copy()
    with np.errstate(over="ignore"):
        for k in keys:
            out = mix64(out ^ mix64(_as_u64(k) + _GOLDEN))
    return out


def bits_to_unit(bits) -> np.ndarray:
    """Map 64-bit words to floats in (0, 1]."""
    bits = np.asarray(bits, dtype=np.uint64)
    return ((bits >> _S11).astype(np.float64) + 1.0) * _TWO53


def uniform(seed: int, tag: int, *keys) -> np.ndarray:
    """Uniform (0, 1] draws keyed by ``(seed, tag, *keys)``."""
    return bits_to_unit(keyed_bits(seed, tag, *keys))


def pair_uniform(seed: int, tag: int, hash_u, hash_v) -> np.ndarray:
    """Symmetric keyed uniforms for unordered vertex pairs.

    ``hash_u`` and ``hash_v`` are :func:`hash_coords` values; swapping them
    gives the same draw.
    """
    hu = np.asarray(hash_u, dtype=np.uint64)
    hv = np.asarray(hash_v, dtype=np.uint64)
    lo = np.minimum(hu, hv)
    hi = np.maximum(hu, hv)
    return uniform(seed, tag, lo, hi)


def child_seed(seed: int, index, tag: int = REPLICA):
    """Derive independent replica seeds from a master seed."""
    out = keyed_bits(seed, tag, np.asarray(index, dtype=np.int64)).astype(np.int64)
    return out if out.ndim else int(out)


def generator(seed: int, tag: int, *keys) -> np.random.Generator:
    """Philox generator keyed by ``(seed, tag, *keys)`` (all scalars)."""
    k = keyed_bits(seed, tag, *[np.int64(x) for x in keys]) if keys else stream_key(seed, tag)
    k2 = mix64(np.asarray(k, dtype=np.uint64) ^ _GOLDEN)
    key = np.array([int(k), int(k2)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
