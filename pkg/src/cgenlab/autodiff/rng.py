"""
Seed derivation and the counter-based generator used everywhere.

All randomness flows from one top-level seed. Sub-seeds are derived by hashing
the seed together with a module name (blake2b, 8-byte digest), so each
pipeline stage can be rerun on its own and still see the same stream.
The bit generator is Philox, a counter-based generator with a documented
algorithm and identical output on every platform.
"""

from __future__ import annotations

import hashlib

import numpy as np

_DIGEST_BYTES = 8
_SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, *names: str | int) -> int:
    """Return a 64-bit seed derived from ``seed`` and a path of names."""
    h = hashlib.blake2b(digest_size=_DIGEST_BYTES)
    h.update(int(seed & _SEED_MASK).to_bytes(8, "little"))
    for name in names:
        h.update(b"/")
        h.update(str(name).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int, *names: str | int) -> np.random.Generator:
    """Philox generator for ``seed`` (optionally scoped by ``names``)."""
    key = derive_seed(seed, *names) if names else seed & _SEED_MASK
    return np.random.Generator(np.random.Philox(key))


def sample_seed(seed: int, module: str, index: int) -> int:
    """Per-sample seed: the module seed XOR the sample index."""
    return derive_seed(seed, module) ^ index


def sample_rng(seed: int, module: str, index: int) -> np.random.Generator:
    """Generator of one dataset sample, independent of generation order."""
    return np.random.Generator(np.random.Philox(sample_seed(seed, module, index)))
