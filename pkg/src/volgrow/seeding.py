"""Seed discipline.

Every random draw comes from a generator derived from the run seed plus a
named stream path, e.g. ``stream(seed, "volume-growth", "samples")``.  The
path is hashed into a ``SeedSequence`` spawn key, so streams are independent
of each other and of the order in which they are requested.  Per-sample
draws are taken from one stream in sample-index order; chunking or
concurrency cannot change which numbers a sample receives.
"""

import zlib

import numpy as np


def _key(part):
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def stream(seed, *path):
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(p) for p in path))
    return np.random.Generator(np.random.PCG64(seq))
