"""Counter-based random substreams.

Every stream is a Philox generator whose key is derived from the experiment
seed plus a tuple of labels (stream name, block index, ...).  Streams never
depend on which worker consumes them, so results are identical for any worker
count as long as work is split into the same labelled blocks.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_to_int(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("stream labels must be nonnegative")
        return int(label)
    return zlib.crc32(str(label).encode("utf-8"))


def stream(seed: int, *labels) -> np.random.Generator:
    """Return an independent generator for ``(seed, *labels)``."""
    if seed is None:
        raise ValueError("a seed is required")
    key = tuple(_label_to_int(lab) for lab in labels)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(total: int, block_size: int) -> list[int]:
    """Split ``total`` replicas into fixed blocks (last one possibly short)."""
    if total < 0:
        raise ValueError("total must be nonnegative")
    full, rest = divmod(total, block_size)
    return [block_size] * full + ([rest] if rest else [])
