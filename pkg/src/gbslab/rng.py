"""Counter-based random streams.

Every random draw in the library comes from a Philox generator whose key is
derived from ``(root seed, stage label, block index)``.  Samples are grouped
into fixed-size blocks; block ``b`` always covers sample indices
``[b * BLOCK_SIZE, (b + 1) * BLOCK_SIZE)`` and always uses the same stream, so
results do not depend on how many workers process the blocks or in which
order they finish.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

BLOCK_SIZE = 4096


def label_key(label: str) -> int:
    """Stable 64-bit integer for a stage label (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Return the generator for ``(seed, label, index)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(label_key(label), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, label: str) -> int:
    """Child root seed for a labelled sub-stage."""
    return int(stream(seed, label).integers(0, 2**63 - 1))


def blocks(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """Split ``n`` samples into ``(block index, start, count)`` triples."""
    out = []
    for b, start in enumerate(range(0, n, block_size)):
        out.append((b, start, min(block_size, n - start)))
    return out


def run_blocks(
    n: int,
    seed: int,
    label: str,
    fn: Callable[[np.random.Generator, int, int], np.ndarray],
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Evaluate ``fn(rng, start, count)`` per block and stack the results in order.

    ``fn`` must return an array whose first axis has length ``count``.
    """
    parts = blocks(n, block_size)
    if not parts:
        return fn(stream(seed, label, 0), 0, 0)

    def work(part):
        b, start, count = part
        return fn(stream(seed, label, b), start, count)

    if threads <= 1 or len(parts) == 1:
        results = [work(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, parts))
    return np.concatenate(results, axis=0)
