"""Ground-truth sampling of threshold-detector patterns."""

from __future__ import annotations

import threading

import numpy as np

from ..errors import ScaleError
from ..gaussian import GaussianState, click_distribution, husimi_matrix
from ..gaussian.kernels import subset_click_sum
from ..rng import run_blocks
from .batch import SampleBatch

EXACT_MAX_MODES = 25


class _PrefixTable:
    """Cached probabilities of click patterns on the leading modes."""

    def __init__(self, Q: np.ndarray):
        self.Q = np.ascontiguousarray(Q, dtype=np.complex128)
        self._cache: dict[tuple[int, int], float] = {}
        self._lock = threading.Lock()

    def prob(self, length: int, code: int) -> float:
        key = (length, code)
        val = self._cache.get(key)
        if val is None:
            dark = [i for i in range(length) if not (code >> i) & 1]
            bright = [i for i in range(length) if (code >> i) & 1]
            val = subset_click_sum(self.Q, dark, bright)
            with self._lock:
                self._cache[key] = val
        return val


def exact_sampler(state: GaussianState, n: int, seed: int, threads: int = 1) -> SampleBatch:
    """Draw ``n`` i.i.d. click patterns by the mode-by-mode chain rule.

    The conditional no-click probability of mode ``k`` given the clicks on
    modes ``0..k-1`` is a ratio of marginal pattern probabilities, each an
    inclusion-exclusion sum of Husimi minors.
    """
    m = state.num_modes
    if m > EXACT_MAX_MODES:
        raise ScaleError(f"exact sampler limited to {EXACT_MAX_MODES} modes (got {m})")
    if not state.is_zero_mean():
        raise NotImplementedError("exact sampling of displaced states is not supported")
    table = _PrefixTable(husimi_matrix(state)) if m else None

    def draw(rng, start, count):
        u = rng.random((count, m))
        codes = np.zeros(count, dtype=np.int64)
        p_prefix = np.ones(count)
        for k in range(m):
            uniq, inv = np.unique(codes, return_inverse=True)
            p_dark = np.array([table.prob(k + 1, int(c)) for c in uniq])[inv]
            cond = np.clip(p_dark / np.where(p_prefix > 0, p_prefix, 1.0), 0.0, 1.0)
            click = u[:, k] >= cond
            codes |= click.astype(np.int64) << k
            p_prefix = np.where(click, p_prefix - p_dark, p_dark)
        return ((codes[:, None] >> np.arange(m)) & 1).astype(np.uint8)

    patterns = run_blocks(n, seed, "exact", draw, threads=threads)
    return SampleBatch(patterns.reshape(n, m), sampler="exact", seed=seed)


def brute_force_distribution(state: GaussianState) -> np.ndarray:
    """Exact probability of every click pattern, indexed by click mask (bit i = mode i)."""
    return click_distribution(state)
