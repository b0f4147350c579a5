"""Seeded random benchmark instances: squeezers plus a lossy Haar interferometer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import random_interferometer
from .gaussian import GaussianState, SqueezerBank, apply_transfer, squeezed_vacuum
from .rng import stream


@dataclass(frozen=True)
class Instance:
    bank: SqueezerBank
    transfer: np.ndarray

    @property
    def num_modes(self) -> int:
        return self.transfer.shape[0]

    def ground_truth(self) -> GaussianState:
        return apply_transfer(squeezed_vacuum(self.bank), self.transfer)


def random_instance(
    num_modes: int,
    seed: int,
    r_range: tuple[float, float] = (0.5, 1.2),
    eta_range: tuple[float, float] = (0.4, 1.0),
    eta: float | None = None,
) -> Instance:
    """Squeezing drawn from ``r_range``, per-output transmission from ``eta_range``.

    Passing ``eta`` fixes a uniform transmission instead.  The transfer matrix
    is ``diag(sqrt(eta)) @ U`` with ``U`` Haar random.
    """
    rng = stream(seed, "instance")
    r = rng.uniform(*r_range, size=num_modes)
    phi = np.zeros(num_modes)
    if eta is None:
        etas = rng.uniform(*eta_range, size=num_modes)
    else:
        etas = np.full(num_modes, float(eta))
    U = random_interferometer(num_modes, seed)
    T = np.sqrt(etas)[:, None] * U
    return Instance(SqueezerBank(r, phi), T)
