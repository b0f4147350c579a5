"""Ground-truth and mockup samplers."""

from .batch import SampleBatch, read_samples, write_samples
from .exact import brute_force_distribution, exact_sampler
from .mockups import (
    MockupKind,
    classical_gaussian_sampler,
    click_marginals,
    distinguishable_sampler,
    greedy_sampler,
    ips_rates,
    ips_sampler,
    squashed_state_of,
    thermal_state_of,
)

__all__ = [
    "MockupKind",
    "SampleBatch",
    "brute_force_distribution",
    "classical_gaussian_sampler",
    "click_marginals",
    "distinguishable_sampler",
    "exact_sampler",
    "greedy_sampler",
    "ips_rates",
    "ips_sampler",
    "read_samples",
    "squashed_state_of",
    "thermal_state_of",
    "write_samples",
]
