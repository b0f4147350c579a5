"""Classical simulation cost: bond-dimension fits, runtime and speedup estimates.

All large quantities are carried as base-10 logarithms.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError

SECONDS_PER_YEAR = 3.15576e7
QUANTUM_SAMPLE_TIME = 25.6e-6
LOG10_2 = math.log10(2.0)


@dataclass(frozen=True)
class ChiFit:
    """``chi(eps) = A (ln 1/eps)^n`` fitted in log space."""

    A: float
    n: float
    residual_norm: float
    residual_rms: float
    eps_range: tuple[float, float]
    chi_range: tuple[float, float]

    def log_chi(self, eps: float) -> float:
        return math.log(self.A) + self.n * math.log(math.log(1 / eps))


@dataclass(frozen=True)
class ChiExtrapolation:
    eps_target: float
    log10_chi: float
    log10_low: float
    log10_high: float

    @property
    def chi(self) -> float:
        return 10.0**self.log10_chi if self.log10_chi < 308 else math.inf


def fit_chi(points) -> ChiFit:
    """Least squares on ``log chi = log A + n log ln(1/eps)``.

    Raises:
        ValueError: fewer than three points, ``eps`` outside ``(0, 1)``,
            degenerate abscissae or a non-positive exponent.
    """
    arr = np.asarray(points, dtype=float).reshape(-1, 2)
    if arr.shape[0] < 3:
        raise ValueError("chi fit needs at least three points")
    eps, chi = arr[:, 0], arr[:, 1]
    if np.any((eps <= 0) | (eps >= 1)):
        raise ValueError("truncation errors must lie in (0, 1)")
    if np.any(chi <= 0):
        raise ValueError("bond dimensions must be positive")
    x = np.log(np.log(1 / eps))
    if np.ptp(x) < 1e-12:
        raise ValueError("degenerate truncation errors: all points share one abscissa")
    y = np.log(chi)
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    n = float(coef[1])
    if not n > 0:
        raise ValueError(f"fitted exponent {n:.4g} is not positive")
    return ChiFit(
        A=float(math.exp(coef[0])),
        n=n,
        residual_norm=float(np.linalg.norm(resid)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        eps_range=(float(eps.min()), float(eps.max())),
        chi_range=(float(chi.min()), float(chi.max())),
    )


def extrapolate_chi(fit: ChiFit, eps_target: float) -> ChiExtrapolation:
    """Required ``chi`` at ``eps_target`` with a log-space band of one residual rms."""
    if not 0 < eps_target < 1:
        raise ValueError("target truncation error must lie in (0, 1)")
    lc = fit.log_chi(eps_target) / math.log(10)
    band = fit.residual_rms / math.log(10)
    return ChiExtrapolation(eps_target, lc, lc - band, lc + band)


@dataclass(frozen=True)
class Baseline:
    name: str
    ops_per_second: float
    memory_bytes: float | None
    citation: str


def load_baselines(path=None) -> dict[str, Baseline]:
    """Baseline registry: ``{"baselines": {name: {ops_per_second, memory_bytes, citation}}}``."""
    if path is None:
        text = resources.files("gbslab").joinpath("data/baselines.json").read_text()
    else:
        text = Path(path).read_text()
    data = json.loads(text)
    out = {}
    for name, entry in data.get("baselines", {}).items():
        ops = float(entry["ops_per_second"])
        if not ops > 0:
            raise ConfigError(f"baseline {name}: ops_per_second must be positive")
        out[name] = Baseline(name, ops, entry.get("memory_bytes"), entry.get("citation", ""))
    return out


@dataclass(frozen=True)
class CostEstimate:
    log10_ops: float
    throughput: float
    prefactor: float
    log10_seconds: float
    inputs: dict

    @property
    def log10_years(self) -> float:
        return self.log10_seconds - math.log10(SECONDS_PER_YEAR)

    @property
    def seconds(self) -> float:
        return _pow10(self.log10_seconds)

    @property
    def years(self) -> float:
        return _pow10(self.log10_years)

    def to_dict(self) -> dict:
        return {
            "log10_ops": self.log10_ops,
            "throughput": self.throughput,
            "prefactor": self.prefactor,
            "log10_seconds": self.log10_seconds,
            "log10_years": self.log10_years,
            **self.inputs,
        }


def _pow10(x: float) -> float:
    return 10.0**x if x < 308 else math.inf


def _log10_positive(name: str, value: float) -> float:
    if not value > 0 or not math.isfinite(value):
        raise ValueError(f"{name} must be positive and finite")
    return math.log10(value)


def runtime_estimate(
    M: float,
    d: float,
    chi: float | None = None,
    N_eff: float = 0.0,
    throughput: float = 1e18,
    prefactor: float = 1.0,
    log10_chi: float | None = None,
) -> CostEstimate:
    """Per-sample operation count ``prefactor * M d chi^2 2^(N_eff/2)`` and wall time at ``throughput`` ops/s.

    Pass ``log10_chi`` instead of ``chi`` for bond dimensions beyond float range.
    """
    if (chi is None) == (log10_chi is None):
        raise ValueError("give exactly one of chi and log10_chi")
    lchi = _log10_positive("chi", chi) if log10_chi is None else float(log10_chi)
    if N_eff < 0 or not math.isfinite(N_eff):
        raise ValueError("N_eff must be non-negative and finite")
    log_ops = (
        _log10_positive("prefactor", prefactor)
        + _log10_positive("M", M)
        + _log10_positive("d", d)
        + 2 * lchi
        + 0.5 * N_eff * LOG10_2
    )
    log_s = log_ops - _log10_positive("throughput", throughput)
    inputs = {"M": M, "d": d, "log10_chi": lchi, "N_eff": N_eff}
    return CostEstimate(log_ops, throughput, prefactor, log_s, inputs)


def speedup_ratio(classical: CostEstimate | float, quantum_sample_time: float = QUANTUM_SAMPLE_TIME) -> float:
    """``log10(classical time / quantum time)``; ``classical`` is an estimate or seconds."""
    if isinstance(classical, CostEstimate):
        log_c = classical.log10_seconds
    else:
        log_c = _log10_positive("classical time", classical)
    return log_c - _log10_positive("quantum sample time", quantum_sample_time)


@dataclass(frozen=True)
class Calibration:
    """Measured cost per unit of ``M d chi^2 2^(N_eff/2)``."""

    seconds_per_unit: float
    local_ops_per_second: float
    measured_seconds: float
    units: float

    @property
    def prefactor(self) -> float:
        """Operations per unit, transferable to another machine's throughput."""
        return self.seconds_per_unit * self.local_ops_per_second


def local_throughput(size: int = 512, repeats: int = 3) -> float:
    """Rough floating-point rate of this machine from a complex matrix product."""
    rng = np.random.default_rng(0)
    a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    best = math.inf
    for _ in range(repeats):
        t = time.perf_counter()
        a @ a
        best = min(best, time.perf_counter() - t)
    return 8.0 * size**3 / best


def calibrate_prefactor(num_modes: int = 6, d: int = 6, chi: int = 16, samples: int = 2000, seed: int = 0) -> Calibration:
    """Time decomposition, MPS construction and sampling on a small random instance."""
    from .instances import random_instance
    from .mps import build_mps, decompose_at_sources, mps_sample

    inst = random_instance(num_modes, seed, r_range=(0.3, 0.6), eta=0.5)
    t = time.perf_counter()
    dec = decompose_at_sources(inst.bank, inst.transfer)
    mps = build_mps(dec.V_p, d, chi)
    mps_sample(mps, dec.W, samples, seed)
    elapsed = time.perf_counter() - t
    chi_used = max(mps.bond_dims) if mps.bond_dims else 1
    units = samples * num_modes * d * chi_used**2 * 2 ** (dec.N_eff / 2)
    return Calibration(elapsed / units, local_throughput(), elapsed, units)
