"""Gaussian states, squeezed sources and linear-optical evolution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import PhysicalityError
from .symplectic import check_physical, real_representation

SUBUNITARY_ATOL = 1e-9


@dataclass(frozen=True)
class GaussianState:
    """Covariance matrix and mean vector over ``2M`` quadratures (xxpp, vacuum = I).

    The state is validated on construction (symmetry and ``V + i Omega >= 0``);
    pass ``validate=False`` only for matrices that are physical by construction
    and too large to check cheaply.
    """

    cov: np.ndarray
    mean: np.ndarray = None
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        cov = np.array(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise PhysicalityError("covariance must be a square matrix of even dimension")
        mean = np.zeros(cov.shape[0]) if self.mean is None else np.array(self.mean, dtype=float)
        if mean.shape != (cov.shape[0],):
            raise PhysicalityError("mean vector length does not match covariance")
        if self.validate:
            check_physical(cov)
        cov = 0.5 * (cov + cov.T)
        cov.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)

    @property
    def num_modes(self) -> int:
        return self.cov.shape[0] // 2

    @classmethod
    def vacuum(cls, num_modes: int) -> "GaussianState":
        return cls(np.eye(2 * num_modes))

    @classmethod
    def thermal(cls, mean_photons) -> "GaussianState":
        n = np.atleast_1d(np.asarray(mean_photons, dtype=float))
        if np.any(n < 0):
            raise PhysicalityError("thermal photon number must be non-negative")
        return cls(np.diag(np.concatenate([2 * n + 1, 2 * n + 1])))

    def mean_photons(self) -> np.ndarray:
        """Per-mode mean photon number ``(V_xx + V_pp - 2 + mu_x^2 + mu_p^2) / 4``."""
        m = self.num_modes
        d = np.diag(self.cov)
        mu = self.mean
        return (d[:m] + d[m:] - 2 + mu[:m] ** 2 + mu[m:] ** 2) / 4

    def total_mean_photons(self) -> float:
        return float(self.mean_photons().sum())

    def is_zero_mean(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.mean) <= atol))


@dataclass(frozen=True)
class SqueezerBank:
    """Per-input squeezing parameters ``r`` and phases ``phi`` (radians)."""

    r: np.ndarray
    phi: np.ndarray = None

    def __post_init__(self):
        r = np.atleast_1d(np.array(self.r, dtype=float))
        phi = np.zeros_like(r) if self.phi is None else np.atleast_1d(np.array(self.phi, dtype=float))
        if r.ndim != 1 or phi.shape != r.shape:
            raise PhysicalityError("squeezing and phase lists must be 1-D and of equal length")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise PhysicalityError("squeezing parameters must be finite and non-negative")
        r.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "phi", phi)

    def __len__(self) -> int:
        return len(self.r)

    @property
    def num_modes(self) -> int:
        return len(self.r)

    def mean_photons(self) -> np.ndarray:
        return np.sinh(self.r) ** 2


def single_mode_squeezed_cov(r: float, phi: float = 0.0) -> np.ndarray:
    """2x2 (x, p) covariance of a squeezed vacuum; ``phi = 0`` squeezes ``x``."""
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    return np.array(
        [
            [c - s * np.cos(phi), -s * np.sin(phi)],
            [-s * np.sin(phi), c + s * np.cos(phi)],
        ]
    )


def block_diagonal_modes(blocks: list[np.ndarray]) -> np.ndarray:
    """Assemble per-mode 2x2 (x, p) blocks into an xxpp covariance."""
    m = len(blocks)
    V = np.zeros((2 * m, 2 * m))
    for k, b in enumerate(blocks):
        V[k, k] = b[0, 0]
        V[k, k + m] = V[k + m, k] = b[0, 1]
        V[k + m, k + m] = b[1, 1]
    return V


def squeezed_vacuum(bank: SqueezerBank) -> GaussianState:
    """Product of single-mode squeezed vacua, one per entry of ``bank``."""
    blocks = [single_mode_squeezed_cov(r, p) for r, p in zip(bank.r, bank.phi)]
    return GaussianState(block_diagonal_modes(blocks), validate=False)


def check_subunitary(T: np.ndarray, atol: float = SUBUNITARY_ATOL) -> float:
    """Largest singular value of ``T``; raises if it exceeds one."""
    if T.size == 0:
        return 0.0
    smax = float(np.linalg.norm(T, 2))
    if smax > 1 + atol:
        raise PhysicalityError(f"transfer matrix is super-unitary (largest singular value {smax:.12f})")
    return smax


def apply_transfer(state: GaussianState, T: np.ndarray, validate: bool = True) -> GaussianState:
    """Evolve ``state`` through the linear network ``a_out = T a_in`` with vacuum loss modes.

    ``T`` may be rectangular; input modes beyond ``state.num_modes`` are vacuum.
    """
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2:
        raise ValueError("transfer matrix must be 2-D")
    m_out, m_in = T.shape
    if m_in < state.num_modes:
        raise ValueError(f"transfer matrix has {m_in} inputs but state has {state.num_modes} modes")
    check_subunitary(T)
    V, mu = state.cov, state.mean
    if m_in > state.num_modes:
        pad = GaussianState.vacuum(m_in - state.num_modes)
        V, mu = _direct_sum(V, pad.cov), np.concatenate(
            [mu[: state.num_modes], np.zeros(m_in - state.num_modes), mu[state.num_modes :], np.zeros(m_in - state.num_modes)]
        )
    S = real_representation(T)
    V_out = S @ V @ S.T + np.eye(2 * m_out) - S @ S.T
    return GaussianState(V_out, S @ mu, validate=validate)


def _direct_sum(V1: np.ndarray, V2: np.ndarray) -> np.ndarray:
    m1, m2 = V1.shape[0] // 2, V2.shape[0] // 2
    m = m1 + m2
    V = np.zeros((2 * m, 2 * m))
    a = np.r_[0:m1, m : m + m1]
    b = np.r_[m1:m, m + m1 : 2 * m]
    V[np.ix_(a, a)] = V1
    V[np.ix_(b, b)] = V2
    return V


def quadrature_indices(modes, num_modes: int) -> np.ndarray:
    modes = np.asarray(modes, dtype=int)
    return np.concatenate([modes, modes + num_modes])


def reduced_state(state: GaussianState, modes) -> GaussianState:
    """Marginal state on ``modes`` (in the given order)."""
    modes = [int(k) for k in modes]
    if len(set(modes)) != len(modes):
        raise ValueError("duplicate mode indices")
    if any(k < 0 or k >= state.num_modes for k in modes):
        raise ValueError("mode index out of range")
    idx = quadrature_indices(modes, state.num_modes)
    return GaussianState(state.cov[np.ix_(idx, idx)], state.mean[idx], validate=False)
