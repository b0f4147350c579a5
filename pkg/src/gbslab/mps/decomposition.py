"""Splitting a Gaussian covariance into a pure part and classical noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PhysicalityError
from ..gaussian import GaussianState, SqueezerBank, real_representation, williamson
from ..gaussian.state import block_diagonal_modes, check_subunitary, single_mode_squeezed_cov

W_PSD_ATOL = 1e-9


@dataclass(frozen=True)
class PureDecomposition:
    """``V = V_p + W`` with ``V_p`` pure and ``W`` positive semidefinite."""

    V_p: np.ndarray
    W: np.ndarray

    @property
    def num_modes(self) -> int:
        return self.V_p.shape[0] // 2

    @property
    def N_eff(self) -> float:
        return effective_photon_number(self)

    def pure_state(self) -> GaussianState:
        return GaussianState(self.V_p, validate=False)


def decompose(V) -> PureDecomposition:
    """Williamson split: clamp every symplectic eigenvalue of ``V`` to one."""
    V = np.asarray(V.cov if isinstance(V, GaussianState) else V, dtype=float)
    f = williamson(V)
    V_p = f.S @ f.S.T
    extra = np.concatenate([f.nu - 1, f.nu - 1])
    W = (f.S * np.clip(extra, 0.0, None)) @ f.S.T
    return PureDecomposition(0.5 * (V_p + V_p.T), 0.5 * (W + W.T))


def decompose_at_sources(bank: SqueezerBank, T) -> PureDecomposition:
    """Split a lossy squeezed-source network by moving the common loss onto the sources.

    With ``eta0`` the largest singular value squared of ``T``, each source is
    read as a pure squeezer of variance ``a = eta0 e^{-2r} + 1 - eta0`` plus
    classical noise along its anti-squeezed axis, then propagated through
    ``T / sqrt(eta0)``.  Loss that ``T / sqrt(eta0)`` still carries (non-uniform
    transmission) is split off by the Williamson clamp.
    """
    T = np.asarray(T, dtype=complex)
    m_out, m_in = T.shape
    if m_in < len(bank):
        raise ValueError("transfer matrix has fewer inputs than the squeezer bank")
    smax = check_subunitary(T)
    if smax == 0:
        eye = np.eye(2 * m_out)
        return PureDecomposition(eye, np.zeros_like(eye))
    eta0 = smax**2
    r = np.concatenate([bank.r, np.zeros(m_in - len(bank))])
    phi = np.concatenate([bank.phi, np.zeros(m_in - len(bank))])
    pure_blocks, noise_blocks = [], []
    for rk, pk in zip(r, phi):
        a = eta0 * math.exp(-2 * rk) + 1 - eta0
        b = eta0 * math.exp(2 * rk) + 1 - eta0
        pure_blocks.append(single_mode_squeezed_cov(-0.5 * math.log(a), pk))
        v = np.array([-math.sin(pk / 2), math.cos(pk / 2)])
        noise_blocks.append(max(0.0, b - 1 / a) * np.outer(v, v))
    Vp_in = block_diagonal_modes(pure_blocks)
    W_in = block_diagonal_modes(noise_blocks)

    S = real_representation(T / smax)
    Vp = S @ Vp_in @ S.T + np.eye(2 * m_out) - S @ S.T
    W = S @ W_in @ S.T
    if not np.allclose(S @ S.T, np.eye(2 * m_out), atol=1e-10):
        inner = decompose(Vp)
        Vp, W = inner.V_p, W + inner.W
    return PureDecomposition(0.5 * (Vp + Vp.T), 0.5 * (W + W.T))


def effective_photon_number(decomp: PureDecomposition) -> float:
    """Mean photon number of the pure part, ``(tr V_p - 2M) / 4``."""
    return float((np.trace(decomp.V_p) - decomp.V_p.shape[0]) / 4)


def check_decomposition(decomp: PureDecomposition, V, atol: float = 1e-8) -> None:
    """Raise if the split does not reconstruct ``V`` or ``W`` is not PSD."""
    if np.max(np.abs(decomp.V_p + decomp.W - V)) > atol:
        raise PhysicalityError("V_p + W does not reconstruct V")
    if np.linalg.eigvalsh(decomp.W).min() < -W_PSD_ATOL:
        raise PhysicalityError("classical part W is not positive semidefinite")


def adapt_transmission(bank: SqueezerBank, T, scale: float) -> tuple[SqueezerBank, np.ndarray]:
    """Scale the transmission by ``scale`` and raise squeezing to keep transmitted photons fixed.

    Every input keeps ``eta * sinh(r)^2`` constant: ``sinh(r') = sinh(r) / sqrt(scale)``.
    """
    if not (0 < scale <= 1) or not math.isfinite(scale):
        raise ValueError("scale must lie in (0, 1]")
    s = np.sinh(bank.r) / math.sqrt(scale)
    if not np.all(np.isfinite(s)):
        raise ValueError("squeezing compensation overflowed")
    return SqueezerBank(np.arcsinh(s), bank.phi), math.sqrt(scale) * np.asarray(T, dtype=complex)
