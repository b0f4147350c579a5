"""Detection probabilities and Fock amplitudes of Gaussian states."""

from __future__ import annotations

import math

import numpy as np

from ..errors import PhysicalityError, ScaleError
from .kernels import hafnian, no_click_table, subset_click_sum, superset_moebius
from .state import GaussianState
from .symplectic import symplectic_eigenvalues

BRUTE_FORCE_MAX_MODES = 14
PURITY_ATOL = 1e-6


def complex_moments(state: GaussianState) -> tuple[np.ndarray, np.ndarray]:
    """``N_ij = <a_i^dagger a_j>`` and ``M_ij = <a_i a_j>`` for the zero-mean part."""
    m = state.num_modes
    V = state.cov
    x, p, xp = V[:m, :m], V[m:, m:], V[:m, m:]
    N = (x + p + 1j * (xp - xp.T) - 2 * np.eye(m)) / 4
    M = (x - p + 1j * (xp + xp.T)) / 4
    return N, M


def husimi_matrix(state: GaussianState) -> np.ndarray:
    """Husimi covariance ``Q`` in ``(a, a^dagger)`` ordering; vacuum gives the identity."""
    N, M = complex_moments(state)
    m = state.num_modes
    return np.block([[N, M.conj()], [M, N.conj()]]) + np.eye(2 * m)


def _require_zero_mean(state: GaussianState) -> None:
    if not state.is_zero_mean():
        raise NotImplementedError("click probabilities of displaced states are not supported")


def click_probability(state: GaussianState, pattern) -> float:
    """Probability of a threshold-detector pattern (one bit per mode)."""
    pattern = np.asarray(pattern, dtype=int).ravel()
    if pattern.shape[0] != state.num_modes:
        raise ValueError(f"pattern has {pattern.shape[0]} entries for a {state.num_modes}-mode state")
    if np.any((pattern != 0) & (pattern != 1)):
        raise ValueError("pattern entries must be 0 or 1")
    _require_zero_mean(state)
    if state.num_modes == 0:
        return 1.0
    Q = husimi_matrix(state)
    dark = np.flatnonzero(pattern == 0)
    bright = np.flatnonzero(pattern == 1)
    return float(min(1.0, max(0.0, subset_click_sum(Q, dark, bright))))


def marginal_click_probability(state: GaussianState, dark=(), bright=()) -> float:
    """Probability that ``dark`` modes do not click and ``bright`` modes click."""
    _require_zero_mean(state)
    dark, bright = list(dark), list(bright)
    if set(dark) & set(bright):
        raise ValueError("a mode cannot be both dark and bright")
    if not dark and not bright:
        return 1.0
    return float(subset_click_sum(husimi_matrix(state), dark, bright))


def click_distribution(state: GaussianState) -> np.ndarray:
    """Exact probabilities of all ``2^M`` click patterns.

    Index ``k`` encodes the pattern with mode ``i`` clicked iff bit ``i`` of ``k``
    is set.
    """
    m = state.num_modes
    if m > BRUTE_FORCE_MAX_MODES:
        raise ScaleError(f"brute-force enumeration limited to {BRUTE_FORCE_MAX_MODES} modes (got {m})")
    _require_zero_mean(state)
    if m == 0:
        return np.ones(1)
    g = no_click_table(husimi_matrix(state))
    p = superset_moebius(g, m)
    return np.clip(p, 0.0, 1.0)


def patterns_to_index(patterns: np.ndarray) -> np.ndarray:
    patterns = np.asarray(patterns, dtype=np.int64)
    m = patterns.shape[1]
    return patterns @ (1 << np.arange(m, dtype=np.int64))


def index_to_patterns(index, num_modes: int) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64)
    return ((index[..., None] >> np.arange(num_modes)) & 1).astype(np.uint8)


# ----------------------------------------------------------------------------
# Fock amplitudes of pure states
# ----------------------------------------------------------------------------


def is_pure(state: GaussianState, atol: float = PURITY_ATOL) -> bool:
    if state.num_modes == 0:
        return True
    return bool(np.all(np.abs(symplectic_eigenvalues(state.cov) - 1) <= atol))


def pure_state_matrix(state: GaussianState) -> tuple[np.ndarray, float]:
    """Symmetric ``B`` and vacuum amplitude ``c0`` with ``|psi> = c0 exp(a^T B a / 2)|0>``.

    ``c0`` is chosen real and positive.
    """
    if not is_pure(state):
        raise PhysicalityError("state is mixed; Fock amplitudes require a pure state")
    _require_zero_mean(state)
    N, M = complex_moments(state)
    # a_i |psi> = sum_k B_ik a_k^dagger |psi>  implies  M = B (I + N)
    B = M @ np.linalg.inv(np.eye(state.num_modes) + N)
    B = 0.5 * (B + B.T)
    c0 = float(np.real(np.linalg.det(husimi_matrix(state))) ** -0.25)
    return B, c0


def fock_amplitude(state: GaussianState, n) -> complex:
    """``<n|psi>`` for a pure zero-mean Gaussian state via the hafnian formula."""
    n = np.asarray(n, dtype=int).ravel()
    if n.shape[0] != state.num_modes:
        raise ValueError("photon-number vector length does not match the number of modes")
    if np.any(n < 0):
        raise ValueError("photon numbers must be non-negative")
    B, c0 = pure_state_matrix(state)
    if n.sum() % 2:
        return 0.0 + 0.0j
    rep = np.repeat(np.arange(state.num_modes), n)
    Bn = B[np.ix_(rep, rep)]
    norm = math.sqrt(float(np.prod([math.factorial(int(k)) for k in n])))
    return complex(c0 * hafnian(Bn) / norm)


def single_mode_photon_distribution(cov2: np.ndarray, cutoff: int) -> np.ndarray:
    """Photon-number probabilities ``P(0..cutoff-1)`` of a zero-mean one-mode Gaussian state.

    Uses the generating function ``sum_n P(n) s^n = prod_k (c_k - e_k s)^(-1/2)``
    with ``e_k = (v_k - 1) / 2`` for the covariance eigenvalues ``v_k``.
    """
    v = np.linalg.eigvalsh(np.asarray(cov2, dtype=float))
    e = (v - 1) / 2
    c = 1 + e
    n = np.arange(cutoff)
    # coefficients of (1 - x s)^(-1/2): binom(2n, n) (x/4)^n, built recursively
    series = []
    for ek, ck in zip(e, c):
        x = ek / ck
        coef = np.empty(cutoff)
        coef[0] = 1.0
        for j in range(1, cutoff):
            coef[j] = coef[j - 1] * x * (2 * j - 1) / (2 * j)
        series.append(coef / math.sqrt(ck))
    p = np.convolve(series[0], series[1])[:cutoff]
    return np.clip(p.real, 0.0, 1.0) if n.size else p
