"""Symplectic linear algebra in the ``xxpp`` quadrature ordering.

Quadratures are ordered ``(x_1, ..., x_M, p_1, ..., p_M)`` and normalised so
that the vacuum covariance is the identity (``x = a + a^dagger``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from ..errors import PhysicalityError

SYMMETRY_RTOL = 1e-10
PHYSICALITY_ATOL = 1e-9
ROUNDTRIP_RTOL = 1e-8


def omega(num_modes: int) -> np.ndarray:
    """Standard symplectic form ``[[0, I], [-I, 0]]``."""
    eye = np.eye(num_modes)
    zero = np.zeros((num_modes, num_modes))
    return np.block([[zero, eye], [-eye, zero]])


def real_representation(T: np.ndarray) -> np.ndarray:
    """Real ``2M_out x 2M_in`` matrix acting on quadratures for the mode map ``a -> T a``."""
    T = np.asarray(T, dtype=complex)
    re, im = T.real, T.imag
    return np.block([[re, -im], [im, re]])


def xxpp_to_xpxp(num_modes: int) -> np.ndarray:
    """Index array ``perm`` such that ``v[perm]`` reorders an xxpp vector to xpxp."""
    perm = np.empty(2 * num_modes, dtype=int)
    perm[0::2] = np.arange(num_modes)
    perm[1::2] = np.arange(num_modes) + num_modes
    return perm


def check_symmetric(V: np.ndarray, rtol: float = SYMMETRY_RTOL) -> None:
    scale = max(1.0, float(np.max(np.abs(V)))) if V.size else 1.0
    if V.size and np.max(np.abs(V - V.T)) > rtol * scale:
        raise PhysicalityError("covariance matrix is not symmetric")


def uncertainty_eigenvalues(V: np.ndarray) -> np.ndarray:
    """Eigenvalues of the Hermitian matrix ``V + i Omega``."""
    m = V.shape[0] // 2
    return np.linalg.eigvalsh(V + 1j * omega(m))


def check_physical(V: np.ndarray, atol: float = PHYSICALITY_ATOL) -> None:
    """Raise :class:`PhysicalityError` unless ``V + i Omega >= 0`` (within ``atol``)."""
    check_symmetric(V)
    if V.size == 0:
        return
    low = uncertainty_eigenvalues(V).min()
    if low < -atol:
        raise PhysicalityError(
            f"covariance violates the uncertainty principle (min eigenvalue of V + i*Omega = {low:.3e})"
        )


def symplectic_eigenvalues(V: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of ``V``, sorted in descending order."""
    V = np.asarray(V, dtype=float)
    m = V.shape[0] // 2
    if m == 0:
        return np.zeros(0)
    ev = np.abs(np.linalg.eigvals(omega(m) @ V).imag)
    ev = np.sort(ev)[::-1]
    # eigenvalues come in +-i*nu pairs
    return ev[0::2].copy()


@dataclass(frozen=True)
class WilliamsonFactor:
    """``V = S diag(nu, nu) S^T`` with ``S`` symplectic and ``nu`` descending."""

    S: np.ndarray
    nu: np.ndarray

    @property
    def num_modes(self) -> int:
        return len(self.nu)

    def reconstruct(self) -> np.ndarray:
        d = np.concatenate([self.nu, self.nu])
        return (self.S * d) @ self.S.T


def williamson(V: np.ndarray) -> WilliamsonFactor:
    """Williamson normal form of a physical covariance matrix.

    Args:
        V: real symmetric ``2M x 2M`` covariance in xxpp order.

    Returns:
        WilliamsonFactor with symplectic eigenvalues sorted descending.

    Raises:
        PhysicalityError: if ``V`` is not symmetric or not physical.
    """
    V = np.asarray(V, dtype=float)
    check_physical(V)
    m = V.shape[0] // 2
    if m == 0:
        return WilliamsonFactor(np.zeros((0, 0)), np.zeros(0))

    w, U = np.linalg.eigh(V)
    if w.min() <= 0:
        raise PhysicalityError("covariance matrix is not positive definite")
    v_isqrt = (U * w**-0.5) @ U.T
    A = v_isqrt @ omega(m) @ v_isqrt
    A = 0.5 * (A - A.T)
    T, Z = schur(A, output="real")

    # Orient each 2x2 block as [[0, 1/nu], [-1/nu, 0]].
    inv_nu = np.empty(m)
    for i in range(m):
        t = T[2 * i, 2 * i + 1]
        if t < 0:
            Z[:, [2 * i, 2 * i + 1]] = Z[:, [2 * i + 1, 2 * i]]
            t = T[2 * i + 1, 2 * i]
        inv_nu[i] = t
    nu = 1.0 / inv_nu

    order = np.argsort(-nu, kind="stable")
    nu = nu[order]
    cols = np.empty(2 * m, dtype=int)
    cols[0::2] = 2 * order
    cols[1::2] = 2 * order + 1
    Z = Z[:, cols]

    # Columns of Z are paired (x_i, p_i); switch them to xxpp.
    Z = Z[:, np.concatenate([np.arange(0, 2 * m, 2), np.arange(1, 2 * m, 2)])]
    Y = v_isqrt @ Z * np.sqrt(np.concatenate([nu, nu]))
    S = np.linalg.inv(Y).T

    if np.any(nu < 1 - PHYSICALITY_ATOL):
        raise PhysicalityError(f"symplectic eigenvalue below one: {nu.min():.12f}")
    return WilliamsonFactor(S, nu)


def is_symplectic(S: np.ndarray, atol: float = 1e-8) -> bool:
    m = S.shape[0] // 2
    Om = omega(m)
    return bool(np.allclose(S @ Om @ S.T, Om, atol=atol, rtol=0))
