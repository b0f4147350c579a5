"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import expm, logm


def naive_hafnian(A) -> complex:
    """Sum over perfect matchings by recursion on the first index."""
    A = np.asarray(A)
    n = A.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0

    def rec(idx):
        if not idx:
            return 1.0
        i, rest = idx[0], idx[1:]
        total = 0.0
        for k, j in enumerate(rest):
            total += A[i, j] * rec(rest[:k] + rest[k + 1 :])
        return total

    return rec(tuple(range(n)))


def compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def smss_amplitude(r: float, phi: float, n: int) -> complex:
    """<n|S(r, phi)|0> for a squeezed vacuum with x squeezed at phi = 0."""
    if n % 2:
        return 0.0
    k = n // 2
    return (
        (-np.exp(1j * phi) * math.tanh(r)) ** k
        * math.sqrt(math.factorial(n))
        / (2**k * math.factorial(k))
        / math.sqrt(math.cosh(r))
    )


def fock_pure_output(r, U, cutoff: int, phi=None):
    """Photon-number amplitudes of ``U`` applied to product squeezed vacua, total photons <= cutoff.

    Returns ``{n: amplitude}``. The passive unitary is applied sector by
    sector as ``exp(i sum G_ij a_i^dagger a_j)`` with ``U = exp(i G)``.
    """
    r = np.asarray(r, dtype=float)
    m = r.size
    phi = np.zeros(m) if phi is None else np.asarray(phi, dtype=float)
    G = -1j * logm(np.asarray(U, dtype=complex))
    G = 0.5 * (G + G.conj().T)
    out = {}
    for N in range(0, cutoff + 1, 2):
        basis = list(compositions(N, m))
        index = {b: i for i, b in enumerate(basis)}
        psi = np.array([np.prod([smss_amplitude(r[k], phi[k], b[k]) for k in range(m)]) for b in basis], dtype=complex)
        if not np.any(psi):
            continue
        H = np.zeros((len(basis), len(basis)), dtype=complex)
        for col, b in enumerate(basis):
            for i in range(m):
                for j in range(m):
                    if b[j] == 0 or G[i, j] == 0:
                        continue
                    nb = list(b)
                    amp = math.sqrt(nb[j])
                    nb[j] -= 1
                    amp *= math.sqrt(nb[i] + 1)
                    nb[i] += 1
                    H[index[tuple(nb)], col] += G[i, j] * amp
        phi_out = expm(1j * H) @ psi
        for b, a in zip(basis, phi_out):
            out[b] = a
    return out


def fock_click_distribution(r, U, eta, cutoff: int = 40, phi=None) -> np.ndarray:
    """Click probabilities of ``diag(sqrt(eta)) U`` on squeezed inputs by Fock-space summation.

    Indexed by click mask (bit i = mode i clicked).
    """
    amps = fock_pure_output(r, U, cutoff, phi)
    m = len(np.atleast_1d(r))
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (m,))
    g = np.zeros(1 << m)
    for n, a in amps.items():
        p = abs(a) ** 2
        for mask in range(1 << m):
            w = p
            for i in range(m):
                if (mask >> i) & 1:
                    w *= (1 - eta[i]) ** n[i]
            g[mask] += w
    g[0] = 1.0
    # superset Moebius: exact dark set Z
    f = g.copy()
    for b in range(m):
        for mask in range(1 << m):
            if not (mask >> b) & 1:
                f[mask] -= f[mask | (1 << b)]
    full = (1 << m) - 1
    return np.array([f[full ^ k] for k in range(1 << m)])


def brute_click_moment(p: np.ndarray, modes) -> float:
    """E[prod_{i in modes} z_i] from a full pattern table."""
    m = int(np.log2(p.size))
    mask = sum(1 << i for i in modes)
    return float(sum(p[k] for k in range(1 << m) if k & mask == mask))


def random_symplectic(m: int, rng, max_r: float = 1.0) -> np.ndarray:
    """Passive - squeeze - passive symplectic matrix in xxpp order."""
    from scipy.stats import unitary_group

    def passive():
        u = unitary_group.rvs(m, random_state=rng) if m > 1 else np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.ones((1, 1))
        return np.block([[u.real, -u.imag], [u.imag, u.real]])

    r = rng.uniform(0, max_r, m)
    sq = np.diag(np.concatenate([np.exp(-r), np.exp(r)]))
    return passive() @ sq @ passive()


def random_physical_cov(m: int, rng, max_r: float = 1.0, max_thermal: float = 2.0) -> np.ndarray:
    S = random_symplectic(m, rng, max_r)
    nu = 1 + rng.uniform(0, max_thermal, m)
    return S @ np.diag(np.concatenate([nu, nu])) @ S.T
