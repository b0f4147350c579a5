"""Exact exponential-time matrix functions: hafnian and torontonian.

Both kernels are compiled with numba.  The hafnian uses the eigenvalue-trace
formula (``O(2^{n/2} n^3)``); the torontonian and click probabilities use
inclusion-exclusion over mode subsets with one Cholesky factorisation per
subset.
"""

from __future__ import annotations

import numba
import numpy as np

from ..errors import PhysicalityError

# ----------------------------------------------------------------------------
# hafnian
# ----------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _power_trace_coefficient(eigs, m):
    """Coefficient of eta^m in exp(sum_k tr(C^k) eta^k / (2k))."""
    p = np.zeros(m + 1, dtype=np.complex128)
    powers = eigs.copy()
    for k in range(1, m + 1):
        p[k] = powers.sum() / (2 * k)
        powers = powers * eigs
    g = np.zeros(m + 1, dtype=np.complex128)
    g[0] = 1.0
    for n in range(1, m + 1):
        acc = 0.0 + 0.0j
        for k in range(1, n + 1):
            acc += k * p[k] * g[n - k]
        g[n] = acc / n
    return g[m]


@numba.njit(cache=True, nogil=True)
def _hafnian_trace(A):
    n = A.shape[0]
    m = n // 2
    total = 0.0 + 0.0j
    for mask in range(1, 1 << m):
        size = 0
        for i in range(m):
            if (mask >> i) & 1:
                size += 1
        idx = np.empty(2 * size, dtype=np.int64)
        c = 0
        for i in range(m):
            if (mask >> i) & 1:
                idx[c] = 2 * i
                idx[c + 1] = 2 * i + 1
                c += 2
        # (A X)_Z where X swaps the two members of every pair
        B = np.empty((2 * size, 2 * size), dtype=np.complex128)
        for r in range(2 * size):
            for s in range(2 * size):
                sw = s + 1 if s % 2 == 0 else s - 1
                B[r, s] = A[idx[r], idx[sw]]
        eigs = np.linalg.eigvals(B)
        f = _power_trace_coefficient(eigs, m)
        if (m - size) % 2 == 0:
            total += f
        else:
            total -= f
    return total


def hafnian(A) -> complex:
    """Hafnian of a symmetric matrix.

    Odd dimensions return 0 (no perfect matching exists); the empty matrix
    returns 1.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("hafnian requires a square matrix")
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        return 0.0 + 0.0j
    if n == 2:
        return complex(A[0, 1])
    return complex(_hafnian_trace(A))


# ----------------------------------------------------------------------------
# subset determinants
# ----------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _inv_sqrt_det(Q, modes, half):
    """det(Q_sub)^(-1/2) for the Hermitian submatrix on ``modes`` and ``modes + half``.

    Returns -1.0 when the submatrix is not positive definite.
    """
    k = modes.shape[0]
    size = 2 * k
    if size == 0:
        return 1.0
    L = np.empty((size, size), dtype=np.complex128)
    for r in range(size):
        ir = modes[r] if r < k else modes[r - k] + half
        for s in range(size):
            js = modes[s] if s < k else modes[s - k] + half
            L[r, s] = Q[ir, js]
    val = 1.0
    for j in range(size):
        d = L[j, j].real
        for t in range(j):
            d -= L[j, t].real ** 2 + L[j, t].imag ** 2
        if not d > 0.0:
            return -1.0
        dj = np.sqrt(d)
        val /= dj
        L[j, j] = dj
        for i in range(j + 1, size):
            acc = L[i, j]
            for t in range(j):
                acc -= L[i, t] * np.conj(L[j, t])
            L[i, j] = acc / dj
    return val


@numba.njit(cache=True, nogil=True)
def _signed_subset_sum(Q, base, free, half):
    """Sum over E subset of ``free`` of (-1)^|E| det(Q_{base + E})^(-1/2).

    Returns (value, failing mask); the mask is -1 on success.
    """
    nb = base.shape[0]
    nf = free.shape[0]
    total = 0.0
    for mask in range(1 << nf):
        cnt = 0
        for i in range(nf):
            if (mask >> i) & 1:
                cnt += 1
        modes = np.empty(nb + cnt, dtype=np.int64)
        for i in range(nb):
            modes[i] = base[i]
        c = nb
        for i in range(nf):
            if (mask >> i) & 1:
                modes[c] = free[i]
                c += 1
        g = _inv_sqrt_det(Q, np.sort(modes), half)
        if g < 0.0:
            return 0.0, mask
        if cnt % 2 == 0:
            total += g
        else:
            total -= g
    return total, -1


@numba.njit(cache=True, nogil=True)
def _all_subsets_inv_sqrt_det(Q, num_modes):
    out = np.empty(1 << num_modes, dtype=np.float64)
    for mask in range(1 << num_modes):
        cnt = 0
        for i in range(num_modes):
            if (mask >> i) & 1:
                cnt += 1
        modes = np.empty(cnt, dtype=np.int64)
        c = 0
        for i in range(num_modes):
            if (mask >> i) & 1:
                modes[c] = i
                c += 1
        out[mask] = _inv_sqrt_det(Q, modes, num_modes)
    return out


def no_click_table(Q: np.ndarray) -> np.ndarray:
    """``g[mask] = det(Q_mask)^(-1/2)``: probability of no click on every mode in ``mask``."""
    m = Q.shape[0] // 2
    g = _all_subsets_inv_sqrt_det(np.ascontiguousarray(Q, dtype=np.complex128), m)
    bad = np.flatnonzero(g < 0)
    if bad.size:
        raise PhysicalityError(f"singular Husimi submatrix on modes {_mask_modes(int(bad[0]), m)}")
    return g


def superset_moebius(g: np.ndarray, num_modes: int) -> np.ndarray:
    """Turn no-click marginals ``g`` into exact-pattern probabilities.

    Returns ``p`` indexed by the click mask (bit ``i`` set = mode ``i`` clicked).
    """
    f = np.array(g, dtype=float, copy=True)
    full = (1 << num_modes) - 1
    idx = np.arange(1 << num_modes)
    for b in range(num_modes):
        bit = 1 << b
        lo = idx[(idx & bit) == 0]
        f[lo] -= f[lo | bit]
    # f[Z] is the probability that exactly the modes in Z are dark
    return f[full ^ idx]


def _mask_modes(mask: int, n: int) -> list[int]:
    return [i for i in range(n) if (mask >> i) & 1]


def subset_click_sum(Q: np.ndarray, dark, bright) -> float:
    """Probability of no click on ``dark`` and a click on every mode of ``bright``.

    Modes not listed are traced out.  ``Q`` is the Husimi matrix in (a, a^dagger)
    ordering over all modes.
    """
    half = Q.shape[0] // 2
    base = np.asarray(sorted(dark), dtype=np.int64)
    free = np.asarray(sorted(bright), dtype=np.int64)
    val, bad = _signed_subset_sum(np.ascontiguousarray(Q, dtype=np.complex128), base, free, half)
    if bad >= 0:
        modes = sorted([int(k) for k in base] + [int(free[i]) for i in range(len(free)) if (bad >> i) & 1])
        raise PhysicalityError(f"singular Husimi submatrix on modes {modes}")
    return val


def torontonian(O) -> float:
    """Torontonian of a ``2n x 2n`` Hermitian matrix ``O``.

    ``Tor(O) = sum_Y (-1)^(n-|Y|) / sqrt(det((I - O)_Y))`` over subsets ``Y``
    of the ``n`` modes, where ``_Y`` keeps rows/columns ``Y`` and ``Y + n``.

    Raises:
        PhysicalityError: naming the first subset whose submatrix of ``I - O``
            is not positive definite.
    """
    O = np.asarray(O, dtype=np.complex128)
    if O.ndim != 2 or O.shape[0] != O.shape[1] or O.shape[0] % 2:
        raise ValueError("torontonian requires a square matrix of even dimension")
    n = O.shape[0] // 2
    if n == 0:
        return 1.0
    A = np.eye(2 * n) - O
    free = np.arange(n, dtype=np.int64)
    val, bad = _signed_subset_sum(A, np.zeros(0, dtype=np.int64), free, n)
    if bad >= 0:
        raise PhysicalityError(f"singular subdeterminant for mode subset {_mask_modes(bad, n)}")
    return float(val if n % 2 == 0 else -val)
