"""Classical mockups of Gaussian boson sampling."""

from __future__ import annotations

import enum
import math
import warnings

import numba
import numpy as np

from ..errors import PhysicalityError
from ..gaussian import GaussianState, SqueezerBank, apply_transfer, husimi_matrix
from ..gaussian.kernels import subset_click_sum
from ..gaussian.state import block_diagonal_modes
from ..rng import run_blocks
from .batch import SampleBatch

CLASSICAL_ATOL = 1e-9


class MockupKind(str, enum.Enum):
    SQUASHED = "squashed"
    THERMAL = "thermal"
    DISTINGUISHABLE = "distinguishable"
    IPS = "ips"
    GREEDY = "greedy"


def _squashed_block(r: float, phi: float) -> np.ndarray:
    # squeezed axis is (cos phi/2, sin phi/2); keep the anti-squeezed variance
    v = np.array([-math.sin(phi / 2), math.cos(phi / 2)])
    return np.eye(2) + (math.exp(2 * r) - 1) * np.outer(v, v)


def squashed_state_of(bank: SqueezerBank, T: np.ndarray) -> GaussianState:
    """Sources with their squeezed quadrature raised to vacuum noise, then evolved by ``T``."""
    V = block_diagonal_modes([_squashed_block(r, p) for r, p in zip(bank.r, bank.phi)])
    return apply_transfer(GaussianState(V), T)


def thermal_state_of(bank: SqueezerBank, T: np.ndarray) -> GaussianState:
    """Sources replaced by thermal light of equal mean photon number, then evolved by ``T``."""
    return apply_transfer(GaussianState.thermal(bank.mean_photons()), T)


def _classical_factor(V: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(V - np.eye(V.shape[0]))
    if w.size and w.min() < -CLASSICAL_ATOL:
        raise PhysicalityError(f"state is not classical (min eigenvalue of V - I = {w.min():.3e})")
    return U * np.sqrt(np.clip(w, 0.0, None))


def displacement_clicks(alpha: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Click iff ``u < 1 - exp(-|alpha|^2)`` (coherent-state click probability)."""
    return (u < -np.expm1(-np.abs(alpha) ** 2)).astype(np.uint8)


def classical_gaussian_sampler(state: GaussianState, n: int, seed: int, threads: int = 1) -> SampleBatch:
    """Sample a P-representable Gaussian state as a random mixture of coherent states.

    Quadrature means drawn from ``N(mean, V - I)`` give the coherent amplitude
    ``alpha = (mu_x + i mu_p) / 2``, equivalently complex normal with per-quadrature
    covariance ``(V - I) / 2`` in the ``sqrt(2)``-normalised convention.
    """
    m = state.num_modes
    L = _classical_factor(state.cov)
    mean = state.mean

    def draw(rng, start, count):
        z = rng.standard_normal((count, 2 * m))
        mu = mean + z @ L.T
        alpha = (mu[:, :m] + 1j * mu[:, m:]) / 2
        return displacement_clicks(alpha, rng.random((count, m)))

    patterns = run_blocks(n, seed, "classical", draw, threads=threads)
    return SampleBatch(patterns.reshape(n, m), sampler="classical", seed=seed)


def _pair_number_cdf(r: float, tol: float = 1e-15) -> np.ndarray:
    """CDF of the number of photon pairs emitted by a squeezed vacuum."""
    if r == 0:
        return np.ones(1)
    t2 = math.tanh(r) ** 2
    p = [1 / math.cosh(r)]
    total = p[0]
    k = 0
    while 1 - total > tol and k < 100000:
        k += 1
        p.append(p[-1] * t2 * (2 * k - 1) / (2 * k))
        total += p[-1]
    cdf = np.cumsum(p)
    cdf[-1] = max(cdf[-1], 1.0)
    return cdf


def distinguishable_sampler(bank: SqueezerBank, T: np.ndarray, n: int, seed: int, threads: int = 1) -> SampleBatch:
    """Photons from each source routed independently (no multi-source interference)."""
    T = np.asarray(T, dtype=complex)
    m_out, m_in = T.shape
    if m_in < len(bank):
        raise ValueError("transfer matrix has fewer inputs than the squeezer bank")
    cdfs = [_pair_number_cdf(float(r)) for r in bank.r]
    routes = []
    for k in range(len(bank)):
        w = np.abs(T[:, k]) ** 2
        routes.append(np.append(w, max(0.0, 1.0 - w.sum())))

    def draw(rng, start, count):
        clicks = np.zeros((count, m_out), dtype=bool)
        for k, cdf in enumerate(cdfs):
            pairs = np.searchsorted(cdf, rng.random(count), side="right")
            photons = 2 * np.minimum(pairs, len(cdf) - 1)
            pv = routes[k] / routes[k].sum()
            counts = rng.multinomial(photons, pv)
            clicks |= counts[:, :m_out] > 0
        return clicks.astype(np.uint8)

    patterns = run_blocks(n, seed, "distinguishable", draw, threads=threads)
    return SampleBatch(patterns.reshape(n, m_out), sampler=MockupKind.DISTINGUISHABLE.value, seed=seed)


def ips_rates(state: GaussianState) -> tuple[np.ndarray, np.ndarray]:
    """Single and pair Poisson rates reproducing first- and second-order click marginals.

    With ``P0_i`` and ``P00_ij`` the no-click marginals, pair rates are
    ``ln(P00_ij / (P0_i P0_j))`` and singles make up the rest of ``-ln P0_i``.
    Negative rates (anti-bunched pairs) are clipped to zero.
    """
    if not state.is_zero_mean():
        raise NotImplementedError("IPS rates require a zero-mean state")
    m = state.num_modes
    Q = husimi_matrix(state)
    p0 = np.array([subset_click_sum(Q, [i], []) for i in range(m)])
    pair = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            p00 = subset_click_sum(Q, [i, j], [])
            pair[i, j] = pair[j, i] = max(0.0, math.log(p00 / (p0[i] * p0[j])))
    single = -np.log(p0) - pair.sum(axis=1)
    if np.any(single < -1e-12):
        warnings.warn("IPS single rates clipped at zero; first-order marginals are approximate", stacklevel=2)
    return np.clip(single, 0.0, None), pair


def ips_sampler(state: GaussianState, n: int, seed: int, threads: int = 1) -> SampleBatch:
    """Independent Poissonian singles and pairs matched to low-order click statistics."""
    m = state.num_modes
    single, pair = ips_rates(state)
    iu, ju = np.triu_indices(m, 1)
    p_single = -np.expm1(-single)
    p_pair = -np.expm1(-pair[iu, ju])

    def draw(rng, start, count):
        clicks = rng.random((count, m)) < p_single
        fire = rng.random((count, iu.size)) < p_pair
        for e in np.flatnonzero(p_pair > 0):
            hit = fire[:, e]
            clicks[:, iu[e]] |= hit
            clicks[:, ju[e]] |= hit
        return clicks.astype(np.uint8)

    patterns = run_blocks(n, seed, "ips", draw, threads=threads)
    return SampleBatch(patterns.reshape(n, m), sampler=MockupKind.IPS.value, seed=seed)


def click_marginals(state: GaussianState) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``P(click_i)`` and ``P(click_i, click_j)`` (diagonal holds ``P(click_i)``)."""
    m = state.num_modes
    Q = husimi_matrix(state)
    first = np.array([subset_click_sum(Q, [], [i]) for i in range(m)])
    second = np.diag(first)
    for i in range(m):
        for j in range(i + 1, m):
            second[i, j] = second[j, i] = subset_click_sum(Q, [], [i, j])
    return first, second


@numba.njit(cache=True)
def _greedy_fill(first, second, orders):
    n, m = orders.shape
    out = np.zeros((n, m), dtype=np.uint8)
    c1 = np.zeros(m)
    c2 = np.zeros((m, m))
    for t in range(n):
        target = t + 1.0
        for pos in range(m):
            i = orders[t, pos]
            cost0 = (c1[i] - target * first[i]) ** 2
            cost1 = (c1[i] + 1.0 - target * first[i]) ** 2
            for q in range(pos):
                j = orders[t, q]
                e = c2[i, j] - target * second[i, j]
                cost0 += e * e
                e1 = e + out[t, j]
                cost1 += e1 * e1
            if cost1 < cost0:
                out[t, i] = 1
        for i in range(m):
            if out[t, i]:
                c1[i] += 1.0
                for j in range(m):
                    if out[t, j] and j != i:
                        c2[i, j] += 1.0
    return out


def greedy_sampler(first, second, n: int, seed: int) -> SampleBatch:
    """Build samples one at a time, each bit chosen to keep running marginals on target.

    Modes are visited in a seeded random order per sample; a tie keeps the mode dark.
    The fill is sequential (each sample depends on all earlier ones), so only the
    visiting orders are drawn in parallel blocks.
    """
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    m = first.shape[0]
    if second.shape != (m, m):
        raise ValueError("second-order marginals must be an M x M matrix")
    for name, arr in (("first", first), ("second", second)):
        if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise ValueError(f"{name}-order marginals must lie in [0, 1]")

    def orders(rng, start, count):
        return np.argsort(rng.random((count, m)), axis=1)

    order = run_blocks(n, seed, "greedy", orders).reshape(n, m).astype(np.int64)
    patterns = _greedy_fill(first, second, order)
    return SampleBatch(patterns, sampler=MockupKind.GREEDY.value, seed=seed)
