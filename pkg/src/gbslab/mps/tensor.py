"""Fock-basis matrix product states of pure Gaussian states, and sampling from them."""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from ..errors import ConfigError, ScaleError
from ..gaussian import GaussianState, pure_state_matrix, single_mode_photon_distribution
from ..rng import run_blocks
from ..samplers.batch import SampleBatch

DEFAULT_MEMORY_BUDGET = 2**31
CUTOFF_TAIL = 1e-4
MAX_CUTOFF = 64
CHECKPOINT_MAGIC = b"GBSMPS01"
_SAMPLE_CHUNK = 512


@dataclass(frozen=True)
class MPSState:
    """Site tensors ``(chi_left, d, chi_right)``; tensors after the first are right-canonical.

    ``epsilon`` is ``1 - prod(1 - bond_errors)``, where ``bond_errors[c]`` is
    one minus the Schmidt weight kept at cut ``c + 1`` of the untruncated state,
    measured against the unit-norm physical state (so weight lost to the local
    cutoff counts as error too).
    ``fidelity`` is the squared norm kept by the actual truncation sweep,
    relative to the untruncated cutoff state.
    """

    tensors: tuple
    d: int
    chi_max: float
    bond_errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fidelity: float = 1.0
    cutoff_weight: float = 1.0

    @property
    def num_modes(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def epsilon(self) -> float:
        return float(1 - np.prod(1 - self.bond_errors)) if self.bond_errors.size else 0.0

    @property
    def epsilon_max(self) -> float:
        return float(self.bond_errors.max()) if self.bond_errors.size else 0.0

    def contract(self) -> np.ndarray:
        """Dense amplitudes as an array of shape ``(d,) * M``."""
        out = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            out = np.tensordot(out, t, axes=([-1], [0]))
        return out.reshape((self.d,) * self.num_modes)


def vacuum_mps(num_modes: int) -> MPSState:
    """Product vacuum with a one-dimensional local space."""
    t = np.ones((1, 1, 1), dtype=complex)
    return MPSState(tuple(t for _ in range(num_modes)), d=1, chi_max=1, bond_errors=np.zeros(max(num_modes - 1, 0)))


def default_cutoff(V_p, tail: float = CUTOFF_TAIL, max_cutoff: int = MAX_CUTOFF) -> int:
    """Smallest ``d`` with every single-mode marginal putting less than ``tail`` on ``n >= d``."""
    V = np.asarray(V_p.cov if isinstance(V_p, GaussianState) else V_p, dtype=float)
    m = V.shape[0] // 2
    need = 1
    for k in range(m):
        cov2 = V[np.ix_([k, k + m], [k, k + m])]
        p = single_mode_photon_distribution(cov2, max_cutoff)
        cdf = np.cumsum(p)
        ok = np.flatnonzero(1 - cdf < tail)
        if ok.size == 0:
            raise ScaleError(f"mode {k} needs a local cutoff above {max_cutoff}")
        need = max(need, int(ok[0]) + 1)
    return need


@numba.njit(cache=True)
def _statevector(B, c0, d, m):
    size = d**m
    c = np.zeros(size, dtype=np.complex128)
    c[0] = c0
    strides = np.empty(m, dtype=np.int64)
    s = 1
    for i in range(m - 1, -1, -1):
        strides[i] = s
        s *= d
    digits = np.zeros(m, dtype=np.int64)
    total = 0
    for idx in range(1, size):
        k = m - 1
        while digits[k] == d - 1:
            digits[k] = 0
            total -= d - 1
            k -= 1
        digits[k] += 1
        total += 1
        if total % 2:
            continue
        i = 0
        while digits[i] == 0:
            i += 1
        base = idx - strides[i]
        digits[i] -= 1
        acc = 0j
        for j in range(m):
            if digits[j] > 0:
                acc += B[i, j] * math.sqrt(digits[j]) * c[base - strides[j]]
        digits[i] += 1
        c[idx] = acc / math.sqrt(digits[i])
    return c


def fock_statevector(state, d: int) -> np.ndarray:
    """Amplitudes ``<n|psi>`` for all ``n`` in the box ``[0, d)^M``, mode 0 most significant.

    Built from the pure-state pairing matrix by the recursion
    ``sqrt(n_i + 1) c_{n + e_i} = sum_j B_ij sqrt(n_j) c_{n - e_j}``.
    """
    if not isinstance(state, GaussianState):
        state = GaussianState(np.asarray(state, dtype=float), validate=False)
    B, c0 = pure_state_matrix(state)
    m = state.num_modes
    return _statevector(np.ascontiguousarray(B, dtype=np.complex128), c0, int(d), m).reshape((d,) * m)


def _keep(s2: np.ndarray, chi) -> int:
    nz = int(np.count_nonzero(s2 > s2[0] * 1e-30)) if s2.size and s2[0] > 0 else 1
    return max(1, min(nz, int(chi) if math.isfinite(chi) else nz))


def _right_sweep(psi: np.ndarray, d: int, m: int, chi):
    tensors = [None] * m
    spectra = [None] * (m - 1)
    rest = psi.reshape(-1, d)
    chi_r = 1
    for k in range(m - 1, 0, -1):
        mat = rest.reshape(-1, d * chi_r)
        U, S, Vh = np.linalg.svd(mat, full_matrices=False)
        s2 = S**2
        spectra[k - 1] = s2
        keep = _keep(s2, chi)
        tensors[k] = Vh[:keep].reshape(keep, d, chi_r)
        rest = U[:, :keep] * S[:keep]
        chi_r = keep
    tensors[0] = rest.reshape(1, d, chi_r)
    return tensors, spectra


def build_mps(V_p, d: int, chi_max=math.inf, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> MPSState:
    """Exact Fock statevector of a pure state, factorised right-to-left with bonds capped at ``chi_max``.

    Raises:
        ScaleError: if the dense statevector and SVD workspace exceed ``memory_budget`` bytes.
    """
    state = V_p if isinstance(V_p, GaussianState) else GaussianState(np.asarray(V_p, dtype=float), validate=False)
    m = state.num_modes
    if d < 1:
        raise ValueError("local cutoff must be at least 1")
    if chi_max < 1:
        raise ValueError("bond dimension must be at least 1")
    if m == 0:
        return MPSState((), d, chi_max)
    need = 16 * 4 * float(d) ** m
    if need > memory_budget:
        raise ScaleError(
            f"dense statevector for M={m}, d={d} needs ~{need / 2**30:.1f} GiB (budget {memory_budget / 2**30:.1f} GiB)"
        )
    psi = fock_statevector(state, d).ravel()
    weight = float(np.vdot(psi, psi).real)

    tensors, exact = _right_sweep(psi, d, m, math.inf)
    errors = np.array([max(0.0, 1 - s2[: _keep(s2, chi_max)].sum()) for s2 in exact])
    if math.isfinite(chi_max):
        tensors, _ = _right_sweep(psi, d, m, chi_max)
    head = tensors[0]
    fidelity = float(np.vdot(head, head).real) / weight
    return MPSState(tuple(tensors), d, chi_max, errors, fidelity, weight)


# ----------------------------------------------------------------------------
# Sampling with random displacements
# ----------------------------------------------------------------------------


def displacement_columns(beta: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """``D(beta)[:d_out, :d_in]`` for a batch of amplitudes, shape ``(len(beta), d_out, d_in)``.

    Column ``n + 1`` is ``(a^dagger - conj(beta)) col_n / sqrt(n + 1)``, starting
    from the coherent state ``D(beta)|0>``.
    """
    beta = np.asarray(beta, dtype=complex)
    k = np.arange(d_out)
    logfact = np.cumsum(np.log(np.maximum(k, 1)))
    mag = np.abs(beta)[:, None]
    logmag = np.where(mag > 0, np.log(np.where(mag > 0, mag, 1.0)), -np.inf)
    with np.errstate(invalid="ignore"):
        col = np.exp(-0.5 * mag**2 + k * logmag - 0.5 * logfact) * np.exp(1j * k * np.angle(beta)[:, None])
    col[:, 0] = np.exp(-0.5 * np.abs(beta) ** 2)
    sq = np.sqrt(k)
    out = np.empty((beta.size, d_out, d_in), dtype=complex)
    out[:, :, 0] = col
    for n in range(1, d_in):
        raised = np.zeros_like(col)
        raised[:, 1:] = sq[1:] * col[:, :-1]
        col = (raised - np.conj(beta)[:, None] * col) / math.sqrt(n)
        out[:, :, n] = col
    return out


def _displacement_photons(W: np.ndarray) -> np.ndarray:
    m = W.shape[0] // 2
    return (np.diag(W)[:m] + np.diag(W)[m:]) / 4


def _site_photons(mps: MPSState) -> np.ndarray:
    """Mean photon number per site of the (normalised) MPS."""
    m = mps.num_modes
    out = np.zeros(m)
    right = [None] * (m + 1)
    right[m] = np.ones((1, 1))
    for k in range(m - 1, -1, -1):
        A = mps.tensors[k]
        right[k] = np.einsum("asr,rq,bsq->ab", A, right[k + 1], A.conj())
    norm = float(right[0].real.sum())
    left = np.ones((1, 1))
    n = np.arange(mps.d)
    for k, A in enumerate(mps.tensors):
        out[k] = float(np.einsum("ab,asr,s,rq,bsq->", left, A, n, right[k + 1], A.conj()).real) / norm
        left = np.einsum("ab,asr,bsq->rq", left, A, A.conj())
    return out


def mps_sample(mps: MPSState, W, n: int, seed: int, threads: int = 1, d_out: int | None = None) -> SampleBatch:
    """Sample click patterns of ``rho = E_alpha[D(alpha) |psi><psi| D(alpha)^dagger]``.

    Quadrature displacements are drawn from ``N(0, W)`` and mapped to
    ``alpha = (mu_x + i mu_p) / 2``.  Photon numbers are drawn site by site;
    a site's displacement is applied through its truncated ``d_out x d`` matrix.
    """
    m = mps.num_modes
    W = np.asarray(W, dtype=float)
    if W.shape != (2 * m, 2 * m):
        raise ConfigError("classical part W does not match the MPS size")
    w, U = np.linalg.eigh(0.5 * (W + W.T))
    if w.size and w.min() < -1e-9:
        raise ConfigError("classical part W is not positive semidefinite")
    L = U * np.sqrt(np.clip(w, 0.0, None))
    nbar_w = _displacement_photons(W) if m else np.zeros(0)
    d = mps.d
    displaced = bool(np.any(w > 1e-14))
    if d_out is None:
        top = float(nbar_w.max()) if m else 0.0
        d_out = d + int(math.ceil(4 * top + 10 * math.sqrt(top))) + (2 if top > 0 else 0)
    local = d_out if displaced else d
    nbar = nbar_w + _site_photons(mps) if m else nbar_w
    if m and np.any(nbar > local / 3):
        warnings.warn(
            f"displaced mean photon number {nbar.max():.2f} exceeds a third of the local dimension {local}; "
            "cutoff may overflow",
            stacklevel=2,
        )

    def draw(rng, start, count):
        z = rng.standard_normal((count, 2 * m))
        u = rng.random((count, m))
        mu = z @ L.T
        alpha = (mu[:, :m] + 1j * mu[:, m:]) / 2
        out = np.zeros((count, m), dtype=np.uint8)
        for lo in range(0, count, _SAMPLE_CHUNK):
            hi = min(count, lo + _SAMPLE_CHUNK)
            out[lo:hi] = _sample_chunk(mps.tensors, alpha[lo:hi], u[lo:hi], d_out if displaced else d, displaced)
        return out

    patterns = run_blocks(n, seed, "mps", draw, threads=threads)
    return SampleBatch(patterns.reshape(n, m), sampler="mps", seed=seed)


def _sample_chunk(tensors, alpha, u, d_out, displaced):
    count, m = u.shape
    env = np.ones((count, 1), dtype=complex)
    out = np.zeros((count, m), dtype=np.uint8)
    rows = np.arange(count)
    for k, A in enumerate(tensors):
        chi_l, d, chi_r = A.shape
        v = (env @ A.reshape(chi_l, d * chi_r)).reshape(count, d, chi_r)
        if displaced:
            v = displacement_columns(alpha[:, k], d, d_out) @ v
        p = np.sum(np.abs(v) ** 2, axis=2)
        total = p.sum(axis=1)
        cdf = np.cumsum(p, axis=1) / total[:, None]
        s = (u[:, k, None] > cdf).sum(axis=1).clip(max=p.shape[1] - 1)
        out[:, k] = s > 0
        env = v[rows, s] / np.sqrt(p[rows, s])[:, None]
    return out


# ----------------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------------


def save_mps(path, mps: MPSState, meta: dict | None = None) -> None:
    """Write ``MAGIC | u32 header length | JSON header | tensors as <c16, C order``.

    ``meta`` (e.g. config digest) is stored under the header's ``meta`` key.
    """
    header = {
        "meta": dict(meta or {}),
        "M": mps.num_modes,
        "d": mps.d,
        "chi_max": None if math.isinf(mps.chi_max) else mps.chi_max,
        "chi": mps.bond_dims,
        "epsilon": mps.epsilon,
        "bond_errors": [float(e) for e in mps.bond_errors],
        "fidelity": mps.fidelity,
        "cutoff_weight": mps.cutoff_weight,
        "shapes": [list(t.shape) for t in mps.tensors],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(Path(path), "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for t in mps.tensors:
            fh.write(np.ascontiguousarray(t, dtype="<c16").tobytes())


def load_mps(path) -> MPSState:
    data = Path(path).read_bytes()
    if data[:8] != CHECKPOINT_MAGIC:
        raise ConfigError(f"{path}: not an MPS checkpoint")
    (hlen,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12 : 12 + hlen].decode("utf-8"))
    pos = 12 + hlen
    tensors = []
    for shape in header["shapes"]:
        size = int(np.prod(shape))
        t = np.frombuffer(data, dtype="<c16", count=size, offset=pos).reshape(shape).astype(complex)
        tensors.append(t)
        pos += 16 * size
    if pos != len(data):
        raise ConfigError(f"{path}: checkpoint length does not match its header")
    chi_max = header["chi_max"]
    return MPSState(
        tuple(tensors),
        header["d"],
        math.inf if chi_max is None else chi_max,
        np.array(header["bond_errors"], dtype=float),
        header["fidelity"],
        header["cutoff_weight"],
    )
