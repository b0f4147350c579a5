"""Spatial-temporal hybrid circuit: three interferometers joined by two delay-loop arrays.

A circuit acts on ``s`` spatial channels, each carrying a train of time bins
spaced by ``tau``.  Light passes ``U1 -> L1 -> U2 -> L2 -> U3``; loop ``i`` of
an array delays spatial channel ``i`` by an integer number of bins.  Unrolling
turns the network into one complex transfer matrix over (spatial, bin) modes.

Mode labelling is bin-major: flat index ``= bin * s + spatial`` for both the
input and the output side.  Output bins are counted from the first bin any
amplitude can reach.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .gaussian.state import SqueezerBank
from .rng import stream

UNITARITY_ATOL = 1e-10
SCHEMA_VERSION = 1


def random_interferometer(s: int, seed: int) -> np.ndarray:
    """Haar-random ``s x s`` unitary, deterministic in ``seed``."""
    if s < 1:
        raise ValueError("interferometer size must be at least 1")
    rng = stream(seed, "interferometer")
    z = (rng.standard_normal((s, s)) + 1j * rng.standard_normal((s, s))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def ladder_delays(s: int) -> tuple[np.ndarray, np.ndarray]:
    """Delay ladders ``0..s-1`` (short array) and ``0, s, ..., (s-1)s`` (long array)."""
    short = np.arange(s)
    return short, short * s


def _per_channel(value, s: int, name: str, dtype=float) -> np.ndarray:
    arr = np.asarray(value, dtype=dtype)
    if arr.ndim == 0:
        arr = np.full(s, arr, dtype=dtype)
    if arr.shape != (s,):
        raise ConfigError(f"{name} must be a scalar or a list of {s} values")
    return arr


@dataclass(frozen=True)
class LoopArray:
    """One delay per spatial channel (in units of ``tau``).

    ``transmission`` is a power transmission and, like ``phase``, only acts
    on channels whose delay is non-zero.
    """

    delays: np.ndarray
    transmission: np.ndarray
    phase: np.ndarray

    @classmethod
    def build(cls, s: int, delays=0, transmission=1.0, phase=0.0) -> "LoopArray":
        d = np.asarray(delays)
        if d.ndim == 0:
            d = np.full(s, int(d))
        if d.shape != (s,) or not np.all(np.equal(np.mod(d, 1), 0)) or np.any(d < 0):
            raise ConfigError(f"loop delays must be {s} non-negative integers")
        t = _per_channel(transmission, s, "loop transmission")
        if np.any((t < 0) | (t > 1)):
            raise ConfigError("loop transmissions must lie in [0, 1]")
        return cls(d.astype(int), t, _per_channel(phase, s, "loop phase"))

    def amplitude_factors(self) -> np.ndarray:
        f = np.sqrt(self.transmission) * np.exp(1j * self.phase)
        return np.where(self.delays > 0, f, 1.0 + 0j)


@dataclass(frozen=True)
class CircuitSpec:
    """Declarative description of the time-multiplexed network and its sources."""

    spatial_modes: int
    input_time_bins: int
    squeezing: np.ndarray
    interferometers: tuple
    loop1: LoopArray
    loop2: LoopArray
    squeezing_phase: np.ndarray = None
    efficiency_source: float = 1.0
    efficiency_circuit: float = 1.0
    efficiency_detection: float = 1.0
    time_step: float = 50e-9

    def __post_init__(self):
        s, b = int(self.spatial_modes), int(self.input_time_bins)
        if s < 1 or b < 1:
            raise ConfigError("spatial_modes and input_time_bins must be positive")
        sq = np.asarray(self.squeezing, dtype=float)
        if sq.ndim == 0:
            sq = np.full((b, s), float(sq))
        if sq.shape != (b, s):
            raise ConfigError(f"squeezing schedule must have shape ({b}, {s})")
        if np.any(sq < 0):
            raise ConfigError("squeezing parameters must be non-negative")
        ph = np.zeros((b, s)) if self.squeezing_phase is None else np.asarray(self.squeezing_phase, dtype=float)
        if ph.ndim == 0:
            ph = np.full((b, s), float(ph))
        if ph.shape != (b, s):
            raise ConfigError(f"squeezing phases must have shape ({b}, {s})")
        us = tuple(np.asarray(u, dtype=complex) for u in self.interferometers)
        if len(us) != 3:
            raise ConfigError("exactly three interferometers are required")
        for k, u in enumerate(us, 1):
            if u.shape != (s, s):
                raise ConfigError(f"U{k} must be {s}x{s}")
            if not np.allclose(u.conj().T @ u, np.eye(s), atol=UNITARITY_ATOL, rtol=0):
                raise ConfigError(f"U{k} is not unitary")
        for loop in (self.loop1, self.loop2):
            if loop.delays.shape != (s,):
                raise ConfigError("loop arrays must have one entry per spatial channel")
        for name in ("efficiency_source", "efficiency_circuit", "efficiency_detection"):
            v = float(getattr(self, name))
            if not 0 <= v <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.time_step <= 0:
            raise ConfigError("time_step must be positive")
        object.__setattr__(self, "spatial_modes", s)
        object.__setattr__(self, "input_time_bins", b)
        object.__setattr__(self, "squeezing", sq)
        object.__setattr__(self, "squeezing_phase", ph)
        object.__setattr__(self, "interferometers", us)

    @property
    def num_inputs(self) -> int:
        return self.spatial_modes * self.input_time_bins

    @property
    def efficiency(self) -> float:
        return self.efficiency_source * self.efficiency_circuit * self.efficiency_detection

    def squeezer_bank(self) -> SqueezerBank:
        """Sources in flat input order (bin-major)."""
        return SqueezerBank(self.squeezing.ravel(), self.squeezing_phase.ravel())


@dataclass(frozen=True)
class TransferMatrix:
    """Unrolled ``M_out x M_in`` transfer matrix with (spatial, bin) labels."""

    matrix: np.ndarray
    spatial_modes: int
    input_bins: int
    output_bins: int
    output_offset: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def input_index(self, spatial: int, time_bin: int) -> int:
        if not (0 <= spatial < self.spatial_modes and 0 <= time_bin < self.input_bins):
            raise IndexError("input label out of range")
        return time_bin * self.spatial_modes + spatial

    def output_index(self, spatial: int, time_bin: int) -> int:
        """Flat output index; ``time_bin`` counts from the first output bin."""
        if not (0 <= spatial < self.spatial_modes and 0 <= time_bin < self.output_bins):
            raise IndexError("output label out of range")
        return time_bin * self.spatial_modes + spatial

    def input_label(self, index: int) -> tuple[int, int]:
        b, s = divmod(int(index), self.spatial_modes)
        if not 0 <= b < self.input_bins:
            raise IndexError("input index out of range")
        return s, b

    def output_label(self, index: int) -> tuple[int, int]:
        b, s = divmod(int(index), self.spatial_modes)
        if not 0 <= b < self.output_bins:
            raise IndexError("output index out of range")
        return s, b


def output_geometry(spec: CircuitSpec) -> tuple[int, int, int]:
    """``(output_time_bins, M_out, M_in)`` of the unrolled circuit."""
    span1 = int(spec.loop1.delays.max() - spec.loop1.delays.min())
    span2 = int(spec.loop2.delays.max() - spec.loop2.delays.min())
    bins = spec.input_time_bins + span1 + span2
    return bins, bins * spec.spatial_modes, spec.num_inputs


def _delay(amp: np.ndarray, loop: LoopArray, factors: np.ndarray) -> np.ndarray:
    s, nb = amp.shape[:2]
    out = np.zeros((s, nb + int(loop.delays.max())) + amp.shape[2:], dtype=amp.dtype)
    for i in range(s):
        d = int(loop.delays[i])
        out[i, d : d + nb] = amp[i] * factors[i]
    return out


def _propagate(spec: CircuitSpec, amp: np.ndarray, us, f1, f2) -> np.ndarray:
    u1, u2, u3 = us
    amp = np.tensordot(u1, amp, axes=(1, 0))
    amp = _delay(amp, spec.loop1, f1)
    amp = np.tensordot(u2, amp, axes=(1, 0))
    amp = _delay(amp, spec.loop2, f2)
    return np.tensordot(u3, amp, axes=(1, 0))


def unroll(spec: CircuitSpec) -> TransferMatrix:
    """Compose ``U3 L2 U2 L1 U1`` over time-bin-expanded modes, including stage efficiencies."""
    s, b = spec.spatial_modes, spec.input_time_bins
    m_in = spec.num_inputs
    amp = np.zeros((s, b, m_in), dtype=complex)
    for t in range(b):
        for i in range(s):
            amp[i, t, t * s + i] = 1.0
    amp = _propagate(spec, amp, spec.interferometers, spec.loop1.amplitude_factors(), spec.loop2.amplitude_factors())
    bins, m_out, _ = output_geometry(spec)
    offset = int(spec.loop1.delays.min() + spec.loop2.delays.min())
    window = amp[:, offset : offset + bins, :]
    # (spatial, bin, input) -> (bin * s + spatial, input)
    matrix = np.ascontiguousarray(window.transpose(1, 0, 2).reshape(m_out, m_in))
    matrix *= np.sqrt(spec.efficiency)
    return TransferMatrix(matrix, s, b, bins, offset)


def connectivity_count(spec: CircuitSpec, spatial: int = 0, time_bin: int = 0) -> int:
    """Number of output modes structurally reachable from one input mode.

    The count uses the sparsity pattern of the interferometers and loop
    factors, so accidental numerical cancellation never hides a path.
    """
    s = spec.spatial_modes
    us = [(np.abs(u) > 0).astype(float) for u in spec.interferometers]
    amp = np.zeros((s, spec.input_time_bins), dtype=float)
    amp[spatial, time_bin] = 1.0
    f1 = (np.abs(spec.loop1.amplitude_factors()) > 0).astype(float)
    f2 = (np.abs(spec.loop2.amplitude_factors()) > 0).astype(float)
    out = _propagate(spec, amp, us, f1, f2)
    return int(np.count_nonzero(out))


# ----------------------------------------------------------------------------
# structured-text (de)serialisation
# ----------------------------------------------------------------------------


def _unitary_from_entry(entry, s: int, name: str) -> np.ndarray:
    if entry is None or entry == "identity" or (isinstance(entry, dict) and entry.get("identity")):
        return np.eye(s, dtype=complex)
    if isinstance(entry, dict) and "seed" in entry:
        return random_interferometer(s, int(entry["seed"]))
    if isinstance(entry, dict) and "matrix" in entry:
        arr = np.asarray(entry["matrix"], dtype=float)
        if arr.shape != (s, s, 2):
            raise ConfigError(f"{name}.matrix must be {s}x{s} rows of [re, im] pairs")
        return arr[..., 0] + 1j * arr[..., 1]
    raise ConfigError(f"{name}: expected 'identity', {{seed: int}} or {{matrix: [...]}}")


def circuit_from_dict(data: dict) -> CircuitSpec:
    """Build a :class:`CircuitSpec` from its structured-text representation."""
    if not isinstance(data, dict):
        raise ConfigError("circuit description must be a mapping")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported circuit schema_version {version!r}")
    try:
        s = int(data["spatial_modes"])
        b = int(data.get("input_time_bins", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"circuit: {exc}") from None
    inter = data.get("interferometers", {}) or {}
    us = tuple(_unitary_from_entry(inter.get(k), s, k) for k in ("U1", "U2", "U3"))
    loops = []
    for key in ("loop_array_1", "loop_array_2"):
        entry = data.get(key) or {}
        delays = entry.get("delays", 0)
        if delays == "ladder":
            delays = ladder_delays(s)[0 if key.endswith("1") else 1]
        loops.append(LoopArray.build(s, delays, entry.get("transmission", 1.0), entry.get("phase", 0.0)))
    eff = data.get("efficiency", {}) or {}
    return CircuitSpec(
        spatial_modes=s,
        input_time_bins=b,
        squeezing=data.get("squeezing", 0.0),
        squeezing_phase=data.get("squeezing_phase"),
        interferometers=us,
        loop1=loops[0],
        loop2=loops[1],
        efficiency_source=float(eff.get("source", 1.0)),
        efficiency_circuit=float(eff.get("circuit", 1.0)),
        efficiency_detection=float(eff.get("detection", 1.0)),
        time_step=float(data.get("time_step", 50e-9)),
    )


def circuit_to_dict(spec: CircuitSpec) -> dict:
    """Inverse of :func:`circuit_from_dict`; unitaries are written inline."""

    def mat(u):
        return [[[float(z.real), float(z.imag)] for z in row] for row in u]

    def loop(l: LoopArray):
        return {
            "delays": [int(d) for d in l.delays],
            "transmission": [float(t) for t in l.transmission],
            "phase": [float(p) for p in l.phase],
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "spatial_modes": spec.spatial_modes,
        "input_time_bins": spec.input_time_bins,
        "squeezing": spec.squeezing.tolist(),
        "squeezing_phase": spec.squeezing_phase.tolist(),
        "interferometers": {f"U{k}": {"matrix": mat(u)} for k, u in enumerate(spec.interferometers, 1)},
        "loop_array_1": loop(spec.loop1),
        "loop_array_2": loop(spec.loop2),
        "efficiency": {
            "source": spec.efficiency_source,
            "circuit": spec.efficiency_circuit,
            "detection": spec.efficiency_detection,
        },
        "time_step": spec.time_step,
    }
