"""Sample batches and their line-oriented text format.

File layout::

    # gbslab-samples 1
    # sampler: exact
    # seed: 1234
    # modes: 3
    # count: 2
    # config_digest: 9f2c...
    # tool_version: 0.1.0
    010
    110

Header lines start with ``#`` and hold ``key: value`` pairs; each data line
is one pattern written as ``0``/``1`` characters, mode 0 first, ``\\n``
terminated.  Files without a ``config_digest`` are treated as external.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import SampleFileError

FORMAT_TAG = "gbslab-samples 1"


@dataclass(frozen=True)
class SampleBatch:
    """Click patterns (``count x M`` uint8) with provenance."""

    patterns: np.ndarray
    sampler: str
    seed: int | None = None
    config_digest: str = ""
    provenance: str = "internal"

    def __post_init__(self):
        p = np.asarray(self.patterns, dtype=np.uint8)
        if p.ndim != 2:
            raise ValueError("patterns must be a 2-D array")
        if np.any(p > 1):
            raise ValueError("patterns must contain only 0/1")
        p.setflags(write=False)
        object.__setattr__(self, "patterns", p)

    @property
    def count(self) -> int:
        return self.patterns.shape[0]

    @property
    def num_modes(self) -> int:
        return self.patterns.shape[1]

    def __len__(self) -> int:
        return self.count

    def restrict(self, modes) -> "SampleBatch":
        return SampleBatch(self.patterns[:, list(modes)], self.sampler, self.seed, self.config_digest, self.provenance)


def write_samples(path, batch: SampleBatch) -> None:
    """Write ``batch`` in the documented text format (bit-exact, LF line endings)."""
    lines = [
        f"# {FORMAT_TAG}",
        f"# sampler: {batch.sampler}",
        f"# seed: {'' if batch.seed is None else batch.seed}",
        f"# modes: {batch.num_modes}",
        f"# count: {batch.count}",
        f"# config_digest: {batch.config_digest}",
        f"# tool_version: {__version__}",
    ]
    body = (batch.patterns + ord("0")).astype(np.uint8)
    rows = [r.tobytes().decode("ascii") for r in body]
    text = "\n".join(lines + rows) + "\n"
    Path(path).write_bytes(text.encode("ascii"))


def read_samples(path) -> SampleBatch:
    """Parse a sample file.

    Raises:
        SampleFileError: on malformed lines, inconsistent widths or a pattern
            count that disagrees with the header (reported with a line number).
    """
    text = Path(path).read_bytes().decode("ascii", errors="replace")
    header: dict[str, str] = {}
    rows: list[str] = []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    in_header = True
    width = None
    for lineno, line in enumerate(lines, 1):
        if in_header and line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                header[key.strip()] = value.strip()
            continue
        in_header = False
        if line.startswith("#"):
            raise SampleFileError("header line after data", lineno)
        if not line or set(line) - {"0", "1"}:
            raise SampleFileError(f"invalid pattern {line!r}", lineno)
        if width is None:
            width = len(line)
            if "modes" in header and header["modes"] and int(header["modes"]) != width:
                raise SampleFileError(f"pattern width {width} does not match header modes {header['modes']}", lineno)
        elif len(line) != width:
            raise SampleFileError(f"pattern width {len(line)} differs from {width}", lineno)
        rows.append(line)

    if "count" in header and header["count"]:
        expected = int(header["count"])
        if expected != len(rows):
            raise SampleFileError(
                f"file ends after {len(rows)} patterns but header declares {expected}", len(lines) + 1
            )
    if width is None:
        width = int(header.get("modes") or 0)
    if rows:
        patterns = np.frombuffer("".join(rows).encode("ascii"), dtype=np.uint8).reshape(len(rows), width) - ord("0")
    else:
        patterns = np.zeros((0, width), dtype=np.uint8)
    digest = header.get("config_digest", "")
    seed = header.get("seed", "")
    return SampleBatch(
        patterns,
        sampler=header.get("sampler", "unknown") or "unknown",
        seed=int(seed) if seed not in ("", None) else None,
        config_digest=digest,
        provenance="internal" if digest and header.get("tool_version") else "external",
    )
