"""Schmidt spectra of pure Gaussian states across a bipartition."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..errors import PhysicalityError
from ..gaussian import GaussianState, is_pure, symplectic_eigenvalues
from ..gaussian.state import quadrature_indices

RATIO_FLOOR = 1e-16


@dataclass(frozen=True)
class EntanglementSpectrum:
    """Schmidt probabilities ``prod_k (1 - lam_k) lam_k^{m_k}`` at one cut.

    ``cut = c`` separates modes ``0..c-1`` from ``c..M-1``.
    """

    cut: int
    ratios: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.prod(1 - self.ratios))

    def iter_probabilities(self) -> Iterator[float]:
        """Schmidt probabilities in descending order (best-first over occupations).

        Equal probabilities come out in lexicographic order of the occupation vector.
        """
        lam = self.ratios
        k = lam.size
        log_lam = np.log(lam) if k else lam
        log_norm = float(np.sum(np.log1p(-lam)))
        start = (0,) * k
        heap = [(-log_norm, start)]
        seen = {start}
        while heap:
            neg_logp, occ = heapq.heappop(heap)
            yield math.exp(-neg_logp)
            for i in range(k):
                nxt = occ[:i] + (occ[i] + 1,) + occ[i + 1 :]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (neg_logp - log_lam[i], nxt))

    def top(self, count: int) -> np.ndarray:
        out = []
        for p in self.iter_probabilities():
            if len(out) >= count:
                break
            out.append(p)
        return np.array(out)

    def truncation_error(self, chi) -> float:
        """Weight outside the ``chi`` largest Schmidt probabilities."""
        if chi < 1:
            raise ValueError("bond dimension must be at least 1")
        if math.isinf(chi) or self.ratios.size == 0:
            return 0.0
        kept = math.fsum(self.top(int(chi)))
        return max(0.0, 1.0 - kept)


def _pure_cov(V) -> np.ndarray:
    V = np.asarray(V.cov if isinstance(V, GaussianState) else V, dtype=float)
    if not is_pure(GaussianState(V, validate=False)):
        raise PhysicalityError("entanglement spectrum requires a pure covariance")
    return V


def entanglement_spectrum(V_p, cut: int) -> EntanglementSpectrum:
    """Geometric ratios ``(nu - 1)/(nu + 1)`` from the reduced state on modes ``0..cut-1``."""
    return _spectrum(_pure_cov(V_p), cut)


def _spectrum(V: np.ndarray, cut: int) -> EntanglementSpectrum:
    m = V.shape[0] // 2
    if not 0 <= cut <= m:
        raise ValueError(f"cut must lie in [0, {m}]")
    if cut in (0, m):
        return EntanglementSpectrum(cut, np.zeros(0))
    side = cut if cut <= m - cut else m - cut
    modes = range(cut) if side == cut else range(cut, m)
    idx = quadrature_indices(list(modes), m)
    nu = symplectic_eigenvalues(V[np.ix_(idx, idx)])
    lam = (nu - 1) / (nu + 1)
    lam = np.sort(lam[lam > RATIO_FLOOR])[::-1]
    return EntanglementSpectrum(cut, np.clip(lam, 0.0, 1 - 1e-15))


@dataclass(frozen=True)
class TruncationReport:
    chi: float
    per_cut: np.ndarray

    @property
    def max_cut(self) -> float:
        return float(self.per_cut.max()) if self.per_cut.size else 0.0

    @property
    def product(self) -> float:
        return float(1 - np.prod(1 - self.per_cut)) if self.per_cut.size else 0.0


def truncation_error(V_p, chi) -> TruncationReport:
    """Per-cut discarded Schmidt weight at bond dimension ``chi`` and both aggregates."""
    if chi < 1:
        raise ValueError("bond dimension must be at least 1")
    V = _pure_cov(V_p)
    m = V.shape[0] // 2
    eps = np.array([_spectrum(V, c).truncation_error(chi) for c in range(1, m)])
    return TruncationReport(chi, eps)
