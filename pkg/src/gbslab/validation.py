"""Statistical checks of click samples against a Gaussian ground truth."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import GaussianState, click_distribution, husimi_matrix, patterns_to_index, reduced_state
from .gaussian.kernels import subset_click_sum
from .rng import stream
from .samplers.batch import SampleBatch

FULL_TUPLE_MAX_MODES = 20
TUPLE_SUBSAMPLE = 10_000
BOOTSTRAP_RESAMPLES = 100


def _require_nonempty(batch: SampleBatch) -> None:
    if batch.count == 0:
        raise ValueError("sample batch is empty")


# ----------------------------------------------------------------------------
# Click-number distribution
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ClickDistribution:
    counts: np.ndarray
    total: int
    theory: np.ndarray | None = None

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.total

    def tvd(self) -> float:
        if self.theory is None:
            raise ValueError("no theoretical curve attached")
        return 0.5 * float(np.abs(self.frequencies - self.theory).sum())


def theoretical_click_numbers(state: GaussianState) -> np.ndarray:
    """Probability of ``k`` total clicks, ``k = 0..M``, from the exact pattern table."""
    m = state.num_modes
    p = click_distribution(state)
    weight = np.array([bin(i).count("1") for i in range(1 << m)])
    return np.bincount(weight, weights=p, minlength=m + 1)


def click_number_distribution(batch: SampleBatch, state: GaussianState | None = None) -> ClickDistribution:
    """Histogram of total clicks per sample, optionally with the theory curve of ``state``."""
    _require_nonempty(batch)
    counts = np.bincount(batch.patterns.sum(axis=1), minlength=batch.num_modes + 1)
    theory = theoretical_click_numbers(state) if state is not None else None
    return ClickDistribution(counts, batch.count, theory)


# ----------------------------------------------------------------------------
# Correlations
# ----------------------------------------------------------------------------


def _check_modes(modes, num_modes: int) -> tuple[int, ...]:
    modes = tuple(int(k) for k in modes)
    if len(set(modes)) != len(modes):
        raise ValueError("duplicate modes in correlation tuple")
    if not 1 <= len(modes) <= 3:
        raise ValueError("correlation order must be 1, 2 or 3")
    if any(k < 0 or k >= num_modes for k in modes):
        raise ValueError("mode index out of range")
    return modes


def _cumulant(moment) -> float:
    """Joint cumulant of up to three indicators from a moment function over mode subsets."""

    def mom(*idx):
        return moment(tuple(idx))

    k = moment.order
    if k == 1:
        return mom(0)
    if k == 2:
        return mom(0, 1) - mom(0) * mom(1)
    m1 = [mom(i) for i in range(3)]
    m2 = {(0, 1): mom(0, 1), (0, 2): mom(0, 2), (1, 2): mom(1, 2)}
    return (
        mom(0, 1, 2)
        - m2[0, 1] * m1[2]
        - m2[0, 2] * m1[1]
        - m2[1, 2] * m1[0]
        + 2 * m1[0] * m1[1] * m1[2]
    )


class _TheoryMoments:
    def __init__(self, Q, modes):
        self.Q, self.modes, self.order = Q, modes, len(modes)

    def __call__(self, idx):
        return subset_click_sum(self.Q, [], [self.modes[i] for i in idx])


def theoretical_click_correlation(state: GaussianState, modes, Q: np.ndarray | None = None) -> float:
    """Joint cumulant of the click indicators on ``modes`` (order 1 to 3)."""
    modes = _check_modes(modes, state.num_modes)
    if not state.is_zero_mean():
        raise NotImplementedError("correlations of displaced states are not supported")
    Q = husimi_matrix(state) if Q is None else Q
    return float(_cumulant(_TheoryMoments(Q, modes)))


def _k_statistic(cols: np.ndarray) -> float:
    n, k = cols.shape
    if k == 1:
        return float(cols[:, 0].mean())
    c = cols - cols.mean(axis=0)
    s = float(np.prod(c, axis=1).sum())
    if k == 2:
        return s / (n - 1) if n > 1 else 0.0
    return s * n / ((n - 1) * (n - 2)) if n > 2 else 0.0


def empirical_click_correlation(batch: SampleBatch, modes) -> float:
    """Unbiased estimate (k-statistic) of the joint click cumulant on ``modes``."""
    _require_nonempty(batch)
    modes = _check_modes(modes, batch.num_modes)
    return _k_statistic(batch.patterns[:, list(modes)].astype(float))


def correlation_tuples(num_modes: int, order: int, seed: int = 0, limit: int = TUPLE_SUBSAMPLE) -> list[tuple]:
    """All ``order``-subsets for small systems, otherwise a seeded uniform subsample of ``limit``."""
    total = math.comb(num_modes, order)
    if num_modes <= FULL_TUPLE_MAX_MODES or total <= limit:
        return list(itertools.combinations(range(num_modes), order))
    rng = stream(seed, f"tuples-{order}")
    chosen: set[tuple] = set()
    while len(chosen) < limit:
        chosen.add(tuple(sorted(rng.choice(num_modes, size=order, replace=False).tolist())))
    return sorted(chosen)


def fit_delta_k(points) -> tuple[float, float]:
    """Least-squares slope ``K`` of empirical on theoretical values, intercept fixed at 0.

    A single point with a non-zero abscissa is enough for this fit.
    """
    t, e = _points(points)
    if t.size == 0 or not np.any(t != 0):
        raise ValueError("slope fit needs a non-zero theoretical value")
    K = float(np.dot(t, e) / np.dot(t, t))
    return K, abs(K - 1)


def fit_with_intercept(points) -> tuple[float, float]:
    """Ordinary least squares ``e = K t + b``; returns ``(K, b)``."""
    t, e = _points(points)
    if np.unique(t).size < 2:
        raise ValueError("slope fit needs at least two distinct theoretical values")
    K, b = np.polyfit(t, e, 1)
    return float(K), float(b)


def weighted_distance(points) -> float:
    """``sqrt(sum |t| (e - t)^2 / sum |t|)``."""
    t, e = _points(points)
    if t.size == 0:
        raise ValueError("no correlation points")
    w = np.abs(t)
    if w.sum() == 0:
        raise ValueError("all weights are zero")
    return float(math.sqrt(np.sum(w * (e - t) ** 2) / w.sum()))


def _points(points) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray([(p[-2], p[-1]) for p in points], dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("correlation points must be finite")
    return arr[:, 0], arr[:, 1]


def normalized_delta_k(delta_k: float, baseline: float) -> float:
    """``delta_k / baseline``, the baseline being the sampler that ignores the quantum part."""
    if not baseline > 0:
        raise ValueError("baseline deviation must be positive")
    return delta_k / baseline


@dataclass(frozen=True)
class CorrelationReport:
    order: int
    points: list = field(repr=False)
    K: float
    delta_k: float
    wd: float
    K_intercept: float | None
    intercept: float | None

    def rows(self):
        for modes, t, e in self.points:
            yield {"order": self.order, "modes": " ".join(map(str, modes)), "theory": t, "empirical": e}


def theoretical_correlations(state: GaussianState, tuples) -> np.ndarray:
    Q = husimi_matrix(state)
    return np.array([theoretical_click_correlation(state, t, Q) for t in tuples])


def empirical_correlations(batch: SampleBatch, tuples) -> np.ndarray:
    _require_nonempty(batch)
    Z = batch.patterns.astype(float)
    Zc = Z - Z.mean(axis=0)
    n = batch.count
    out = np.empty(len(tuples))
    if tuples and len(tuples[0]) == 2:
        C = Zc.T @ Zc / (n - 1) if n > 1 else np.zeros((Z.shape[1],) * 2)
        for i, (a, b) in enumerate(tuples):
            out[i] = C[a, b]
        return out
    for i, t in enumerate(tuples):
        out[i] = _k_statistic(Z[:, list(t)])
    return out


def correlation_report(
    batch: SampleBatch, state: GaussianState, order: int, tuples=None, theory: np.ndarray | None = None, seed: int = 0
) -> CorrelationReport:
    """Fit empirical against theoretical click cumulants of one order."""
    if tuples is None:
        tuples = correlation_tuples(batch.num_modes, order, seed)
    t = theoretical_correlations(state, tuples) if theory is None else np.asarray(theory)
    e = empirical_correlations(batch, tuples)
    points = [(tuple(m), float(a), float(b)) for m, a, b in zip(tuples, t, e)]
    K, dK = fit_delta_k(points)
    if np.unique(t).size >= 2:
        K_i, b = fit_with_intercept(points)
    else:
        K_i = b = None
    return CorrelationReport(order, points, K, dK, weighted_distance(points), K_i, b)


# ----------------------------------------------------------------------------
# Bayesian test
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BayesianReport:
    delta_h: float
    sigma: float
    subsystem: tuple
    resamples: int = BOOTSTRAP_RESAMPLES


def _likelihood_table(h, subsystem) -> np.ndarray:
    if isinstance(h, GaussianState):
        return click_distribution(reduced_state(h, subsystem))
    table = np.asarray(h, dtype=float)
    if table.shape != (1 << len(subsystem),):
        raise ValueError("likelihood table does not match the subsystem size")
    return table


def bayesian_score(
    batch: SampleBatch,
    h0,
    h1,
    subsystem=None,
    seed: int = 0,
    resamples: int = BOOTSTRAP_RESAMPLES,
) -> BayesianReport:
    """Mean log-likelihood ratio of ``h0`` over ``h1`` on the samples restricted to ``subsystem``.

    ``h0``/``h1`` are Gaussian states (marginalised to the subsystem) or
    probability tables already over the subsystem's patterns.
    """
    _require_nonempty(batch)
    subsystem = tuple(range(batch.num_modes)) if subsystem is None else tuple(int(k) for k in subsystem)
    p0 = _likelihood_table(h0, subsystem)
    p1 = _likelihood_table(h1, subsystem)
    idx = patterns_to_index(batch.patterns[:, list(subsystem)])
    seen = np.unique(idx)
    for name, p in (("H0", p0), ("H1", p1)):
        bad = seen[p[seen] <= 0]
        if bad.size:
            pattern = "".join(str((int(bad[0]) >> i) & 1) for i in range(len(subsystem)))
            raise ValueError(f"sample pattern {pattern} has zero probability under {name}")
    table = np.zeros_like(p0)
    table[seen] = np.log(p0[seen]) - np.log(p1[seen])
    lr = table[idx]
    delta = float(lr.mean())
    rng = stream(seed, "bootstrap")
    boots = np.array([lr[rng.integers(0, lr.size, lr.size)].mean() for _ in range(resamples)])
    return BayesianReport(delta, float(boots.std(ddof=1)) if resamples > 1 else 0.0, subsystem, resamples)


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


# ----------------------------------------------------------------------------
# Report files
# ----------------------------------------------------------------------------


def write_correlation_csv(path, reports: dict[str, CorrelationReport], meta: dict | None = None) -> None:
    """One row per correlation point, then one summary row per metric.

    ``meta`` entries are written first as ``# key: value`` comment lines.
    """
    with open(path, "w", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {value}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "kind", "order", "modes", "theory", "empirical"])
        for name, rep in reports.items():
            for row in rep.rows():
                w.writerow([name, "point", row["order"], row["modes"], repr(row["theory"]), repr(row["empirical"])])
        for name, rep in reports.items():
            for metric in ("K", "delta_k", "wd", "K_intercept", "intercept"):
                w.writerow([name, metric, rep.order, "", "", repr(getattr(rep, metric))])
