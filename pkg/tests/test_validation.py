import csv
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbslab.gaussian import GaussianState, SqueezerBank, apply_transfer, click_distribution, reduced_state, squeezed_vacuum
from gbslab.instances import random_instance
from gbslab.samplers import SampleBatch, exact_sampler, squashed_state_of, thermal_state_of
from gbslab.validation import (
    bayesian_score,
    click_number_distribution,
    correlation_report,
    correlation_tuples,
    empirical_click_correlation,
    fit_delta_k,
    fit_with_intercept,
    kl_divergence,
    normalized_delta_k,
    theoretical_click_correlation,
    theoretical_click_numbers,
    weighted_distance,
    write_correlation_csv,
)
from oracles import brute_click_moment, random_physical_cov

REFERENCE = random_instance(3, 11)


def tmss(r=1.0):
    return apply_transfer(squeezed_vacuum(SqueezerBank([r, r], [0.0, np.pi])), np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def brute_cumulant(p, modes):
    mom = lambda idx: brute_click_moment(p, idx)
    if len(modes) == 2:
        i, j = modes
        return mom((i, j)) - mom((i,)) * mom((j,))
    i, j, k = modes
    return (
        mom((i, j, k))
        - mom((i, j)) * mom((k,))
        - mom((i, k)) * mom((j,))
        - mom((j, k)) * mom((i,))
        + 2 * mom((i,)) * mom((j,)) * mom((k,))
    )


# -- click numbers ------------------------------------------------------------------


def test_click_numbers_vacuum():
    d = click_number_distribution(SampleBatch(np.zeros((10, 3)), "x"))
    assert list(d.frequencies) == [1, 0, 0, 0]


def test_click_numbers_empty_batch():
    with pytest.raises(ValueError):
        click_number_distribution(SampleBatch(np.zeros((0, 3)), "x"))


def test_click_numbers_ground_truth_vs_thermal():
    gt = REFERENCE.ground_truth()
    th = thermal_state_of(REFERENCE.bank, REFERENCE.transfer)
    b = exact_sampler(gt, 100_000, 1)
    d = click_number_distribution(b, th)
    assert d.tvd() > 0.05
    d = click_number_distribution(b, gt)
    f, p = d.frequencies, d.theory
    assert np.all(np.abs(f - p) <= 3 * np.sqrt(p * (1 - p) / b.count) + 1e-12)


def test_theoretical_click_numbers_sum():
    p = theoretical_click_numbers(random_instance(5, 2).ground_truth())
    assert p.sum() == pytest.approx(1, abs=1e-10)


# -- correlations -------------------------------------------------------------------


def test_theory_correlation_trivial():
    prod = squeezed_vacuum(SqueezerBank([0.8, 1.1, 0.5]))
    for t in correlation_tuples(3, 2):
        assert theoretical_click_correlation(prod, t) == pytest.approx(0, abs=1e-14)
    assert theoretical_click_correlation(GaussianState.vacuum(3), (0, 1, 2)) == pytest.approx(0, abs=1e-14)


def test_theory_correlation_tmss():
    st_ = tmss()
    c = theoretical_click_correlation(st_, (0, 1))
    assert c > 0
    assert c == pytest.approx(brute_cumulant(click_distribution(st_), (0, 1)), abs=1e-10)


def test_theory_correlation_rejects_duplicates():
    with pytest.raises(ValueError):
        theoretical_click_correlation(tmss(), (0, 0))
    with pytest.raises(ValueError):
        theoretical_click_correlation(REFERENCE.ground_truth(), (0, 1, 2, 0))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(2, 5))
def test_theory_correlation_matches_brute_force(seed, m):
    V = random_physical_cov(m, np.random.default_rng(seed))
    state = GaussianState(V)
    p = click_distribution(state)
    for order in (2, 3):
        for t in itertools.islice(itertools.combinations(range(m), order), 6):
            assert theoretical_click_correlation(state, t) == pytest.approx(brute_cumulant(p, t), abs=1e-10)


def test_empirical_correlation_examples():
    const = SampleBatch(np.ones((50, 3)), "x")
    assert empirical_click_correlation(const, (0, 1)) == 0
    assert empirical_click_correlation(const, (0, 1, 2)) == 0
    n = 1000
    alt = SampleBatch(np.tile([[1, 0], [0, 1]], (n // 2, 1)), "x")
    # unbiased estimator: -0.25 * n / (n - 1)
    assert empirical_click_correlation(alt, (0, 1)) == pytest.approx(-0.25 * n / (n - 1), abs=1e-15)
    with pytest.raises(ValueError):
        empirical_click_correlation(SampleBatch(np.zeros((0, 2)), "x"), (0, 1))


def test_empirical_correlation_unbiased_third_order():
    rng = np.random.default_rng(4)
    batch = SampleBatch(rng.integers(0, 2, (7, 3)), "x")
    z = batch.patterns.astype(float)
    c = z - z.mean(axis=0)
    n = 7
    expected = n / ((n - 1) * (n - 2)) * np.sum(c[:, 0] * c[:, 1] * c[:, 2])
    assert empirical_click_correlation(batch, (0, 1, 2)) == pytest.approx(expected, abs=1e-15)


def test_empirical_vs_theory_exact_sampler():
    gt = REFERENCE.ground_truth()
    b = exact_sampler(gt, 100_000, 3)
    z = b.patterns.astype(float)
    for t in correlation_tuples(3, 2):
        zc = (z[:, t[0]] - z[:, t[0]].mean()) * (z[:, t[1]] - z[:, t[1]].mean())
        sigma = zc.std() / math.sqrt(b.count)
        assert abs(empirical_click_correlation(b, t) - theoretical_click_correlation(gt, t)) < 3 * sigma


def test_correlation_tuples():
    assert correlation_tuples(4, 2) == list(itertools.combinations(range(4), 2))
    big = correlation_tuples(50, 3, seed=1)
    assert len(big) == 10_000 and len(set(big)) == 10_000
    assert big == correlation_tuples(50, 3, seed=1)


# -- fits ---------------------------------------------------------------------------


def test_fit_examples():
    t = np.linspace(0.01, 0.2, 30)
    pts = list(zip(t, t))
    assert fit_delta_k(pts) == pytest.approx((1.0, 0.0), abs=1e-12)
    assert fit_delta_k(list(zip(t, 0 * t))) == pytest.approx((0.0, 1.0), abs=1e-12)
    noise = np.random.default_rng(1).normal(0, 1e-6, t.size)
    K, dK = fit_delta_k(list(zip(t, 0.66 * t + noise)))
    assert abs(K - 0.66) < 1e-4 and dK == pytest.approx(abs(K - 1))


def test_fit_degenerate():
    with pytest.raises(ValueError):
        fit_delta_k([(0.0, 1.0), (0.0, 2.0)])
    with pytest.raises(ValueError):
        fit_with_intercept([(0.3, 1.0), (0.3, 2.0)])


def test_fit_with_intercept():
    t = np.linspace(0.1, 1, 10)
    K, b = fit_with_intercept(list(zip(t, 0.5 * t + 0.2)))
    assert K == pytest.approx(0.5) and b == pytest.approx(0.2)


@settings(max_examples=50, deadline=None)
@given(
    pts=st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=20),
    c=st.floats(-10, 10),
)
def test_fit_scale_equivariant(pts, c):
    t = np.array([p[0] for p in pts])
    if np.sum(t * t) < 1e-6:
        return
    K, _ = fit_delta_k(pts)
    K2, _ = fit_delta_k([(a, c * b) for a, b in pts])
    assert K2 == pytest.approx(c * K, rel=1e-9, abs=1e-9)


def test_weighted_distance_examples():
    assert weighted_distance([(1, 1), (2, 2)]) == 0
    assert weighted_distance([(1, 0)]) == 1
    assert weighted_distance([(1, 0.9), (4, 4.1)]) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ValueError):
        weighted_distance([(0, 1)])
    with pytest.raises(ValueError):
        weighted_distance([])


@settings(max_examples=50, deadline=None)
@given(pts=st.lists(st.tuples(st.floats(0.01, 1), st.floats(-1, 1)), min_size=1, max_size=10))
def test_weighted_distance_zero_iff_equal(pts):
    wd = weighted_distance(pts)
    assert wd >= 0
    assert (wd == 0) == all(a == b for a, b in pts)


def test_normalized_delta_k():
    assert normalized_delta_k(0.3, 0.3) == 1
    assert normalized_delta_k(0.0, 0.3) == 0
    with pytest.raises(ValueError):
        normalized_delta_k(0.1, 0.0)


def test_correlation_report_and_csv(tmp_path):
    gt = REFERENCE.ground_truth()
    b = exact_sampler(gt, 20_000, 1)
    reps = {"exact": correlation_report(b, gt, 2), "exact3": correlation_report(b, gt, 3)}
    assert reps["exact"].delta_k == pytest.approx(abs(reps["exact"].K - 1))
    assert reps["exact3"].K_intercept is None and len(reps["exact3"].points) == 1
    path = tmp_path / "c.csv"
    write_correlation_csv(path, reps)
    rows = list(csv.reader(path.open()))
    assert rows[0][:3] == ["experiment", "kind", "order"]
    assert sum(r[1] == "point" for r in rows[1:]) == 4


# -- Bayesian -----------------------------------------------------------------------


def test_bayes_identical_hypotheses():
    gt = REFERENCE.ground_truth()
    rep = bayesian_score(exact_sampler(gt, 1000, 1), gt, gt)
    assert rep.delta_h == 0 and rep.sigma == 0


def test_bayes_ground_truth_vs_squashed():
    gt = REFERENCE.ground_truth()
    sq = squashed_state_of(REFERENCE.bank, REFERENCE.transfer)
    rep = bayesian_score(exact_sampler(gt, 10_000, 2), gt, sq)
    assert rep.delta_h > 0 and rep.delta_h / rep.sigma > 3
    assert rep.resamples == 100


def test_bayes_subsystem_growth():
    gt = REFERENCE.ground_truth()
    sq = squashed_state_of(REFERENCE.bank, REFERENCE.transfer)
    kl = []
    for sub in [(0,), (0, 1), (0, 1, 2)]:
        kl.append(kl_divergence(click_distribution(reduced_state(gt, sub)), click_distribution(reduced_state(sq, sub))))
    assert kl[0] <= kl[1] + 1e-15 <= kl[2] + 2e-15
    b = exact_sampler(gt, 100_000, 3)
    reps = [bayesian_score(b, gt, sq, sub) for sub in [(0,), (0, 1), (0, 1, 2)]]
    for got, want in zip(reps, kl):
        assert abs(got.delta_h - want) < 3 * got.sigma


@pytest.mark.parametrize("seed", [1, 2])
def test_bayes_converges_to_kl(seed):
    inst = random_instance(2, seed)
    gt = inst.ground_truth()
    h1 = thermal_state_of(inst.bank, inst.transfer)
    rep = bayesian_score(exact_sampler(gt, 100_000, seed), gt, h1)
    kl = kl_divergence(click_distribution(gt), click_distribution(h1))
    assert abs(rep.delta_h - kl) < 3 * rep.sigma


def test_bayes_zero_probability_pattern():
    b = SampleBatch([[1, 0]], "x")
    h1 = np.array([0.5, 0.0, 0.25, 0.25])
    with pytest.raises(ValueError, match="10"):
        bayesian_score(b, tmss(), h1)


def test_bayes_accepts_tables():
    gt = REFERENCE.ground_truth()
    b = exact_sampler(gt, 2000, 4)
    sq = squashed_state_of(REFERENCE.bank, REFERENCE.transfer)
    a = bayesian_score(b, gt, sq, (0, 2))
    t = bayesian_score(b, gt, click_distribution(reduced_state(sq, (0, 2))), (0, 2))
    assert a.delta_h == pytest.approx(t.delta_h, abs=1e-15)
