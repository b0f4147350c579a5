import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gbslab.errors import PhysicalityError
from gbslab.gaussian import GaussianState, click_distribution, husimi_matrix, torontonian
from gbslab.gaussian.kernels import hafnian, no_click_table, superset_moebius
from oracles import naive_hafnian


def test_hafnian_small_cases():
    assert hafnian(np.zeros((0, 0))) == 1
    assert hafnian(np.array([[0, 1], [1, 0]])) == pytest.approx(1)
    assert hafnian(np.ones((4, 4))) == pytest.approx(3)
    assert hafnian(np.ones((3, 3))) == 0


def test_hafnian_all_ones_double_factorial():
    for n in range(2, 17, 2):
        expected = math.prod(range(n - 1, 0, -2))
        assert hafnian(np.ones((n, n))).real == pytest.approx(expected, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    half=st.integers(1, 4),
    data=st.data(),
)
def test_hafnian_matches_matching_enumeration(half, data):
    n = 2 * half
    re = data.draw(arrays(float, (n, n), elements=st.floats(-2, 2)))
    im = data.draw(arrays(float, (n, n), elements=st.floats(-2, 2)))
    A = re + 1j * im
    A = A + A.T
    assert abs(hafnian(A) - naive_hafnian(A)) <= 1e-9 * max(1.0, abs(naive_hafnian(A)))


def test_hafnian_integer_matrix_exact():
    rng = np.random.default_rng(3)
    A = rng.integers(-3, 4, (8, 8)).astype(float)
    A = A + A.T
    assert hafnian(A).real == pytest.approx(naive_hafnian(A), abs=1e-8)


def _pattern_probs_from_torontonian(state):
    """p(S) = Tor(O_S) / sqrt(det Q) with O = I - Q^{-1} restricted to the clicked modes."""
    m = state.num_modes
    Q = husimi_matrix(state)
    O = np.eye(2 * m) - np.linalg.inv(Q)
    norm = np.sqrt(np.linalg.det(Q).real)
    out = np.empty(1 << m)
    for mask in range(1 << m):
        modes = [i for i in range(m) if (mask >> i) & 1]
        idx = modes + [i + m for i in modes]
        out[mask] = torontonian(O[np.ix_(idx, idx)]) / norm
    return out


def test_torontonian_empty_and_thermal():
    assert torontonian(np.zeros((0, 0))) == 1.0
    p = _pattern_probs_from_torontonian(GaussianState.thermal([1.0]))
    assert p[1] == pytest.approx(0.5, abs=1e-14)


def test_torontonian_pure_two_mode_normalisation():
    c, s = np.cosh(2.0), np.sinh(2.0)
    state = GaussianState(np.array([[c, s, 0, 0], [s, c, 0, 0], [0, 0, c, -s], [0, 0, -s, c]]))
    p = _pattern_probs_from_torontonian(state)
    assert p.sum() == pytest.approx(1, abs=1e-9)
    assert np.allclose(p, click_distribution(state), atol=1e-12)


def test_torontonian_equals_full_click_probability():
    rng = np.random.default_rng(5)
    from oracles import random_physical_cov

    V = random_physical_cov(3, rng, 0.6, 0.5)
    state = GaussianState(V)
    Q = husimi_matrix(state)
    O = np.eye(6) - np.linalg.inv(Q)
    p_all = click_distribution(state)[7]
    assert torontonian(O) / np.sqrt(np.linalg.det(Q).real) == pytest.approx(p_all, abs=1e-12)


def test_torontonian_names_singular_subset():
    O = np.eye(4)  # I - O = 0 is singular everywhere
    with pytest.raises(PhysicalityError, match=r"\["):
        torontonian(O)


def test_moebius_inverts_no_click_table():
    rng = np.random.default_rng(2)
    from oracles import random_physical_cov

    state = GaussianState(random_physical_cov(4, rng, 0.5, 0.5))
    g = no_click_table(husimi_matrix(state))
    p = superset_moebius(g, 4)
    assert p.sum() == pytest.approx(1, abs=1e-12)
    # no-click on mask A = sum of p over patterns with no click in A
    for A in range(16):
        assert g[A] == pytest.approx(sum(p[k] for k in range(16) if k & A == 0), abs=1e-12)
