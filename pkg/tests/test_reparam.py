import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hawkes_inhibition.core import ModelParams
from hawkes_inhibition.reparam import (DegenerateParameterError, expected_counts, k_to_kstar,
                                       kstar_to_k)
from oracles import random_stable_k

KSTAR_7 = np.array([[0.3, -0.3, 0.0], [0.0, 0.3, 0.3], [0.0, -0.3, 0.0]])


@pytest.mark.parametrize("k,kstar", [(np.zeros((3, 3)), np.zeros((3, 3))), ([[0.5]], [[1.0]]),
                                     ([[-1.0]], [[-0.5]])])
def test_examples(k, kstar):
    np.testing.assert_allclose(k_to_kstar(k), kstar, atol=1e-15)
    np.testing.assert_allclose(kstar_to_k(kstar), k, atol=1e-15)


def test_reference_matrix_round_trip():
    k = kstar_to_k(KSTAR_7)
    np.testing.assert_allclose(k_to_kstar(k), KSTAR_7, atol=1e-10)


def test_singular_input():
    with pytest.raises(DegenerateParameterError):
        k_to_kstar(np.eye(2))
    with pytest.raises(DegenerateParameterError):
        kstar_to_k(-np.eye(2))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_round_trip(m, seed):
    k = random_stable_k(np.random.default_rng(seed), m)
    np.testing.assert_allclose(k_to_kstar(kstar_to_k(k_to_kstar(k))), k_to_kstar(k), atol=1e-10)
    np.testing.assert_allclose(kstar_to_k(k_to_kstar(k)), k, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_neumann_series(m, seed):
    rng = np.random.default_rng(seed)
    k = np.abs(random_stable_k(rng, m))
    k *= 0.6 / max(np.abs(np.linalg.eigvals(k)).max(), 0.6)  # keep 50 terms accurate
    series, power = np.zeros((m, m)), np.eye(m)
    for _ in range(50):
        power = power @ k
        series += power
    np.testing.assert_allclose(k_to_kstar(k), series, atol=1e-8)


def test_expected_counts_examples():
    mu = np.full(3, 0.15)
    p = ModelParams(mu, np.zeros((3, 3)), 0.5, 0.5)
    np.testing.assert_allclose(expected_counts(p, 1500), [225, 225, 225])
    p = ModelParams(mu, kstar_to_k(KSTAR_7), 0.5, 0.5)
    np.testing.assert_allclose(expected_counts(p, 1500), [292.5, 157.5, 292.5], atol=1e-9)
    assert expected_counts(ModelParams([1.0], [[0.5]], 1, 1), 100)[0] == pytest.approx(200.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_expected_counts_alternative_form(m, seed):
    rng = np.random.default_rng(seed)
    p = ModelParams(rng.uniform(0.1, 2, m), random_stable_k(rng, m), 1.0, 1.0)
    alt = np.linalg.solve(np.eye(m) - p.k.T, p.mu) * 7.5
    np.testing.assert_allclose(expected_counts(p, 7.5), alt, atol=1e-10)


def test_expected_counts_unstable():
    with pytest.raises(ValueError):
        expected_counts(ModelParams(np.ones(3), np.full((3, 3), 0.4), 1, 1), 10)
