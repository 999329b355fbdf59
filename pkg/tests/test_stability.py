import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hawkes_inhibition.stability import (ConvergenceError, abs_matrix, check_c1, check_c2,
                                         check_c3, max_column_sum, positive_part,
                                         spectral_radius, stability_report)
from oracles import char_poly_spectral_radius

COUNTEREXAMPLE = np.array([[0.5, 1.0], [-2.0, 0.5]])


def square(max_dims=6, lo=-2.0, hi=2.0):
    return st.integers(1, max_dims).flatmap(
        lambda m: arrays(float, (m, m), elements=st.floats(lo, hi, allow_nan=False)))


def test_abs_and_positive_part():
    np.testing.assert_array_equal(abs_matrix(COUNTEREXAMPLE), [[0.5, 1], [2, 0.5]])
    np.testing.assert_array_equal(positive_part(COUNTEREXAMPLE), [[0.5, 1], [0, 0.5]])
    np.testing.assert_array_equal(positive_part(-np.ones((3, 3))), np.zeros((3, 3)))
    a = np.array([[0.1, 0.2], [0.0, 0.3]])
    np.testing.assert_array_equal(abs_matrix(a), a)
    np.testing.assert_array_equal(positive_part(a), a)
    np.testing.assert_array_equal(abs_matrix(np.zeros((2, 2))), np.zeros((2, 2)))


@pytest.mark.parametrize("a,rho", [
    (np.eye(2), 1.0),
    ([[0.5, 1.0], [2.0, 0.5]], 0.5 + np.sqrt(2.0)),
    ([[0.5, 1.0], [0.0, 0.5]], 0.5),
    ([[0.0, 1.0], [0.0, 0.0]], 0.0),  # nilpotent
    ([[0.0, 1.0], [1.0, 0.0]], 1.0),  # periodic
    (np.full((3, 3), 0.4), 1.2),
    (np.zeros((4, 4)), 0.0),
])
def test_spectral_radius_examples(a, rho):
    assert spectral_radius(a) == pytest.approx(rho, abs=1e-10)


def test_spectral_radius_errors():
    with pytest.raises(ValueError):
        spectral_radius([[1.0, -0.1], [0.0, 1.0]])
    with pytest.raises(ValueError):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(ConvergenceError):
        spectral_radius(np.array([[0.1, 0.9, 0.0], [0.0, 0.1, 0.8], [0.7, 0.0, 0.3]]), max_iter=2)


@settings(max_examples=500, deadline=None)
@given(square(max_dims=3, lo=0.0, hi=2.0))
def test_matches_characteristic_polynomial(a):
    assert spectral_radius(a) == pytest.approx(char_poly_spectral_radius(a), abs=1e-8)


@settings(max_examples=300, deadline=None)
@given(square())
def test_abs_dominates_positive_part(k):
    assert spectral_radius(abs_matrix(k)) >= spectral_radius(positive_part(k)) - 1e-12


@settings(max_examples=300, deadline=None)
@given(square(lo=0.0))
def test_bounded_by_column_sums(a):
    assert spectral_radius(a) <= max_column_sum(a) + 1e-10


@settings(max_examples=1000, deadline=None)
@given(square())
def test_implications(k):
    c3 = check_c3(k)
    assert not check_c1(k) or c3
    assert not check_c2(k) or c3


def test_counterexample_report():
    r = stability_report(COUNTEREXAMPLE)
    assert (r.c1, r.c2, r.c3) == (False, False, True)
    assert r.max_colsum_plus == 1.5
    assert r.format().splitlines()[0] == "C1: no, C2: no, C3: yes"


def test_report_edge_cases():
    r = stability_report(np.zeros((3, 3)))
    assert (r.c1, r.c2, r.c3) == (True, True, True) and r.rho_abs == r.rho_plus == 0.0
    r = stability_report(np.eye(2))
    assert (r.c1, r.c2, r.c3) == (False, False, False)
    assert not stability_report(np.full((3, 3), 0.4)).c3
