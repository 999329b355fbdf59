import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hawkes_inhibition.core import (ZERO_LIKELIHOOD, DomainError, EventData, KernelSpec,
                                    ModelParams, intensity, is_zero_likelihood, log_likelihood,
                                    raw_activation)
from oracles import riemann_compensator
from strategies import event_data, model_and_data, models


def one_dim(mu, k, beta, times, t_max):
    return ModelParams([mu], [[k]], beta, beta), EventData([times], t_max)


class TestEventData:
    def test_counts_and_pooling(self):
        data = EventData([[0.5, 2.0], [1.0], []], 3.0)
        assert data.dims == 3
        assert data.counts.tolist() == [2, 1, 0]
        times, dims = data.pooled()
        assert times.tolist() == [0.5, 1.0, 2.0]
        assert dims.tolist() == [0, 1, 0]

    def test_ties_sorted_by_dimension(self):
        times, dims = EventData([[1.0], [1.0]], 2.0).pooled()
        assert dims.tolist() == [0, 1]

    @pytest.mark.parametrize("times,t_max", [([[2.0, 1.0]], 3.0), ([[1.0, 1.0]], 3.0),
                                             ([[4.0]], 3.0), ([[-0.1]], 3.0), ([[]], -1.0)])
    def test_rejects_invalid(self, times, t_max):
        with pytest.raises(ValueError):
            EventData(times, t_max)

    def test_immutable(self):
        data = EventData([[1.0]], 2.0)
        with pytest.raises(ValueError):
            data.times[0][0] = 0.5


class TestModelParams:
    def test_beta_matrix(self):
        p = ModelParams([1, 1], np.zeros((2, 2)), 0.5, 2.0)
        np.testing.assert_array_equal(p.beta_matrix(), [[0.5, 2.0], [2.0, 0.5]])

    @pytest.mark.parametrize("kwargs", [
        dict(mu=[0.0], k=[[0.0]], beta_diag=1.0, beta_off=1.0),
        dict(mu=[1.0], k=[[0.0]], beta_diag=0.0, beta_off=1.0),
        dict(mu=[1.0, 1.0], k=[[0.0]], beta_diag=1.0, beta_off=1.0),
        dict(mu=[1.0], k=[[np.nan]], beta_diag=1.0, beta_off=1.0),
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ModelParams(**kwargs)

    def test_kernel(self):
        g = KernelSpec.from_params(ModelParams([1.0], [[0.5]], 2.0, 1.0))
        assert g(0, 0, 0.5) == pytest.approx(2.0 * math.exp(-1.0))
        assert g(0, 0, -0.1) == 0.0


class TestActivation:
    def test_empty_history(self):
        p, d = one_dim(0.15, -3.0, 1.0, [2.0], 5.0)
        assert raw_activation(p, d, 0, 1.0) == 0.15

    def test_excitation_value(self):
        p, d = one_dim(0.15, 0.5, 0.5, [1.0], 5.0)
        assert raw_activation(p, d, 0, 3.0) == pytest.approx(0.2419699, abs=1e-7)
        assert intensity(p, d, 0, 3.0) == pytest.approx(0.2419699, abs=1e-7)

    def test_inhibition_value_is_negative_before_clamp(self):
        p, d = one_dim(0.1, -2.0, 1.0, [1.0], 5.0)
        assert raw_activation(p, d, 0, 1.1) == pytest.approx(-1.7096748, abs=1e-7)
        assert intensity(p, d, 0, 1.1) == 0.0

    def test_event_at_t_does_not_count(self):
        p, d = one_dim(0.1, -2.0, 1.0, [1.0], 5.0)
        assert raw_activation(p, d, 0, 1.0) == 0.1

    def test_poisson_case_constant(self):
        p = ModelParams([0.15, 0.15], np.zeros((2, 2)), 1.0, 1.0)
        d = EventData([[1.0, 2.0], [1.5]], 3.0)
        for t in np.linspace(0, 3, 7):
            assert intensity(p, d, 1, t) == 0.15

    def test_cross_excitation_uses_column(self):
        # k[0, 1] is the influence of dimension 0 on dimension 1
        p = ModelParams([1.0, 1.0], [[0.0, 0.5], [0.0, 0.0]], 1.0, 2.0)
        d = EventData([[1.0], []], 3.0)
        assert raw_activation(p, d, 1, 2.0) == pytest.approx(1.0 + 0.5 * 2.0 * math.exp(-2.0))
        assert raw_activation(p, d, 0, 2.0) == 1.0

    def test_argument_errors(self):
        p, d = one_dim(0.1, 0.0, 1.0, [1.0], 5.0)
        with pytest.raises(IndexError):
            raw_activation(p, d, 1, 1.0)
        with pytest.raises(DomainError):
            raw_activation(p, d, 0, 6.0)

    @settings(max_examples=200, deadline=None)
    @given(model_and_data(), st.floats(0.0, 10.0))
    def test_intensity_nonnegative(self, pd, t):
        p, d = pd
        for m in range(p.dims):
            assert intensity(p, d, m, t) >= 0.0

    @settings(max_examples=100, deadline=None)
    @given(model_and_data(k_range=(0.0, 2.0)), st.floats(0.0, 10.0))
    def test_link_inactive_for_excitation(self, pd, t):
        p, d = pd
        for m in range(p.dims):
            assert intensity(p, d, m, t) == raw_activation(p, d, m, t)

    @settings(max_examples=100, deadline=None)
    @given(model_and_data(), st.data())
    def test_monotone_in_k(self, pd, draw):
        p, d = pd
        bump = np.array(draw.draw(st.lists(st.floats(0.0, 1.0), min_size=p.dims ** 2,
                                           max_size=p.dims ** 2))).reshape(p.dims, p.dims)
        q = p.with_k(p.k + bump)
        t = draw.draw(st.floats(0.0, 10.0))
        for m in range(p.dims):
            assert intensity(p, d, m, t) <= intensity(q, d, m, t) + 1e-12

    def test_relaxes_monotonically_towards_mu(self):
        for k in (0.8, -0.8):
            p, d = one_dim(0.5, k, 1.3, [1.0], 10.0)
            vals = np.array([raw_activation(p, d, 0, t) for t in np.linspace(1.01, 10.0, 50)])
            gaps = np.abs(vals - 0.5)
            assert np.all(np.diff(gaps) < 0)


class TestLogLikelihood:
    def test_poisson_closed_form(self):
        p = ModelParams([2.0], [[0.0]], 1.0, 1.0)
        d = EventData([np.linspace(0.25, 9.75, 20)], 10.0)
        assert log_likelihood(p, d, 20.0) == pytest.approx(20 * math.log(2) - 20, abs=1e-12)
        assert log_likelihood(p, d, 20.0) == pytest.approx(-6.1371, abs=1e-4)

    @settings(max_examples=50, deadline=None)
    @given(models(k_range=(0.0, 0.0)).flatmap(lambda p: st.tuples(st.just(p), event_data(p.dims))))
    def test_poisson_identity(self, pd):
        p, d = pd
        closed = float(np.sum(d.counts * np.log(p.mu) - p.mu * d.t_max))
        assert log_likelihood(p, d, float(p.mu.sum() * d.t_max)) == pytest.approx(closed, abs=1e-9)

    def test_zero_intensity_event(self):
        p, d = one_dim(0.1, -2.0, 1.0, [1.0, 1.2], 5.0)
        ll = log_likelihood(p, d, 0.3)
        assert ll == ZERO_LIKELIHOOD and is_zero_likelihood(ll)

    def test_against_quadrature(self):
        p, d = one_dim(1.0, 0.5, 1.0, [1.0, 2.0], 3.0)
        lam = riemann_compensator(p, d, step=1e-6)
        expected = math.log(1.0) + math.log(1.0 + 0.5 * math.exp(-1.0)) - lam
        assert log_likelihood(p, d, lam) == pytest.approx(expected, abs=1e-12)
        # closed form of the unclamped compensator
        assert lam == pytest.approx(3 + 0.5 * (1 - math.exp(-2)) + 0.5 * (1 - math.exp(-1)), abs=1e-9)

    def test_negative_compensator_rejected(self):
        p, d = one_dim(1.0, 0.0, 1.0, [1.0], 3.0)
        with pytest.raises(ValueError):
            log_likelihood(p, d, -1.0)
