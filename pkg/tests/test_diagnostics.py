import numpy as np
import pytest

from hawkes_inhibition.diagnostics import (TooFewDrawsError, effective_sample_size, histogram,
                                           split_rhat, summarize, summarize_draws)
from hawkes_inhibition.inference import PosteriorChains


def test_constant_chain():
    s = summarize_draws("c", np.full((2, 10), 3.0))
    assert s.mean == 3.0 and s.sd == 0.0
    assert not s.rhat_defined and np.isnan(s.rhat)


def test_hand_computed_mean_sd():
    x = np.array([[1.0, 3.0, 1.0, 3.0], [2.0, 4.0, 2.0, 4.0]])
    s = summarize_draws("x", x)
    assert s.mean == 2.5
    assert s.sd == pytest.approx(np.sqrt(((x - 2.5) ** 2).sum() / 7))
    assert s.covers(2.0) and not s.covers(5.0)


def test_rhat_detects_disagreement():
    rng = np.random.default_rng(0)
    iid = rng.standard_normal((4, 500))
    assert abs(split_rhat(iid) - 1.0) < 0.02
    shifted = iid + np.arange(4)[:, None]
    assert split_rhat(shifted) > 1.5
    trending = iid + np.linspace(0, 3, 500)
    assert split_rhat(trending) > 1.1


def test_ess():
    rng = np.random.default_rng(1)
    iid = rng.standard_normal((4, 1000))
    assert 3000 < effective_sample_size(iid) <= 4000
    phi = 0.9
    ar = np.zeros((4, 5000))
    for t in range(1, 5000):
        ar[:, t] = phi * ar[:, t - 1] + rng.standard_normal(4)
    ess = effective_sample_size(ar)
    expected = 20000 * (1 - phi) / (1 + phi)
    assert 0.7 * expected < ess < 1.3 * expected


def test_too_few_draws():
    with pytest.raises(TooFewDrawsError):
        summarize_draws("x", np.array([[1.0]]))
    with pytest.raises(TooFewDrawsError):
        split_rhat(np.ones((2, 3)))


def test_summarize_chains():
    rng = np.random.default_rng(2)
    chains = PosteriorChains(["a", "b"], rng.standard_normal((2, 50, 2)),
                             np.zeros((2, 50)), dims=1)
    summary = summarize(chains)
    assert summary.names == ["a", "b"]
    assert summary["b"].mean == pytest.approx(chains.draws[:, :, 1].mean())
    with pytest.raises(KeyError):
        summary["c"]


def test_histogram_freedman_diaconis():
    x = np.random.default_rng(3).standard_normal(1000)
    edges, counts = histogram(x)
    np.testing.assert_allclose(edges, np.histogram_bin_edges(x, bins="fd"))
    assert counts.sum() == 1000
    edges, counts = histogram(np.full(5, 2.0))
    assert counts.tolist() == [5]
