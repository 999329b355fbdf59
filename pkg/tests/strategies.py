"""Hypothesis strategies shared by the property tests."""

import numpy as np
from hypothesis import strategies as st

from hawkes_inhibition.core import EventData, ModelParams


@st.composite
def models(draw, max_dims=3, k_range=(-2.0, 2.0), equal_beta=False):
    m = draw(st.integers(1, max_dims))
    fl = lambda lo, hi: st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    mu = draw(st.lists(fl(0.05, 2.0), min_size=m, max_size=m))
    k = draw(st.lists(fl(*k_range), min_size=m * m, max_size=m * m))
    beta_diag = draw(fl(0.1, 3.0))
    beta_off = beta_diag if equal_beta else draw(fl(0.1, 3.0))
    return ModelParams(mu, np.reshape(k, (m, m)), beta_diag, beta_off)


@st.composite
def event_data(draw, m, t_max=10.0, max_events=12):
    times = []
    for _ in range(m):
        ts = draw(st.lists(st.floats(0.0, t_max, allow_nan=False), max_size=max_events, unique=True))
        times.append(sorted(ts))
    return EventData(times, t_max)


@st.composite
def model_and_data(draw, **kwargs):
    params = draw(models(**kwargs))
    data = draw(event_data(params.dims))
    return params, data
