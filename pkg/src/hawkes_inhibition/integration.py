"""Compensator ``Lambda = sum_m int_0^T lambda_m(x) dx`` under the ReLU link.

Two routes are provided:

* :func:`compensator_simpson` applies the cubic (3/8) Simpson rule on every
  segment between consecutive pooled event times, with the clamped intensity
  evaluated at the four nodes and the history frozen at the segment start.
* :func:`compensator_exact_equal_beta` integrates exactly when all kernel
  rates are equal, by locating where the activation leaves the clamp.

Root finding for unequal rates (a generalized polynomial per segment) is not
provided.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _scan
from .core import EventData, ModelParams


@dataclass(frozen=True)
class SegmentGrid:
    """Sorted, deduplicated breakpoints ``0 = x_1 < ... < x_P = t_max``."""

    breakpoints: np.ndarray

    @classmethod
    def from_data(cls, data: EventData) -> "SegmentGrid":
        times, _ = data.pooled()
        pts = np.unique(np.concatenate([[0.0], times, [data.t_max]]))
        return cls(pts)

    def segments(self):
        return zip(self.breakpoints[:-1], self.breakpoints[1:])


def _check(params: ModelParams, data: EventData):
    if params.dims != data.dims:
        raise ValueError(f"params have {params.dims} dimensions, data has {data.dims}")


def _segment_coefficients(params: ModelParams, data: EventData, a: float) -> np.ndarray:
    """``c[j, m] = sum_{t_jl <= a} K[j, m] beta_jm exp(-beta_jm (a - t_jl))``.

    Activation on ``[a, next event)`` is ``mu_m + sum_j c[j, m] exp(-beta_jm (t - a))``.
    """
    beta = params.beta_matrix()
    m = params.dims
    c = np.zeros((m, m))
    for j, ts in enumerate(data.times):
        hist = ts[: np.searchsorted(ts, a, side="right")]
        if hist.size == 0:
            continue
        for d in range(m):
            b = beta[j, d]
            c[j, d] = params.k[j, d] * b * np.exp(-b * (a - hist)).sum()
    return c


def compensator_simpson(params: ModelParams, data: EventData, method: str = "scan",
                        n_sub: int = 1) -> float:
    """Approximate the compensator with the 3/8 Simpson rule per segment.

    Parameters
    ----------
    params, data
        Model and observed events.
    method : {"scan", "direct"}
        ``"scan"`` carries exponential sums forward in one compiled pass;
        ``"direct"`` re-sums the full history at every segment. Both evaluate
        the same quadrature and agree to rounding error.
    n_sub : int
        Equal sub-segments per inter-event segment (``"scan"`` only). The
        default of 1 is the plain per-segment rule; larger values help when
        segments are long compared with ``1 / beta``.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be at least 1")
    _check(params, data)
    if method == "scan":
        times, dims = data.pooled()
        _, lam, _ = _scan.scan(times, dims, data.t_max, params.mu, params.k,
                               params.beta_diag, params.beta_off, n_sub)
        return float(lam)
    if method != "direct" or n_sub != 1:
        raise ValueError(f"unsupported method {method!r} with n_sub={n_sub}")

    beta = params.beta_matrix()
    nodes = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
    weights = np.array([1.0, 3.0, 3.0, 1.0])
    total = 0.0
    for a, b in SegmentGrid.from_data(data).segments():
        c = _segment_coefficients(params, data, a)
        x = nodes * (b - a)
        for d in range(params.dims):
            act = params.mu[d] + (c[:, d, None] * np.exp(-beta[:, d, None] * x)).sum(axis=0)
            total += (b - a) / 8.0 * float(weights @ np.maximum(act, 0.0))
    return total


class Crossing(NamedTuple):
    time: float
    direction: int  # +1: activation rises through zero, -1: falls through zero


def _equal_beta(params: ModelParams) -> float:
    if params.beta_diag != params.beta_off:
        raise ValueError("exact integration requires beta_diag == beta_off")
    return params.beta_diag


def roots_equal_beta(params: ModelParams, data: EventData, dim: int,
                     segment: tuple[float, float]) -> Optional[Crossing]:
    """Zero crossing of the activation of ``dim`` inside the open ``segment``.

    With a single kernel rate the activation on an event-free segment is
    ``mu + c exp(-beta (t - a))``, which is monotone, so there is at most one
    crossing. Solving gives ``t = log(-mu / sum K beta exp(beta t_i)) / -beta``.
    Returns ``None`` if the activation keeps its sign on the segment.
    """
    _check(params, data)
    beta = _equal_beta(params)
    if not 0 <= dim < params.dims:
        raise IndexError(f"dimension {dim} out of range for M={params.dims}")
    a, b = map(float, segment)
    c = _segment_coefficients(params, data, a)[:, dim].sum()
    if c >= 0.0:
        return None
    # mu > 0, so a negative start relaxes upwards: only rising crossings exist
    t = a + np.log(-c / params.mu[dim]) / beta
    if not a < t < b:
        return None
    return Crossing(float(t), +1)


def _positive_part_integral(mu: float, c: float, beta: float, a: float, b: float) -> float:
    """``int_a^b max(0, mu + c exp(-beta (t - a))) dt`` for ``mu > 0``."""
    length = b - a
    if c < 0.0 and mu + c < 0.0:
        start = np.log(-c / mu) / beta  # offset of the up-crossing from a
        if start >= length:
            return 0.0
        return mu * (length - start) + c * (np.exp(-beta * start) - np.exp(-beta * length)) / beta
    return mu * length + c * (-np.expm1(-beta * length)) / beta


def compensator_exact_equal_beta(params: ModelParams, data: EventData) -> float:
    """Exact compensator for ``beta_diag == beta_off``.

    On each segment between pooled event times the activation is a single
    exponential relaxing towards ``mu``; the clamped part (before the
    up-crossing) contributes nothing and the rest integrates in closed form.
    """
    _check(params, data)
    beta = _equal_beta(params)
    total = 0.0
    for a, b in SegmentGrid.from_data(data).segments():
        c = _segment_coefficients(params, data, a).sum(axis=0)
        for d in range(params.dims):
            total += _positive_part_integral(params.mu[d], c[d], beta, a, b)
    return float(total)
