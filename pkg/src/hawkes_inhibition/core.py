"""Domain types and intensity mathematics for the multivariate Hawkes process
with excitation and inhibition under the ReLU link.

Conventions
-----------
``k[i, j]`` is the signed average number of direct offsprings that an event in
dimension ``i`` triggers in dimension ``j``. The kernel between ``i`` and ``j``
is exponential with rate ``beta_diag`` when ``i == j`` and ``beta_off``
otherwise. Only events strictly before ``t`` contribute to the intensity at
``t`` (left limit at event times).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Log-likelihood value used when an observed event sits where the intensity is
# clamped to zero. It is the smallest representable float, never NaN.
ZERO_LIKELIHOOD = -np.inf


class DomainError(ValueError):
    """Evaluation time outside the observation window."""


def is_zero_likelihood(value: float) -> bool:
    """True when ``value`` is the zero-likelihood sentinel."""
    return value == ZERO_LIKELIHOOD


@dataclass(frozen=True)
class EventData:
    """Multivariate event record on ``[0, t_max]``.

    ``times[m]`` holds the strictly increasing event times of dimension ``m``.
    """

    t_max: float
    times: tuple[np.ndarray, ...]
    _pooled: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)

    def __init__(self, times: Sequence[Sequence[float]], t_max: float):
        arrays = tuple(np.array(ts, dtype=float).reshape(-1) for ts in times)
        if len(arrays) < 1:
            raise ValueError("EventData needs at least one dimension")
        t_max = float(t_max)
        if not t_max >= 0.0:
            raise ValueError(f"t_max must be non-negative, got {t_max}")
        for m, ts in enumerate(arrays):
            if ts.size and (ts[0] < 0.0 or ts[-1] > t_max):
                raise ValueError(f"dimension {m}: event times must lie in [0, {t_max}]")
            if ts.size > 1 and np.any(np.diff(ts) <= 0.0):
                raise ValueError(f"dimension {m}: event times must be strictly increasing")
            ts.setflags(write=False)
        object.__setattr__(self, "times", arrays)
        object.__setattr__(self, "t_max", t_max)
        object.__setattr__(self, "_pooled", _pool(arrays))

    @property
    def dims(self) -> int:
        return len(self.times)

    @property
    def counts(self) -> np.ndarray:
        return np.array([ts.size for ts in self.times], dtype=int)

    @property
    def n_events(self) -> int:
        return int(sum(ts.size for ts in self.times))

    def pooled(self) -> tuple[np.ndarray, np.ndarray]:
        """All events sorted by (time, dimension) as ``(times, dims)``."""
        return self._pooled

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventData):
            return NotImplemented
        return (
            self.t_max == other.t_max
            and self.dims == other.dims
            and all(np.array_equal(a, b) for a, b in zip(self.times, other.times))
        )

    __hash__ = None  # type: ignore[assignment]


def _pool(arrays: tuple[np.ndarray, ...]) -> tuple[np.ndarray, np.ndarray]:
    if not arrays:
        return np.empty(0), np.empty(0, dtype=np.int64)
    times = np.concatenate(arrays)
    dims = np.concatenate([np.full(ts.size, m, dtype=np.int64) for m, ts in enumerate(arrays)])
    order = np.lexsort((dims, times))
    times, dims = times[order], dims[order]
    times.setflags(write=False)
    dims.setflags(write=False)
    return times, dims


@dataclass(frozen=True)
class ModelParams:
    """Natural parametrization: background rates, signed K, two kernel rates."""

    mu: np.ndarray
    k: np.ndarray
    beta_diag: float
    beta_off: float

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        k = np.array(self.k, dtype=float)
        if k.ndim == 0 and mu.size == 1:
            k = k.reshape(1, 1)
        if k.shape != (mu.size, mu.size):
            raise ValueError(f"k must be {mu.size}x{mu.size}, got shape {k.shape}")
        if not np.all(mu > 0.0):
            raise ValueError("mu must be strictly positive")
        if not np.all(np.isfinite(k)):
            raise ValueError("k must be finite")
        if not (self.beta_diag > 0.0 and self.beta_off > 0.0):
            raise ValueError("beta_diag and beta_off must be strictly positive")
        mu.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "beta_diag", float(self.beta_diag))
        object.__setattr__(self, "beta_off", float(self.beta_off))

    @property
    def dims(self) -> int:
        return self.mu.size

    def beta_matrix(self) -> np.ndarray:
        m = self.dims
        beta = np.full((m, m), self.beta_off)
        np.fill_diagonal(beta, self.beta_diag)
        return beta

    def with_k(self, k) -> "ModelParams":
        return ModelParams(self.mu, k, self.beta_diag, self.beta_off)


@dataclass(frozen=True)
class KernelSpec:
    """Exponential kernels ``g_ij(x) = beta_ij * exp(-beta_ij * x)``."""

    beta: np.ndarray

    @classmethod
    def from_params(cls, params: ModelParams) -> "KernelSpec":
        return cls(params.beta_matrix())

    def __call__(self, i: int, j: int, x):
        b = self.beta[i, j]
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, b * np.exp(-b * np.maximum(x, 0.0)), 0.0)


def _check_args(params: ModelParams, data: EventData, dim: int, t: float):
    if params.dims != data.dims:
        raise ValueError(f"params have {params.dims} dimensions, data has {data.dims}")
    if not 0 <= dim < params.dims:
        raise IndexError(f"dimension {dim} out of range for M={params.dims}")
    if not 0.0 <= t <= data.t_max:
        raise DomainError(f"t={t} outside [0, {data.t_max}]")


def _activation(params: ModelParams, data: EventData, dim: int, t: float,
                upto: float, inclusive: bool) -> float:
    # history is the set of events before ``upto`` (or at it, when inclusive)
    beta = params.beta_matrix()
    total = params.mu[dim]
    for j, ts in enumerate(data.times):
        kj = params.k[j, dim]
        if kj == 0.0 or ts.size == 0:
            continue
        n = np.searchsorted(ts, upto, side="right" if inclusive else "left")
        if n == 0:
            continue
        b = beta[j, dim]
        total += kj * b * np.exp(-b * (t - ts[:n])).sum()
    return float(total)


def raw_activation(params: ModelParams, data: EventData, dim: int, t: float) -> float:
    """Pre-link activation ``mu_dim + sum K[j, dim] g_j,dim(t - t_jl)`` over
    events strictly before ``t``. May be negative."""
    _check_args(params, data, dim, t)
    return _activation(params, data, dim, t, t, inclusive=False)


def intensity(params: ModelParams, data: EventData, dim: int, t: float) -> float:
    """ReLU-linked intensity ``max(0, raw_activation)``."""
    return max(0.0, raw_activation(params, data, dim, t))


def log_likelihood(params: ModelParams, data: EventData, compensator: float) -> float:
    """Point-process log-likelihood ``sum log lambda_m(t_mi) - compensator``.

    Parameters
    ----------
    params : ModelParams
    data : EventData
    compensator : float
        Integrated intensity over ``[0, t_max]`` summed over dimensions, as
        returned by :func:`hawkes_inhibition.integration.compensator_simpson`.

    Returns
    -------
    float
        The log-likelihood, or :data:`ZERO_LIKELIHOOD` if any observed event
        has zero intensity at its own time.
    """
    if compensator < 0.0:
        raise ValueError("compensator must be non-negative")
    if params.dims != data.dims:
        raise ValueError(f"params have {params.dims} dimensions, data has {data.dims}")
    total = 0.0
    for m, ts in enumerate(data.times):
        for t in ts:
            lam = max(0.0, _activation(params, data, m, t, t, inclusive=False))
            if lam <= 0.0:
                return ZERO_LIKELIHOOD
            total += np.log(lam)
    return float(total - compensator)
