"""Total-offspring reparametrization.

``K* = (I - K)^-1 - I`` counts direct plus indirect offsprings per immigrant
(``K + K^2 + K^3 + ...`` for stable excitation-only K). Its inverse is
``K = I - (K* + I)^-1``.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .core import ModelParams
from .stability import check_c3

PIVOT_RTOL = 1e-12


class DegenerateParameterError(ValueError):
    """Raised when a matrix that must be inverted is numerically singular."""


def _inverse(a: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=True)
    # U's diagonal holds the pivots; compare them with the matrix scale
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    if np.any(np.abs(np.diag(lu)) <= PIVOT_RTOL * scale):
        raise DegenerateParameterError("matrix is singular to working precision")
    return lu_solve((lu, piv), np.eye(a.shape[0]))


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    return x


def k_to_kstar(k) -> np.ndarray:
    """Total-offspring matrix ``(I - K)^-1 - I``."""
    k = _as_matrix(k)
    eye = np.eye(k.shape[0])
    return _inverse(eye - k) - eye


def kstar_to_k(k_star) -> np.ndarray:
    """Direct-offspring matrix ``I - (K* + I)^-1``."""
    k_star = _as_matrix(k_star)
    eye = np.eye(k_star.shape[0])
    return eye - _inverse(k_star + eye)


def expected_counts(params: ModelParams, t_max: float) -> np.ndarray:
    """Expected events per dimension, ``(K* + I)^T mu t_max``.

    Exact for excitation-only K up to edge effects; for signed K this is the
    linear (unclamped) prediction.
    """
    if not check_c3(params.k):
        raise ValueError("expected counts are only defined for stable K (C3)")
    k_star = k_to_kstar(params.k)
    return (k_star + np.eye(params.dims)).T @ params.mu * float(t_max)
