"""Stability criteria C1, C2, C3 for the excitation matrix K.

* C1: ``rho(|K|) < 1``
* C2: largest column sum of ``K+`` below 1
* C3: ``rho(K+) < 1``

C1 and C2 each imply C3, and C3 also accepts matrices that neither of the
older criteria can certify (e.g. ``[[0.5, 1], [-2, 0.5]]``).
"""

from __future__ import annotations

import warnings

from dataclasses import dataclass

import numpy as np
from scipy.linalg import matrix_balance


class ConvergenceError(RuntimeError):
    pass


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def abs_matrix(k) -> np.ndarray:
    return np.abs(_square(k))


def positive_part(k) -> np.ndarray:
    return np.maximum(_square(k), 0.0)


def max_column_sum(a) -> float:
    a = _square(a)
    return float(a.sum(axis=0).max()) if a.size else 0.0


def _strong_components(support: np.ndarray) -> list[np.ndarray]:
    """Strongly connected components of the directed graph ``i -> j`` iff
    ``support[i, j]``, via Warshall's transitive closure."""
    reach = support.copy()
    for k in range(reach.shape[0]):
        reach |= reach[:, k, None] & reach[None, k, :]
    mutual = reach & reach.T
    np.fill_diagonal(mutual, True)
    seen = np.zeros(reach.shape[0], dtype=bool)
    comps = []
    for i in range(reach.shape[0]):
        if not seen[i]:
            members = np.flatnonzero(mutual[i])
            seen[members] = True
            comps.append(members)
    return comps


def _perron_root(a: np.ndarray, tol: float, max_iter: int) -> float:
    """Perron root of an irreducible nonnegative block.

    The block is balanced by a diagonal similarity, scaled by its largest
    column sum (an upper bound on the root) and shifted by the identity, which
    makes it primitive. Power iteration then runs on successive squares of the
    shifted matrix, so step ``k`` applies its ``2**k``-th power and small
    spectral gaps close quickly. The Collatz-Wielandt bracket
    ``min(Ax/x) <= rho <= max(Ax/x)`` is the stopping rule, closed to ``tol``
    times the largest column sum of the original block.
    """
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0])
    norm = a.sum(axis=0).max()
    with warnings.catch_warnings():
        # the unused permutation output triggers a cast warning
        warnings.simplefilter("ignore", RuntimeWarning)
        a, _ = matrix_balance(a, permute=False)
    scale = a.sum(axis=0).max()
    a = a / scale
    tol = tol * norm / scale
    power = a + np.eye(n)
    x = np.ones(n)
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        ratio = (a @ x) / x
        lo, hi = ratio.min(), ratio.max()
        if hi - lo <= tol:
            return float(0.5 * (lo + hi) * scale)
        x = power @ x
        x /= x.max()
        if not np.all(x > 0.0):
            break
        power = power @ power
        power /= power.max()
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps "
        f"(bracket [{lo * scale}, {hi * scale}])"
    )


def spectral_radius(a, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Spectral radius of an entrywise nonnegative square matrix.

    The matrix is split into strongly connected components of its support
    graph; the spectral radius is the largest Perron root over the diagonal
    blocks. Nilpotent and triangular matrices are therefore handled exactly.

    Raises
    ------
    ValueError
        If ``a`` is not square or has negative entries.
    ConvergenceError
        If a block's Collatz-Wielandt bracket does not close within
        ``max_iter`` iterations.
    """
    a = _square(a)
    if np.any(a < 0.0):
        raise ValueError("spectral_radius expects an entrywise nonnegative matrix")
    if a.size == 0:
        return 0.0
    # Entries below norm * 1e-14**M move the root by at most about
    # (M * 1e-14**M)**(1/M) * norm, far below tol, but an extreme dynamic
    # range defeats the iteration, so they are dropped.
    n = a.shape[0]
    floor = max(max_column_sum(a) * 1e-14 ** n, np.finfo(float).tiny)
    a = np.where(a < floor, 0.0, a)
    rho = 0.0
    for idx in _strong_components(a > 0.0):
        block = a[np.ix_(idx, idx)]
        if not np.any(block):
            continue
        rho = max(rho, _perron_root(block, tol, max_iter))
    return rho


def check_c1(k) -> bool:
    return spectral_radius(abs_matrix(k)) < 1.0


def check_c2(k) -> bool:
    return max_column_sum(positive_part(k)) < 1.0


def check_c3(k) -> bool:
    return spectral_radius(positive_part(k)) < 1.0


@dataclass(frozen=True)
class StabilityReport:
    c1: bool
    c2: bool
    c3: bool
    rho_abs: float
    rho_plus: float
    max_colsum_plus: float

    def format(self) -> str:
        yes = {True: "yes", False: "no"}
        return "\n".join(
            [
                f"C1: {yes[self.c1]}, C2: {yes[self.c2]}, C3: {yes[self.c3]}",
                f"rho(abs K)         = {self.rho_abs:.10g}",
                f"rho(K+)            = {self.rho_plus:.10g}",
                f"max column sum K+  = {self.max_colsum_plus:.10g}",
            ]
        )


def stability_report(k) -> StabilityReport:
    k = _square(k)
    rho_abs = spectral_radius(abs_matrix(k))
    rho_plus = spectral_radius(positive_part(k))
    colsum = max_column_sum(positive_part(k))
    return StabilityReport(
        c1=rho_abs < 1.0,
        c2=colsum < 1.0,
        c3=rho_plus < 1.0,
        rho_abs=rho_abs,
        rho_plus=rho_plus,
        max_colsum_plus=colsum,
    )
