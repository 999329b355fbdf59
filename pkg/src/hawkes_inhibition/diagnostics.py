"""Posterior summaries: mean, sd, central 95% interval, ESS and split-R-hat."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri


class TooFewDrawsError(ValueError):
    pass


@dataclass(frozen=True)
class ParameterSummary:
    name: str
    mean: float
    sd: float
    lower: float
    upper: float
    ess: float
    rhat: float
    rhat_defined: bool

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class ChainSummary:
    parameters: list[ParameterSummary]
    n_chains: int
    n_draws: int

    def __getitem__(self, name: str) -> ParameterSummary:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parameters]


def _as_chains(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("expected draws of shape (n_chains, n_draws)")
    return x


def _rhat_basic(chains: np.ndarray) -> float:
    n = chains.shape[1]
    within = chains.var(axis=1, ddof=1).mean()
    between = n * chains.mean(axis=1).var(ddof=1)
    var_plus = (n - 1) / n * within + between / n
    return float(np.sqrt(var_plus / within))


def _split(chains: np.ndarray) -> np.ndarray:
    half = chains.shape[1] // 2
    return np.concatenate([chains[:, :half], chains[:, -half:]], axis=0)


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    flat = x.ravel()
    order = flat.argsort(kind="mergesort")
    ranks = np.empty(flat.size)
    ranks[order] = np.arange(1, flat.size + 1)
    # average ranks over ties
    _, inverse, counts = np.unique(flat, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=ranks)
    ranks = (sums / counts)[inverse]
    return ndtri((ranks - 0.375) / (flat.size + 0.25)).reshape(x.shape)


def split_rhat(x) -> float:
    """Rank-normalized split R-hat (max of bulk and folded-tail versions).

    Returns NaN when the draws have no within-chain variation.
    """
    chains = _as_chains(x)
    if chains.shape[1] < 4:
        raise TooFewDrawsError("split R-hat needs at least 4 draws per chain")
    split = _split(chains)
    if np.all(split.var(axis=1) == 0.0):
        return float("nan")
    bulk = _rhat_basic(_rank_normalize(split))
    folded = np.abs(split - np.median(split))
    tail = _rhat_basic(_rank_normalize(folded)) if np.any(folded.var(axis=1) > 0) else bulk
    return max(bulk, tail)


def _autocov(x: np.ndarray) -> np.ndarray:
    n = x.size
    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    return acov


def effective_sample_size(x) -> float:
    """Multi-chain ESS with Geyer's initial positive sequence: autocorrelations
    are summed in consecutive pairs until the first negative pair sum."""
    chains = _as_chains(x)
    n_chains, n = chains.shape
    total = n_chains * n
    if n < 2:
        raise TooFewDrawsError("ESS needs at least 2 draws per chain")
    acov = np.array([_autocov(c) for c in chains])
    chain_var = acov[:, 0] * n / (n - 1)
    within = chain_var.mean()
    if within == 0.0:
        return float(total)
    var_plus = within * (n - 1) / n
    if n_chains > 1:
        var_plus += chains.mean(axis=1).var(ddof=1)
    rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    tau = -1.0
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0.0:
            break
        tau += 2.0 * pair
        t += 2
    tau = max(tau, 1.0 / np.log10(total))
    return float(min(total / tau, total))


def summarize_draws(name: str, x) -> ParameterSummary:
    chains = _as_chains(x)
    if chains.size < 2:
        raise TooFewDrawsError("need at least 2 draws")
    flat = chains.ravel()
    rhat = split_rhat(chains) if chains.shape[1] >= 4 else float("nan")
    lo, hi = np.quantile(flat, [0.025, 0.975])
    return ParameterSummary(
        name=name,
        mean=float(flat.mean()),
        sd=float(flat.std(ddof=1)),
        lower=float(lo),
        upper=float(hi),
        ess=effective_sample_size(chains),
        rhat=rhat,
        rhat_defined=bool(np.isfinite(rhat)),
    )


def summarize(chains) -> ChainSummary:
    """Summaries for every parameter of a
    :class:`~hawkes_inhibition.inference.PosteriorChains`."""
    draws = chains.draws
    if draws.shape[0] < 1 or draws.shape[0] * draws.shape[1] < 2:
        raise TooFewDrawsError("need at least one chain and two draws")
    params = [summarize_draws(n, draws[:, :, i]) for i, n in enumerate(chains.names)]
    return ChainSummary(params, draws.shape[0], draws.shape[1])


def histogram(x, name: str = "") -> tuple[np.ndarray, np.ndarray]:
    """Freedman-Diaconis histogram of pooled draws as ``(edges, counts)``."""
    flat = np.asarray(x, dtype=float).ravel()
    if np.ptp(flat) == 0.0:
        edges = np.array([flat[0] - 0.5, flat[0] + 0.5])
    else:
        edges = np.histogram_bin_edges(flat, bins="fd")
    counts, edges = np.histogram(flat, bins=edges)
    return edges, counts
