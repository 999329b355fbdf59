"""Bayesian inference for ``(mu, K*, beta_diag, beta_off)``.

Priors: ``mu_i ~ U(0, mu_upper)``, ``beta_diag, beta_off ~ U(0, beta_upper)``
and either ``K*_ij ~ N(0, 1)`` or the horseshoe ``K*_ij ~ N(0, xi_ij)``,
``xi_ij ~ half-Cauchy(0, 1)``, both truncated to K* whose induced K satisfies
C3. The truncation constant does not depend on the parameters, so it is left
out of the density.

The posterior is explored with adaptive random-walk Metropolis. The ReLU link
makes the likelihood non-differentiable wherever the clamp switches on or off,
which rules out gradient-based samplers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import _scan
from .core import ZERO_LIKELIHOOD, EventData, ModelParams
from .reparam import DegenerateParameterError, kstar_to_k
from .stability import check_c3

log = logging.getLogger(__name__)

PRIORS = ("normal", "horseshoe")
_LOG_HALF_CAUCHY_NORM = math.log(2.0 / math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class SamplerDiagnosticsError(RuntimeError):
    pass


@dataclass(frozen=True)
class PriorSpec:
    mu_upper: float = 10.0
    beta_upper: float = 3.0
    kstar_prior: str = "normal"
    # degenerate model with K* pinned at zero (homogeneous Poisson)
    fix_kstar_zero: bool = False

    def __post_init__(self):
        if self.kstar_prior not in PRIORS:
            raise ValueError(f"kstar_prior must be one of {PRIORS}, got {self.kstar_prior!r}")
        if not (self.mu_upper > 0 and self.beta_upper > 0):
            raise ValueError("prior upper bounds must be positive")

    @property
    def horseshoe(self) -> bool:
        return self.kstar_prior == "horseshoe" and not self.fix_kstar_zero


@dataclass
class PosteriorSample:
    mu: np.ndarray
    k_star: np.ndarray
    beta_diag: float
    beta_off: float
    xi: Optional[np.ndarray] = None
    log_posterior: float = float("nan")

    def params(self) -> ModelParams:
        return ModelParams(self.mu, kstar_to_k(self.k_star), self.beta_diag, self.beta_off)


def _normal_logpdf(x: np.ndarray, scale) -> float:
    z = x / scale
    return float(np.sum(-0.5 * z * z - np.log(scale) - _LOG_SQRT_2PI))


def _half_cauchy_logpdf(x: np.ndarray) -> float:
    return float(np.sum(_LOG_HALF_CAUCHY_NORM - np.log1p(x * x)))


def _stable_k(k_star: np.ndarray) -> Optional[np.ndarray]:
    try:
        k = kstar_to_k(k_star)
    except DegenerateParameterError:
        return None
    return k if check_c3(k) else None


def _kstar_log_density(k_star: np.ndarray, xi: Optional[np.ndarray], spec: PriorSpec) -> float:
    if spec.fix_kstar_zero:
        return 0.0 if not np.any(k_star) else -np.inf
    if spec.horseshoe:
        if xi is None or np.any(xi <= 0.0):
            return -np.inf
        return _normal_logpdf(k_star, xi) + _half_cauchy_logpdf(xi)
    return _normal_logpdf(k_star, 1.0)


def _box_log_density(mu: np.ndarray, beta_diag: float, beta_off: float, spec: PriorSpec) -> float:
    if np.any(mu <= 0.0) or np.any(mu >= spec.mu_upper):
        return -np.inf
    if not (0.0 < beta_diag < spec.beta_upper and 0.0 < beta_off < spec.beta_upper):
        return -np.inf
    return -mu.size * math.log(spec.mu_upper) - 2.0 * math.log(spec.beta_upper)


def log_prior(theta: PosteriorSample, spec: PriorSpec) -> float:
    """Log prior density (up to the truncation constant); ``-inf`` outside
    the support, including any K* whose induced K fails C3."""
    mu = np.asarray(theta.mu, dtype=float)
    k_star = np.asarray(theta.k_star, dtype=float).reshape(mu.size, mu.size)
    lp = _box_log_density(mu, theta.beta_diag, theta.beta_off, spec)
    if lp == -np.inf:
        return lp
    xi = None if theta.xi is None else np.asarray(theta.xi, dtype=float)
    lp += _kstar_log_density(k_star, xi, spec)
    if lp == -np.inf or _stable_k(k_star) is None:
        return -np.inf
    return lp


def _log_likelihood(times, dims, t_max, mu, k, beta_diag, beta_off) -> float:
    log_sum, lam, zero = _scan.scan(times, dims, t_max, mu, k, beta_diag, beta_off)
    return ZERO_LIKELIHOOD if zero else log_sum - lam


def log_likelihood(params: ModelParams, data: EventData) -> float:
    """Log-likelihood with the Simpson compensator, in one compiled pass."""
    times, dims = data.pooled()
    return _log_likelihood(times, dims, data.t_max, params.mu, params.k,
                           params.beta_diag, params.beta_off)


def log_posterior(theta: PosteriorSample, data: EventData, spec: PriorSpec) -> float:
    lp = log_prior(theta, spec)
    if lp == -np.inf:
        return lp
    k = kstar_to_k(np.asarray(theta.k_star, dtype=float).reshape(data.dims, data.dims))
    return lp + log_likelihood(ModelParams(theta.mu, k, theta.beta_diag, theta.beta_off), data)


# ---------------------------------------------------------------------------
# sampler


def parameter_names(m: int, spec: PriorSpec) -> list[str]:
    """Flat parameter order: mu, K* (column by column), beta_diag, beta_off, xi."""
    names = [f"mu_{i + 1}" for i in range(m)]
    names += [f"kstar_{i + 1}{j + 1}" for j in range(m) for i in range(m)]
    names += ["beta_diag", "beta_off"]
    if spec.horseshoe:
        names += [f"xi_{i + 1}{j + 1}" for j in range(m) for i in range(m)]
    return names


@dataclass
class PosteriorChains:
    """Retained draws, shape ``(n_chains, n_draws, n_params)``."""

    names: list[str]
    draws: np.ndarray
    log_posterior: np.ndarray
    dims: int
    acceptance: list[dict[str, float]] = field(default_factory=list)

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_draws(self) -> int:
        return self.draws.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, :, self.names.index(name)]

    def sample(self, chain: int, draw: int) -> PosteriorSample:
        m = self.dims
        row = self.draws[chain, draw]
        k_star = row[m:m + m * m].reshape(m, m, order="F")
        xi = row[m + m * m + 2:].reshape(m, m, order="F") if len(row) > m + m * m + 2 else None
        return PosteriorSample(row[:m].copy(), k_star.copy(), float(row[m + m * m]),
                               float(row[m + m * m + 1]), None if xi is None else xi.copy(),
                               float(self.log_posterior[chain, draw]))

    def samples(self, chain: int) -> Iterator[PosteriorSample]:
        for d in range(self.n_draws):
            yield self.sample(chain, d)


class _State:
    """Current chain position with cached pieces of the log posterior."""

    def __init__(self, mu, k_star, beta_diag, beta_off, log_xi, k, box, kstar_lp, loglik):
        self.mu = mu
        self.k_star = k_star
        self.beta = np.array([beta_diag, beta_off])
        self.log_xi = log_xi
        self.k = k
        self.box = box
        self.kstar_lp = kstar_lp
        self.loglik = loglik

    @property
    def log_target(self) -> float:
        # includes the log-Jacobian of sampling xi on the log scale
        jac = float(self.log_xi.sum()) if self.log_xi is not None else 0.0
        return self.box + self.kstar_lp + self.loglik + jac

    @property
    def log_posterior(self) -> float:
        return self.box + self.kstar_lp + self.loglik


class _ScalarStep:
    """Gaussian random-walk scale tuned by Robbins-Monro on log scale."""

    target = 0.44

    def __init__(self, scale: float):
        self.log_scale = math.log(scale)
        self.tries = 0
        self.accepts = 0

    @property
    def scale(self) -> float:
        return math.exp(self.log_scale)

    def record(self, accepted: bool, adapt: bool, gain: float):
        self.tries += 1
        self.accepts += accepted
        if adapt:
            self.log_scale += gain * (float(accepted) - self.target)


class _BlockStep:
    """Joint Gaussian proposal with empirical covariance and a Robbins-Monro
    global scale targeting 0.234 acceptance."""

    target = 0.234

    def __init__(self, dim: int, scale: float):
        self.dim = dim
        self.log_lambda = math.log(2.38 ** 2 / dim)
        self.cov = np.eye(dim) * scale ** 2
        self.chol = np.linalg.cholesky(self.cov)
        self.mean = np.zeros(dim)
        self.n = 0
        self.tries = 0
        self.accepts = 0

    def propose(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return x + math.exp(0.5 * self.log_lambda) * (self.chol @ rng.standard_normal(self.dim))

    def record(self, accepted: bool, adapt: bool, gain: float):
        self.tries += 1
        self.accepts += accepted
        if adapt:
            self.log_lambda += gain * (float(accepted) - self.target)

    def update_cov(self, x: np.ndarray, adapt: bool):
        if not adapt:
            return
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        if self.n == 1:
            self._m2 = np.zeros((self.dim, self.dim))
        self._m2 += np.outer(delta, x - self.mean)
        if self.n >= 2 * self.dim + 20 and self.n % 10 == 0:
            cov = self._m2 / (self.n - 1) + 1e-8 * np.eye(self.dim)
            try:
                self.chol = np.linalg.cholesky(cov)
                self.cov = cov
            except np.linalg.LinAlgError:
                pass


@dataclass(frozen=True)
class _ChainJob:
    times: np.ndarray
    dims: np.ndarray
    t_max: float
    m: int
    counts: np.ndarray
    spec: PriorSpec
    n_warmup: int
    n_draws: int
    thin: int
    seed: np.random.SeedSequence


def _initial_state(job: _ChainJob) -> _State:
    spec, m = job.spec, job.m
    mu = np.maximum(job.counts, 0.5) / job.t_max if job.t_max > 0 else np.ones(m)
    mu = np.minimum(mu, 0.5 * spec.mu_upper)
    k_star = np.zeros((m, m))
    beta = min(1.0, 0.5 * spec.beta_upper)
    log_xi = np.zeros((m, m)) if spec.horseshoe else None
    k = np.zeros((m, m))
    box = _box_log_density(mu, beta, beta, spec)
    kstar_lp = _kstar_log_density(k_star, None if log_xi is None else np.exp(log_xi), spec)
    loglik = _log_likelihood(job.times, job.dims, job.t_max, mu, k, beta, beta)
    return _State(mu, k_star, beta, beta, log_xi, k, box, kstar_lp, loglik)


def _run_chain(job: _ChainJob):
    rng = np.random.Generator(np.random.Philox(job.seed))
    spec, m = job.spec, job.m
    s = _initial_state(job)
    if not np.isfinite(s.log_target):
        raise SamplerDiagnosticsError("initial point has zero posterior density")

    mu_steps = [_ScalarStep(0.1 * s.mu[i]) for i in range(m)]
    beta_steps = [_ScalarStep(0.1), _ScalarStep(0.1)]
    kstar_step = None if spec.fix_kstar_zero else _BlockStep(m * m, 0.05)
    xi_steps = [_ScalarStep(0.5) for _ in range(m * m)] if spec.horseshoe else []
    # joint move over (mu, K*, beta) to follow correlations between blocks
    n_joint = m + 2 + (0 if spec.fix_kstar_zero else m * m)
    joint_step = _BlockStep(n_joint, 0.02)

    def joint_vector() -> np.ndarray:
        parts = [s.mu, s.beta] if spec.fix_kstar_zero else [s.mu, s.k_star.ravel(), s.beta]
        return np.concatenate(parts)

    def lik(mu, k, beta):
        return _log_likelihood(job.times, job.dims, job.t_max, mu, k, beta[0], beta[1])

    def accept(delta: float) -> bool:
        return delta >= 0.0 or rng.random() < math.exp(delta)

    def sweep(adapt: bool, gain: float):
        for i, step in enumerate(mu_steps):
            mu = s.mu.copy()
            mu[i] += step.scale * rng.standard_normal()
            box = _box_log_density(mu, s.beta[0], s.beta[1], spec)
            ok = False
            if box > -np.inf:
                ll = lik(mu, s.k, s.beta)
                if ll > -np.inf and accept(box + ll - s.box - s.loglik):
                    s.mu, s.box, s.loglik, ok = mu, box, ll, True
            step.record(ok, adapt, gain)
        for i, step in enumerate(beta_steps):
            beta = s.beta.copy()
            beta[i] += step.scale * rng.standard_normal()
            box = _box_log_density(s.mu, beta[0], beta[1], spec)
            ok = False
            if box > -np.inf:
                ll = lik(s.mu, s.k, beta)
                if ll > -np.inf and accept(box + ll - s.box - s.loglik):
                    s.beta, s.box, s.loglik, ok = beta, box, ll, True
            step.record(ok, adapt, gain)
        if kstar_step is not None:
            flat = s.k_star.ravel()
            k_star = kstar_step.propose(flat, rng).reshape(m, m)
            ok = False
            xi = None if s.log_xi is None else np.exp(s.log_xi)
            lp = _kstar_log_density(k_star, xi, spec)
            k = _stable_k(k_star) if lp > -np.inf else None
            if k is not None:
                ll = lik(s.mu, k, s.beta)
                if ll > -np.inf and accept(lp + ll - s.kstar_lp - s.loglik):
                    s.k_star, s.k, s.kstar_lp, s.loglik, ok = k_star, k, lp, ll, True
            kstar_step.record(ok, adapt, gain)
            kstar_step.update_cov(s.k_star.ravel(), adapt)
        x = joint_step.propose(joint_vector(), rng)
        mu, beta = x[:m], x[-2:]
        box = _box_log_density(mu, beta[0], beta[1], spec)
        ok = False
        if box > -np.inf:
            if spec.fix_kstar_zero:
                k_star, k, lp = s.k_star, s.k, s.kstar_lp
            else:
                k_star = x[m:m + m * m].reshape(m, m)
                lp = _kstar_log_density(k_star, None if s.log_xi is None else np.exp(s.log_xi), spec)
                k = _stable_k(k_star) if lp > -np.inf else None
            if k is not None:
                ll = lik(mu, k, beta)
                if ll > -np.inf and accept(box + lp + ll - s.box - s.kstar_lp - s.loglik):
                    s.mu, s.beta, s.k_star, s.k = mu, beta, k_star, k
                    s.box, s.kstar_lp, s.loglik, ok = box, lp, ll, True
        joint_step.record(ok, adapt, gain)
        joint_step.update_cov(joint_vector(), adapt)
        for idx, step in enumerate(xi_steps):
            log_xi = s.log_xi.copy()
            log_xi.flat[idx] += step.scale * rng.standard_normal()
            lp = _kstar_log_density(s.k_star, np.exp(log_xi), spec)
            delta = lp + log_xi.flat[idx] - s.kstar_lp - s.log_xi.flat[idx]
            ok = accept(delta)
            if ok:
                s.log_xi, s.kstar_lp = log_xi, lp
            step.record(ok, adapt, gain)

    all_steps = mu_steps + beta_steps + ([kstar_step] if kstar_step else []) + [joint_step] + xi_steps
    n_sweep = 0
    for it in range(job.n_warmup):
        for _ in range(job.thin):
            n_sweep += 1
            sweep(True, min(0.5, 10.0 / n_sweep ** 0.6))
    warm_rates = [st.accepts / st.tries if st.tries else 1.0 for st in all_steps]
    if job.n_warmup > 0 and min(warm_rates) < 1e-3:
        raise SamplerDiagnosticsError(
            f"warmup acceptance collapsed (min block rate {min(warm_rates):.2e})"
        )
    for st in all_steps:
        st.tries = st.accepts = 0

    n_par = m + m * m + 2 + (m * m if spec.horseshoe else 0)
    out = np.empty((job.n_draws, n_par))
    lps = np.empty(job.n_draws)
    for d in range(job.n_draws):
        for _ in range(job.thin):
            sweep(False, 0.0)
        row = [s.mu, s.k_star.ravel(order="F"), s.beta]
        if spec.horseshoe:
            row.append(np.exp(s.log_xi).ravel(order="F"))
        out[d] = np.concatenate(row)
        lps[d] = s.log_posterior

    names = ["mu"] * m + ["beta_diag", "beta_off"]
    rates = {f"{n}{'_' + str(i + 1) if n == 'mu' else ''}": st.accepts / max(st.tries, 1)
             for i, (n, st) in enumerate(zip(names, mu_steps + beta_steps))}
    if kstar_step is not None:
        rates["kstar"] = kstar_step.accepts / max(kstar_step.tries, 1)
    rates["joint"] = joint_step.accepts / max(joint_step.tries, 1)
    if xi_steps:
        rates["xi"] = float(np.mean([st.accepts / max(st.tries, 1) for st in xi_steps]))
    return out, lps, rates


def run_mcmc(data: EventData, spec: PriorSpec = PriorSpec(), n_chains: int = 4,
             n_warmup: int = 1500, n_draws: int = 188, seed: int = 0,
             thin: int = 10, threads: int = 1) -> PosteriorChains:
    """Sample the posterior with adaptive random-walk Metropolis.

    One iteration is ``thin`` sweeps; a sweep updates each ``mu_i``,
    ``beta_diag`` and ``beta_off`` by scalar steps, K* as one block, then
    ``(mu, K*, beta)`` jointly and, for the horseshoe, each ``log xi_ij`` by a
    scalar step. Proposal scales and the block covariances adapt during the
    ``n_warmup`` iterations only.

    Parameters
    ----------
    data : EventData
        Observed events; must contain at least one event.
    spec : PriorSpec
    n_chains, n_warmup, n_draws : int
        ``n_draws`` retained draws per chain after ``n_warmup`` iterations.
    seed : int
        Chains use independent streams spawned from ``seed``; results do not
        depend on ``threads``.
    thin : int
        Sweeps per iteration.
    threads : int
        Worker processes for running chains concurrently.

    Returns
    -------
    PosteriorChains

    Raises
    ------
    SamplerDiagnosticsError
        If some block accepts fewer than 0.1% of its warmup proposals.
    """
    if data.n_events == 0:
        raise ValueError("cannot fit an empty event record")
    if n_draws < 1 or n_chains < 1 or thin < 1 or n_warmup < 0:
        raise ValueError("n_chains, n_draws and thin must be positive, n_warmup non-negative")
    times, dims = data.pooled()
    jobs = [
        _ChainJob(np.ascontiguousarray(times), np.ascontiguousarray(dims), data.t_max, data.dims,
                  data.counts, spec, n_warmup, n_draws, thin, seq)
        for seq in np.random.SeedSequence(seed).spawn(n_chains)
    ]
    if threads <= 1 or n_chains == 1:
        results = [_run_chain(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(threads, n_chains)) as pool:
            results = list(pool.map(_run_chain, jobs))
    for c, (_, _, rates) in enumerate(results):
        log.info("chain %d acceptance: %s", c, {k: round(v, 3) for k, v in rates.items()})
    return PosteriorChains(
        names=parameter_names(data.dims, spec),
        draws=np.stack([r[0] for r in results]),
        log_posterior=np.stack([r[1] for r in results]),
        dims=data.dims,
        acceptance=[r[2] for r in results],
    )
