"""Single-pass likelihood kernel.

For exponential kernels the history enters only through the decayed sums
``S_j(a) = sum_l exp(-beta (a - t_jl))`` per source dimension and rate. These
sums are linear in the history, so carrying them forward is exact even though
the ReLU clamp is applied to the total activation at every evaluation point.
"""

import numpy as np
from numba import njit

_WEIGHTS = (1.0, 3.0, 3.0, 1.0)


@njit(cache=True, nogil=True)
def scan(times, dims, t_max, mu, k, beta_diag, beta_off, n_sub=1):
    """Return ``(sum of log intensities at events, Simpson 3/8 compensator,
    zero_flag)``; ``times``/``dims`` are pooled and sorted by time.

    ``n_sub > 1`` splits every inter-event segment into equal parts, each
    integrated with the 3/8 rule."""
    m = mu.shape[0]
    n = times.shape[0]
    s_diag = np.zeros(m)
    s_off = np.zeros(m)
    cross = np.zeros(m)
    # decay factors at offsets 0, h/3, 2h/3, ... (nodes of every sub-segment)
    e_diag = np.empty(3 * n_sub + 1)
    e_off = np.empty(3 * n_sub + 1)
    log_sum = 0.0
    compensator = 0.0
    zero = False
    prev = 0.0
    i = 0
    while True:
        t = times[i] if i < n else t_max
        h = t - prev
        if h > 0.0:
            for d in range(m):
                c = 0.0
                for j in range(m):
                    if j != d:
                        c += k[j, d] * s_off[j]
                cross[d] = beta_off * c
            hs = h / n_sub
            r_diag = np.exp(-beta_diag * hs / 3.0)
            r_off = np.exp(-beta_off * hs / 3.0)
            e_diag[0] = 1.0
            e_off[0] = 1.0
            for q in range(1, 3 * n_sub + 1):
                e_diag[q] = e_diag[q - 1] * r_diag
                e_off[q] = e_off[q - 1] * r_off
            for d in range(m):
                self_coef = k[d, d] * beta_diag * s_diag[d]
                acc = 0.0
                for p in range(n_sub):
                    for q in range(4):
                        act = mu[d] + self_coef * e_diag[3 * p + q] + cross[d] * e_off[3 * p + q]
                        if act > 0.0:
                            acc += _WEIGHTS[q] * act
                compensator += hs / 8.0 * acc
            dd = e_diag[3 * n_sub]
            do = e_off[3 * n_sub]
            for j in range(m):
                s_diag[j] *= dd
                s_off[j] *= do
            prev = t
        if i >= n:
            break
        # events sharing this timestamp do not see each other
        end = i
        while end < n and times[end] == t:
            d = dims[end]
            act = mu[d] + k[d, d] * beta_diag * s_diag[d]
            for j in range(m):
                if j != d:
                    act += k[j, d] * beta_off * s_off[j]
            if act > 0.0:
                log_sum += np.log(act)
            else:
                zero = True
            end += 1
        for q in range(i, end):
            s_diag[dims[q]] += 1.0
            s_off[dims[q]] += 1.0
        i = end
    return log_sum, compensator, zero
