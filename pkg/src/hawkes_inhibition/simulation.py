"""Event generation for the Hawkes process with inhibition.

Events are proposed from the excitation-only process with ``K+`` using its
cluster (immigrant/offspring) representation, then thinned towards the
signed-K target. :func:`thin_branching` removes a rejected event together
with its entire offspring cascade, so every retained event's parent is
retained as well.

Random numbers come from Philox streams derived from one seed: a stream per
dimension for immigrants, one per immigrant cascade, and one for the thinning
uniforms.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import EventData, ModelParams
from .stability import check_c3, positive_part, stability_report

IMMIGRANT = -1


class UnstableParametersError(ValueError):
    def __init__(self, report):
        super().__init__("K+ fails stability condition C3:\n" + report.format())
        self.report = report


class SimulationExplosion(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"simulation exceeded max_events={cap} (reached {count} events)")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    t_max: float
    seed: int = 0
    max_events: int = 1_000_000

    def __post_init__(self):
        if not self.t_max >= 0.0:
            raise ValueError("t_max must be non-negative")
        if self.max_events <= 0:
            raise ValueError("max_events must be positive")


@dataclass(frozen=True)
class BranchingRecord:
    """Pooled, time-ordered events with their parent pointers.

    ``parent[i]`` is the index of the direct parent of event ``i`` or
    :data:`IMMIGRANT`.
    """

    times: np.ndarray
    dims: np.ndarray
    parent: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(len(self))]
        for i, p in enumerate(self.parent):
            if p != IMMIGRANT:
                kids[p].append(i)
        return kids

    def offspring_closure(self, i: int, children: Optional[list[list[int]]] = None) -> set[int]:
        """All direct and indirect offsprings of event ``i``."""
        kids = self.children() if children is None else children
        out: set[int] = set()
        stack = list(kids[i])
        while stack:
            j = stack.pop()
            out.add(j)
            stack.extend(kids[j])
        return out

    @property
    def generation(self) -> np.ndarray:
        gen = np.zeros(len(self), dtype=int)
        for i, p in enumerate(self.parent):
            if p != IMMIGRANT:
                gen[i] = gen[p] + 1  # parents precede children
        return gen

    def check(self) -> None:
        """Assert parents exist and precede their children."""
        idx = np.arange(len(self))
        offspring = self.parent != IMMIGRANT
        if np.any(self.parent[offspring] >= idx[offspring]) or np.any(self.parent[offspring] < 0):
            raise AssertionError("parent pointers must point to earlier retained events")
        if np.any(self.times[self.parent[offspring]] > self.times[offspring]):
            raise AssertionError("parent event later than its offspring")

    def to_event_data(self, n_dims: int, t_max: float) -> EventData:
        return EventData([self.times[self.dims == m] for m in range(n_dims)], t_max)

    def subset(self, keep: np.ndarray) -> "BranchingRecord":
        """Restrict to ``keep`` (bool mask); every kept event's parent must be kept."""
        new_index = np.full(len(self), -2, dtype=np.int64)
        new_index[keep] = np.arange(int(keep.sum()))
        parent = self.parent[keep]
        has_parent = parent != IMMIGRANT
        remapped = parent.copy()
        remapped[has_parent] = new_index[parent[has_parent]]
        if np.any(remapped[has_parent] < 0):
            raise AssertionError("retained event whose parent was removed")
        return BranchingRecord(self.times[keep], self.dims[keep], remapped)


def _philox(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seq))


def _streams(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    immigrants, thinning = np.random.SeedSequence(seed).spawn(2)
    return immigrants, thinning


def simulate_branching_positive(cfg: SimConfig) -> tuple[EventData, BranchingRecord]:
    """Sample the excitation-only process with ``K+`` via its cluster form.

    Immigrants in dimension ``i`` arrive as a Poisson process with rate
    ``mu_i``; an event in ``i`` begets ``Poisson(K+_ij)`` children in ``j``
    at exponential delays with rate ``beta_ij``. Offsprings after ``t_max``
    are dropped together with their descendants.
    """
    params = cfg.params
    kp = positive_part(params.k)
    if not check_c3(kp):
        raise UnstableParametersError(stability_report(params.k))
    beta = params.beta_matrix()
    m, t_max = params.dims, cfg.t_max

    times: list[float] = []
    dims: list[int] = []
    parent: list[int] = []

    imm_seq, _ = _streams(cfg.seed)
    for i, seq in enumerate(imm_seq.spawn(m)):
        rng = _philox(seq)
        arrivals = []
        t = rng.exponential(1.0 / params.mu[i])
        while t <= t_max:
            arrivals.append(t)
            t += rng.exponential(1.0 / params.mu[i])
        for s, cseq in zip(arrivals, seq.spawn(len(arrivals))):
            crng = _philox(cseq)
            queue = [len(times)]
            times.append(s)
            dims.append(i)
            parent.append(IMMIGRANT)
            while queue:
                p = queue.pop()
                tp, dp = times[p], dims[p]
                for j in range(m):
                    if kp[dp, j] == 0.0:
                        continue
                    n_kids = crng.poisson(kp[dp, j])
                    if n_kids == 0:
                        continue
                    for tc in tp + crng.exponential(1.0 / beta[dp, j], n_kids):
                        if tc > t_max:
                            continue
                        queue.append(len(times))
                        times.append(float(tc))
                        dims.append(j)
                        parent.append(p)
                if len(times) > cfg.max_events:
                    raise SimulationExplosion(len(times), cfg.max_events)

    t_arr = np.array(times, dtype=float)
    d_arr = np.array(dims, dtype=np.int64)
    p_arr = np.array(parent, dtype=np.int64)
    order = np.lexsort((np.arange(t_arr.size), d_arr, t_arr))
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    p_sorted = p_arr[order]
    has_parent = p_sorted != IMMIGRANT
    p_sorted[has_parent] = rank[p_sorted[has_parent]]
    record = BranchingRecord(t_arr[order], d_arr[order], p_sorted)
    return record.to_event_data(m, t_max), record


def _sweep(params: ModelParams, record: BranchingRecord, u: np.ndarray, classic: bool) -> np.ndarray:
    """Time-ordered thinning pass; returns the keep mask.

    ``classic``: the dominating intensity uses the full proposal history and
    each event is thinned on its own. Otherwise the dominating intensity
    uses the retained history and rejections remove whole cascades.
    """
    m = params.dims
    w_target = params.k * params.beta_matrix()
    w_bound = positive_part(params.k) * params.beta_matrix()
    rates = np.array([params.beta_diag, params.beta_off])
    # row 0: sums decayed at beta_diag, row 1: at beta_off, one column per source
    s_kept = np.zeros((2, m))
    s_all = np.zeros((2, m))
    pending_kept: list[int] = []
    pending_all: list[int] = []
    keep = np.ones(len(record), dtype=bool)
    kids = None if classic else record.children()
    eye = np.eye(m, dtype=bool)
    t_state = 0.0

    for i in range(len(record)):
        t = record.times[i]
        if t > t_state:
            for j in pending_kept:
                s_kept[:, j] += 1.0
            for j in pending_all:
                s_all[:, j] += 1.0
            pending_kept.clear()
            pending_all.clear()
            decay = np.exp(-rates * (t - t_state))[:, None]
            s_kept *= decay
            s_all *= decay
            t_state = t
        if not keep[i]:
            continue  # already removed with an ancestor
        d = record.dims[i]
        hist_kept = np.where(eye[d], s_kept[0], s_kept[1])
        a = max(0.0, params.mu[d] + w_target[:, d] @ hist_kept)
        hist_bound = np.where(eye[d], s_all[0], s_all[1]) if classic else hist_kept
        b = params.mu[d] + w_bound[:, d] @ hist_bound
        if not b > 0.0:
            raise AssertionError("dominating intensity must be positive at a proposal event")
        if classic:
            pending_all.append(d)
        if u[i] > a / b:
            keep[i] = False
            if not classic:
                for j in record.offspring_closure(i, kids):
                    keep[j] = False
        else:
            pending_kept.append(d)
    return keep


def _uniforms(cfg: SimConfig, n: int) -> np.ndarray:
    _, thin_seq = _streams(cfg.seed)
    return _philox(thin_seq).random(n)


def thin_classic(cfg: SimConfig, proposal: tuple[EventData, BranchingRecord]) -> EventData:
    """Independent thinning: keep event ``i`` with probability
    ``lambda(t_i | K, retained) / lambda(t_i | K+, full proposal)``."""
    _, record = proposal
    keep = _sweep(cfg.params, record, _uniforms(cfg, len(record)), classic=True)
    kept = BranchingRecord(record.times[keep], record.dims[keep],
                           np.full(int(keep.sum()), IMMIGRANT, dtype=np.int64))
    return kept.to_event_data(cfg.params.dims, cfg.t_max)


def thin_branching(cfg: SimConfig,
                   proposal: tuple[EventData, BranchingRecord]) -> tuple[EventData, BranchingRecord]:
    """Thinning that keeps the genealogy intact.

    Events are visited in time order; an event still present is kept with
    probability ``lambda(t_i | K, Y) / lambda(t_i | K+, Y)`` where ``Y`` is the
    currently retained set. A rejected event is removed together with all of
    its direct and indirect offsprings.
    """
    _, record = proposal
    keep = _sweep(cfg.params, record, _uniforms(cfg, len(record)), classic=False)
    out = record.subset(keep)
    return out.to_event_data(cfg.params.dims, cfg.t_max), out


def simulate(cfg: SimConfig) -> tuple[EventData, BranchingRecord]:
    """Sample from the signed-K target with its branching structure."""
    return thin_branching(cfg, simulate_branching_positive(cfg))


def replicate_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def _count_one(cfg: SimConfig) -> np.ndarray:
    return simulate(cfg)[0].counts


def replicate_counts(cfg: SimConfig, n: int, threads: int = 1) -> np.ndarray:
    """Per-dimension event counts of ``n`` independent replicates, shape ``(n, M)``.

    Replicate seeds depend only on ``cfg.seed``, so the result does not depend
    on ``threads``.
    """
    cfgs = [dataclasses.replace(cfg, seed=s) for s in replicate_seeds(cfg.seed, n)]
    if threads <= 1:
        rows = [_count_one(c) for c in cfgs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_count_one, cfgs))
    return np.array(rows, dtype=int).reshape(n, cfg.params.dims)
