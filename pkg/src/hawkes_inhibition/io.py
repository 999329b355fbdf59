"""File formats: run configs (YAML), event / branching / draws CSVs, summary
tables and histogram CSVs.

Event CSVs have the header ``dimension,time`` with 1-based dimensions and
times written with 17 significant digits, so reading a written file gives
back identical floats.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .core import EventData, ModelParams
from .diagnostics import ParameterSummary, histogram
from .inference import PRIORS, PosteriorChains, PriorSpec
from .reparam import k_to_kstar, kstar_to_k
from .simulation import IMMIGRANT, BranchingRecord

CONFIG_VERSION = 1
EVENTS_HEADER = ("dimension", "time")
BRANCHING_HEADER = ("event_id", "dimension", "time", "parent_id")


class InputError(ValueError):
    """Malformed or inconsistent user input (config, CSV, matrix)."""


def format_time(t: float) -> str:
    return np.format_float_positional(float(t), precision=17, unique=False, fractional=False,
                                      trim="k")


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class ModelSection:
    mu: np.ndarray
    k_star: np.ndarray
    beta_diag: float
    beta_off: float

    @property
    def dims(self) -> int:
        return self.mu.size

    def params(self) -> ModelParams:
        return ModelParams(self.mu, kstar_to_k(self.k_star), self.beta_diag, self.beta_off)

    def truth(self, names: Sequence[str]) -> dict[str, float]:
        """True values keyed by draws-CSV parameter name."""
        m = self.dims
        values = {f"mu_{i + 1}": float(self.mu[i]) for i in range(m)}
        values.update({f"kstar_{i + 1}{j + 1}": float(self.k_star[i, j])
                       for i in range(m) for j in range(m)})
        values.update(beta_diag=self.beta_diag, beta_off=self.beta_off)
        return {n: values[n] for n in names if n in values}


@dataclass(frozen=True)
class SimSection:
    t_max: float = 1500.0
    seed: int = 0
    replicates: int = 1


@dataclass(frozen=True)
class FitSection:
    prior: str = "normal"
    chains: int = 4
    warmup: int = 1500
    draws: int = 188
    seed: int = 0
    thin: int = 10


@dataclass(frozen=True)
class RunConfig:
    model: Optional[ModelSection]
    sim: SimSection = SimSection()
    fit: FitSection = FitSection()
    io: dict[str, str] = field(default_factory=dict)

    def path(self, key: str) -> Optional[Path]:
        value = self.io.get(key)
        return None if value is None else Path(value)


def _matrix(value, name: str, m: int) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"model.{name} is not a numeric matrix") from exc
    if a.shape != (m, m):
        raise InputError(f"model.{name} must be {m}x{m}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"model.{name} has non-finite entries")
    return a


def _model_section(raw: dict) -> ModelSection:
    if ("k" in raw) == ("kstar" in raw):
        raise InputError("model needs exactly one of 'k' or 'kstar'")
    try:
        mu = np.array(raw["mu"], dtype=float).reshape(-1)
        m = int(raw.get("M", mu.size))
        beta_diag = float(raw["beta_diag"])
        beta_off = float(raw["beta_off"])
    except KeyError as exc:
        raise InputError(f"model is missing {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"model has a malformed value: {exc}") from exc
    if mu.size != m:
        raise InputError(f"model.mu has {mu.size} entries but M = {m}")
    if not (np.all(mu > 0) and beta_diag > 0 and beta_off > 0):
        raise InputError("mu, beta_diag and beta_off must be positive")
    if "kstar" in raw:
        k_star = _matrix(raw["kstar"], "kstar", m)
    else:
        try:
            k_star = k_to_kstar(_matrix(raw["k"], "k", m))
        except ValueError as exc:
            raise InputError(f"model.k: {exc}") from exc
    return ModelSection(mu, k_star, beta_diag, beta_off)


def _section(cls, raw, name):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise InputError(f"'{name}' must be a mapping")
    unknown = set(raw) - set(cls.__dataclass_fields__)
    if unknown:
        raise InputError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        out = cls(**{k: type(getattr(cls(), k))(v) for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        raise InputError(f"'{name}' has a malformed value: {exc}") from exc
    return out


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise InputError("config must be a mapping")
    if doc.get("version") != CONFIG_VERSION:
        raise InputError(f"config version must be {CONFIG_VERSION}, got {doc.get('version')!r}")
    unknown = set(doc) - {"version", "model", "sim", "fit", "io"}
    if unknown:
        raise InputError(f"unknown config sections: {sorted(unknown)}")
    model = None
    if doc.get("model") is not None:
        if not isinstance(doc["model"], dict):
            raise InputError("'model' must be a mapping")
        model = _model_section(doc["model"])
    sim = _section(SimSection, doc.get("sim"), "sim")
    fit = _section(FitSection, doc.get("fit"), "fit")
    if not sim.t_max > 0 or sim.replicates < 1:
        raise InputError("sim.t_max must be positive and sim.replicates at least 1")
    if fit.prior not in PRIORS:
        raise InputError(f"fit.prior must be one of {PRIORS}")
    if min(fit.chains, fit.draws, fit.thin) < 1 or fit.warmup < 0:
        raise InputError("fit.chains, fit.draws and fit.thin must be positive")
    io = doc.get("io") or {}
    if not isinstance(io, dict):
        raise InputError("'io' must be a mapping")
    return RunConfig(model, sim, fit, {str(k): str(v) for k, v in io.items()})


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InputError(f"config {path} is not valid YAML: {exc}") from exc
    return parse_config(doc)


def prior_spec(cfg: RunConfig) -> PriorSpec:
    return PriorSpec(kstar_prior=cfg.fit.prior)


# ---------------------------------------------------------------------------
# matrices and events


def read_matrix(path) -> np.ndarray:
    """Square matrix from a headerless comma-separated file."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
        a = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except OSError as exc:
        raise InputError(f"cannot read matrix {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"matrix {path} is malformed: {exc}") from exc
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.size == 0:
        raise InputError(f"matrix {path} is not square")
    if not np.all(np.isfinite(a)):
        raise InputError(f"matrix {path} has non-finite entries")
    return a


def write_events(path, data: EventData) -> None:
    times, dims = data.pooled()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENTS_HEADER)
        for t, d in zip(times, dims):
            w.writerow([int(d) + 1, format_time(t)])


def read_events(path, t_max: float, dims: Optional[int] = None) -> EventData:
    """Read an events CSV; ``dims`` defaults to the largest dimension seen."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != EVENTS_HEADER:
                raise InputError(f"{path}: expected header 'dimension,time'")
            rows = [(int(r[0]), float(r[1])) for r in reader if r]
    except OSError as exc:
        raise InputError(f"cannot read events {path}: {exc}") from exc
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: malformed row: {exc}") from exc
    seen = max((d for d, _ in rows), default=0)
    m = dims if dims is not None else seen
    if m < 1:
        raise InputError(f"{path}: no events and no dimension count given")
    if any(d < 1 or d > m for d, _ in rows):
        raise InputError(f"{path}: dimensions must lie in 1..{m}")
    per_dim: list[list[float]] = [[] for _ in range(m)]
    for d, t in rows:
        per_dim[d - 1].append(t)
    try:
        return EventData([sorted(ts) for ts in per_dim], t_max)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_branching(path, record: BranchingRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BRANCHING_HEADER)
        for i, (t, d, p) in enumerate(zip(record.times, record.dims, record.parent)):
            w.writerow([i + 1, int(d) + 1, format_time(t), 0 if p == IMMIGRANT else int(p) + 1])


def read_branching(path) -> BranchingRecord:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader)) != BRANCHING_HEADER:
            raise InputError(f"{path}: expected header {','.join(BRANCHING_HEADER)}")
        rows = [r for r in reader if r]
    times = np.array([float(r[2]) for r in rows])
    dims = np.array([int(r[1]) - 1 for r in rows], dtype=np.int64)
    parent = np.array([int(r[3]) - 1 if int(r[3]) else IMMIGRANT for r in rows], dtype=np.int64)
    return BranchingRecord(times, dims, parent)


# ---------------------------------------------------------------------------
# draws, summaries, histograms


def write_draws(path, chains: PosteriorChains) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["chain", "draw", *chains.names])
        for c in range(chains.n_chains):
            for d in range(chains.n_draws):
                w.writerow([c + 1, d + 1, *(repr(float(v)) for v in chains.draws[c, d])])


def read_draws(path) -> tuple[list[str], np.ndarray]:
    """Parameter names and draws of shape ``(n_chains, n_draws, n_params)``.

    Chains must have equal length."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [r for r in reader if r]
    except OSError as exc:
        raise InputError(f"cannot read draws {path}: {exc}") from exc
    if not header or header[:2] != ["chain", "draw"] or len(header) < 3:
        raise InputError(f"{path}: expected header 'chain,draw,<parameters>'")
    names = header[2:]
    try:
        chain_ids = np.array([int(r[0]) for r in rows], dtype=int)
        values = np.array([[float(v) for v in r[2:]] for r in rows], dtype=float).reshape(-1, len(names))
    except ValueError as exc:
        raise InputError(f"{path}: malformed row: {exc}") from exc
    ids = np.unique(chain_ids)
    sizes = {int((chain_ids == c).sum()) for c in ids}
    if len(sizes) > 1:
        raise InputError(f"{path}: chains have unequal lengths {sorted(sizes)}")
    draws = np.stack([values[chain_ids == c] for c in ids]) if ids.size else np.empty((0, 0, len(names)))
    return names, draws


def _fmt(x: float, digits: int = 2) -> str:
    return "nan" if not math.isfinite(x) else f"{x:.{digits}f}"


def summary_table(rows: Sequence[ParameterSummary], truth: Optional[dict[str, float]] = None) -> str:
    """Aligned text table: parameter, true value, mean (sd), 95% interval,
    R-hat, ESS and, when the truth is known, coverage."""
    head = ["parameter"] + (["true"] if truth else []) + ["mean (sd)", "95% CI", "R-hat", "ESS"]
    if truth:
        head.append("covered")
    body = []
    for p in rows:
        line = [p.name]
        if truth:
            line.append(_fmt(truth[p.name]) if p.name in truth else "")
        line += [f"{_fmt(p.mean)} ({_fmt(p.sd)})", f"[{_fmt(p.lower)}, {_fmt(p.upper)}]",
                 _fmt(p.rhat, 3) if p.rhat_defined else "n/a", f"{p.ess:.0f}"]
        if truth:
            line.append(("yes" if p.covers(truth[p.name]) else "no") if p.name in truth else "")
        body.append(line)
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    out = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [head] + body]
    out.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(out)


def write_histograms(path, names: Sequence[str], draws: np.ndarray) -> None:
    """Freedman-Diaconis histograms of pooled draws, long format."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "bin_left", "bin_right", "count"])
        for i, name in enumerate(names):
            edges, counts = histogram(draws[:, :, i])
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                w.writerow([name, repr(float(lo)), repr(float(hi)), int(c)])

