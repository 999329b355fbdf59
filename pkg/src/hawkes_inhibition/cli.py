"""Command-line front end: ``simulate``, ``stability``, ``fit``, ``summarize``.

Exit codes: 0 success, 1 input error, 2 stability refusal, 3 sampler
diagnostics failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .diagnostics import TooFewDrawsError, summarize, summarize_draws
from .inference import SamplerDiagnosticsError, run_mcmc
from .reparam import DegenerateParameterError, expected_counts, kstar_to_k
from .simulation import (SimConfig, SimulationExplosion, UnstableParametersError,
                         replicate_counts, simulate)
from .stability import stability_report

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNSTABLE = 2
EXIT_SAMPLER = 3


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("HAWKES_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise io.InputError(f"HAWKES_THREADS must be an integer, got {env!r}")
    return 1


def _output(arg: Optional[str], cfg: Optional[io.RunConfig], key: str) -> Optional[Path]:
    if arg is not None:
        return Path(arg)
    return cfg.path(key) if cfg is not None else None


def _require_model(cfg: io.RunConfig) -> io.ModelSection:
    if cfg.model is None:
        raise io.InputError("config has no 'model' section")
    return cfg.model


def cmd_simulate(args) -> int:
    cfg = io.load_config(args.config)
    model = _require_model(cfg)
    try:
        params = model.params()
    except DegenerateParameterError as exc:
        raise io.InputError(f"model.kstar: {exc}") from exc
    seed = args.seed if args.seed is not None else cfg.sim.seed
    sim = SimConfig(params, cfg.sim.t_max, seed=seed)
    try:
        data, record = simulate(sim)
    except UnstableParametersError as exc:
        print(exc.report.format())
        print("refusing to simulate: K+ fails C3", file=sys.stderr)
        return EXIT_UNSTABLE

    events = _output(args.events, cfg, "events")
    branching = _output(args.branching, cfg, "branching")
    if events is not None:
        io.write_events(events, data)
    if branching is not None:
        io.write_branching(branching, record)

    print(f"seed: {seed}")
    print(f"t_max: {cfg.sim.t_max:g}")
    print(f"mu: {np.array2string(params.mu, separator=', ')}")
    print(f"k:\n{np.array2string(params.k, precision=4, separator=', ')}")
    print(f"beta_diag: {params.beta_diag:g}  beta_off: {params.beta_off:g}")
    print(f"counts: {', '.join(map(str, data.counts))} (total {data.n_events})")
    if events is not None:
        print(f"events written to {events}")

    if cfg.sim.replicates > 1:
        counts = replicate_counts(sim, cfg.sim.replicates, threads=_threads(args))
        mean = counts.mean(axis=0)
        se = counts.std(axis=0, ddof=1) / np.sqrt(len(counts))
        total = counts.sum(axis=1)
        print(f"replicates: {len(counts)}")
        for i, (a, s) in enumerate(zip(mean, se)):
            print(f"  dimension {i + 1}: mean {a:.2f} (MC SE {s:.2f})")
        print(f"  total: mean {total.mean():.2f} (MC SE {total.std(ddof=1) / np.sqrt(len(total)):.2f})")
        if np.all(params.k >= 0):
            lin = expected_counts(params, cfg.sim.t_max)
            print(f"  expected (excitation only): {np.array2string(lin, precision=2, separator=', ')}")
        out = _output(None, cfg, "counts")
        if out is not None:
            np.savetxt(out, counts, fmt="%d", delimiter=",",
                       header=",".join(f"dimension_{i + 1}" for i in range(params.dims)), comments="")
    return EXIT_OK


def cmd_stability(args) -> int:
    path = Path(args.input)
    if path.suffix.lower() in (".yaml", ".yml"):
        model = _require_model(io.load_config(path))
        try:
            k = kstar_to_k(model.k_star)
        except DegenerateParameterError as exc:
            raise io.InputError(f"model.kstar: {exc}") from exc
    else:
        k = io.read_matrix(path)
    report = stability_report(k)
    print(report.format())
    return EXIT_OK if report.c3 else EXIT_UNSTABLE


def cmd_fit(args) -> int:
    cfg = io.load_config(args.config)
    events = _output(args.events, cfg, "events")
    if events is None:
        raise io.InputError("no events file given (argument or io.events)")
    m = cfg.model.dims if cfg.model is not None else args.dims
    t_max = args.t_max if args.t_max is not None else cfg.sim.t_max
    data = io.read_events(events, t_max, m)
    if data.n_events == 0:
        raise io.InputError(f"{events} contains no events")
    seed = args.seed if args.seed is not None else cfg.fit.seed
    chains = run_mcmc(data, io.prior_spec(cfg), n_chains=cfg.fit.chains, n_warmup=cfg.fit.warmup,
                      n_draws=cfg.fit.draws, seed=seed, thin=cfg.fit.thin, threads=_threads(args))
    draws = _output(args.draws, cfg, "draws")
    if draws is not None:
        io.write_draws(draws, chains)
    truth = cfg.model.truth(chains.names) if cfg.model is not None else None
    table = io.summary_table(summarize(chains).parameters, truth)
    print(table)
    summary = _output(args.summary, cfg, "summary")
    if summary is not None:
        summary.write_text(table + "\n")
    return EXIT_OK


def cmd_summarize(args) -> int:
    names, draws = io.read_draws(args.draws)
    if draws.shape[0] * draws.shape[1] < 2:
        raise io.InputError("summarize needs at least 2 draws")
    truth = None
    if args.truth is not None:
        truth = _require_model(io.load_config(args.truth)).truth(names)
    try:
        rows = [summarize_draws(n, draws[:, :, i]) for i, n in enumerate(names)]
    except TooFewDrawsError as exc:
        raise io.InputError(str(exc)) from exc
    table = io.summary_table(rows, truth)
    print(table)
    if args.summary is not None:
        Path(args.summary).write_text(table + "\n")
    if args.histograms is not None:
        io.write_histograms(args.histograms, names, draws)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hawkes-inhib",
        description="Hawkes processes with excitation and inhibition: simulation, stability, fitting.",
    )
    parser.add_argument("--seed", type=int, default=None, help="override every seed in the config")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker processes for replicates/chains (default: $HAWKES_THREADS or 1)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate events from a config")
    p.add_argument("config")
    p.add_argument("--events", help="events CSV output (default: io.events)")
    p.add_argument("--branching", help="branching CSV output (default: io.branching)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stability", help="check C1/C2/C3 for a config or matrix CSV")
    p.add_argument("input", help="YAML config or headerless CSV matrix")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("fit", help="sample the posterior for an events CSV")
    p.add_argument("config")
    p.add_argument("events", nargs="?", help="events CSV (default: io.events)")
    p.add_argument("--t-max", type=float, default=None, help="observation window (default: sim.t_max)")
    p.add_argument("--dims", type=int, default=None, help="number of dimensions if the config has no model")
    p.add_argument("--draws", help="draws CSV output (default: io.draws)")
    p.add_argument("--summary", help="summary table output (default: io.summary)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("summarize", help="summarize a draws CSV")
    p.add_argument("draws")
    p.add_argument("--truth", help="config whose model section holds the true values")
    p.add_argument("--summary", help="summary table output")
    p.add_argument("--histograms", help="histogram CSV output (Freedman-Diaconis bins)")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (io.InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SimulationExplosion as exc:
        print(f"simulation failure: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except SamplerDiagnosticsError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLER


if __name__ == "__main__":
    sys.exit(main())
