"""Command-line front end: topology | bounds | stability | genexp.

Usage::

    dsgdlab <command> --config experiment.ini [--out DIR] [--threads K]
                      [--no-figures]

Each command writes its CSV (plus a rendered PNG companion and a JSON
metadata sidecar) into the output directory, resolved as: ``--out`` flag,
then the ``OUTPUT_DIR`` environment variable, then ``output.directory`` from
the config (relative to the config file), then ``out``.

Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error.

Seed layout: ``algo.seed`` is the root for the Monte Carlo experiments
(dataset redraws, swap values, schedules -- see ``dsgdlab.stability``);
``data.seed`` seeds the single dataset the ``bounds`` command uses to
estimate constants and initialization gaps.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .config import ConfigError, ExperimentConfig, load_config
from .datagen import partition, sample, subseed
from .losses import estimate_constants
from .reports import format_value, write_csv, write_metadata
from .stability import generalization_experiment, sample_pair_subset, stability_experiment
from .topology import diagnostics

_TOPOLOGY_HEADER = ["graph", "m", "spectral_gap", "max_norm", "connectivity_sum",
                    "min_diag", "lambda_min", "cw_limit", "cw_converged"]
_ECHO_KEYS = ["L", "beta", "mu", "sigma", "c", "eta_kind", "eta_value", "T", "m", "n",
              "spectral_gap", "max_norm", "connectivity_sum", "min_diag", "lambda_min",
              "cw_limit", "init_gap"]
_BOUNDS_HEADER = ["graph", "bound_name", "value", "admissible"] + _ECHO_KEYS
_STABILITY_HEADER = ["graph", "mode", "epsilon_hat", "stderr", "num_pairs", "num_mc"]
_GENEXP_HEADER = ["graph", "rep", "run", "t", "gap_signed"]
_GENEXP_SUMMARY_HEADER = ["graph", "t", "abs_mean_gap", "stderr"]


def _resolve_out(args, cfg: ExperimentConfig) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get("OUTPUT_DIR")
    if env:
        return Path(env)
    return cfg.output_dir


def cmd_topology(cfg: ExperimentConfig, out: Path, render: bool) -> None:
    rows = []
    for name, W in cfg.build_graphs():
        d = diagnostics(W)
        rows.append({"graph": name, "m": W.m, "spectral_gap": d.spectral_gap,
                     "max_norm": d.max_norm, "connectivity_sum": d.connectivity_sum,
                     "min_diag": d.min_diag, "lambda_min": d.smallest_eigenvalue,
                     "cw_limit": d.cw_limit, "cw_converged": d.cw_converged})
    write_csv(out / "topology.csv", _TOPOLOGY_HEADER,
              [[r[k] for k in _TOPOLOGY_HEADER] for r in rows])
    # echo the diagnostics table on stdout as well
    print(",".join(_TOPOLOGY_HEADER))
    for r in rows:
        print(",".join(format_value(r[k]) for k in _TOPOLOGY_HEADER))
    write_metadata(out / "topology_meta.json", "topology", cfg.raw_text, {})
    if render:
        from . import figures
        figures.render_topology(rows, out / "topology.png")


def _bound_functions_for(loss_kind: str):
    convex_family = [bounds_mod.bound_convex, bounds_mod.bound_worst_convex,
                     bounds_mod.bound_worst_convex_spectral]
    if loss_kind == "logistic":
        return convex_family
    if loss_kind == "ridge_quadratic":
        return [bounds_mod.bound_strongly, bounds_mod.bound_worst_strongly] + convex_family
    return [bounds_mod.bound_nonconvex, bounds_mod.bound_worst_nonconvex]


def cmd_bounds(cfg: ExperimentConfig, out: Path, render: bool) -> None:
    loss = cfg.build_loss()
    algo = cfg.require("algo")
    data = cfg.require("data")
    m, n = cfg.graph.m, data.n
    dataset = partition(sample(data.spec, m * n, data.seed), m, n)

    ov = cfg.bounds
    if ov.L is not None and ov.beta is not None:
        L, beta = ov.L, ov.beta
    else:
        consts = estimate_constants(loss, dataset)
        L = ov.L if ov.L is not None else consts.L
        beta = ov.beta if ov.beta is not None else consts.beta

    if loss.kind == "bounded_nonconvex" and ov.c is None and algo.stepsize.kind != "decaying":
        raise ConfigError("non-convex bounds need the decay constant: set algo.c "
                          "or bounds.c in the config")

    init_gap = ov.init_gap
    if init_gap is None and ov.sigma is not None and loss.kind in ("logistic", "ridge_quadratic"):
        init_gap = bounds_mod.compute_init_gap(loss, dataset, np.zeros(dataset.d))

    rows = []
    for graph_name, W in cfg.build_graphs():
        top = diagnostics(W)
        inputs = bounds_mod.BoundInputs(L=L, beta=beta, T=algo.T, m=m, n=n,
                                        stepsize=algo.stepsize, topology=top,
                                        mu=loss.mu, sigma=ov.sigma, c=ov.c,
                                        init_gap=init_gap)
        reports = [fn(inputs) for fn in _bound_functions_for(loss.kind)]
        if (loss.kind in ("logistic", "ridge_quadratic") and ov.sigma is not None
                and init_gap is not None and algo.stepsize.kind == "constant"):
            reports.append(bounds_mod.bound_data_dependent(inputs))
        for rep in reports:
            rows.append({"graph": graph_name, "bound_name": rep.name, "value": rep.value,
                         "admissible": rep.admissible, **rep.inputs_echo})
    write_csv(out / "bounds.csv", _BOUNDS_HEADER,
              [[r[k] for k in _BOUNDS_HEADER] for r in rows])
    write_metadata(out / "bounds_meta.json", "bounds", cfg.raw_text,
                   {"data_seed": data.seed, "algo_seed": algo.seed})
    if render:
        from . import figures
        figures.render_bounds(rows, out / "bounds.png")


def cmd_stability(cfg: ExperimentConfig, out: Path, render: bool, threads: int) -> None:
    loss = cfg.build_loss()
    algo = cfg.require("algo")
    data = cfg.require("data")
    stab = cfg.require("stability")
    m, n = cfg.graph.m, data.n

    pair_subset = None
    pair_seed = None
    if stab.pair_subset_size > 0:
        pair_seed = stab.pair_seed if stab.pair_seed is not None else subseed(algo.seed, 4)
        pair_subset = sample_pair_subset(n, m, stab.pair_subset_size, pair_seed)

    rows = []
    dsgd = cfg.build_dsgd_config()
    for graph_name, W in cfg.build_graphs():
        result = stability_experiment(W, loss, data.spec, n, dsgd, stab.num_mc,
                                      pair_subset=pair_subset, threads=threads)
        for mode in stab.modes:
            est = result.estimate(mode)
            rows.append({"graph": graph_name, "mode": mode, "epsilon_hat": est.epsilon_hat,
                         "stderr": est.std_error, "num_pairs": est.num_pairs,
                         "num_mc": est.num_mc})
    write_csv(out / "stability.csv", _STABILITY_HEADER,
              [[r[k] for k in _STABILITY_HEADER] for r in rows])
    seeds = {"algo_seed": algo.seed, "data_seed": data.seed}
    if pair_seed is not None:
        seeds["pair_seed"] = pair_seed
    write_metadata(out / "stability_meta.json", "stability", cfg.raw_text, seeds)
    if render:
        from . import figures
        figures.render_stability(rows, out / "stability.png")


def cmd_genexp(cfg: ExperimentConfig, out: Path, render: bool, threads: int) -> None:
    loss = cfg.build_loss()
    algo = cfg.require("algo")
    data = cfg.require("data")
    gx = cfg.require("genexp")
    graphs = cfg.build_graphs()
    dsgd = cfg.build_dsgd_config(record_trajectory=True)

    exp = generalization_experiment(graphs, loss, data.spec, data.n, dsgd,
                                    gx.reps, gx.runs, gx.test_size, threads=threads)

    rows = []
    for name in exp.graph_names:
        signed = exp.signed[name]
        for rep in range(gx.reps):
            for run_idx in range(gx.runs):
                for t in range(signed.shape[2]):
                    rows.append([name, rep, run_idx, t, float(signed[rep, run_idx, t])])
    write_csv(out / "genexp.csv", _GENEXP_HEADER, rows)

    summary_rows = []
    summaries = {}
    for name in exp.graph_names:
        abs_mean, stderr = exp.summary(name)
        summaries[name] = (abs_mean, stderr)
        for t in range(len(abs_mean)):
            summary_rows.append([name, t, float(abs_mean[t]), float(stderr[t])])
    write_csv(out / "genexp_summary.csv", _GENEXP_SUMMARY_HEADER, summary_rows)
    write_metadata(out / "genexp_meta.json", "genexp", cfg.raw_text,
                   {"algo_seed": algo.seed, "data_seed": data.seed})
    if render:
        from . import figures
        figures.render_genexp(summaries, out / "genexp.png")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsgdlab",
                                     description="Decentralized-SGD stability lab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("topology", "graph diagnostics table"),
                            ("bounds", "closed-form generalization bounds"),
                            ("stability", "Monte Carlo stability estimates"),
                            ("genexp", "empirical generalization error curves")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent repetitions")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = _resolve_out(args, cfg)
        render = not args.no_figures
        if args.command == "topology":
            cmd_topology(cfg, out, render)
        elif args.command == "bounds":
            cmd_bounds(cfg, out, render)
        elif args.command == "stability":
            cmd_stability(cfg, out, render, args.threads)
        else:
            cmd_genexp(cfg, out, render, args.threads)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime / numeric failure
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
