"""Command-line interface.

Subcommands
-----------
simulate   draw one walk-discovered sample and write it as a document
estimate   run one estimator on a stored sample, write a CSV row
mc         run the replicated Monte Carlo experiment, write the MSE table
dsub       print truncated subgraph distances of a sample to graphons

Exit codes: 0 success, 1 usage error (bad flags, files, or inputs),
2 numerical failure inside an estimator.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from types import SimpleNamespace

import numpy as np

from .errors import EstimationError
from .harness import (
    align_labels,
    histogram_rows,
    load_config,
    run_experiment,
    run_method,
)
from .metrics import build_empirical_graphon, dsub_truncated
from .mle import METHOD_TAGS, classical_estimator
from .sampler import EmpiricalCdf, complete_graph, count_stats, load_sample, save_sample, simulate_walk
from .seeds import derive_seed


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rdsbm", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate one sample")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--seed", type=int, default=None)

    p_est = sub.add_parser("estimate", help="estimate parameters from a sample")
    p_est.add_argument("--method", required=True, choices=METHOD_TAGS)
    p_est.add_argument("--sample", required=True)
    p_est.add_argument("--out", default=None)
    p_est.add_argument("--truth", default=None,
                       help="config file with the true parameters (enables alignment)")
    p_est.add_argument("--seed", type=int, default=None)

    p_mc = sub.add_parser("mc", help="run the Monte Carlo experiment")
    p_mc.add_argument("--config", required=True)
    p_mc.add_argument("--out", required=True)
    p_mc.add_argument("--seed", type=int, default=None)
    p_mc.add_argument("--jobs", type=int, default=1)
    p_mc.add_argument("--replicates-out", default=None,
                      help="also write replicate-level estimates")
    p_mc.add_argument("--hist-out", default=None,
                      help="also write histogram bin data")

    p_d = sub.add_parser("dsub", help="subgraph distance of a sample to graphons")
    p_d.add_argument("--sample", required=True)
    p_d.add_argument("--config", required=True)
    p_d.add_argument("--max-k", type=int, default=None)
    return parser


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    seed = config.seed if args.seed is None else args.seed
    rng = np.random.default_rng(derive_seed(seed, 0))
    params = config.params()
    x, z = simulate_walk(params, config.n, rng)
    sample = complete_graph(params, x, z, rng)
    save_sample(sample, args.out)
    return 0


def _cmd_estimate(args) -> int:
    sample = load_sample(args.sample)
    truth_config = load_config(args.truth) if args.truth else None
    if truth_config is not None:
        n_classes = truth_config.q
        saem_iterations = truth_config.saem_iterations
        proposal_std = truth_config.proposal_std
        base_seed = truth_config.seed
    else:
        if sample.z is None:
            raise UsageError("--truth is required when the sample has no labels")
        n_classes = int(sample.z.max()) + 1
        saem_iterations = 200
        proposal_std = 0.05
        base_seed = 0
    seed = base_seed if args.seed is None else args.seed

    needs_labels = {"mle-complete", "classical", "debias-complete", "debias-algebraic"}
    if args.method in needs_labels and sample.z is None:
        raise UsageError(f"method {args.method} needs the sample labels")

    stats = count_stats(sample) if sample.z is not None else None
    cdf = EmpiricalCdf(sample.x)
    settings = SimpleNamespace(q=n_classes, saem_iterations=saem_iterations,
                               proposal_std=proposal_std)
    rng = np.random.default_rng(derive_seed(seed, 0, 100 + METHOD_TAGS.index(args.method)))
    estimate = run_method(args.method, sample, stats, cdf, settings, rng)
    if truth_config is not None:
        estimate = align_labels(estimate, truth_config.params())

    lines = [",".join(estimate.csv_header()), ",".join(estimate.csv_row())]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_mc(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    report = run_experiment(config, jobs=args.jobs)
    report.to_csv(args.out)
    if args.replicates_out:
        report.records_to_csv(args.replicates_out)
    if args.hist_out:
        with open(args.hist_out, "w", encoding="utf-8") as fh:
            fh.write("method,param,bin_lo,bin_hi,count\n")
            for method, param, lo, hi, count in histogram_rows(report):
                fh.write(f"{method},{param},{lo:.8g},{hi:.8g},{count}\n")
    return 0


def _cmd_dsub(args) -> int:
    sample = load_sample(args.sample)
    config = load_config(args.config)
    max_k = config.dsub_max_k if args.max_k is None else args.max_k
    if not 2 <= max_k <= 5:
        raise UsageError("--max-k must be between 2 and 5")
    print(f"dsub_true {dsub_truncated(sample, config.params(), max_k):.8g}")
    if sample.z is not None:
        fit = classical_estimator(count_stats(sample))
        chi = build_empirical_graphon(fit.alpha, fit.pi)
        print(f"dsub_fitted {dsub_truncated(sample, chi, max_k):.8g}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "mc": _cmd_mc,
    "dsub": _cmd_dsub,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
