"""Command-line entry point: ``quatlearn {train,fig3,fig4,gradcheck,selftest}``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import QuatLearnError
from .harness import (
    ExperimentConfig,
    config_dict,
    generate_instance,
    run_learning_curve,
    run_likelihood_experiment,
    trial_seed,
    weights_fingerprint,
    write_curve_csv,
    write_likelihood_csv,
    write_manifest,
    write_per_qubit_csv,
    write_trace_csv,
)
from .learner import (
    BATCH,
    EXACT,
    METRICS,
    MONTE_CARLO,
    SAMPLE,
    SQRT_DIFF,
    TrainingConfig,
    TrainingSample,
    fd_gradient_check,
    random_weights,
    step_bound,
    train,
)
from .measurement import canonical_panel
from .qubit import random_register_positive_orthant

GRADCHECK_TOL = 1e-5


def _out_dir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_train(args) -> int:
    z = args.z
    mu = args.mu if args.mu is not None else 0.9 * step_bound(z)
    seed = trial_seed(args.seed, 0)
    config = TrainingConfig(mu=mu, iterations=args.iters, metric=args.metric,
                            expectation_mode=args.mode, mc_draws=args.draws, z=z, seed=seed,
                            schedule=args.schedule)
    _, dataset = generate_instance(args.m, np.random.default_rng(seed), args.samples)
    W, trace = train(dataset, canonical_panel(args.m), config)
    out = _out_dir(args)
    write_trace_csv(trace, out / "trace.csv")
    results = {"initial_db": trace.cost_db[0], "final_db": trace.cost_db[-1],
               "weights_fingerprint": weights_fingerprint(W)}
    write_manifest(out / "manifest.json", "train",
                   {**asdict(config), "m": args.m, "samples": args.samples}, args.seed, results)
    print(f"initial_db={trace.cost_db[0]:.3f} final_db={trace.cost_db[-1]:.3f}")
    return 0


def _experiment_config(args, **overrides) -> ExperimentConfig:
    return ExperimentConfig(m=args.m, trials=getattr(args, "trials", 1), iterations=args.iters,
                            mu=args.mu, z=args.z, seed=args.seed, samples=args.samples,
                            expectation_mode=args.mode, mc_draws=args.draws, metric=args.metric,
                            schedule=args.schedule, output_dir=args.out, **overrides)


def cmd_fig3(args) -> int:
    from .plots import learning_curve_svg

    config = _experiment_config(args)
    summary = run_learning_curve(config)
    out = _out_dir(args)
    write_curve_csv(summary, out / "fig3_curve.csv")
    write_per_qubit_csv(summary, out / "fig3_curve_per_qubit.csv")
    learning_curve_svg(summary, out / "fig3.svg")
    results = {"improvement_db": summary.improvement_db, "divergent_trials": summary.divergent,
               "final_mean_db": float(summary.mean_db[-1])}
    write_manifest(out / "manifest.json", "fig3", config_dict(config), args.seed, results)
    print(f"trials={config.trials} divergent={summary.divergent} "
          f"mean_db[0]={summary.mean_db[0]:.3f} mean_db[-1]={summary.mean_db[-1]:.3f} "
          f"improvement_db={summary.improvement_db:.3f}")
    return 0


def cmd_fig4(args) -> int:
    from .plots import likelihood_svg

    if args.z != args.m:
        args.z = args.m
    config = _experiment_config(args)
    report = run_likelihood_experiment(config, oracle=args.oracle)
    out = _out_dir(args)
    write_likelihood_csv(report, out / "fig4_likelihoods.csv")
    likelihood_svg(report, out / "fig4.svg")
    write_manifest(out / "manifest.json", "fig4", {**config_dict(config), "oracle": args.oracle},
                   args.seed, {"linf_error": report.linf_error, **report.extra})
    print(f"linf_error={report.linf_error:.3e}")
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    metrics = METRICS if args.metric == "both" else (args.metric,)
    worst = 0.0
    for k in range(args.instances):
        m = args.sizes[k % len(args.sizes)]
        panel = canonical_panel(m)
        sample = TrainingSample.build(random_register_positive_orthant(m, rng),
                                      random_register_positive_orthant(m, rng), panel)
        W = random_weights(m, rng)
        for metric in metrics:
            worst = max(worst, fd_gradient_check(W, sample, panel, metric, args.step))
    print(f"worst_relative_error={worst:.3e}")
    return 0 if worst < GRADCHECK_TOL else 1


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(args.seed) else 1


def _add_common(p, iters_default=2000):
    p.add_argument("--m", type=int, default=8, help="qubit count")
    p.add_argument("--mu", type=float, default=None, help="step size (default 0.9 * step bound)")
    p.add_argument("--iters", type=int, default=iters_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z", type=int, default=256, help="hypothesis count for the step bound")
    p.add_argument("--samples", type=int, default=100, help="dataset size")
    p.add_argument("--mode", choices=(EXACT, MONTE_CARLO), default=EXACT)
    p.add_argument("--draws", type=int, default=100, help="draws per expectation in monte-carlo mode")
    p.add_argument("--metric", choices=METRICS, default=SQRT_DIFF)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quatlearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="single training run")
    _add_common(p)
    p.add_argument("--schedule", choices=(SAMPLE, BATCH), default=SAMPLE)
    p.add_argument("--out", default="quatlearn-out/train")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("fig3", help="learning-curve band over independent trials")
    _add_common(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--schedule", choices=(SAMPLE, BATCH), default=BATCH)
    p.add_argument("--out", default="quatlearn-out/fig3")
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("fig4", help="likelihood recovery through the learned circuit")
    _add_common(p)
    p.add_argument("--schedule", choices=(SAMPLE, BATCH), default=BATCH)
    p.add_argument("--oracle", action="store_true", help="use the exact inverse circuit")
    p.add_argument("--out", default="quatlearn-out/fig4")
    p.set_defaults(func=cmd_fig4)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--sizes", type=int, nargs="+", default=[1, 2, 4])
    p.add_argument("--metric", choices=METRICS + ("both",), default="both")
    p.add_argument("--step", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("selftest", help="run the invariant checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QuatLearnError, OSError) as exc:
        print("error: " + json.dumps({"type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
