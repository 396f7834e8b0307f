"""Command-line entry point.

Subcommands:

* ``train``        -- run a configured experiment sweep (CSV + SVG outputs)
* ``check-bound``  -- noisy-ascent testbed vs. the analytic gradient bound
* ``first-exit``   -- basin first-exit comparison, Cauchy vs. Gaussian
* ``dist-tests``   -- statistical self-checks of the stable sampler
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, sas
from .config import ConfigError, parse_config, with_updates
from .experiment import replot, run_experiment
from .training import PowerDecay, PlainAscent

_FIRST_EXIT_CONFIG = """
name = "first-exit"

[env]
kind = "trapped_car"

[policy.cauchy]
alpha = 1

[policy.gaussian]
alpha = 2

[train]
episodes = {episodes}
start_at_false_goal = true

[run]
seeds = {seeds}
out = "{out}"
"""


def _parse_seed_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def cmd_train(args) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(path.read_bytes())
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.out:
        cfg = with_updates(cfg, out_dir=args.out)
    if args.seeds:
        seeds = tuple(_parse_seed_list(args.seeds))
        if len(set(seeds)) != len(seeds) or not seeds:
            print("error: --seeds must be a non-empty list of distinct integers",
                  file=sys.stderr)
            return 2
        cfg = with_updates(cfg, seeds=seeds)
    try:
        if args.replot:
            replot(Path(cfg.out_dir), [f.name for f in cfg.families], list(cfg.seeds))
            print(f"rewrote {Path(cfg.out_dir) / 'returns.svg'}")
            return 0
        by_family = run_experiment(cfg)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for name, runs in by_family.items():
        finals = [m.moving_avg_100[-1] if m.moving_avg_100 else float("nan") for m in runs]
        diverged = sum(m.diverged for m in runs)
        print(f"{name}: final avg_return_100 per seed = "
              f"[{', '.join(f'{v:.3f}' for v in finals)}]"
              + (f"  ({diverged} diverged)" if diverged else ""))
    print(f"outputs written to {cfg.out_dir}")
    return 0


def cmd_check_bound(args) -> int:
    objective = diagnostics.SmoothBump(dim=2)
    noise = diagnostics.NoiseModel(y1=args.y1, y2=0.0)
    # The bound's U_R/(1-gamma) slot is the objective's own value bound.
    params = diagnostics.BoundParams(
        u_r=objective.value_bound * (1.0 - 0.5), gamma=0.5,
        l1j=objective.grad_lipschitz, y1=args.y1, b=args.b,
    )
    rule = PowerDecay(args.b)
    per_seed = []
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        norms = diagnostics.synthetic_sga_run(
            objective, noise, rule, PlainAscent(), args.n, rng
        )
        per_seed.append(norms.mean())
    lhs = float(np.mean(per_seed))
    rhs = diagnostics.bound_rhs(params, args.n)
    holds = lhs <= rhs
    ci = 1.96 * float(np.std(per_seed)) / math.sqrt(len(per_seed))
    print(f"lhs={lhs:.6g} (95% CI +/- {ci:.2g} over {args.seeds} seeds) "
          f"rhs={rhs:.6g} holds={str(holds).lower()}")
    return 0 if holds else 1


def cmd_first_exit(args) -> int:
    seeds = _parse_seed_list(args.seeds)
    text = _FIRST_EXIT_CONFIG.format(episodes=args.episodes, seeds=list(seeds),
                                     out=args.out)
    cfg = parse_config(text)
    by_family = run_experiment(cfg)
    summary = diagnostics.first_exit_statistics(by_family)
    for name, med in summary.median_exit.items():
        print(f"{name}: median first-exit episode = {med}")
    print(f"sign test (first family exits earlier): p = {summary.sign_test_p:.4g} "
          f"(wins={summary.wins}, losses={summary.losses}, ties={summary.ties})")
    return 0


def _ks_statistic(samples: np.ndarray, cdf) -> float:
    xs = np.sort(samples)
    n = xs.size
    cdf_vals = np.array([cdf(x) for x in xs])
    upper = np.abs(np.arange(1, n + 1) / n - cdf_vals).max()
    lower = np.abs(cdf_vals - np.arange(0, n) / n).max()
    return float(max(upper, lower))


def cmd_dist_tests(args) -> int:
    rng = np.random.default_rng(args.seed)
    checks: list[tuple[str, bool, str]] = []

    for alpha in (1.0, 2.0):
        spec = sas.StableSpec(alpha, location=0.5, scale=1.5)
        draws = np.array([sas.sample_sas(spec, rng) for _ in range(100_000)])
        stat = _ks_statistic(draws, lambda x: sas.cdf(spec, x))
        checks.append((f"KS closed-form sampler alpha={alpha:g}", stat < 0.01,
                       f"stat={stat:.5f}"))
        draws_cms = np.array([sas.sample_sas_cms(spec, rng) for _ in range(100_000)])
        stat_cms = _ks_statistic(draws_cms, lambda x: sas.cdf(spec, x))
        checks.append((f"KS CMS sampler alpha={alpha:g}", stat_cms < 0.01,
                       f"stat={stat_cms:.5f}"))

    g = sas.StableSpec(2.0, 0.0, 1.0)
    var = float(np.var([sas.sample_sas(g, rng) for _ in range(200_000)]))
    checks.append(("variance of alpha=2 member is 2*scale^2", abs(var - 2.0) < 0.04,
                   f"var={var:.4f}"))

    c = sas.StableSpec(1.0, 0.0, 1.0)
    tail = float(np.mean([abs(sas.sample_sas(c, rng)) > 5.0 for _ in range(200_000)]))
    expect = sas.tail_probability(c, 5.0)
    checks.append(("Cauchy 5-sigma tail mass", abs(tail - expect) / expect < 0.1,
                   f"empirical={tail:.5f} analytic={expect:.5f}"))

    failures = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        failures += not ok
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="htpg",
                                     description="heavy-tailed policy search toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a configured experiment sweep")
    p_train.add_argument("--config", required=True, help="experiment config file")
    p_train.add_argument("--out", help="override the output directory")
    p_train.add_argument("--seeds", help="override seeds, comma-separated integers")
    p_train.add_argument("--replot", action="store_true",
                         help="only rebuild returns.svg from existing CSVs")
    p_train.set_defaults(func=cmd_train)

    p_bound = sub.add_parser("check-bound", help="verify the averaged-gradient bound")
    p_bound.add_argument("--b", type=float, default=0.5, help="step-decay exponent")
    p_bound.add_argument("--n", type=int, default=10_000, help="iterations per run")
    p_bound.add_argument("--seeds", type=int, default=20, help="number of seeds")
    p_bound.add_argument("--y1", type=float, default=0.1, help="noise floor")
    p_bound.set_defaults(func=cmd_check_bound)

    p_exit = sub.add_parser("first-exit",
                            help="basin escape comparison from the misleading start")
    p_exit.add_argument("--episodes", type=int, default=300)
    p_exit.add_argument("--seeds", default="1,2,3,4,5,6,7,8,9,10")
    p_exit.add_argument("--out", default="results/first-exit")
    p_exit.set_defaults(func=cmd_first_exit)

    p_dist = sub.add_parser("dist-tests", help="stable-distribution self checks")
    p_dist.add_argument("--seed", type=int, default=0)
    p_dist.set_defaults(func=cmd_dist_tests)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
