"""Command-line entry points.

Subcommands: `simulate` runs a single experiment from a flat config
file, `preset` reproduces a named benchmark scenario at desk scale,
`sweep` varies one parameter over an explicit range, and `verify` runs
a named analytical check.  Exit codes: 0 success / all checks pass,
1 failed check or runtime error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from .checks import CHECKS, DEFAULT_SEED
from .core import ParameterError
from .engine import run
from .experiments import (
    ConfigError,
    PRESET_NAMES,
    ExperimentSpec,
    parse_config,
    preset,
    resolve_points,
    run_experiment,
    write_csv,
)
from .policies import Policy, PolicyKind

OUTPUT_DIR_ENV = "AOISIM_OUTPUT_DIR"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _output_path(spec: ExperimentSpec, override: str | None) -> Path:
    if override:
        return Path(override)
    if spec.output_path:
        return Path(spec.output_path)
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / f"{spec.scenario}.csv"


def _apply_overrides(spec: ExperimentSpec, args) -> ExperimentSpec:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["base_seed"] = args.seed
    if getattr(args, "horizon", None) is not None:
        updates["horizon"] = args.horizon
    if getattr(args, "replications", None) is not None:
        updates["replications"] = args.replications
    return replace(spec, **updates) if updates else spec


def _emit(spec: ExperimentSpec, output: str | None) -> int:
    rows = run_experiment(spec)
    path = _output_path(spec, output)
    try:
        write_csv(rows, path)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{spec.scenario}: wrote {len(rows)} rows to {path}")
    return EXIT_OK


def _write_trace(spec: ExperimentSpec, trace_path: str) -> None:
    if len(spec.policies) != 1 or spec.sweep_param is not None:
        raise ConfigError("--trace needs a single policy and no sweep")
    point = resolve_points(spec)[0]
    from .core import RngStream  # local import keeps module surface tidy

    engine_stream = RngStream(spec.base_seed, (0, 0))
    policy_stream = RngStream(spec.base_seed,
                              (0, 1, list(PolicyKind).index(spec.policies[0])))
    policy = Policy(spec.policies[0], point.config, point.params,
                    stream=policy_stream)
    with open(trace_path, "w", encoding="utf-8") as fh:
        run(point.config, policy, point.params, engine_stream,
            markov_q=spec.markov_q, horizon_unit=spec.horizon_unit, trace=fh)
    print(f"trace written to {trace_path}")


def cmd_simulate(args) -> int:
    try:
        spec = parse_config(Path(args.config).read_text(encoding="utf-8"))
        spec = _apply_overrides(spec, args)
        if args.trace:
            _write_trace(spec, args.trace)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _emit(spec, args.output)


def cmd_preset(args) -> int:
    try:
        n_values = None
        if args.n_values:
            n_values = [int(v) for v in args.n_values.split(",")]
        spec = preset(args.name, seed=args.seed if args.seed is not None
                      else 20260808,
                      horizon=args.horizon,
                      replications=args.replications or 1,
                      n_values=n_values,
                      log_base=math.e if args.natural_log else 10.0)
    except (ConfigError, ParameterError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _emit(spec, args.output)


def cmd_sweep(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
        spec = parse_config(text) if text else None
        values = tuple(float(v) for v in args.values.split(","))
        if spec is None:
            raise ConfigError("sweep needs --config with the base settings")
        spec = replace(spec, sweep_param=args.param, sweep_values=values,
                       scenario=f"{spec.scenario}_sweep_{args.param}")
        spec = _apply_overrides(spec, args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ParameterError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _emit(spec, args.output)


def cmd_verify(args) -> int:
    check = CHECKS[args.check]
    kwargs = {"seed": args.seed if args.seed is not None else DEFAULT_SEED}
    if args.trials is not None:
        if args.check in ("thm1", "thm5", "lemma2"):
            kwargs["trials"] = args.trials
        else:
            kwargs["states"] = args.trials
    if args.samples is not None and args.check in ("lemma1", "thm3", "thm4"):
        kwargs["samples"] = args.samples
    result = check(**kwargs)
    print(result.summary())
    return EXIT_OK if result.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoisim",
        description="Age-of-information scheduling simulator and bound checker")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a single experiment config")
    p_sim.add_argument("--config", required=True, help="flat key = value file")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--horizon", type=int)
    p_sim.add_argument("--replications", "--trials", type=int,
                       dest="replications")
    p_sim.add_argument("--output", help="CSV path (default from config/env)")
    p_sim.add_argument("--trace", help="write a per-frame trace to this path")
    p_sim.set_defaults(func=cmd_simulate)

    p_pre = sub.add_parser("preset", help="reproduce a benchmark scenario")
    p_pre.add_argument("name", choices=PRESET_NAMES)
    p_pre.add_argument("--seed", type=int)
    p_pre.add_argument("--horizon", type=int)
    p_pre.add_argument("--replications", type=int)
    p_pre.add_argument("--n-values", help="comma list of network sizes")
    p_pre.add_argument("--natural-log", action="store_true",
                       help="use natural logs in the parameter formulas "
                            "(base-10 is the default)")
    p_pre.add_argument("--output")
    p_pre.set_defaults(func=cmd_preset)

    p_swp = sub.add_parser("sweep", help="sweep one parameter over a range")
    p_swp.add_argument("--config", required=True)
    p_swp.add_argument("--param", required=True,
                       choices=("n_sources", "alpha", "beta", "b_offset"))
    p_swp.add_argument("--values", required=True, help="comma list of values")
    p_swp.add_argument("--seed", type=int)
    p_swp.add_argument("--horizon", type=int)
    p_swp.add_argument("--replications", "--trials", type=int,
                       dest="replications")
    p_swp.add_argument("--output")
    p_swp.set_defaults(func=cmd_sweep)

    p_ver = sub.add_parser("verify", help="run an analytical check")
    p_ver.add_argument("check", choices=sorted(CHECKS))
    p_ver.add_argument("--trials", type=int, help="random states to test")
    p_ver.add_argument("--samples", type=int, help="Monte Carlo draws per state")
    p_ver.add_argument("--seed", type=int)
    p_ver.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
