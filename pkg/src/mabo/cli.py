"""Command-line entry point.

    mabo run --config cfg.yaml --mode mabo --out trace.csv [--seed N]
    mabo compare --config cfg.yaml --out compare.csv

Exit status: 0 on success, 2 for config/schema problems, 1 for run failures.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from mabo import config as cfgmod
from mabo.csvtrace import fmt, write_comparison, write_trace
from mabo.errors import NumericalError
from mabo.platoon import true_platoon_optimum
from mabo.runtime import RunError, RunTrace, run_mabo, run_model_based_admm


def _summary(label: str, trace: RunTrace, loaded: cfgmod.LoadedConfig) -> str:
    last = trace.records[-1]
    parts = [f"{label}: final_x0={fmt(last.x0)}", f"final_r={fmt(last.primal)}", f"final_s={fmt(last.dual)}"]
    if loaded.fleet is not None:
        x_star, _ = true_platoon_optimum(loaded.fleet, loaded.run.domain)
        parts += [f"x_star={fmt(x_star)}", f"distance={fmt(np.abs(last.x0 - x_star).max())}"]
    return " ".join(parts)


def _need_models(loaded: cfgmod.LoadedConfig) -> None:
    if loaded.models is None:
        raise cfgmod.ConfigError("oracle", "full-model ADMM needs known models (platoon or functions)")


def cmd_run(args) -> int:
    loaded = cfgmod.load(args.config, args.seed)
    if args.mode == "mabo":
        trace = run_mabo(loaded.run, loaded.oracles)
    else:
        _need_models(loaded)
        trace = run_model_based_admm(loaded.run, loaded.models)
    write_trace(trace, args.out)
    print(_summary(args.mode, trace, loaded))
    return 0


def cmd_compare(args) -> int:
    loaded = cfgmod.load(args.config, args.seed)
    _need_models(loaded)
    bo = run_mabo(loaded.run, loaded.oracles)
    model = run_model_based_admm(loaded.run, loaded.models)
    write_comparison(bo, model, args.out)
    print(_summary("mabo", bo, loaded))
    print(_summary("model-admm", model, loaded))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mabo", description="Multi-agent Bayesian optimization with ADMM.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one MABO or full-model ADMM run")
    run.add_argument("--config", required=True)
    run.add_argument("--mode", choices=["mabo", "model-admm"], default="mabo")
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run MABO and the full-model baseline under one seed")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--seed", type=int, default=None, help="override the config seed")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        print(f"config error at {exc.path}: {exc}", file=sys.stderr)
        return 2
    except (RunError, NumericalError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
