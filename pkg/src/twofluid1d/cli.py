"""Command-line entry point.

Subcommands: run, steady, convergence, stability, reduce-check.  Each takes
--config <path> plus override flags; flags win over the file.  Exit codes:
0 success, 1 numerical failure, 2 I/O or configuration failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .closure import ClosureError
from .config import ParseError, RunConfig, ValidationError, parse_config
from .diagnostics import (
    ConfigMismatch,
    EnergyFormMismatch,
    InsufficientData,
    InsufficientSampling,
)
from .equilibrium import BracketFailure
from .harness import (
    ConfigError,
    LevelMismatch,
    run_convergence,
    run_reduction_check,
    run_simulation,
    run_stability,
    steady_info,
)
from .solver import DimensionMismatch, PositivityLoss

_NUMERICAL_ERRORS = (
    ClosureError,
    BracketFailure,
    PositivityLoss,
    DimensionMismatch,
    EnergyFormMismatch,
    InsufficientData,
    InsufficientSampling,
    ConfigMismatch,
    ConfigError,
    LevelMismatch,
)
_CONFIG_IO_ERRORS = (ParseError, ValidationError, OSError)


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="path to a key = value config file")
    sub.add_argument("--n-cells", type=int, dest="n_cells")
    sub.add_argument("--t-end", type=float, dest="t_end")
    sub.add_argument("--cfl", type=float)
    sub.add_argument("--mu", type=float)
    sub.add_argument("--gamma-plus", type=float, dest="gamma_plus")
    sub.add_argument("--gamma-minus", type=float, dest="gamma_minus")
    sub.add_argument("--scenario")
    sub.add_argument("--cadence", type=float)
    sub.add_argument("--out", help="output directory (must exist)")
    sub.add_argument("--seed", type=int)


def _load_config(args: argparse.Namespace) -> RunConfig:
    text = ""
    if args.config is not None:
        with open(args.config) as fh:
            text = fh.read()
    overrides = {
        key: getattr(args, key)
        for key in (
            "scenario",
            "n_cells",
            "t_end",
            "cfl",
            "mu",
            "gamma_plus",
            "gamma_minus",
            "cadence",
            "out",
            "seed",
        )
        if getattr(args, key, None) is not None
    }
    return parse_config(text, overrides)


def _cmd_run(args: argparse.Namespace) -> int:
    summary = run_simulation(_load_config(args))
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_steady(args: argparse.Namespace) -> int:
    print(json.dumps(steady_info(_load_config(args)), indent=2, sort_keys=True))
    return 0


def _cmd_convergence(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    levels = [int(tok) for tok in args.levels.split(",")]
    result = run_convergence(cfg, levels)
    print(f"{'N':>6} {'L2(tau) error':>16} {'order':>8} {'decay rate':>12} {'r^2':>8}")
    for k, n in enumerate(result.levels):
        err = f"{result.errors_tau[k]:16.6e}" if k < len(result.errors_tau) else " " * 16
        order = f"{result.orders[k - 1]:8.3f}" if 1 <= k <= len(result.orders) else " " * 8
        rate = "        none" if result.rates[k] is None else f"{result.rates[k]:12.5f}"
        rsq = "    none" if result.r_squared[k] is None else f"{result.r_squared[k]:8.5f}"
        print(f"{n:>6} {err} {order} {rate} {rsq}")
    return 0


def _cmd_stability(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    deltas = [float(tok) for tok in args.deltas.split(",")]
    reports = run_stability(cfg, deltas)
    print(f"{'delta':>12} {'input':>14} {'output':>14} {'ratio':>12}")
    for delta, rep in zip(deltas, reports):
        flag = "  (degenerate)" if rep.degenerate else ""
        print(
            f"{delta:12.3e} {rep.input_delta:14.6e} "
            f"{rep.output_delta:14.6e} {rep.ratio:12.5f}{flag}"
        )
    return 0


def _cmd_reduce_check(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    result = run_reduction_check(cfg, n_steps=args.steps)
    print(
        f"max per-step discrepancy over {result.n_steps} steps: "
        f"{result.max_discrepancy:.6e}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="twofluid1d",
        description="1D two-fluid solver in Lagrangian mass coordinates",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub_run = subs.add_parser("run", help="integrate one scenario, write CSV + JSON")
    _add_common_flags(sub_run)
    sub_run.set_defaults(func=_cmd_run)

    sub_steady = subs.add_parser("steady", help="print the equilibrium summary")
    _add_common_flags(sub_steady)
    sub_steady.set_defaults(func=_cmd_steady)

    sub_conv = subs.add_parser("convergence", help="nested-resolution error sweep")
    _add_common_flags(sub_conv)
    sub_conv.add_argument(
        "--levels", default="50,100,200,400", help="comma-separated nested cell counts"
    )
    sub_conv.set_defaults(func=_cmd_convergence)

    sub_stab = subs.add_parser("stability", help="perturbed-run Lipschitz ratios")
    _add_common_flags(sub_stab)
    sub_stab.add_argument(
        "--deltas", default="1e-2,1e-3,1e-4", help="comma-separated perturbation sizes"
    )
    sub_stab.set_defaults(func=_cmd_stability)

    sub_red = subs.add_parser(
        "reduce-check", help="compare against the barotropic solver (needs equal exponents)"
    )
    _add_common_flags(sub_red)
    sub_red.add_argument("--steps", type=int, default=1000)
    sub_red.set_defaults(func=_cmd_reduce_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
