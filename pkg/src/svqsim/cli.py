"""Command-line front end.

Every subcommand reads one flat config file, writes one CSV plus a
manifest of the resolved configuration, and renders a companion PNG
unless --no-plot is given. Exit codes: 0 success, 1 config problem,
2 numerical non-convergence (outputs that exist are kept).
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, override
from .experiments import (bound_surface, compare_fewer_states,
                          perturbation_sweep, result_rows_to_cells,
                          run_entanglement_experiment, run_train_experiment,
                          run_warmstart_experiment, surface_constraints,
                          warmstart_report_to_cells, write_csv, write_manifest)
from .sdp import SdpInfeasibleError
from .training import TrainingDivergence

_COMMANDS = {
    "train": "train the step schedule and score every step",
    "sweep": "fidelity floors as the constraint values are perturbed",
    "bound-surface": "certified floor over the (theta, phi) state grid",
    "warmstart": "variance floors and empirical variance at the warm start",
    "entanglement": "entanglement along circuit, Trotter and exact tracks",
    "compare-fewer": "training experiment across training-set choices",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svqsim",
        description="subspace-trained circuit toolkit: training, certified "
                    "fidelity floors, warm-start variance floors")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in _COMMANDS.items():
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--config", required=True, help="flat key=value config file")
        cmd.add_argument("--out", help="output CSV path (overrides output_path)")
        cmd.add_argument("--seed", type=int, help="override the config seed")
        cmd.add_argument("--shots", type=int, help="override the shot count")
        cmd.add_argument("--no-plot", action="store_true",
                         help="skip the companion PNG")
    return parser


def _run_train(config: ExperimentConfig):
    result = run_train_experiment(config)
    return "train", result_rows_to_cells(result.rows), True


def _run_sweep(config: ExperimentConfig):
    rows, converged = perturbation_sweep(config)
    return "sweep", rows, converged


def _run_surface(config: ExperimentConfig):
    theta_grid = np.linspace(0.0, np.pi, config.theta_points)
    phi_grid = np.linspace(0.0, 2.0 * np.pi, config.phi_points)
    rows, converged = bound_surface(surface_constraints(config), theta_grid,
                                    phi_grid, tol=config.bound_tol)
    return "bound-surface", rows, converged


def _run_warmstart(config: ExperimentConfig):
    report = run_warmstart_experiment(config)
    return "warmstart", warmstart_report_to_cells(report), True


def _run_entanglement(config: ExperimentConfig):
    return "entanglement", run_entanglement_experiment(config), True


def _run_compare(config: ExperimentConfig):
    return "compare-fewer", compare_fewer_states(config), True


_RUNNERS = {
    "train": _run_train,
    "sweep": _run_sweep,
    "bound-surface": _run_surface,
    "warmstart": _run_warmstart,
    "entanglement": _run_entanglement,
    "compare-fewer": _run_compare,
}


def _png_path(out: str) -> str:
    if out.endswith(".csv"):
        return out[:-4] + ".png"
    return out + ".png"


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        changes = {}
        if args.out is not None:
            changes["output_path"] = args.out
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.shots is not None:
            changes["shots"] = args.shots
        if changes:
            config = override(config, **changes)
        if not config.output_path:
            raise ConfigError("no output path: set output_path or pass --out")
    except ConfigError as exc:
        print(f"svqsim: config error: {exc}", file=sys.stderr)
        return 1

    out = config.output_path
    try:
        schema, rows, converged = _RUNNERS[args.command](config)
    except (SdpInfeasibleError, TrainingDivergence) as exc:
        print(f"svqsim: numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"svqsim: config error: {exc}", file=sys.stderr)
        return 1

    write_csv(out, schema, rows)
    print(f"wrote {out}")
    manifest = write_manifest(out, config, schema)
    print(f"wrote {manifest}")
    if not args.no_plot:
        from . import plots
        png = plots.render(schema, rows, _png_path(out))
        print(f"wrote {png}")
    if not converged:
        print("svqsim: solver failed to converge on some grid points; "
              "outputs kept", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
