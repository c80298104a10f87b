# -*- coding: utf-8 -*-
"""
Command line interface.
Part of the kg-damp package.

Subcommands: ``run``, ``sweep``, ``rate``, ``ground-state``, ``truncate`` and ``check``.
Exit codes: 0 on success, 2 when a run ends in a detected blowup (its summary is still
written), 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import typing

import numpy as np
import pandas as pd

from kgdamp import __version__
from kgdamp.algorithms import GroundStateShooter
from kgdamp.algorithms.data.problem import Problem
from kgdamp.functions import nonlinearity, rates
from kgdamp.setup.single import EXIT_BLOWUP, EXIT_ERROR, EXIT_OK, SingleSetup, run_config
from kgdamp.setup.sweep import SweepSetup
from kgdamp.support import checks, io
from kgdamp.support.config import load_config, load_sweep, parse_config, read_json
from kgdamp.support.errors import ConfigError, KGDampError

logger = logging.getLogger(__name__)


def _print_json(data: typing.Dict[str, typing.Any]) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


# =============================================================================
# COMMANDS
# =============================================================================
def cmd_run(args: argparse.Namespace) -> int:
    cfg, report = load_config(args.config)
    for line in report:
        logger.debug("default applied: %s", line)
    result, code, paths = run_config(cfg, base_dir=args.output_dir, snapshots=args.snapshots)
    logger.info("wrote %s and %s", paths["csv"], paths["summary"])
    if code == EXIT_BLOWUP:
        logger.warning("blowup at t=%.6g", result.summary.blowup_time)
    return code


def cmd_sweep(args: argparse.Namespace) -> int:
    sweep = load_sweep(args.sweep)
    if args.workers is not None:
        sweep = sweep.model_copy(update={"parallelism": args.workers})
    setup = SweepSetup(sweep, output_dir=args.output_dir)
    table = setup.run()
    logger.info(
        "sweep done: %d cells, aggregate in %s",
        len(table),
        os.path.join(setup.output_dir, "aggregate.csv"),
    )
    return setup.exit_code


def cmd_rate(args: argparse.Namespace) -> int:
    raw = read_json(args.inputs)
    try:
        inputs = rates.RateInputs.model_validate(raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = rates.theoretical_rate(inputs)
    out = res.model_dump()
    if args.lattice:
        lattice = rates.rate_lattice(inputs)
        out["lattice_monotone"] = rates.lattice_is_monotone(lattice)
        if args.output:
            io.write_series_csv(lattice, args.output)
    _print_json(out)
    return EXIT_OK


def _model_config(path: str, mode: str, drop: typing.Sequence[str] = ()):
    raw = read_json(path)
    extras = {key: raw.pop(key) for key in drop if key in raw}
    raw.setdefault("mode", mode)
    cfg, _ = parse_config(raw)
    return cfg, extras


def cmd_ground_state(args: argparse.Namespace) -> int:
    cfg, extras = _model_config(args.model, "focusing", drop=("c", "rtol"))
    grid = cfg.build_grid()
    zeros = np.zeros(grid.nodes)
    problem = Problem(
        grid=grid, damper=cfg.build_damper(), model=cfg.build_model(), u0=zeros, v0=zeros
    )
    setup = SingleSetup(problem, config=cfg)
    setup.add_algorithms(
        GroundStateShooter(
            name="ground_state", c=extras.get("c", 1.0), rtol=extras.get("rtol", 1e-12)
        )
    )
    setup.run_by_name("ground_state")
    res = setup["ground_state"].result
    gs = res.ground_state
    if args.output:
        io.write_series_csv(pd.DataFrame({"r": gs.r, "Q": gs.Q}), args.output)
    _print_json(
        {
            "Q0": gs.Q0,
            "m": gs.m,
            "K": gs.K,
            "c": gs.c,
            "N": gs.N,
            "residual": gs.residual,
            "r_match": gs.r_match,
            "turning_point": res.turning_point,
        }
    )
    return EXIT_OK


def cmd_truncate(args: argparse.Namespace) -> int:
    cfg, _ = _model_config(args.model, "defocusing")
    if cfg.nonlinearity.truncation is not None:
        raise ConfigError("nonlinearity.truncation: give the untruncated model to truncate")
    base = cfg.build_model()
    table = nonlinearity.truncation_table(base, args.theta, args.k, args.l)
    tr = nonlinearity.truncate_first(base, theta=args.theta, k=args.k)
    if args.l is not None:
        tr = nonlinearity.truncate_second(tr, args.l)
    if args.output:
        io.write_series_csv(table, args.output)
    _print_json(
        {
            "theta": args.theta,
            "k": args.k,
            "l": args.l,
            "lipschitz_ratio": nonlinearity.lipschitz_ratio(tr),
            "v_dominance": nonlinearity.v_dominance_constant(tr),
            "f_monotone_in_k": bool(
                ((table["f_k"] <= table["f"] + 1e-12) | table["f"].isna()).all()
            ),
        }
    )
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    if args.list:
        print("\n".join(checks.list_checks()))
        return EXIT_OK
    table = checks.run_checks(args.filter, use_sv_quotient=not args.disable_sv_quotient)
    print(checks.format_table(table))
    return EXIT_OK if bool(table["passed"].all()) else EXIT_ERROR


# =============================================================================
# PARSER
# =============================================================================
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kg-damp", description="Damped nonlinear Klein-Gordon numerical lab"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("config", help="run configuration (JSON)")
    p.add_argument("--output-dir", default=None, help="directory for relative output paths")
    p.add_argument("--snapshots", action="store_true", help="write (r, u, v) snapshots")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the cross product of sweep axes")
    p.add_argument("sweep", help="sweep configuration (JSON)")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--workers", type=int, default=None, help="override parallelism")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rate", help="theoretical decay rate")
    p.add_argument("inputs", help="rate inputs (JSON)")
    p.add_argument("--lattice", action="store_true", help="also check the (M, R, C0) lattice")
    p.add_argument("--output", default=None, help="CSV for the lattice table")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("ground-state", help="shoot the radial ground state")
    p.add_argument("model", help="model file: geometry and nonlinearity blocks, optional c")
    p.add_argument("--output", default=None, help="CSV for the (r, Q) profile")
    p.set_defaults(func=cmd_ground_state)

    p = sub.add_parser("truncate", help="tabulate the truncated nonlinearity")
    p.add_argument("model", help="model file with a nonlinearity block")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--l", type=float, default=None)
    p.add_argument("--output", default=None, help="CSV for the truncation table")
    p.set_defaults(func=cmd_truncate)

    p = sub.add_parser("check", help="run the built-in invariant suite")
    p.add_argument("--filter", default=None, help="run checks whose name contains this")
    p.add_argument("--list", action="store_true", help="list check names and exit")
    p.add_argument("--disable-sv-quotient", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (KGDampError, ValueError, OSError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
