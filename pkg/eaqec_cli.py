#!/usr/bin/env python3
"""
Command-line harness for entanglement-assisted error correction.

    optimize   run the alternating optimizer once
    sweep      fidelity vs noise for the unprotected/standard/ea scenarios (CSV or JSON)
    teleport   build and verify the teleportation protocol for two-unitary noise
    oracle     gradient identities and Γ-solver cross-check
    validate   lint a channel JSON file

Exit codes: 0 success, 1 usage or input error, 2 non-convergence, 3 verification failure.
"""

import io
import os
import csv
import sys
import json
import shlex
import asyncio
import logging
import argparse
from datetime import datetime
from typing import List, Optional

import numpy as np

from channels import ChannelError, PRESETS, TargetSpec, default_target, entangler, load_target, pauli_terms, validate_channel
from config import ConfigError, configure_logging, default_jobs, load_optimizer_config
from opt_state import save_state
from optimizer import alternate, fidelity_data, fidelity_full, resolve_output_factor
from oracle import check_trace_gradients, gamma_cross_check, report_to_json
from sweep_runner import (
    LIFTS,
    SCENARIOS,
    SweepSpec,
    format_csv_value,
    noise_for_layout,
    parse_p_grid,
    render_csv,
    run_sweep,
    sweep_flags,
)
from teleport import (
    ProtocolError,
    build_protocol,
    circuit_dump,
    protocol_noise,
    protocol_summary,
    two_unitary_from_json,
    two_unitary_from_terms,
    verify_protocol,
    VERIFY_TOL,
)
from tensor_core import LinalgError, SystemLayout, kron

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFY = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; 2 is reserved for non-convergence here."""

    def error(self, message):
        raise UsageError(message)


def _add_shared(parser: argparse.ArgumentParser, optimizer: bool = True):
    parser.add_argument("--channel", default="bit-flip", help=f"preset ({', '.join(PRESETS)}) or JSON path")
    parser.add_argument("--p", type=float, default=None, help="noise probability")
    parser.add_argument("--layout", default="2,2,2", help="d_dat,d_enc,d_rec")
    parser.add_argument("--lift", choices=LIFTS, default="iid")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    if optimizer:
        parser.add_argument("--target", default=None, help="identity, swap or a JSON path")
        parser.add_argument("--entangle", choices=("on", "off"), default=None)
        parser.add_argument("--restarts", type=int, default=None)
        parser.add_argument("--tol", type=float, default=None, help="outer tolerance on δ decrease")
        parser.add_argument("--max-iters", type=int, default=None)
        parser.add_argument("--config", default=None, help="optimizer settings (.json or .toml)")
        parser.add_argument("--jobs", type=int, default=None, help="worker threads (restarts for optimize, cells for sweep)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eaqec", description="Entanglement-assisted quantum error correction by alternating optimization")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    optimize = sub.add_parser("optimize", help="run the alternating optimizer once")
    _add_shared(optimize)
    optimize.add_argument("--objective", choices=("full", "data"), default="full")

    sweep = sub.add_parser("sweep", help="fidelity vs noise table")
    _add_shared(sweep)
    sweep.add_argument("--p-grid", default=None, help="start:stop:step")
    sweep.add_argument("--scenarios", default=",".join(SCENARIOS))
    sweep.add_argument("--teleport-seed", choices=("on", "off"), default="on")

    teleport = sub.add_parser("teleport", help="build and verify the teleportation protocol")
    _add_shared(teleport, optimizer=False)
    teleport.add_argument("--dump-circuit", default=None, metavar="PATH", help="write the gate list ('-' for stdout)")

    oracle = sub.add_parser("oracle", help="gradient identities and Γ cross-check")
    oracle.add_argument("--trials", type=int, default=100)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--grid-resolution", type=float, default=0.005)
    oracle.add_argument("--channel", default="bit-flip")
    oracle.add_argument("--p", type=float, default=0.19)
    oracle.add_argument("--out", default=None)

    validate = sub.add_parser("validate", help="lint a channel JSON file")
    validate.add_argument("path")
    return parser


def _emit(text: str, path: Optional[str]):
    if path and path != "-":
        with open(path, "w") as f:
            f.write(text)
        logger.info(f"[CLI] wrote {path}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _check_writable(path: Optional[str]):
    if not path or path == "-":
        return
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
        raise UsageError(f"out: cannot write to {path}")


def _optimizer_config(args):
    return load_optimizer_config(args.config, restarts=args.restarts, seed=args.seed,
                                 tol_outer=args.tol, max_outer_iters=args.max_iters)


def _resolve_entangle(args, layout: SystemLayout) -> bool:
    if args.entangle is None:
        return layout.maximally_entangled
    if args.entangle == "on" and layout.d_enc != layout.d_rec:
        raise UsageError(f"entangle: needs d_enc == d_rec, got layout {layout}")
    return args.entangle == "on" and layout.d_anc > 1


def _resolve_target(args, layout: SystemLayout, entangled: bool) -> TargetSpec:
    if args.target is None:
        return default_target(layout, entangled)
    if args.target == "identity":
        return TargetSpec.identity(layout)
    if args.target == "swap":
        return TargetSpec.swap_data_to_recovery(layout)
    return load_target(args.target, layout)


SUMMARY_CSV_FIELDS = ["channel", "p", "layout", "objective", "target", "entangled", "delta", "fidelity_norm",
                      "fidelity_d_dat", "fidelity_data", "iterations", "restart", "converged"]


def render_summary_csv(summary) -> str:
    """One header line and one row of the scalar summary fields."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=SUMMARY_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerow({key: format_csv_value(summary[key]) for key in SUMMARY_CSV_FIELDS})
    return buffer.getvalue()


def cmd_optimize(args) -> int:
    config = _optimizer_config(args)
    layout = SystemLayout.parse(args.layout)
    _check_writable(args.out)
    p = 0.0 if args.p is None else args.p
    noise = noise_for_layout(args.channel, p, layout, args.lift)
    entangled = _resolve_entangle(args, layout)
    U = entangler(layout) if entangled else np.eye(layout.d)
    target = _resolve_target(args, layout, entangled)

    jobs = 1 if args.jobs is None else args.jobs
    if jobs < 1:
        raise UsageError(f"jobs: expected >= 1, got {jobs}")
    state = alternate(noise, layout, target, config, U=U, objective=args.objective, jobs=jobs)
    c_full = kron(state.C_prime, np.eye(layout.d_rec))
    norm_fid = fidelity_full(state.R_stack, noise, c_full, U, target, layout, "normalized")
    if args.objective == "full":
        factor = "recovery" if target.kind == "swap_data_to_recovery" else "data"
        dat_fid = fidelity_full(state.R_stack, noise, c_full, U, target, layout, "d_dat")
    else:
        factor = resolve_output_factor(layout)
        dat_fid = state.fidelity
    data_fid = fidelity_data(state.R_stack, noise, c_full, U, layout, factor, np.eye(layout.d_dat))

    summary = {
        "channel": noise.name,
        "p": p,
        "layout": str(layout),
        "objective": args.objective,
        "target": target.kind,
        "entangled": entangled,
        "delta": state.delta_value,
        "delta_history": state.delta_history,
        "fidelity_norm": norm_fid,
        "fidelity_d_dat": dat_fid,
        "fidelity_data": data_fid,
        "iterations": state.iteration,
        "restart": state.restart,
        "converged": state.converged,
        "residuals": state.residuals(),
    }
    if args.format == "json":
        _emit(json.dumps(summary, indent=2) + "\n", None)
    elif args.format == "csv":
        _emit(render_summary_csv(summary), None)
    else:
        lines = [f"delta[{i}] = {value:.15g}" for i, value in enumerate(state.delta_history)]
        lines += [f"{key} = {summary[key]}" for key in ("delta", "fidelity_norm", "fidelity_d_dat", "fidelity_data",
                                                         "iterations", "restart", "converged")]
        lines += [f"residual {key} = {value:.3e}" for key, value in summary["residuals"].items()]
        _emit("\n".join(lines) + "\n", None)
    if args.out:
        save_state(state, args.out, extra={"summary": summary})

    if not state.converged:
        logger.warning("[CLI] optimizer did not converge; results written anyway")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _optimizer_config(args)
    _check_writable(args.out)
    if args.p_grid:
        p_values = parse_p_grid(args.p_grid)
    elif args.p is not None:
        p_values = [args.p]
    else:
        p_values = parse_p_grid("0:1:0.05")
    spec = SweepSpec(
        channel=args.channel,
        p_values=p_values,
        scenarios=[s.strip() for s in args.scenarios.split(",") if s.strip()],
        config=config,
        layout=SystemLayout.parse(args.layout),
        lift=args.lift,
        teleport_seed=args.teleport_seed == "on",
        jobs=args.jobs or default_jobs(),
    )
    rows, failures = asyncio.run(run_sweep(spec))
    for flag in sweep_flags(rows, args.channel):
        logger.warning(f"[SWEEP] flag: {flag}")

    if args.format == "json":
        text = json.dumps({"rows": [r.to_dict() for r in rows], "failures": failures}, indent=2) + "\n"
    else:
        metadata = [
            f"generated {datetime.now().isoformat()}",
            f"command {' '.join(shlex.quote(a) for a in sys.argv[1:])}",
            f"channel {args.channel} lift {args.lift} layout {spec.layout} seed {config.seed}",
        ]
        text = render_csv(rows, metadata)
    _emit(text, args.out)

    if failures:
        logger.error(f"[SWEEP] {len(failures)} cell(s) failed")
        return EXIT_INPUT
    if not all(r.converged for r in rows):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_teleport(args) -> int:
    layout = SystemLayout.parse(args.layout)
    p = 0.0 if args.p is None else args.p
    if args.channel in PRESETS:
        two, exact = two_unitary_from_terms(pauli_terms(args.channel, p))
        noise = noise_for_layout(args.channel, p, layout, args.lift)
        if not exact:
            logger.warning(f"[TELEPORT] {args.channel} is not a two-unitary channel; trying its two dominant terms")
    else:
        with open(args.channel, "r") as f:
            two = two_unitary_from_json(f.read())
        noise = protocol_noise(two, layout, args.lift)

    protocol = build_protocol(two, layout)
    fidelity = verify_protocol(protocol, noise)
    summary = protocol_summary(protocol, fidelity)
    if args.format == "json":
        _emit(json.dumps(summary, indent=2) + "\n", args.out)
    else:
        _emit(f"fidelity = {fidelity:.15f}\ncorrections = {', '.join(summary['corrections'])}\n", args.out)
    if args.dump_circuit:
        _emit(circuit_dump(protocol), args.dump_circuit)

    if fidelity < 1 - VERIFY_TOL:
        logger.error(f"[TELEPORT] verification failed: best fidelity {fidelity:.12f}")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.trials < 1:
        raise UsageError(f"trials: expected >= 1, got {args.trials}")
    rng = np.random.default_rng(args.seed)
    reports = check_trace_gradients(rng, args.trials)
    channel = noise_for_layout(args.channel, args.p, SystemLayout(2, 1, 1))
    cross = gamma_cross_check(channel, args.grid_resolution)
    text = report_to_json(reports, [cross]) + "\n"
    _emit(text, args.out)
    if all(r.passed for r in reports) and cross.passed:
        return EXIT_OK
    logger.error("[ORACLE] at least one check failed")
    return EXIT_VERIFY


def cmd_validate(args) -> int:
    with open(args.path, "r") as f:
        report = validate_channel(f.read())
    _emit(json.dumps(report, indent=2) + "\n", None)
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "teleport": cmd_teleport,
    "oracle": cmd_oracle,
    "validate": cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ChannelError, LinalgError, ProtocolError, ValueError) as e:
        logger.error(f"[CLI] {args.command}: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT
    except OSError as e:
        logger.error(f"[CLI] {args.command}: I/O error: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
