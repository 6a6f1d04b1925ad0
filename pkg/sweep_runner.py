#!/usr/bin/env python3
"""
Noise-parameter sweeps over the unprotected, standard and entanglement-assisted
scenarios, run concurrently in a bounded worker pool.
"""

import io
import csv
import time
import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Tuple

import numpy as np

from channels import (
    ChannelError,
    KrausChannel,
    ProbabilityError,
    lift_iid,
    lift_joint,
    load_channel,
    make_preset,
    pauli_terms,
    PRESETS,
    default_target,
    entangler,
    extend_to_recovery,
)
from config import OptimizerConfig
from optimizer import alternate, fidelity_data, fidelity_full
from teleport import build_protocol, two_unitary_from_terms
from tensor_core import DimensionError, SystemLayout, kron

logger = logging.getLogger(__name__)

SCENARIOS = ("unprotected", "standard", "ea")
LIFTS = ("iid", "joint")
UNPROTECTED_LAYOUT = SystemLayout(2, 1, 1)


class SweepError(RuntimeError):
    pass


def parse_p_grid(text: str) -> List[float]:
    """``start:stop:step`` inclusive of stop, rounded to 12 decimals."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ProbabilityError(f"p-grid: expected start:stop:step, got {text!r}")
    if step <= 0 or stop < start:
        raise ProbabilityError(f"p-grid: need step > 0 and stop >= start, got {text!r}")
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 12) for i in range(count)]


@dataclass
class SweepSpec:
    channel: str
    p_values: List[float]
    scenarios: List[str] = field(default_factory=lambda: list(SCENARIOS))
    config: OptimizerConfig = field(default_factory=OptimizerConfig)
    layout: SystemLayout = SystemLayout(2, 2, 2)
    lift: str = "iid"
    teleport_seed: bool = True
    jobs: int = 1

    def __post_init__(self):
        if not self.p_values:
            raise ProbabilityError("p: at least one noise value required")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                raise ProbabilityError(f"p: probability must lie in [0, 1], got {p}")
        if not self.scenarios:
            raise ValueError("scenarios: at least one scenario required")
        unknown = [s for s in self.scenarios if s not in SCENARIOS]
        if unknown:
            raise ValueError(f"scenarios: unknown {unknown} (expected a subset of {list(SCENARIOS)})")
        if self.lift not in LIFTS:
            raise ValueError(f"lift: expected one of {list(LIFTS)}, got {self.lift!r}")
        if self.jobs < 1:
            raise ValueError(f"jobs: expected >= 1, got {self.jobs}")
        if "ea" in self.scenarios and self.layout.d_enc != self.layout.d_rec:
            raise DimensionError(f"layout: ea scenario needs d_enc == d_rec, got {self.layout}")


@dataclass
class SweepRow:
    p: float
    scenario: str
    fidelity_data: float
    fidelity_norm: float
    delta: float
    iterations: int
    restart: int
    converged: bool
    seed: int

    def sort_key(self) -> Tuple[float, int]:
        return (self.p, SCENARIOS.index(self.scenario))

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    def csv_record(self) -> Dict[str, str]:
        """to_dict with floats in %.12g and booleans as true/false."""
        return {key: format_csv_value(value) for key, value in self.to_dict().items()}


def format_csv_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


CSV_FIELDS = [f.name for f in fields(SweepRow)]
CSV_HEADER = ",".join(CSV_FIELDS)


def base_channel(name: str, p: float) -> KrausChannel:
    """Qubit noise for a preset name, or a channel loaded from a JSON path."""
    if name in PRESETS:
        return make_preset(name, p)
    return load_channel(name)


def noise_for_layout(name: str, p: float, layout: SystemLayout, lift: str = "iid") -> KrausChannel:
    """Channel on the full layout space: lift qubit noise, extend transmitted noise, or use as is."""
    if lift == "joint":
        if name not in PRESETS:
            raise ChannelError("lift: joint lift needs a preset channel (random-unitary terms)")
        return lift_joint(pauli_terms(name, p), layout, name=f"{name}-joint")
    channel = base_channel(name, p)
    if channel.dim == layout.d:
        return channel
    if channel.dim == 2:
        return lift_iid(channel, layout)
    if channel.dim == layout.d_trans:
        return extend_to_recovery(channel, layout)
    raise DimensionError(f"channel: dim {channel.dim} does not fit layout {layout}")


def teleport_seed(name: str, p: float, layout: SystemLayout):
    """(C′, R) of the teleportation protocol when the preset is a two-unitary channel, else None."""
    if name not in PRESETS or layout.dims != (2, 2, 2):
        return None
    two, exact = two_unitary_from_terms(pauli_terms(name, p))
    if not exact:
        return None
    protocol = build_protocol(two, layout)
    return protocol.c_prime(), protocol.recovery_stack()


def run_point(spec: SweepSpec, p: float, scenario: str) -> SweepRow:
    """One (p, scenario) cell; pure function of its inputs."""
    seed = spec.config.seed
    if scenario == "unprotected":
        layout = UNPROTECTED_LAYOUT
        noise = noise_for_layout(spec.channel, p, layout, "iid")
        eye = np.eye(layout.d)
        norm_fid = fidelity_full(eye, noise, eye, eye, eye, layout)
        data_fid = fidelity_data(eye, noise, eye, eye, layout, "data", np.eye(layout.d_dat))
        # refit Δ gives δ = 2d − 2‖T‖ with ‖T‖ = d·√f
        delta_value = 2 * layout.d - 2 * layout.d * np.sqrt(norm_fid)
        return SweepRow(p, scenario, data_fid, norm_fid, float(delta_value), 0, 0, True, seed)

    layout = spec.layout
    noise = noise_for_layout(spec.channel, p, layout, spec.lift)
    if scenario == "ea":
        U = entangler(layout)
        seeds = []
        if spec.teleport_seed:
            seeded = teleport_seed(spec.channel, p, layout)
            if seeded is not None:
                seeds.append(seeded)
    else:
        U = np.eye(layout.d)
        seeds = []
    state = alternate(noise, layout, config=spec.config, U=U, objective="data", initial_states=seeds)
    c_full = kron(state.C_prime, np.eye(layout.d_rec))
    data_fid = fidelity_data(state.R_stack, noise, c_full, U, layout, None, np.eye(layout.d_dat))
    target = default_target(layout, scenario == "ea")
    norm_fid = fidelity_full(state.R_stack, noise, c_full, U, target, layout)
    return SweepRow(p, scenario, data_fid, norm_fid, state.delta_value, state.iteration,
                    state.restart, state.converged, seed)


async def run_sweep(spec: SweepSpec) -> Tuple[List[SweepRow], List[str]]:
    """All (p, scenario) cells through a semaphore-bounded thread pool.

    Returns rows sorted by (p, scenario) and a description of each failed cell.
    """
    start_time = time.time()
    cells = [(p, s) for p in spec.p_values for s in spec.scenarios]
    logger.info(f"[SWEEP] {spec.channel}: {len(cells)} cells, {spec.jobs} worker(s)")
    semaphore = asyncio.Semaphore(spec.jobs)
    loop = asyncio.get_running_loop()

    with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
        async def process(p: float, scenario: str) -> SweepRow:
            async with semaphore:
                logger.debug(f"[SWEEP] starting p={p} scenario={scenario}")
                return await loop.run_in_executor(pool, run_point, spec, p, scenario)

        results = await asyncio.gather(*(process(p, s) for p, s in cells), return_exceptions=True)

    rows: List[SweepRow] = []
    failures: List[str] = []
    for (p, scenario), result in zip(cells, results):
        if isinstance(result, Exception):
            logger.error(f"[SWEEP] p={p} scenario={scenario} failed: {type(result).__name__}: {result}")
            failures.append(f"p={p} scenario={scenario}: {result}")
        else:
            rows.append(result)
    rows.sort(key=SweepRow.sort_key)
    logger.info(f"[SWEEP] finished {len(rows)}/{len(cells)} cells in {time.time() - start_time:.2f}s")
    return rows, failures


def render_csv(rows: List[SweepRow], metadata: Optional[List[str]] = None) -> str:
    buffer = io.StringIO()
    for line in metadata or []:
        buffer.write(f"# {line}\n")
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(row.csv_record() for row in rows)
    return buffer.getvalue()


def sweep_flags(rows: List[SweepRow], channel: str) -> List[str]:
    """Observations worth a warning; none of them fail the sweep."""
    flags = []
    by_p: Dict[float, Dict[str, SweepRow]] = {}
    for row in rows:
        by_p.setdefault(row.p, {})[row.scenario] = row
    for p, cells in sorted(by_p.items()):
        ea, std = cells.get("ea"), cells.get("standard")
        if ea and std and ea.fidelity_data < std.fidelity_data - 1e-6:
            flags.append(f"p={p}: ea fidelity {ea.fidelity_data:.9f} below standard {std.fidelity_data:.9f}")
        if channel == "depolarizing" and ea and std and p <= 0.7 and abs(ea.fidelity_data - std.fidelity_data) > 1e-4:
            flags.append(f"p={p}: depolarizing ea and standard differ by {abs(ea.fidelity_data - std.fidelity_data):.3e}")
        if channel == "bit-phase-flip" and ea and std and abs(p - 2 / 3) < 0.05 and ea.fidelity_data - std.fidelity_data < 0.01:
            flags.append(f"p={p}: ea exceeds standard by only {ea.fidelity_data - std.fidelity_data:.3e}")
        for row in cells.values():
            if not row.converged:
                flags.append(f"p={p} scenario={row.scenario}: optimizer did not converge")
            if row.fidelity_norm > 1 + 1e-9:
                flags.append(f"p={p} scenario={row.scenario}: normalized fidelity {row.fidelity_norm} exceeds 1")
    if channel == "bit-phase-flip":
        for scenario in ("standard", "ea"):
            series = [r for r in rows if r.scenario == scenario]
            if len(series) > 2:
                lowest = min(series, key=lambda r: r.fidelity_data)
                nearest = min(series, key=lambda r: abs(r.p - 2 / 3))
                if lowest.p != nearest.p:
                    flags.append(f"{scenario}: minimum at p={lowest.p}, expected near 2/3 (grid point {nearest.p})")
    return flags
