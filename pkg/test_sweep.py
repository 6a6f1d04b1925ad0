#!/usr/bin/env python3
"""
Tests for the concurrent noise sweep: grids, per-cell scenarios, failure
isolation and CSV rendering.
"""

import os
import csv
import sys
import time
import asyncio
from unittest.mock import patch

import numpy as np
import pytest

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(__file__))

import sweep_runner
from channels import ChannelError, ProbabilityError, TargetSpec, entangler
from config import OptimizerConfig
from optimizer import alternate, fidelity_full
from sweep_runner import (
    CSV_HEADER,
    SweepRow,
    SweepSpec,
    noise_for_layout,
    parse_p_grid,
    render_csv,
    run_point,
    run_sweep,
    sweep_flags,
    teleport_seed,
)
from tensor_core import DimensionError, SystemLayout, kron

QUICK = OptimizerConfig(max_outer_iters=60, restarts=2, seed=0)


def test_parse_p_grid():
    assert parse_p_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_p_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    for bad in ("0:1", "1:0:0.1", "0:1:0", "a:b:c"):
        with pytest.raises(ProbabilityError):
            parse_p_grid(bad)


def test_spec_validation():
    with pytest.raises(ProbabilityError):
        SweepSpec("bit-flip", [0.1, 1.2])
    with pytest.raises(ValueError, match="scenarios"):
        SweepSpec("bit-flip", [0.1], scenarios=["best"])
    with pytest.raises(ValueError, match="jobs"):
        SweepSpec("bit-flip", [0.1], jobs=0)
    with pytest.raises(DimensionError):
        SweepSpec("bit-flip", [0.1], layout=SystemLayout(2, 2, 1))
    SweepSpec("bit-flip", [0.1], scenarios=["standard"], layout=SystemLayout(2, 2, 1))


def test_noise_for_layout():
    layout = SystemLayout(2, 2, 2)
    assert noise_for_layout("bit-flip", 0.1, layout).m_e == 4
    assert noise_for_layout("bit-flip", 0.1, layout, "joint").m_e == 2
    assert noise_for_layout("bit-flip", 0.1, SystemLayout(2, 1, 1)).dim == 2
    with pytest.raises(ChannelError):
        noise_for_layout("/no/such/channel.json", 0.1, layout, "joint")


def test_teleport_seed_only_for_two_unitary_presets():
    layout = SystemLayout(2, 2, 2)
    assert teleport_seed("depolarizing", 0.3, layout) is None
    assert teleport_seed("bit-flip", 0.3, SystemLayout(2, 2, 1)) is None
    c_prime, R = teleport_seed("bit-flip", 0.3, layout)
    assert c_prime.shape == (4, 4)
    assert R.shape == (32, 8)


def test_unprotected_is_analytic():
    spec = SweepSpec("depolarizing", [0.3], config=QUICK)
    row = run_point(spec, 0.3, "unprotected")
    assert row.fidelity_data == pytest.approx(0.7, abs=1e-12)
    assert row.fidelity_norm == pytest.approx(0.7, abs=1e-12)
    assert row.iterations == 0 and row.converged


def test_bit_flip_sweep_rows():
    spec = SweepSpec("bit-flip", [0.1, 0.3], config=QUICK, jobs=2)
    rows, failures = asyncio.run(run_sweep(spec))
    assert failures == []
    assert [(r.p, r.scenario) for r in rows] == [
        (0.1, "unprotected"), (0.1, "standard"), (0.1, "ea"),
        (0.3, "unprotected"), (0.3, "standard"), (0.3, "ea"),
    ]
    for row in rows:
        if row.scenario == "unprotected":
            assert row.fidelity_data == pytest.approx(1 - row.p, abs=1e-12)
        elif row.scenario == "standard":
            assert row.fidelity_data >= 1 - row.p - 1e-6
        else:
            assert row.fidelity_data >= 1 - 1e-6
        assert row.fidelity_norm <= 1 + 1e-9


def test_bit_phase_flip_high_noise_standard():
    spec = SweepSpec("bit-phase-flip", [0.9], scenarios=["standard"], config=QUICK)
    row = run_point(spec, 0.9, "standard")
    assert row.fidelity_data >= 0.45 - 1e-3


def test_same_seed_same_csv():
    spec = SweepSpec("bit-phase-flip", [0.2, 0.6], scenarios=["standard"], layout=SystemLayout(2, 2, 1), config=QUICK)
    first, _ = asyncio.run(run_sweep(spec))
    second, _ = asyncio.run(run_sweep(spec))
    assert render_csv(first) == render_csv(second)


def test_failed_cell_is_isolated():
    real = sweep_runner.run_point

    def flaky(spec, p, scenario):
        if scenario == "standard":
            raise RuntimeError("solver exploded")
        return real(spec, p, scenario)

    spec = SweepSpec("bit-flip", [0.2], scenarios=["unprotected", "standard"], config=QUICK)
    with patch("sweep_runner.run_point", side_effect=flaky):
        rows, failures = asyncio.run(run_sweep(spec))
    assert [r.scenario for r in rows] == ["unprotected"]
    assert len(failures) == 1 and "solver exploded" in failures[0]


def test_render_csv():
    rows = [SweepRow(0.1, "ea", 1.0, 1.0, 0.0, 3, 1, True, 0)]
    text = render_csv(rows, ["generated now", "seed 0"])
    lines = text.splitlines()
    assert lines[:2] == ["# generated now", "# seed 0"]
    assert lines[2] == CSV_HEADER
    assert lines[3] == "0.1,ea,1,1,0,3,1,true,0"
    assert text.endswith("\n")

    rows.append(SweepRow(0.25, "standard", 0.8125, 0.5, 0.75, 60, 0, False, 7))
    body = [line for line in render_csv(rows).splitlines() if not line.startswith("#")]
    parsed = list(csv.DictReader(body))
    assert parsed[1] == {"p": "0.25", "scenario": "standard", "fidelity_data": "0.8125", "fidelity_norm": "0.5",
                         "delta": "0.75", "iterations": "60", "restart": "0", "converged": "false", "seed": "7"}


def test_sweep_flags():
    rows = [
        SweepRow(0.5, "standard", 0.8, 0.8, 0.2, 5, 0, True, 0),
        SweepRow(0.5, "ea", 0.7, 0.7, 0.3, 5, 0, False, 0),
    ]
    flags = sweep_flags(rows, "bit-flip")
    assert any("below standard" in f for f in flags)
    assert any("did not converge" in f for f in flags)
    assert sweep_flags(rows[:1], "bit-flip") == []


ACCEPT = OptimizerConfig(max_outer_iters=100, restarts=3, seed=0)


@pytest.mark.parametrize("name", ["bit-flip", "bit-phase-flip", "depolarizing"])
def test_unprotected_grid_is_one_minus_p(name):
    grid = parse_p_grid("0:1:0.05")
    assert len(grid) == 21
    spec = SweepSpec(name, grid, scenarios=["unprotected"], config=QUICK)
    for p in grid:
        row = run_point(spec, p, "unprotected")
        assert row.fidelity_data == pytest.approx(1 - p, abs=1e-10)


def test_fidelity_norm_is_full_space_fidelity():
    captured = []

    def keep(*args, **kwargs):
        state = alternate(*args, **kwargs)
        captured.append(state)
        return state

    layout = SystemLayout(2, 2, 2)
    spec = SweepSpec("bit-flip", [0.2], scenarios=["standard", "ea"], config=QUICK)
    with patch("sweep_runner.alternate", side_effect=keep):
        standard = run_point(spec, 0.2, "standard")
        ea = run_point(spec, 0.2, "ea")
    noise = noise_for_layout("bit-flip", 0.2, layout)
    cases = [(standard, captured[0], np.eye(8), TargetSpec.identity(layout)),
             (ea, captured[1], entangler(layout), TargetSpec.swap_data_to_recovery(layout))]
    for row, state, U, target in cases:
        c_full = kron(state.C_prime, np.eye(2))
        expected = fidelity_full(state.R_stack, noise, c_full, U, target, layout, "normalized")
        assert row.fidelity_norm == pytest.approx(expected, abs=1e-12)
        assert 0.0 <= row.fidelity_norm <= 1 + 1e-9


def test_entanglement_helps_bit_phase_flip_at_two_thirds():
    p = 2 / 3
    spec = SweepSpec("bit-phase-flip", [p], scenarios=["standard", "ea"], config=ACCEPT)
    standard = run_point(spec, p, "standard")
    ea = run_point(spec, p, "ea")
    assert ea.fidelity_data - standard.fidelity_data >= 0.01


def test_entanglement_does_not_help_depolarizing_below_break_point():
    spec = SweepSpec("depolarizing", [0.5], scenarios=["standard", "ea"], config=ACCEPT)
    standard = run_point(spec, 0.5, "standard")
    ea = run_point(spec, 0.5, "ea")
    assert abs(ea.fidelity_data - standard.fidelity_data) <= 1e-4


def test_single_cell_runtime():
    spec = SweepSpec("depolarizing", [0.3], scenarios=["ea"], config=OptimizerConfig(restarts=1, seed=0))
    start = time.perf_counter()
    row = run_point(spec, 0.3, "ea")
    elapsed = time.perf_counter() - start
    assert row.converged
    assert elapsed < 20.0, f"one ea cell took {elapsed:.1f}s"


def main():
    """Run all sweep tests"""
    print("🚀 NOISE SWEEP TESTS")
    print("=" * 80)

    tests = [
        ("Parse P Grid", test_parse_p_grid),
        ("Spec Validation", test_spec_validation),
        ("Noise For Layout", test_noise_for_layout),
        ("Teleport Seed", test_teleport_seed_only_for_two_unitary_presets),
        ("Unprotected Analytic", test_unprotected_is_analytic),
        ("Bit Flip Sweep", test_bit_flip_sweep_rows),
        ("Bit Phase Flip High Noise", test_bit_phase_flip_high_noise_standard),
        ("Same Seed Same CSV", test_same_seed_same_csv),
        ("Failed Cell Isolated", test_failed_cell_is_isolated),
        ("Render CSV", test_render_csv),
        ("Sweep Flags", test_sweep_flags),
        ("Unprotected Grid", lambda: [test_unprotected_grid_is_one_minus_p(n) for n in ("bit-flip", "bit-phase-flip", "depolarizing")]),
        ("Fidelity Norm Full Space", test_fidelity_norm_is_full_space_fidelity),
        ("Bit Phase Flip At Two Thirds", test_entanglement_helps_bit_phase_flip_at_two_thirds),
        ("Depolarizing Below Break Point", test_entanglement_does_not_help_depolarizing_below_break_point),
        ("Single Cell Runtime", test_single_cell_runtime),
    ]

    passed = 0
    for test_name, test_func in tests:
        try:
            test_func()
            print(f"✅ PASS: {test_name}")
            passed += 1
        except Exception as e:
            print(f"❌ FAIL: {test_name}: {type(e).__name__}: {e}")

    print("-" * 80)
    print(f"Total: {passed}/{len(tests)} tests passed")
    return passed == len(tests)


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
