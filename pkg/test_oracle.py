#!/usr/bin/env python3
"""
Tests for the independent checks: trace-derivative identities, the Bloch-grid
Γ search and random-search fidelity bounds.
"""

import os
import sys
import json

import numpy as np
import pytest

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(__file__))

from channels import entangler, lift_iid, make_preset, pauli_terms
from config import OptimizerConfig
from optimizer import alternate
from oracle import (
    OracleError,
    check_trace_gradients,
    gamma_cross_check,
    gamma_grid_search,
    random_search_fidelity,
    report_to_json,
    wirtinger_gradient,
)
from teleport import build_protocol, two_unitary_from_terms
from tensor_core import SystemLayout


def test_wirtinger_gradient_of_modulus_squared():
    z = np.array([[1.0 + 2.0j]])
    grad = wirtinger_gradient(lambda x: np.abs(x[0, 0]) ** 2, z)
    np.testing.assert_allclose(grad, z.conj(), atol=1e-8)


def test_trace_gradient_identities_pass():
    reports = check_trace_gradients(np.random.default_rng(0), trials=3)
    assert [r.identity_name for r in reports] == ["d2a", "d2b", "d4a", "d4b", "d5"]
    for report in reports:
        assert report.passed, f"{report.identity_name}: {report.max_rel_error}"
        assert report.trials == 3
    assert reports[-1].matrix_dims == [6, 3, 2, 8, 4]


def test_trace_gradients_reject_zero_trials():
    with pytest.raises(OracleError):
        check_trace_gradients(np.random.default_rng(0), trials=0)


def test_gamma_cross_check_bit_flip():
    check = gamma_cross_check(make_preset("bit-flip", 0.19), resolution=0.05)
    assert check.passed
    assert check.grid_objective == pytest.approx(1.8, abs=1e-9)
    assert check.grid_objective <= check.solver_objective + 1e-9
    assert check.support == [0, 1]


def test_gamma_cross_check_restricts_support():
    check = gamma_cross_check(make_preset("depolarizing", 0.3), resolution=0.05)
    assert check.support == [0, 1]
    assert check.passed

    channel = make_preset("depolarizing", 0.3)
    on_channel = gamma_grid_search(channel, 0.05, support=[0, 2])[1]
    on_operators = gamma_grid_search(np.stack(channel.restricted([0, 2])), 0.05)[1]
    assert on_channel == pytest.approx(on_operators, abs=1e-12)
    explicit = gamma_cross_check(channel, resolution=0.05, support=[0, 2])
    assert explicit.support == [0, 2]
    assert explicit.grid_objective == pytest.approx(on_channel, abs=1e-12)


def test_grid_search_input_errors():
    with pytest.raises(OracleError, match="support"):
        gamma_grid_search(make_preset("depolarizing", 0.3), 0.1)
    with pytest.raises(OracleError, match="resolution"):
        gamma_grid_search(make_preset("bit-flip", 0.3), 0.0)


def test_random_search_identity_baseline():
    layout = SystemLayout(2, 1, 1)
    noise = make_preset("bit-flip", 0.2)
    value = random_search_fidelity(noise, layout, np.eye(2), 1, np.random.default_rng(0))
    assert value == pytest.approx(0.8, abs=1e-12)


def test_random_search_with_teleport_candidate():
    layout = SystemLayout(2, 2, 2)
    noise = lift_iid(make_preset("bit-flip", 0.4), layout)
    protocol = build_protocol(two_unitary_from_terms(pauli_terms("bit-flip", 0.4))[0])
    value = random_search_fidelity(noise, layout, np.eye(2), 2, np.random.default_rng(1), U=entangler(layout),
                                   candidates=[(protocol.c_prime(), protocol.recovery_stack())])
    assert value >= 1 - 1e-9


def test_optimizer_dominates_random_search():
    layout = SystemLayout(2, 2, 1)
    p = 0.2
    noise = lift_iid(make_preset("bit-flip", p), layout)
    state = alternate(noise, layout, config=OptimizerConfig(max_outer_iters=100, restarts=4, seed=3), objective="data")
    baseline = random_search_fidelity(noise, layout, np.eye(2), 30, np.random.default_rng(5))
    assert state.fidelity >= baseline - 1e-6
    assert state.fidelity >= 1 - p - 1e-6


def test_report_to_json():
    reports = check_trace_gradients(np.random.default_rng(2), trials=1, sizes=(2,))
    check = gamma_cross_check(make_preset("bit-flip", 0.3), resolution=0.1)
    doc = json.loads(report_to_json(reports, [check]))
    assert doc["passed"] is True
    assert len(doc["gradients"]) == 5
    assert doc["gamma"][0]["channel"] == "bit-flip"


def main():
    """Run all oracle tests"""
    print("🚀 ORACLE TESTS")
    print("=" * 80)

    tests = [
        ("Wirtinger Gradient", test_wirtinger_gradient_of_modulus_squared),
        ("Trace Gradient Identities", test_trace_gradient_identities_pass),
        ("Zero Trials", test_trace_gradients_reject_zero_trials),
        ("Gamma Cross Check", test_gamma_cross_check_bit_flip),
        ("Gamma Support", test_gamma_cross_check_restricts_support),
        ("Grid Search Errors", test_grid_search_input_errors),
        ("Random Search Baseline", test_random_search_identity_baseline),
        ("Random Search Candidate", test_random_search_with_teleport_candidate),
        ("Optimizer Dominates", test_optimizer_dominates_random_search),
        ("Report JSON", test_report_to_json),
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
