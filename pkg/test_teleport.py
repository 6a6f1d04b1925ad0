#!/usr/bin/env python3
"""
Tests for the teleportation protocol on two-unitary noise.
"""

import os
import sys
import json

import numpy as np
import pytest

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(__file__))

from channels import (
    CNOT,
    HADAMARD,
    SX,
    SZ,
    NotUnitaryError,
    ProbabilityError,
    bell_basis,
    encode_matrix,
    entangler,
    lift_iid,
    make_preset,
    make_random_unitary_channel,
    pauli_terms,
)
from optimizer import composed_choi, fidelity_data
from teleport import (
    ProtocolError,
    TwoUnitaryChannel,
    build_protocol,
    circuit_dump,
    eigenbasis,
    outcome_probabilities,
    pauli_name,
    protocol_noise,
    protocol_summary,
    two_unitary_from_json,
    two_unitary_from_terms,
    verify_protocol,
)
from tensor_core import SystemLayout, haar_random_unitary, is_unitary, kron

EA = SystemLayout(2, 2, 2)


def test_bit_flip_protocol_is_exact():
    for p in (0.05, 0.5, 0.95):
        two, exact = two_unitary_from_terms(pauli_terms("bit-flip", p))
        assert exact
        protocol = build_protocol(two)
        noise = lift_iid(make_preset("bit-flip", p), EA)
        assert verify_protocol(protocol, noise) >= 1 - 1e-9


def test_bit_flip_protocol_over_grid():
    for i in range(11):
        p = i / 10
        two, _ = two_unitary_from_terms(pauli_terms("bit-flip", p))
        noise = lift_iid(make_preset("bit-flip", p), EA)
        assert verify_protocol(build_protocol(two), noise) >= 1 - 1e-9, f"p={p}"


def test_random_two_unitary_channels():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        two = TwoUnitaryChannel(haar_random_unitary(2, rng), haar_random_unitary(2, rng), float(rng.random()))
        protocol = build_protocol(two)
        assert verify_protocol(protocol, protocol_noise(two, EA)) >= 1 - 1e-9


def test_random_pair_channels():
    rng = np.random.default_rng(4242)
    for _ in range(20):
        two = TwoUnitaryChannel(haar_random_unitary(4, rng), haar_random_unitary(4, rng), float(rng.random()))
        protocol = build_protocol(two)
        assert verify_protocol(protocol, protocol_noise(two, EA)) >= 1 - 1e-9


def test_data_map_is_identity_channel():
    identity_choi = np.outer([1, 0, 0, 1], [1, 0, 0, 1])
    rng = np.random.default_rng(31)
    cases = [TwoUnitaryChannel(haar_random_unitary(4, rng), haar_random_unitary(4, rng), 0.4),
             two_unitary_from_terms(pauli_terms("bit-flip", 0.25))[0]]
    for two in cases:
        protocol = build_protocol(two)
        R = protocol.recovery_stack()
        np.testing.assert_allclose(R.conj().T @ R, np.eye(8), atol=1e-10)
        J = composed_choi(R, protocol_noise(two, EA), protocol.c_full(), entangler(EA), EA, "recovery")
        np.testing.assert_allclose(J, identity_choi, atol=1e-9)


def test_bit_flip_encoding_maps_bell_states_to_plus_minus():
    plus = np.array([[1], [1]]) / np.sqrt(2)
    minus = np.array([[1], [-1]]) / np.sqrt(2)
    expected = [kron(plus, plus), kron(plus, minus), kron(minus, plus), kron(minus, minus)]
    two, _ = two_unitary_from_terms(pauli_terms("bit-flip", 0.3))
    protocol = build_protocol(two)
    for bell, target in zip(bell_basis(), expected):
        np.testing.assert_allclose(protocol.encoding @ bell, target, atol=1e-12)


def test_eigenbasis_examples():
    vectors, phases = eigenbasis(TwoUnitaryChannel(np.eye(2), SX, 0.5))
    np.testing.assert_allclose(phases, [1, -1], atol=1e-12)
    np.testing.assert_allclose(np.hstack(vectors), np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-12)
    vectors, phases = eigenbasis(TwoUnitaryChannel(np.eye(2), SZ, 0.5))
    np.testing.assert_allclose(phases, [1, -1], atol=1e-12)
    np.testing.assert_allclose(np.hstack(vectors), np.eye(2), atol=1e-12)
    vectors, phases = eigenbasis(TwoUnitaryChannel(np.eye(4), np.eye(4), 0.5))
    np.testing.assert_allclose(phases, np.ones(4), atol=1e-12)
    np.testing.assert_allclose(np.hstack(vectors), np.eye(4), atol=1e-12)


def test_corrections_are_standard_paulis():
    two, _ = two_unitary_from_terms(pauli_terms("bit-flip", 0.2))
    protocol = build_protocol(two)
    summary = protocol_summary(protocol, 1.0)
    assert summary["corrections"] == ["I", "Z", "X", "Y"]
    assert summary["verified"]


def test_rotated_two_unitary_channel():
    two = TwoUnitaryChannel(HADAMARD, SZ, 0.35)
    protocol = build_protocol(two)
    for lift in ("iid", "joint"):
        noise = protocol_noise(two, EA, lift)
        assert verify_protocol(protocol, noise) >= 1 - 1e-9


def test_pair_channel_from_json():
    doc = json.dumps({"dim": 4, "v1": encode_matrix(np.eye(4)), "v2": encode_matrix(CNOT), "p": 0.4})
    two = two_unitary_from_json(doc)
    assert two.dim == 4
    protocol = build_protocol(two)
    noise = protocol_noise(two, EA)
    assert noise.m_e == 2
    assert verify_protocol(protocol, noise) >= 1 - 1e-9


def test_coherent_recovery_is_unitary_and_exact():
    two, _ = two_unitary_from_terms(pauli_terms("bit-flip", 0.3))
    protocol = build_protocol(two)
    coherent = protocol.coherent_recovery()
    assert is_unitary(coherent)
    noise = lift_iid(make_preset("bit-flip", 0.3), EA)
    fid = fidelity_data(coherent, noise, protocol.c_full(), entangler(EA), EA, "recovery")
    assert fid >= 1 - 1e-9


def test_outcome_probabilities_are_uniform():
    two, _ = two_unitary_from_terms(pauli_terms("bit-flip", 0.3))
    protocol = build_protocol(two)
    noise = lift_iid(make_preset("bit-flip", 0.3), EA)
    for psi in ([1, 0], [0, 1], [1, 1j], np.array([[0.6], [0.8]])):
        noisy = outcome_probabilities(protocol, noise, psi)
        clean = outcome_probabilities(protocol, None, psi)
        np.testing.assert_allclose(noisy, [0.25] * 4, atol=1e-10)
        np.testing.assert_allclose(noisy, clean, atol=1e-10)
    mixed = np.array([[0.7, 0.2], [0.2, 0.3]])
    np.testing.assert_allclose(outcome_probabilities(protocol, noise, mixed), [0.25] * 4, atol=1e-10)
    with pytest.raises(ProtocolError, match="rho_dat"):
        outcome_probabilities(protocol, noise, [1, 0, 0])


def test_two_unitary_from_terms_flags_dropped_terms():
    _, exact = two_unitary_from_terms(pauli_terms("depolarizing", 0.3))
    assert not exact
    two, exact = two_unitary_from_terms(pauli_terms("identity", 0.0))
    assert exact and two.p == 0.0
    two, _ = two_unitary_from_terms(pauli_terms("bit-flip", 0.8))
    # dominant term first
    assert two.p == pytest.approx(0.2)


def test_channel_validation():
    with pytest.raises(NotUnitaryError):
        TwoUnitaryChannel(np.eye(2), np.ones((2, 2)), 0.1)
    with pytest.raises(ProbabilityError):
        TwoUnitaryChannel(np.eye(2), SZ, 1.2)
    with pytest.raises(ProtocolError):
        TwoUnitaryChannel(np.eye(2), np.eye(4), 0.1)
    with pytest.raises(ProtocolError):
        eigenbasis(TwoUnitaryChannel(np.eye(3), np.eye(3), 0.1))
    with pytest.raises(ProtocolError):
        two_unitary_from_json(json.dumps({"v1": encode_matrix(np.eye(2))}))


def test_protocol_layout_and_noise_checks():
    two, _ = two_unitary_from_terms(pauli_terms("bit-flip", 0.1))
    with pytest.raises(ProtocolError, match="layout"):
        build_protocol(two, SystemLayout(2, 1, 1))
    protocol = build_protocol(two)
    recovery_noise = make_random_unitary_channel([(0.5, np.eye(8)), (0.5, kron(np.eye(4), HADAMARD))])
    with pytest.raises(ProtocolError, match="recovery"):
        verify_protocol(protocol, recovery_noise)
    with pytest.raises(ProtocolError, match="dim"):
        verify_protocol(protocol, make_preset("bit-flip", 0.1))


def test_circuit_dump_lists_gates():
    two, _ = two_unitary_from_terms(pauli_terms("bit-flip", 0.2))
    text = circuit_dump(build_protocol(two))
    lines = text.strip().splitlines()
    assert lines[0].startswith("#")
    assert "H q1" in lines and "CNOT q1 q2" in lines
    assert "IF m=0 I q2" in lines and "IF m=2 X q2" in lines
    assert lines[-1] == "RESET q0,q1"


def test_pauli_name():
    assert pauli_name(1j * np.eye(2)) == "I"
    assert pauli_name(-SZ) == "Z"
    assert pauli_name(HADAMARD) is None


def main():
    """Run all teleportation tests"""
    print("🚀 TELEPORTATION PROTOCOL TESTS")
    print("=" * 80)

    tests = [
        ("Bit Flip Exact", test_bit_flip_protocol_is_exact),
        ("Bit Flip Grid", test_bit_flip_protocol_over_grid),
        ("Random Two-Unitary Channels", test_random_two_unitary_channels),
        ("Random Pair Channels", test_random_pair_channels),
        ("Data Map Identity", test_data_map_is_identity_channel),
        ("Bit Flip Encoding", test_bit_flip_encoding_maps_bell_states_to_plus_minus),
        ("Eigenbasis Examples", test_eigenbasis_examples),
        ("Pauli Corrections", test_corrections_are_standard_paulis),
        ("Rotated Channel", test_rotated_two_unitary_channel),
        ("Pair Channel JSON", test_pair_channel_from_json),
        ("Coherent Recovery", test_coherent_recovery_is_unitary_and_exact),
        ("Outcome Probabilities", test_outcome_probabilities_are_uniform),
        ("Dropped Terms Flag", test_two_unitary_from_terms_flags_dropped_terms),
        ("Channel Validation", test_channel_validation),
        ("Layout And Noise Checks", test_protocol_layout_and_noise_checks),
        ("Circuit Dump", test_circuit_dump_lists_gates),
        ("Pauli Name", test_pauli_name),
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
