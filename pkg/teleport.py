#!/usr/bin/env python3
"""
Teleportation-based correction for two-unitary noise.

A channel ρ ↦ (1−p)·V₁ρV₁† + p·V₂ρV₂† on the transmitted pair is reduced by the
pre-rotation V₁† to (1−p)·ρ + p·(V₂V₁†)ρ(V₂V₁†)†. Encoding the Bell states of
(data, encoding) onto the eigenbasis of V₂V₁† makes the noise a pure phase per
branch, so a measurement in that basis followed by a Pauli fix on the recovery
qubit restores the data state exactly.

Qubit order follows the rest of the package: q0 = data, q1 = encoding,
q2 = recovery.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from channels import (
    PAULIS,
    KrausChannel,
    ProbabilityError,
    NotUnitaryError,
    bell_basis,
    decode_matrix,
    entangler,
    extend_to_recovery,
    lift_iid,
    lift_joint,
    make_random_unitary_channel,
)
from optimizer import fidelity_data
from tensor_core import SystemLayout, as_cmatrix, basis_vector, is_unitary, kron, schur_eigenbasis

logger = logging.getLogger(__name__)

PROTOCOL_LAYOUT = SystemLayout(2, 2, 2)
VERIFY_TOL = 1e-9


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TwoUnitaryChannel:
    """(1−p)·V₁ρV₁† + p·V₂ρV₂† on one qubit (dim 2, applied i.i.d.) or on the pair (dim 4)."""
    v1: np.ndarray
    v2: np.ndarray
    p: float

    def __post_init__(self):
        v1 = as_cmatrix(self.v1, "v1")
        v2 = as_cmatrix(self.v2, "v2")
        if v1.shape != v2.shape or v1.shape[0] != v1.shape[1]:
            raise ProtocolError(f"v1 {v1.shape} and v2 {v2.shape} must be square and of equal size")
        for name, v in (("v1", v1), ("v2", v2)):
            if not is_unitary(v, 1e-10):
                raise NotUnitaryError(f"{name}: not unitary")
        if not 0.0 <= float(self.p) <= 1.0:
            raise ProbabilityError(f"p: probability must lie in [0, 1], got {self.p}")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)
        object.__setattr__(self, "p", float(self.p))

    @property
    def dim(self) -> int:
        return self.v1.shape[0]

    def terms(self) -> List[Tuple[float, np.ndarray]]:
        return [(1 - self.p, self.v1), (self.p, self.v2)]

    def kraus_channel(self) -> KrausChannel:
        return make_random_unitary_channel(self.terms(), name="two-unitary")


def two_unitary_from_terms(terms: List[Tuple[float, np.ndarray]]) -> Tuple[TwoUnitaryChannel, bool]:
    """Two dominant terms of a random-unitary decomposition; flag is True when nothing was dropped."""
    ranked = sorted(range(len(terms)), key=lambda i: -terms[i][0])
    first = terms[ranked[0]]
    if len(terms) == 1:
        return TwoUnitaryChannel(first[1], first[1], 0.0), True
    second = terms[ranked[1]]
    weight = first[0] + second[0]
    p = second[0] / weight if weight > 0 else 0.0
    exact = len([t for t in terms if t[0] > 0]) <= 2
    return TwoUnitaryChannel(first[1], second[1], p), exact


def two_unitary_from_json(text: str) -> TwoUnitaryChannel:
    """``{"dim": n, "v1": [[re, im], ...], "v2": [...], "p": prob}``"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"channel: invalid JSON ({e})")
    if not isinstance(data, dict) or not {"v1", "v2", "p"} <= set(data):
        raise ProtocolError("channel: two-unitary document needs 'v1', 'v2' and 'p'")
    dim = int(data.get("dim", 2))
    return TwoUnitaryChannel(decode_matrix(data["v1"], dim, dim, "v1"),
                             decode_matrix(data["v2"], dim, dim, "v2"),
                             data["p"])


def eigenbasis(channel: TwoUnitaryChannel) -> Tuple[List[np.ndarray], np.ndarray]:
    """Eigenvectors (as columns) and eigenphases of V₂V₁†."""
    if channel.dim not in (2, 4):
        raise ProtocolError(f"eigenbasis: expected dim 2 or 4, got {channel.dim}")
    phases, vectors = schur_eigenbasis(channel.v2 @ channel.v1.conj().T)
    return [vectors[:, [i]] for i in range(vectors.shape[1])], phases


@dataclass(eq=False)
class TeleportProtocol:
    pre_rotation: np.ndarray
    encoding: np.ndarray
    recovery_kraus: List[np.ndarray]
    layout: SystemLayout
    pair_basis: List[np.ndarray] = field(default_factory=list)
    corrections: List[np.ndarray] = field(default_factory=list)

    def c_prime(self) -> np.ndarray:
        """Full encoding on data ⊗ encoding: the Bell-to-eigenbasis map, then V₁†."""
        return self.pre_rotation @ self.encoding

    def c_full(self) -> np.ndarray:
        return kron(self.c_prime(), np.eye(self.layout.d_rec))

    def recovery_stack(self) -> np.ndarray:
        return np.vstack(self.recovery_kraus)

    def coherent_recovery(self) -> np.ndarray:
        """Deferred-measurement recovery: Σ_k |k⟩⟨w_k| ⊗ T_k†, a single unitary."""
        return sum(kron(basis_vector(4, k) @ w.conj().T, t.conj().T)
                   for k, (w, t) in enumerate(zip(self.pair_basis, self.corrections)))


def _pair_basis(channel: TwoUnitaryChannel) -> Tuple[List[np.ndarray], np.ndarray]:
    vectors, _ = eigenbasis(channel)
    if channel.dim == 4:
        return vectors, channel.v1.conj().T
    products = [kron(vectors[i], vectors[j]) for i in range(2) for j in range(2)]
    return products, kron(channel.v1.conj().T, channel.v1.conj().T)


def build_protocol(channel: TwoUnitaryChannel, layout: SystemLayout = PROTOCOL_LAYOUT) -> TeleportProtocol:
    if layout.dims != PROTOCOL_LAYOUT.dims:
        raise ProtocolError(f"layout: teleport protocol needs one data, encoding and recovery qubit, got {layout}")
    pair_basis, pre_rotation = _pair_basis(channel)
    bells = bell_basis()
    encoding = sum(w @ b.conj().T for w, b in zip(pair_basis, bells))

    # ancilla pair as prepared by the entangler from |00⟩
    anc = (entangler(layout) @ basis_vector(layout.d, 0))[:4]
    corrections = [2.0 * kron(b.conj().T, np.eye(2)) @ kron(np.eye(2), anc) for b in bells]

    reset = basis_vector(4, 0)
    recovery = [kron(reset @ w.conj().T, t.conj().T) for w, t in zip(pair_basis, corrections)]
    logger.info(f"[TELEPORT] built protocol for dim-{channel.dim} two-unitary channel (p={channel.p:.6g})")
    return TeleportProtocol(pre_rotation, encoding, recovery, layout, pair_basis, corrections)


def protocol_noise(channel: TwoUnitaryChannel, layout: SystemLayout = PROTOCOL_LAYOUT, lift: str = "iid") -> KrausChannel:
    """The channel on the full space that ``channel`` describes."""
    if channel.dim == layout.d_trans:
        return extend_to_recovery(channel.kraus_channel(), layout)
    if lift == "joint":
        return lift_joint(channel.terms(), layout, name="two-unitary-joint")
    return lift_iid(channel.kraus_channel(), layout)


def _acts_trivially_on_recovery(noise: KrausChannel, layout: SystemLayout) -> bool:
    for op in noise.kraus:
        blocks = op.reshape(layout.d_trans, layout.d_rec, layout.d_trans, layout.d_rec)
        reduced = np.einsum('aibi->ab', blocks) / layout.d_rec
        if not np.allclose(op, kron(reduced, np.eye(layout.d_rec)), atol=1e-10):
            return False
    return True


def verify_protocol(protocol: TeleportProtocol, noise: KrausChannel) -> float:
    """Fidelity of data → recovery under ``noise``, against the identity."""
    layout = protocol.layout
    if noise.dim != layout.d:
        raise ProtocolError(f"noise: dim {noise.dim} does not match layout dimension {layout.d}")
    if not _acts_trivially_on_recovery(noise, layout):
        raise ProtocolError("noise: must act as the identity on the recovery qubit")
    fidelity = fidelity_data(protocol.recovery_stack(), noise, protocol.c_full(), entangler(layout),
                             layout, "recovery", np.eye(layout.d_dat))
    logger.info(f"[TELEPORT] verified fidelity {fidelity:.15f} against {noise.name or 'noise'}")
    return fidelity


def _data_density(state, d_dat: int) -> np.ndarray:
    """Density matrix from a data state vector or a d_dat × d_dat density matrix."""
    a = np.asarray(state, dtype=np.complex128)
    if a.ndim == 2 and a.shape == (d_dat, d_dat):
        rho = 0.5 * (a + a.conj().T)
        return rho / np.trace(rho).real
    v = a.reshape(-1, 1)
    if v.shape[0] != d_dat:
        raise ProtocolError(f"rho_dat: expected a length-{d_dat} vector or a {d_dat}x{d_dat} matrix, got shape {a.shape}")
    v = v / np.linalg.norm(v)
    return v @ v.conj().T


def outcome_probabilities(protocol: TeleportProtocol, noise: Optional[KrausChannel], rho_dat) -> np.ndarray:
    """Probability of each pair-measurement outcome for data input ``rho_dat`` (vector or density matrix)."""
    layout = protocol.layout
    rho_in = kron(_data_density(rho_dat, layout.d_dat), basis_vector(layout.d_anc) @ basis_vector(layout.d_anc).T)
    W = protocol.c_full() @ entangler(layout)
    rho = W @ rho_in @ W.conj().T
    if noise is not None:
        rho = noise.apply(rho)
    probs = []
    for w in protocol.pair_basis:
        projector = kron(w @ w.conj().T, np.eye(layout.d_rec))
        probs.append(float(np.real(np.trace(projector @ rho))))
    return np.array(probs)


def pauli_name(u: np.ndarray, atol: float = 1e-9) -> Optional[str]:
    """Name of the Pauli equal to ``u`` up to a global phase, or None."""
    for name, pauli in PAULIS.items():
        overlap = np.trace(pauli.conj().T @ u) / 2
        if abs(abs(overlap) - 1.0) < atol:
            return name
    return None


def _format_matrix(a: np.ndarray) -> str:
    rows = []
    for row in np.asarray(a):
        rows.append(" ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in row))
    return " | ".join(rows)


def circuit_dump(protocol: TeleportProtocol) -> str:
    """Gate list for human inspection, one gate per line."""
    lines = [
        "# qubits: q0=data q1=encoding q2=recovery",
        "H q1",
        "CNOT q1 q2",
        f"UNITARY q0,q1 {_format_matrix(protocol.encoding)}",
        f"UNITARY q0,q1 {_format_matrix(protocol.pre_rotation)}",
        "NOISE q0,q1",
        "MEASURE q0,q1 -> m " + " ; ".join(f"w{k}=[{_format_matrix(w.T)}]" for k, w in enumerate(protocol.pair_basis)),
    ]
    for k, t in enumerate(protocol.corrections):
        fix = t.conj().T
        name = pauli_name(fix)
        gate = f"{name} q2" if name else f"UNITARY q2 {_format_matrix(fix)}"
        lines.append(f"IF m={k} {gate}")
    lines.append("RESET q0,q1")
    return "\n".join(lines) + "\n"


def protocol_summary(protocol: TeleportProtocol, fidelity: float) -> Dict[str, object]:
    return {
        "fidelity": fidelity,
        "verified": fidelity >= 1 - VERIFY_TOL,
        "corrections": [pauli_name(t.conj().T) or "unitary" for t in protocol.corrections],
    }
