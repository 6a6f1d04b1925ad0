#!/usr/bin/env python3
"""
Quantum channel model.

Kraus-form CPTP maps, the Pauli noise presets, lifting single-qubit noise to the
transmitted qubits, the entangler circuit, Bell basis, twirling, targets and the
JSON channel format.
"""

import json
import logging
import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from tensor_core import (
    DimensionError,
    SystemLayout,
    as_cmatrix,
    basis_vector,
    eigh,
    hermitian_defect,
    is_power_of_two,
    is_unitary,
    kron,
    kron_all,
    permute_factors,
    qubit_count,
)

logger = logging.getLogger(__name__)

TP_TOL = 1e-10
LOAD_TP_TOL = 1e-8
PROB_SUM_TOL = 1e-12
UNITARY_TOL = 1e-10

I2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
PAULIS = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


class ChannelError(ValueError):
    """Base class for invalid channels, targets and states"""


class TracePreservationError(ChannelError):
    def __init__(self, defect: float, name: str = "channel"):
        self.defect = float(defect)
        super().__init__(f"{name}: sum of E†E deviates from identity by {self.defect:.3e}")


class ChannelSchemaError(ChannelError):
    pass


class ProbabilityError(ChannelError):
    pass


class NotUnitaryError(ChannelError):
    pass


def tp_defect(kraus: Sequence[np.ndarray]) -> float:
    """max |Σ E†E - I|"""
    dim = kraus[0].shape[1]
    total = sum(k.conj().T @ k for k in kraus)
    return float(np.max(np.abs(total - np.eye(dim))))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A validated CPTP map ρ ↦ Σ E ρ E† on ``dim``-dimensional operators."""
    dim: int
    kraus: Tuple[np.ndarray, ...]
    name: str = ""
    params: Dict[str, Any] = field(default_factory=dict)
    tp_tol: float = field(default=TP_TOL, repr=False)

    def __post_init__(self):
        ops = tuple(as_cmatrix(k, f"{self.name or 'channel'} kraus[{i}]") for i, k in enumerate(self.kraus))
        if not ops:
            raise ChannelError(f"{self.name or 'channel'}: at least one Kraus operator required")
        for i, op in enumerate(ops):
            if op.shape != (self.dim, self.dim):
                raise DimensionError(f"{self.name or 'channel'}: kraus[{i}] has shape {op.shape}, expected {self.dim}x{self.dim}")
        if len(ops) > self.dim ** 2:
            raise ChannelError(f"{self.name or 'channel'}: {len(ops)} Kraus operators exceed dim^2 = {self.dim ** 2}")
        defect = tp_defect(ops)
        if defect > self.tp_tol:
            raise TracePreservationError(defect, self.name or "channel")
        object.__setattr__(self, "kraus", ops)

    @property
    def m_e(self) -> int:
        return len(self.kraus)

    def kraus_array(self) -> np.ndarray:
        """Kraus operators stacked as an (m_E, dim, dim) array."""
        return np.stack(self.kraus)

    def apply(self, rho) -> np.ndarray:
        rho = as_cmatrix(rho, "rho")
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def tp_defect(self) -> float:
        return tp_defect(self.kraus)

    def is_unital(self, atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.apply(np.eye(self.dim)), np.eye(self.dim), atol=atol, rtol=0.0))

    def restricted(self, indices: Sequence[int]) -> List[np.ndarray]:
        """Unvalidated sub-list of Kraus operators (no longer trace preserving)."""
        return [self.kraus[i] for i in indices]


def _check_probability(p: float, name: str = "p") -> float:
    try:
        value = float(p)
    except (TypeError, ValueError):
        raise ProbabilityError(f"{name}: expected a number, got {p!r}")
    if not 0.0 <= value <= 1.0 or not np.isfinite(value):
        raise ProbabilityError(f"{name}: probability must lie in [0, 1], got {p}")
    return value


def make_identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel(dim, (np.eye(dim, dtype=np.complex128),), name="identity")


def make_bit_flip(p: float) -> KrausChannel:
    p = _check_probability(p)
    return KrausChannel(2, (np.sqrt(1 - p) * I2, np.sqrt(p) * SX), name="bit-flip", params={"p": p})


def make_bit_phase_flip(p: float) -> KrausChannel:
    p = _check_probability(p)
    return KrausChannel(
        2,
        (np.sqrt(1 - p) * I2, np.sqrt(p / 2) * SX, np.sqrt(p / 2) * SZ),
        name="bit-phase-flip",
        params={"p": p},
    )


def make_depolarizing(p: float) -> KrausChannel:
    p = _check_probability(p)
    return KrausChannel(
        2,
        (np.sqrt(1 - p) * I2, np.sqrt(p / 3) * SX, np.sqrt(p / 3) * SY, np.sqrt(p / 3) * SZ),
        name="depolarizing",
        params={"p": p},
    )


def make_random_unitary_channel(terms: Sequence[Tuple[float, np.ndarray]], name: str = "random-unitary") -> KrausChannel:
    if not terms:
        raise ChannelError(f"{name}: at least one (prob, unitary) term required")
    probs = [_check_probability(prob, f"terms[{i}].prob") for i, (prob, _) in enumerate(terms)]
    if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
        raise ProbabilityError(f"{name}: probabilities sum to {sum(probs):.15f}, expected 1")
    unitaries = [as_cmatrix(v, f"terms[{i}].unitary") for i, (_, v) in enumerate(terms)]
    dim = unitaries[0].shape[0]
    for i, v in enumerate(unitaries):
        if v.shape != (dim, dim):
            raise DimensionError(f"{name}: terms[{i}] has shape {v.shape}, expected {dim}x{dim}")
        if not is_unitary(v, UNITARY_TOL):
            raise NotUnitaryError(f"{name}: terms[{i}] is not unitary")
    kraus = tuple(np.sqrt(prob) * v for prob, v in zip(probs, unitaries))
    return KrausChannel(dim, kraus, name=name, params={"probs": probs})


def pauli_terms(name: str, p: float) -> List[Tuple[float, np.ndarray]]:
    """Random-unitary decomposition of a qubit preset, identity term first."""
    p = _check_probability(p)
    if name == "identity":
        return [(1.0, I2)]
    if name == "bit-flip":
        return [(1 - p, I2), (p, SX)]
    if name == "bit-phase-flip":
        return [(1 - p, I2), (p / 2, SX), (p / 2, SZ)]
    if name == "depolarizing":
        return [(1 - p, I2), (p / 3, SX), (p / 3, SY), (p / 3, SZ)]
    raise ChannelError(f"channel: unknown preset {name!r} (expected one of {', '.join(PRESETS)})")


PRESETS = {
    "identity": lambda p: make_identity_channel(2),
    "bit-flip": make_bit_flip,
    "bit-phase-flip": make_bit_phase_flip,
    "depolarizing": make_depolarizing,
}


def make_preset(name: str, p: float = 0.0) -> KrausChannel:
    if name not in PRESETS:
        raise ChannelError(f"channel: unknown preset {name!r} (expected one of {', '.join(PRESETS)})")
    return PRESETS[name](p)


def _transmitted_qubits(layout: SystemLayout) -> int:
    if not (is_power_of_two(layout.d_dat) and is_power_of_two(layout.d_enc)):
        raise DimensionError(f"layout: data and encoding dimensions must be powers of 2, got {layout}")
    return qubit_count(layout.d_trans)


def lift_iid(base: KrausChannel, layout: SystemLayout) -> KrausChannel:
    """Independent copies of a qubit channel on every transmitted qubit, identity on recovery."""
    if base.dim != 2:
        raise DimensionError(f"lift_iid: base channel must act on one qubit, got dim {base.dim}")
    n = _transmitted_qubits(layout)
    eye_rec = np.eye(layout.d_rec, dtype=np.complex128)
    kraus = tuple(kron(kron_all(*ops), eye_rec) for ops in itertools.product(base.kraus, repeat=n))
    logger.debug(f"[CHANNEL] lifted {base.name or 'channel'} i.i.d. over {n} qubits: m_E={len(kraus)}")
    return KrausChannel(layout.d, kraus, name=f"{base.name}-iid" if base.name else "iid", params=dict(base.params))


def extend_to_recovery(base: KrausChannel, layout: SystemLayout) -> KrausChannel:
    """Tensor a channel on data ⊗ encoding with the identity on recovery."""
    if base.dim != layout.d_trans:
        raise DimensionError(f"extend_to_recovery: channel dim {base.dim} != transmitted dim {layout.d_trans}")
    eye_rec = np.eye(layout.d_rec, dtype=np.complex128)
    kraus = tuple(kron(k, eye_rec) for k in base.kraus)
    return KrausChannel(layout.d, kraus, name=base.name, params=dict(base.params))


def lift_joint(terms: Sequence[Tuple[float, np.ndarray]], layout: SystemLayout, name: str = "joint") -> KrausChannel:
    """Random-unitary noise applying the same V_i to every transmitted qubit at once."""
    n = _transmitted_qubits(layout)
    joint_terms = [(prob, kron_all(*([v] * n))) for prob, v in terms]
    return extend_to_recovery(make_random_unitary_channel(joint_terms, name=name), layout)


def entangler(layout: SystemLayout) -> np.ndarray:
    """U = I_dat ⊗ U_anc pairing encoding qubit k with recovery qubit k (Hadamard then CNOT)."""
    if layout.d_enc != layout.d_rec:
        raise DimensionError(f"entangler: encoding dim {layout.d_enc} != recovery dim {layout.d_rec}")
    n = qubit_count(layout.d_enc)
    if n == 0:
        return np.eye(layout.d, dtype=np.complex128)
    pair_gate = CNOT @ kron(HADAMARD, I2)
    pairwise = kron_all(np.eye(layout.d_dat), *([pair_gate] * n))
    # natural order: data, e_1..e_n, r_1..r_n ; pairwise order: data, e_1, r_1, e_2, r_2, ...
    dims = [layout.d_dat] + [2] * (2 * n)
    perm = [0] + [idx for k in range(n) for idx in (1 + k, 1 + n + k)]
    to_pairwise = permute_factors(dims, perm)
    return to_pairwise.conj().T @ pairwise @ to_pairwise


def bell_basis() -> List[np.ndarray]:
    """B1..B4 = (|00⟩±|11⟩)/√2, (|10⟩±|01⟩)/√2 as 4x1 columns."""
    k00, k01, k10, k11 = (basis_vector(4, i) for i in range(4))
    s = 1 / np.sqrt(2)
    return [s * (k00 + k11), s * (k00 - k11), s * (k10 + k01), s * (k10 - k01)]


def check_density_matrix(rho, tol: float = 1e-10) -> np.ndarray:
    rho = as_cmatrix(rho, "rho")
    if rho.shape[0] != rho.shape[1]:
        raise ChannelError(f"rho: expected a square matrix, got shape {rho.shape}")
    if hermitian_defect(rho) > tol:
        raise ChannelError("rho: density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ChannelError(f"rho: trace is {np.trace(rho).real:.12f}, expected 1")
    if eigh(rho)[0][0] < -tol:
        raise ChannelError("rho: density matrix is not positive semidefinite")
    return rho


def twirl(rho) -> np.ndarray:
    rho = check_density_matrix(rho)
    if rho.shape != (2, 2):
        raise DimensionError(f"twirl: expected a qubit state, got shape {rho.shape}")
    return 0.25 * sum(s @ rho @ s.conj().T for s in (I2, SX, SY, SZ))


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """The ideal unitary L on the full space."""
    kind: str
    matrix: np.ndarray

    KINDS = ("identity", "swap_data_to_recovery", "custom")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ChannelError(f"target: unknown kind {self.kind!r}")
        matrix = as_cmatrix(self.matrix, "target")
        if not is_unitary(matrix, UNITARY_TOL):
            raise NotUnitaryError("target: L is not unitary")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, layout: SystemLayout) -> "TargetSpec":
        return cls("identity", np.eye(layout.d, dtype=np.complex128))

    @classmethod
    def swap_data_to_recovery(cls, layout: SystemLayout) -> "TargetSpec":
        if layout.d_dat != layout.d_rec:
            raise DimensionError(f"target: swap requires d_dat == d_rec, got layout {layout}")
        return cls("swap_data_to_recovery", permute_factors(layout.dims, [2, 1, 0]))

    @classmethod
    def custom(cls, matrix, layout: SystemLayout) -> "TargetSpec":
        matrix = as_cmatrix(matrix, "target")
        if matrix.shape != (layout.d, layout.d):
            raise DimensionError(f"target: custom L has shape {matrix.shape}, expected {layout.d}x{layout.d}")
        return cls("custom", matrix)


def default_target(layout: SystemLayout, entangled: bool) -> TargetSpec:
    """SWAP(data, recovery) for entanglement-assisted layouts, identity otherwise."""
    if entangled and layout.d_rec == layout.d_dat and layout.d_rec > 1:
        return TargetSpec.swap_data_to_recovery(layout)
    return TargetSpec.identity(layout)


def encode_matrix(a) -> List[List[float]]:
    """Row-major [[re, im], ...] entries."""
    return [[float(z.real), float(z.imag)] for z in np.asarray(a, dtype=np.complex128).reshape(-1)]


def decode_matrix(entries, rows: int, cols: int, where: str) -> np.ndarray:
    if not isinstance(entries, list) or len(entries) != rows * cols:
        got = len(entries) if isinstance(entries, list) else type(entries).__name__
        raise ChannelSchemaError(f"{where}: expected {rows * cols} entries, got {got}")
    values = np.empty(rows * cols, dtype=np.complex128)
    for i, pair in enumerate(entries):
        if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
            raise ChannelSchemaError(f"{where}: entry {i} must be a [re, im] pair of numbers, got {pair!r}")
        values[i] = complex(pair[0], pair[1])
    return values.reshape(rows, cols)


def channel_to_json(channel: KrausChannel) -> str:
    payload = {
        "dim": channel.dim,
        "kraus": [encode_matrix(k) for k in channel.kraus],
    }
    if channel.name:
        payload["name"] = channel.name
    if channel.params:
        payload["params"] = channel.params
    return json.dumps(payload)


def channel_from_json(text: str) -> KrausChannel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChannelSchemaError(f"channel: invalid JSON ({e})")
    if not isinstance(data, dict):
        raise ChannelSchemaError("channel: top level must be an object")
    dim = data.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ChannelSchemaError(f"dim: expected a positive integer, got {dim!r}")
    raw = data.get("kraus")
    if not isinstance(raw, list) or not raw:
        raise ChannelSchemaError("kraus: expected a non-empty list of operators")
    kraus = tuple(decode_matrix(entries, dim, dim, f"kraus[{i}]") for i, entries in enumerate(raw))
    name = data.get("name", "")
    params = data.get("params", {})
    if not isinstance(name, str):
        raise ChannelSchemaError("name: expected a string")
    if not isinstance(params, dict):
        raise ChannelSchemaError("params: expected an object")
    defect = tp_defect(kraus)
    if defect > LOAD_TP_TOL:
        logger.error(f"[CHANNEL-IO] rejected channel {name!r}: TP defect {defect:.3e}")
        raise TracePreservationError(defect, name or "channel")
    logger.debug(f"[CHANNEL-IO] loaded channel {name!r}: dim={dim}, m_E={len(kraus)}, TP defect {defect:.3e}")
    return KrausChannel(dim, kraus, name=name, params=params, tp_tol=LOAD_TP_TOL)


def load_channel(path: str) -> KrausChannel:
    with open(path, "r") as f:
        return channel_from_json(f.read())


def save_channel(channel: KrausChannel, path: str):
    with open(path, "w") as f:
        f.write(channel_to_json(channel))
    logger.info(f"[CHANNEL-IO] wrote channel {channel.name!r} to {path}")


def validate_channel(text: str) -> Dict[str, Any]:
    """Lint a channel document; raises ChannelError subclasses on failure."""
    channel = channel_from_json(text)
    return {
        "name": channel.name,
        "dim": channel.dim,
        "m_E": channel.m_e,
        "tp_defect": channel.tp_defect(),
        "unital": channel.is_unital(1e-8),
    }


def load_target(path: str, layout: SystemLayout) -> TargetSpec:
    """Custom target from ``{"dim": d, "matrix": [[re, im], ...]}``."""
    with open(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ChannelSchemaError(f"target: invalid JSON ({e})")
    if not isinstance(data, dict) or "matrix" not in data:
        raise ChannelSchemaError("target: expected an object with a 'matrix' field")
    dim = data.get("dim", layout.d)
    return TargetSpec.custom(decode_matrix(data["matrix"], dim, dim, "target.matrix"), layout)
