#!/usr/bin/env python3
"""
Records produced by the optimizer: the Δ and Γ matrices, Γ-step results and the
alternating-optimization state, with JSON persistence.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np

from channels import decode_matrix, encode_matrix
from tensor_core import as_cmatrix, eigh, hermitian_defect, isometry_defect

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
GAMMA_TOL = 1e-10


class OptimizerError(ValueError):
    """A Δ or Γ left its feasible set"""


@dataclass(frozen=True, eq=False)
class DeltaMatrix:
    """Δ = [μ_re], an m_R × m_E matrix with unit Frobenius norm."""
    entries: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        entries = as_cmatrix(self.entries, "delta")
        norm_sq = float(np.sum(np.abs(entries) ** 2))
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise OptimizerError(f"delta: ||Δ||^2 = {norm_sq:.12f}, expected 1")
        object.__setattr__(self, "entries", entries)

    @property
    def m_r(self) -> int:
        return self.entries.shape[0]

    @property
    def m_e(self) -> int:
        return self.entries.shape[1]

    def gamma(self) -> np.ndarray:
        g = self.entries.conj().T @ self.entries
        return 0.5 * (g + g.conj().T)

    def padded(self, m_r: int) -> "DeltaMatrix":
        """Append zero rows up to ``m_r`` recovery operators."""
        if m_r <= self.m_r:
            return self
        extra = np.zeros((m_r - self.m_r, self.m_e), dtype=np.complex128)
        return DeltaMatrix(np.vstack([self.entries, extra]), self.degenerate)


@dataclass(frozen=True, eq=False)
class GammaMatrix:
    """Γ = Δ†Δ: Hermitian, positive semidefinite, unit trace."""
    entries: np.ndarray

    def __post_init__(self):
        entries = as_cmatrix(self.entries, "gamma")
        if entries.shape[0] != entries.shape[1]:
            raise OptimizerError(f"gamma: expected a square matrix, got shape {entries.shape}")
        if hermitian_defect(entries) > GAMMA_TOL:
            raise OptimizerError("gamma: not Hermitian")
        trace = float(np.trace(entries).real)
        if abs(trace - 1.0) > GAMMA_TOL:
            raise OptimizerError(f"gamma: Tr Γ = {trace:.12f}, expected 1")
        min_eig = float(eigh(entries)[0][0])
        if min_eig < -GAMMA_TOL:
            raise OptimizerError(f"gamma: min eigenvalue {min_eig:.3e} < 0")
        object.__setattr__(self, "entries", entries)

    @property
    def m_e(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def uniform(cls, m_e: int) -> "GammaMatrix":
        return cls(np.eye(m_e, dtype=np.complex128) / m_e)


@dataclass
class GammaSolution:
    gamma: GammaMatrix
    objective: float
    iterations: int
    converged: bool
    gap: float = 0.0


def matrix_to_dict(a) -> Dict[str, Any]:
    a = np.asarray(a)
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "entries": encode_matrix(a)}


def matrix_from_dict(data: Dict[str, Any], where: str) -> np.ndarray:
    return decode_matrix(data["entries"], int(data["rows"]), int(data["cols"]), where)


@dataclass
class OptState:
    """Best (C′, R, Δ) of an alternating run plus its per-iteration histories."""
    C_prime: np.ndarray
    R_stack: np.ndarray
    delta: DeltaMatrix
    delta_history: List[float] = field(default_factory=list)
    fidelity_history: List[float] = field(default_factory=list)
    iteration: int = 0
    converged: bool = False
    restart: int = 0
    start: str = "identity"
    objective: str = "full"
    gamma_nonconverged: int = 0

    @property
    def delta_value(self) -> float:
        return self.delta_history[-1] if self.delta_history else float("nan")

    @property
    def fidelity(self) -> float:
        return self.fidelity_history[-1] if self.fidelity_history else float("nan")

    def residuals(self) -> Dict[str, float]:
        """Constraint residuals of the stored state."""
        gamma = self.delta.gamma()
        return {
            "C_prime_unitarity": isometry_defect(self.C_prime),
            "R_isometry": isometry_defect(self.R_stack),
            "delta_norm": abs(float(np.sum(np.abs(self.delta.entries) ** 2)) - 1.0),
            "gamma_trace": abs(float(np.trace(gamma).real) - 1.0),
            "gamma_min_eig": float(eigh(gamma)[0][0]),
        }

    def is_monotone(self, slack: float = 1e-10) -> bool:
        return all(b <= a + slack for a, b in zip(self.delta_history, self.delta_history[1:]))

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "C_prime": matrix_to_dict(self.C_prime),
            "R_stack": matrix_to_dict(self.R_stack),
            "delta": {**matrix_to_dict(self.delta.entries), "degenerate": self.delta.degenerate},
        }
        scalars = asdict(self)
        for key in ("C_prime", "R_stack", "delta"):
            scalars.pop(key)
        data.update(scalars)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OptState":
        delta = DeltaMatrix(matrix_from_dict(data["delta"], "delta"), bool(data["delta"].get("degenerate", False)))
        return cls(
            C_prime=matrix_from_dict(data["C_prime"], "C_prime"),
            R_stack=matrix_from_dict(data["R_stack"], "R_stack"),
            delta=delta,
            delta_history=[float(x) for x in data.get("delta_history", [])],
            fidelity_history=[float(x) for x in data.get("fidelity_history", [])],
            iteration=int(data.get("iteration", 0)),
            converged=bool(data.get("converged", False)),
            restart=int(data.get("restart", 0)),
            start=str(data.get("start", "identity")),
            objective=str(data.get("objective", "full")),
            gamma_nonconverged=int(data.get("gamma_nonconverged", 0)),
        )


def save_state(state: OptState, path: str, extra: Optional[Dict[str, Any]] = None):
    payload = {"generated": datetime.now().isoformat(), "state": state.to_dict()}
    if extra:
        payload.update(extra)
    try:
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)
        logger.info(f"[STATE] saved optimizer state to {path}")
    except OSError as e:
        logger.error(f"[STATE] failed to save state to {path}: {e}")
        raise


def load_state(path: str) -> OptState:
    with open(path, "r") as f:
        payload = json.load(f)
    return OptState.from_dict(payload.get("state", payload))
