#!/usr/bin/env python3
"""
Independent checks for the optimizer.

* central-difference verification of the matrix trace derivatives the encoding
  update relies on (Wirtinger convention: ∂/∂z with z* held constant),
* exhaustive Bloch-ball grid search for the Γ-step on two Kraus operators,
* random-search lower bounds on the achievable data fidelity.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from channels import KrausChannel
from config import OptimizerConfig
from opt_state import GammaMatrix
from optimizer import fidelity_data, gamma_objective, kraus_array, resolve_output_factor, solve_gamma
from tensor_core import SystemLayout, haar_random_unitary, kron, partial_trace

logger = logging.getLogger(__name__)

GRAD_STEP = 1e-5
GRAD_TOL = 1e-5
GRID_TOL = 1e-3
IDENTITIES = ("d2a", "d2b", "d4a", "d4b", "d5")


class OracleError(ValueError):
    pass


@dataclass
class GradCheckReport:
    identity_name: str
    matrix_dims: List[int]
    max_rel_error: float
    passed: bool
    trials: int = 0


@dataclass
class GammaCrossCheck:
    channel: str
    support: List[int]
    resolution: float
    solver_objective: float
    grid_objective: float
    gap: float
    passed: bool
    grid_gamma: List[List[float]] = field(default_factory=list)


def _random_complex(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def wirtinger_gradient(f: Callable[[np.ndarray], complex], Z: np.ndarray, step: float = GRAD_STEP) -> np.ndarray:
    """Entrywise ½(∂f/∂x − i·∂f/∂y) by central differences."""
    grad = np.zeros(Z.shape, dtype=np.complex128)
    for idx in np.ndindex(*Z.shape):
        unit = np.zeros(Z.shape, dtype=np.complex128)
        unit[idx] = step
        dx = (f(Z + unit) - f(Z - unit)) / (2 * step)
        dy = (f(Z + 1j * unit) - f(Z - 1j * unit)) / (2 * step)
        grad[idx] = 0.5 * (dx - 1j * dy)
    return grad


def _trace_identities(n: int, rng: np.random.Generator):
    """(name, f, analytic gradient, dims) for one random draw."""
    A = _random_complex(rng, n, n)
    Z = _random_complex(rng, n, n)
    A_big = _random_complex(rng, 2 * n, 2 * n)
    eye2 = np.eye(2)
    return Z, [
        ("d2a", lambda X: np.trace(A @ X), A.T, [n]),
        ("d2b", lambda X: np.trace(A @ X.conj().T), np.zeros((n, n)), [n]),
        ("d4a", lambda X: np.trace(X @ X.conj().T), Z.conj(), [n]),
        ("d4b", lambda X: np.trace(A @ X.conj().T @ X), Z.conj() @ A.T, [n]),
        ("d5", lambda X: np.trace(A_big @ kron(X, eye2)), partial_trace(A_big, [n, 2], keep={0}).T, [2 * n, n, 2]),
    ]


def check_trace_gradients(rng: np.random.Generator, trials: int = 100, sizes: Sequence[int] = (3, 4)) -> List[GradCheckReport]:
    """One report per identity, worst relative error over all trials and sizes."""
    if trials < 1:
        raise OracleError(f"trials: expected >= 1, got {trials}")
    worst = {name: 0.0 for name in IDENTITIES}
    dims: Dict[str, List[int]] = {name: [] for name in IDENTITIES}
    for _ in range(trials):
        for n in sizes:
            Z, cases = _trace_identities(n, rng)
            for name, f, analytic, case_dims in cases:
                numeric = wirtinger_gradient(f, Z)
                scale = max(1.0, float(np.max(np.abs(analytic))))
                error = float(np.max(np.abs(numeric - analytic))) / scale
                worst[name] = max(worst[name], error)
                for d in case_dims:
                    if d not in dims[name]:
                        dims[name].append(d)
    reports = [GradCheckReport(name, dims[name], worst[name], worst[name] <= GRAD_TOL, trials) for name in IDENTITIES]
    for report in reports:
        level = logging.INFO if report.passed else logging.ERROR
        logger.log(level, f"[ORACLE] {report.identity_name}: max relative error {report.max_rel_error:.3e} over {trials} trials")
    return reports


def _bloch_grid(resolution: float) -> np.ndarray:
    count = int(round(2.0 / resolution)) + 1
    return np.linspace(-1.0, 1.0, count)


def _gamma_from_bloch(x: float, y: float, z: float) -> np.ndarray:
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=np.complex128)


def gamma_grid_search(E, resolution: float, support: Optional[Sequence[int]] = None) -> Tuple[GammaMatrix, float]:
    """Best Γ over a grid on the Bloch ball Γ = (I + r·σ)/2, ‖r‖ ≤ 1.

    ``support`` restricts a larger channel to two of its Kraus operators.
    """
    if not resolution > 0:
        raise OracleError(f"resolution: expected a positive grid step, got {resolution}")
    if support is None:
        K = kraus_array(E)
    elif isinstance(E, KrausChannel):
        K = np.stack(E.restricted(support))
    else:
        K = kraus_array(E)[list(support)]
    m = K.shape[0]
    if m > 2:
        raise OracleError(f"gamma_grid_search: needs m_E <= 2, got {m} (pass a support)")
    if m == 1:
        best = GammaMatrix(np.ones((1, 1), dtype=np.complex128))
        return best, gamma_objective(best, K)

    # M(Γ) = A0 + x·Ax + y·Ay + z·Az
    M = np.einsum('iab,jcb->ijac', K, K.conj())
    A0 = 0.5 * (M[0, 0] + M[1, 1])
    Ax = 0.5 * (M[0, 1] + M[1, 0])
    Ay = 0.5 * (-1j * M[0, 1] + 1j * M[1, 0])
    Az = 0.5 * (M[0, 0] - M[1, 1])

    axis = _bloch_grid(resolution)
    yy, zz = np.meshgrid(axis, axis, indexing="ij")
    yy, zz = yy.reshape(-1), zz.reshape(-1)
    best_value, best_point = -np.inf, (0.0, 0.0, 0.0)
    for x in axis:
        inside = x * x + yy * yy + zz * zz <= 1.0 + 1e-12
        if not np.any(inside):
            continue
        ys, zs = yy[inside], zz[inside]
        mats = A0 + x * Ax + ys[:, None, None] * Ay + zs[:, None, None] * Az
        if mats.shape[-1] == 2:
            trace = np.real(mats[:, 0, 0] + mats[:, 1, 1])
            det = np.real(mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0])
            values = np.sqrt(np.clip(trace + 2 * np.sqrt(np.clip(det, 0, None)), 0, None))
        else:
            values = np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(mats), 0, None)), axis=1)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value, best_point = float(values[i]), (float(x), float(ys[i]), float(zs[i]))
    gamma = GammaMatrix(_gamma_from_bloch(*best_point))
    logger.debug(f"[ORACLE] grid search at {resolution}: best objective {best_value:.9f} at r={best_point}")
    return gamma, best_value


def gamma_cross_check(E: KrausChannel, resolution: float = 0.005, support: Optional[Sequence[int]] = None,
                      config: Optional[OptimizerConfig] = None) -> GammaCrossCheck:
    """Compare solve_gamma with the grid on the same (possibly restricted) Kraus set."""
    if support is None and E.m_e > 2:
        support = [0, 1]
    kraus = E.kraus_array() if support is None else np.stack(E.restricted(support))
    solution = solve_gamma(kraus, config)
    grid_gamma, grid_value = gamma_grid_search(kraus, resolution)
    gap = grid_value - solution.objective
    passed = gap <= GRID_TOL
    logger.info(f"[ORACLE] Γ cross-check {E.name or 'channel'}: solver={solution.objective:.9f} grid={grid_value:.9f}")
    return GammaCrossCheck(
        channel=E.name,
        support=list(support) if support is not None else list(range(E.m_e)),
        resolution=resolution,
        solver_objective=solution.objective,
        grid_objective=grid_value,
        gap=gap,
        passed=passed,
        grid_gamma=[[float(z.real), float(z.imag)] for z in grid_gamma.entries.reshape(-1)],
    )


def random_search_fidelity(E: KrausChannel, layout: SystemLayout, L_dat, samples: int, rng: np.random.Generator,
                           U=None, output_factor=None,
                           candidates: Sequence[Tuple[np.ndarray, np.ndarray]] = ()) -> float:
    """Max data fidelity over C′ = R = I, the given (C′, R) candidates and Haar-random draws.

    Random recoveries are single unitaries on the full space.
    """
    if samples < 1:
        raise OracleError(f"samples: expected >= 1, got {samples}")
    factor = resolve_output_factor(layout, output_factor)
    U = np.eye(layout.d) if U is None else U
    eye_rec = np.eye(layout.d_rec)

    def score(c_prime, R):
        return fidelity_data(R, E, kron(c_prime, eye_rec), U, layout, factor, L_dat)

    best = score(np.eye(layout.d_trans), np.eye(layout.d))
    for c_prime, R in candidates:
        best = max(best, score(c_prime, R))
    for _ in range(samples - 1):
        c_prime = haar_random_unitary(layout.d_trans, rng)
        R = haar_random_unitary(layout.d, rng)
        best = max(best, score(c_prime, R))
    logger.debug(f"[ORACLE] random search over {samples} samples: best fidelity {best:.9f}")
    return best


def report_to_json(grad_reports: List[GradCheckReport], cross_checks: List[GammaCrossCheck]) -> str:
    return json.dumps({
        "gradients": [asdict(r) for r in grad_reports],
        "gamma": [asdict(c) for c in cross_checks],
        "passed": all(r.passed for r in grad_reports) and all(c.passed for c in cross_checks),
    }, indent=2)
