#!/usr/bin/env python3
"""
Alternating bi-convex optimization of encoding and recovery.

For a noisy channel {E_e}, an encoder W and a target unitary L the distance

    δ = Σ_{r,e} ‖R_r E_e W − μ_re L‖²

is minimized over recovery Kraus operators R (Σ R†R = I), the encoding unitary
C′ and the coefficient matrix Δ = [μ_re] (‖Δ‖ = 1).

Two objectives are supported:

* ``full``: W = (C′ ⊗ I_rec)·U and L acts on the whole space (k = d).
* ``data``: W = (C′ ⊗ I_rec)·U·(I_dat ⊗ |0…0⟩) maps the data qubit into the
  code, recovery operators decode to a d_dat-dimensional output and L = L_dat
  (k = d_dat). Here δ measures the entanglement fidelity of the data map.

With R†R = I and a trace-preserving channel δ = 2k − 2·Re Σ μ*_re T_re, where
T_re = Tr L†R_r E_e W.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from channels import KrausChannel, TargetSpec
from config import OptimizerConfig
from opt_state import DeltaMatrix, GammaMatrix, GammaSolution, OptState
from tensor_core import (
    DimensionError,
    SystemLayout,
    as_cmatrix,
    basis_vector,
    density_projection,
    eigh,
    frobenius_norm,
    haar_random_unitary,
    is_unitary,
    kron,
    partial_trace,
    polar_unitary,
    psd_inv_sqrt,
    psd_sqrt,
    psd_trace_sqrt,
    svd_descending,
)

logger = logging.getLogger(__name__)

OBJECTIVES = ("full", "data")
OUTPUT_FACTORS = {"data": SystemLayout.DATA, "recovery": SystemLayout.RECOVERY}
MONOTONE_SLACK = 1e-10
DEGENERATE_TRACE = 1e-14
GAMMA_BACKTRACKS = 40
MAX_GAMMA_STEP = 1e6
ARMIJO = 1e-4

KrausLike = Union[KrausChannel, Sequence[np.ndarray], np.ndarray]
TargetLike = Union[TargetSpec, np.ndarray]


def kraus_array(E: KrausLike) -> np.ndarray:
    """(m_E, d, d) stack of Kraus operators from a channel or a raw list."""
    if isinstance(E, KrausChannel):
        return E.kraus_array()
    if isinstance(E, np.ndarray) and E.ndim == 3:
        return E.astype(np.complex128)
    return np.stack([as_cmatrix(k, "kraus") for k in E])


def target_matrix(L: TargetLike) -> np.ndarray:
    return L.matrix if isinstance(L, TargetSpec) else as_cmatrix(L, "target")


def recovery_blocks(R_stack, out: int) -> np.ndarray:
    """Split an (m_R·out) × d vertical stack into an (m_R, out, d) array."""
    R = as_cmatrix(R_stack, "R_stack")
    if R.shape[0] % out:
        raise DimensionError(f"R_stack: {R.shape[0]} rows is not a multiple of output dim {out}")
    return R.reshape(R.shape[0] // out, out, R.shape[1])


def encoder(C_full, U, P_in=None) -> np.ndarray:
    W = as_cmatrix(C_full, "C_full") @ as_cmatrix(U, "U")
    return W if P_in is None else W @ P_in


def input_embedding(layout: SystemLayout) -> np.ndarray:
    """I_dat ⊗ |0…0⟩_anc, a d × d_dat isometry."""
    return kron(np.eye(layout.d_dat), basis_vector(layout.d_anc))


def output_embedding(layout: SystemLayout, output_factor: int) -> np.ndarray:
    """Isometry placing a d_dat-dimensional output on one factor, the others in |0⟩."""
    if layout.dims[output_factor] != layout.d_dat:
        raise DimensionError(f"output factor dimension {layout.dims[output_factor]} != d_dat {layout.d_dat}")
    if output_factor == SystemLayout.DATA:
        return input_embedding(layout)
    if output_factor == SystemLayout.RECOVERY:
        return kron(basis_vector(layout.d_trans), np.eye(layout.d_rec))
    raise DimensionError(f"unsupported output factor {output_factor}")


def resolve_output_factor(layout: SystemLayout, output_factor=None) -> int:
    if output_factor is None:
        return SystemLayout.RECOVERY if layout.d_rec == layout.d_dat else SystemLayout.DATA
    if isinstance(output_factor, str):
        if output_factor not in OUTPUT_FACTORS:
            raise DimensionError(f"output_factor: expected one of {list(OUTPUT_FACTORS)}, got {output_factor!r}")
        return OUTPUT_FACTORS[output_factor]
    return int(output_factor)


def overlap_traces(R_stack, E: KrausLike, W, L) -> np.ndarray:
    """T_re = Tr L†R_r E_e W as an (m_R, m_E) array."""
    K = kraus_array(E)
    L = target_matrix(L)
    R = recovery_blocks(R_stack, L.shape[0])
    LR = np.einsum('ab,rad->rbd', L.conj(), R)
    return np.einsum('rbd,edb->re', LR, K @ W)


def _closed_distance(traces: np.ndarray, delta: DeltaMatrix, k: int) -> float:
    return float(2 * k - 2 * np.real(np.sum(delta.entries.conj() * traces)))


def distance_delta(R_stack, E: KrausLike, C_full, U, delta: DeltaMatrix, L: TargetLike, P_in=None) -> float:
    """δ = Σ_{r,e} ‖R_r E_e C U − μ_re L‖², evaluated term by term."""
    K = kraus_array(E)
    L = target_matrix(L)
    W = encoder(C_full, U, P_in)
    R = recovery_blocks(R_stack, L.shape[0])
    mu = delta.entries
    if mu.shape != (R.shape[0], K.shape[0]):
        raise DimensionError(f"delta: shape {mu.shape} does not match (m_R, m_E) = {(R.shape[0], K.shape[0])}")
    total = 0.0
    for r in range(R.shape[0]):
        for e in range(K.shape[0]):
            diff = R[r] @ K[e] @ W - mu[r, e] * L
            total += float(np.real(np.vdot(diff, diff)))
    return total


def distance_delta_block(R_stack, E: KrausLike, C_full, U, delta: DeltaMatrix, L: TargetLike, P_in=None) -> float:
    """Block form ‖R·E·(I ⊗ C U) − Δ ⊗ L‖²."""
    K = kraus_array(E)
    L = target_matrix(L)
    W = encoder(C_full, U, P_in)
    m_e = K.shape[0]
    residual = as_cmatrix(R_stack) @ np.hstack(list(K)) @ kron(np.eye(m_e), W) - kron(delta.entries, L)
    return float(np.real(np.vdot(residual, residual)))


def gamma_moment(gamma, K: np.ndarray, code_projector=None) -> np.ndarray:
    """M(Γ) = Σ_ij Γ_ij E_i P E_j†"""
    KP = K if code_projector is None else K @ code_projector
    M = np.einsum('ij,iab,jcb->ac', gamma, KP, K.conj())
    return 0.5 * (M + M.conj().T)


def gamma_objective(gamma: Union[GammaMatrix, np.ndarray], E: KrausLike, code_projector=None) -> float:
    """Tr √M(Γ); concave in Γ."""
    K = kraus_array(E)
    entries = gamma.entries if isinstance(gamma, GammaMatrix) else as_cmatrix(gamma, "gamma")
    if entries.shape != (K.shape[0], K.shape[0]):
        raise DimensionError(f"gamma: shape {entries.shape} does not match m_E = {K.shape[0]}")
    return psd_trace_sqrt(gamma_moment(entries, K, code_projector))


def _gamma_gradient(M: np.ndarray, K: np.ndarray, code_projector, eps: float) -> np.ndarray:
    """G_ji = ½ Tr E_j† M^{-1/2} E_i P, Hermitian; the directional derivative along S is Tr S G."""
    KP = K if code_projector is None else K @ code_projector
    X = np.matmul(psd_inv_sqrt(M, eps), KP)
    G = 0.5 * np.einsum('jab,iab->ji', K.conj(), X)
    return 0.5 * (G + G.conj().T)


def _frank_wolfe_step(gamma, M, G, K, code_projector):
    """Move toward the top eigenvector of G with a bounded line search."""
    _, v = eigh(G)
    S = np.outer(v[:, -1], v[:, -1].conj())
    M_S = gamma_moment(S, K, code_projector)

    def along(t):
        return -psd_trace_sqrt((1 - t) * M + t * M_S)

    search = minimize_scalar(along, bounds=(0.0, 1.0), method='bounded', options={'xatol': 1e-10})
    step, value = float(search.x), -float(search.fun)
    full_value = psd_trace_sqrt(M_S)
    if full_value > value:
        step, value = 1.0, full_value
    candidate = (1 - step) * gamma + step * S
    return 0.5 * (candidate + candidate.conj().T), (1 - step) * M + step * M_S, value


def _projected_step(gamma, G, objective, step, K, code_projector):
    """Backtracking ascent step Γ ← proj(Γ + ηG); None if no Armijo step is found."""
    for _ in range(GAMMA_BACKTRACKS):
        candidate = density_projection(gamma + step * G)
        direction = candidate - gamma
        if frobenius_norm(direction) < DEGENERATE_TRACE:
            return None
        M = gamma_moment(candidate, K, code_projector)
        value = psd_trace_sqrt(M)
        if value >= objective + ARMIJO * float(np.real(np.vdot(G, direction))):
            return candidate, M, value, step
        step *= 0.5
    return None


def solve_gamma(E: KrausLike, config: Optional[OptimizerConfig] = None,
                start: Optional[Union[GammaMatrix, np.ndarray]] = None,
                code_projector=None) -> GammaSolution:
    """Maximize Tr √M(Γ) over trace-one PSD Γ.

    Projected gradient ascent with a backtracking step, starting from I/m_E unless
    ``start`` is given. The projection clips eigenvalues, so rank-deficient optima
    are reached exactly. When backtracking finds no step a Frank-Wolfe step is
    taken instead. The Frank-Wolfe gap λ_max(G) − Tr ΓG bounds the remaining
    suboptimality; the loop stops when it falls below gamma_tol (relative to the
    objective), when an accepted step gains less than gamma_tol, or at the cap.
    The objective never decreases.
    """
    config = config or OptimizerConfig()
    K = kraus_array(E)
    m = K.shape[0]
    if start is None:
        gamma = GammaMatrix.uniform(m).entries
    else:
        gamma = (start if isinstance(start, GammaMatrix) else GammaMatrix(start)).entries.copy()
        if gamma.shape != (m, m):
            raise DimensionError(f"gamma start: shape {gamma.shape} does not match m_E = {m}")

    M = gamma_moment(gamma, K, code_projector)
    objective = psd_trace_sqrt(M)
    converged = False
    gap = float("inf")
    iterations = 0
    step = 1.0
    for iterations in range(1, config.gamma_max_iters + 1):
        G = _gamma_gradient(M, K, code_projector, config.psd_eps)
        gap = float(eigh(G)[0][-1] - np.real(np.trace(gamma @ G)))
        if gap <= config.gamma_tol * max(1.0, objective):
            converged = True
            break
        move = _projected_step(gamma, G, objective, min(2.0 * step, MAX_GAMMA_STEP), K, code_projector)
        if move is None:
            candidate, M_next, value = _frank_wolfe_step(gamma, M, G, K, code_projector)
            kind = "fw"
        else:
            candidate, M_next, value, step = move
            kind = "pg"
        if value - objective < config.gamma_tol:
            if value > objective:
                gamma, M, objective = candidate, M_next, value
            converged = True
            break
        gamma, M, objective = candidate, M_next, value
        logger.debug(f"[GAMMA] iter {iterations} ({kind}): objective={objective:.14f} step={step:.3e} gap={gap:.3e}")

    if not converged:
        logger.warning(f"[GAMMA] hit {config.gamma_max_iters} iterations (gap {gap:.3e})")
    return GammaSolution(GammaMatrix(gamma), objective, iterations, converged, gap)


def delta_from_gamma(gamma: GammaMatrix) -> DeltaMatrix:
    """Δ = Γ^{1/2}, so Δ†Δ = Γ and m_R = m_E."""
    root = psd_sqrt(gamma.entries)
    return DeltaMatrix(root / frobenius_norm(root))


def recovery_from_delta(E: KrausLike, delta: DeltaMatrix, C_full, U, L: TargetLike, P_in=None) -> np.ndarray:
    """Recovery stack R = [v_1 … v_d][u_1 … u_d]† from the SVD of E(Δ† ⊗ W L†).

    Needs m_R·k_out ≥ d; pad Δ with zero rows otherwise.
    """
    K = kraus_array(E)
    L = target_matrix(L)
    W = encoder(C_full, U, P_in)
    d = K.shape[1]
    out = L.shape[0]
    mu = delta.entries
    if mu.shape[1] != K.shape[0]:
        raise DimensionError(f"delta: m_E = {mu.shape[1]} does not match channel m_E = {K.shape[0]}")
    if mu.shape[0] * out < d:
        raise DimensionError(f"delta: m_R·out = {mu.shape[0] * out} < d = {d}; pad Δ with zero rows")
    blocks = np.einsum('re,eab->rab', mu.conj(), K @ (W @ L.conj().T))
    X = blocks.transpose(1, 0, 2).reshape(d, mu.shape[0] * out)
    left, s, right = svd_descending(X)
    logger.debug(f"[RECOVERY] singular values {np.array2string(s[:d], precision=6)}")
    return right @ left.conj().T


def refit_delta(R_stack, E: KrausLike, C_full, U, L: TargetLike, P_in=None) -> DeltaMatrix:
    """Optimal Δ for fixed (R, C): μ_re = T_re / ‖T‖."""
    traces = overlap_traces(R_stack, E, encoder(C_full, U, P_in), L)
    norm = float(np.linalg.norm(traces))
    if norm < DEGENERATE_TRACE:
        logger.warning("[ALTERNATE] all overlap traces vanish; using a uniform Δ")
        uniform = np.ones(traces.shape, dtype=np.complex128) / math.sqrt(traces.size)
        return DeltaMatrix(uniform, degenerate=True)
    return DeltaMatrix(traces / norm)


def encoding_unconstrained(R_stack, E: KrausLike, delta: DeltaMatrix, L: TargetLike, U,
                           layout: SystemLayout, P_in=None) -> np.ndarray:
    """C̄′ = (1/d_rec)·Tr_rec[Σ μ_re (R_r E_e)† L P_in† U†] on data ⊗ encoding."""
    K = kraus_array(E)
    L = target_matrix(L)
    U = as_cmatrix(U, "U")
    R = recovery_blocks(R_stack, L.shape[0])
    S = np.einsum('re,rad->eda', delta.entries, R.conj())
    B_dag = np.einsum('eba,ebc->ac', K.conj(), S)
    Z = B_dag @ L
    if P_in is not None:
        Z = Z @ P_in.conj().T
    Z = Z @ U.conj().T
    return partial_trace(Z, [layout.d_trans, layout.d_rec], keep={0}) / layout.d_rec


def encoding_project(c_bar) -> np.ndarray:
    """Nearest unitary to C̄′; maximizes the overlap over all unitary encodings."""
    return polar_unitary(c_bar)


def fidelity_full(R_stack, E: KrausLike, C_full, U, L: TargetLike, layout: SystemLayout,
                  normalization: str = "normalized") -> float:
    """Σ |Tr L†R_r E_e C U|² divided by d_dat² ("d_dat") or d² ("normalized")."""
    traces = overlap_traces(R_stack, E, encoder(C_full, U), L)
    total = float(np.sum(np.abs(traces) ** 2))
    if normalization == "d_dat":
        return total / layout.d_dat ** 2
    if normalization == "normalized":
        return total / layout.d ** 2
    raise ValueError(f"normalization: expected 'd_dat' or 'normalized', got {normalization!r}")


def _composed_slices(R_stack, E: KrausLike, C_full, U, layout: SystemLayout, output_factor) -> np.ndarray:
    """Raw Kraus operators of ρ_dat ↦ Tr_others[R∘E∘C∘U(ρ_dat ⊗ |0⟩⟨0|)]."""
    factor = resolve_output_factor(layout, output_factor)
    if layout.dims[factor] != layout.d_dat:
        raise DimensionError(f"output factor dimension {layout.dims[factor]} != d_dat {layout.d_dat}")
    K = kraus_array(E)
    W = encoder(C_full, U, input_embedding(layout))
    R = recovery_blocks(R_stack, layout.d)
    A = np.einsum('rab,ebf->reaf', R, K @ W)
    A = A.reshape(-1, layout.d_dat, layout.d_enc, layout.d_rec, layout.d_dat)
    A = np.moveaxis(A, 1 + factor, 1)
    A = A.reshape(A.shape[0], layout.d_dat, -1, layout.d_dat).transpose(0, 2, 1, 3)
    return A.reshape(-1, layout.d_dat, layout.d_dat)


def choi_from_kraus(kraus: np.ndarray) -> np.ndarray:
    """J = Σ |Λ⟩⟩⟨⟨Λ| with row-major vectorization."""
    V = np.asarray(kraus).reshape(len(kraus), -1)
    J = V.T @ V.conj()
    return 0.5 * (J + J.conj().T)


def choi_to_kraus(J, d_out: int, d_in: int, tol: float = 1e-13) -> List[np.ndarray]:
    w, v = eigh(J)
    return [math.sqrt(w[i]) * v[:, i].reshape(d_out, d_in) for i in range(len(w) - 1, -1, -1) if w[i] > tol]


def composed_choi(R_stack, E: KrausLike, C_full, U, layout: SystemLayout, output_factor="recovery") -> np.ndarray:
    return choi_from_kraus(_composed_slices(R_stack, E, C_full, U, layout, output_factor))


def data_map_kraus(R_stack, E: KrausLike, C_full, U, layout: SystemLayout, output_factor="recovery") -> List[np.ndarray]:
    """Kraus operators {Λ_k} of the induced data map, via its Choi matrix."""
    J = composed_choi(R_stack, E, C_full, U, layout, output_factor)
    return choi_to_kraus(J, layout.d_dat, layout.d_dat)


def fidelity_data(R_stack, E: KrausLike, C_full, U, layout: SystemLayout, output_factor, L_dat=None) -> float:
    """Entanglement fidelity (1/d_dat²)·Σ |Tr L_dat†Λ_k|² of the induced data map."""
    L_dat = np.eye(layout.d_dat) if L_dat is None else as_cmatrix(L_dat, "L_dat")
    if L_dat.shape != (layout.d_dat, layout.d_dat):
        raise DimensionError(f"L_dat: shape {L_dat.shape}, expected {layout.d_dat}x{layout.d_dat}")
    kraus = data_map_kraus(R_stack, E, C_full, U, layout, output_factor)
    total = sum(abs(np.trace(L_dat.conj().T @ lam)) ** 2 for lam in kraus)
    return float(total) / layout.d_dat ** 2


def decoder_from_recovery(R_stack, layout: SystemLayout, output_factor) -> np.ndarray:
    """Split full-space recovery R_r into decoders ⟨j|_others R_r : H → H_out."""
    factor = resolve_output_factor(layout, output_factor)
    if layout.dims[factor] != layout.d_dat:
        raise DimensionError(f"output factor dimension {layout.dims[factor]} != d_dat {layout.d_dat}")
    R = recovery_blocks(R_stack, layout.d)
    m = R.shape[0]
    R = R.reshape(m, layout.d_dat, layout.d_enc, layout.d_rec, layout.d)
    R = np.moveaxis(R, 1 + factor, 1).reshape(m, layout.d_dat, -1, layout.d)
    return R.transpose(0, 2, 1, 3).reshape(-1, layout.d)


def embed_decoder(Q_stack, layout: SystemLayout, output_factor) -> np.ndarray:
    """Full-space recovery R_r = J_out Q_r with the non-output factors reset to |0⟩."""
    J = output_embedding(layout, resolve_output_factor(layout, output_factor))
    Q = recovery_blocks(Q_stack, layout.d_dat)
    return np.einsum('ab,rbd->rad', J, Q).reshape(-1, layout.d)


@dataclass
class _Problem:
    """Fixed data of one alternating run."""
    kraus: np.ndarray
    layout: SystemLayout
    U: np.ndarray
    L: np.ndarray
    objective: str
    output_factor: int
    P_in: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.L.shape[1]

    @property
    def min_recovery_ops(self) -> int:
        return -(-self.layout.d // self.L.shape[0])

    def c_full(self, c_prime: np.ndarray) -> np.ndarray:
        return kron(c_prime, np.eye(self.layout.d_rec))

    def code_projector(self, c_prime: np.ndarray) -> Optional[np.ndarray]:
        if self.P_in is None:
            return None
        W = encoder(self.c_full(c_prime), self.U, self.P_in)
        return W @ W.conj().T

    def internal_recovery(self, R_full) -> np.ndarray:
        if self.objective == "full":
            return as_cmatrix(R_full, "R_stack")
        return decoder_from_recovery(R_full, self.layout, self.output_factor)

    def full_recovery(self, R) -> np.ndarray:
        if self.objective == "full":
            return R
        return embed_decoder(R, self.layout, self.output_factor)


def _run_restart(problem: _Problem, config: OptimizerConfig, index: int, label: str,
                 c_start: np.ndarray, r_start=None) -> OptState:
    K, layout, U, L, P_in = problem.kraus, problem.layout, problem.U, problem.L, problem.P_in
    c_prime = c_start
    deltas: List[float] = []
    fidelities: List[float] = []
    gamma_start = None
    delta = None
    R = None
    gamma_misses = 0

    def record(value: float):
        if deltas and value > deltas[-1] + MONOTONE_SLACK:
            logger.warning(f"[ALTERNATE] restart {index}: δ increased {deltas[-1]:.12f} -> {value:.12f}")
        deltas.append(value)
        fidelities.append(((2 * problem.k - value) / (2 * problem.k)) ** 2)

    if r_start is not None:
        R = problem.internal_recovery(r_start)
        delta = refit_delta(R, K, problem.c_full(c_prime), U, L, P_in)
        record(_closed_distance(overlap_traces(R, K, encoder(problem.c_full(c_prime), U, P_in), L), delta, problem.k))
        gamma_start = GammaMatrix(delta.gamma())

    converged = False
    iteration = 0
    for iteration in range(1, config.max_outer_iters + 1):
        solution = solve_gamma(K, config, start=gamma_start, code_projector=problem.code_projector(c_prime))
        if not solution.converged:
            gamma_misses += 1
        c_full = problem.c_full(c_prime)
        delta = delta_from_gamma(solution.gamma).padded(problem.min_recovery_ops)
        R = recovery_from_delta(K, delta, c_full, U, L, P_in)
        delta = refit_delta(R, K, c_full, U, L, P_in)

        c_bar = encoding_unconstrained(R, K, delta, L, U, layout, P_in)
        c_prime = encoding_project(c_bar)
        c_full = problem.c_full(c_prime)
        delta = refit_delta(R, K, c_full, U, L, P_in)
        value = _closed_distance(overlap_traces(R, K, encoder(c_full, U, P_in), L), delta, problem.k)
        record(value)
        logger.debug(f"[ALTERNATE] restart {index} iter {iteration}: δ={value:.14f} Γ-iters={solution.iterations}")

        if len(deltas) >= 2 and deltas[-2] - value < config.tol_outer:
            converged = True
            break
        gamma_start = GammaMatrix(delta.gamma())

    if not converged:
        logger.warning(f"[ALTERNATE] restart {index} ({label}) stopped at {config.max_outer_iters} iterations")
    return OptState(
        C_prime=c_prime,
        R_stack=problem.full_recovery(R),
        delta=delta,
        delta_history=deltas,
        fidelity_history=fidelities,
        iteration=iteration,
        converged=converged,
        restart=index,
        start=label,
        objective=problem.objective,
        gamma_nonconverged=gamma_misses,
    )


def alternate(E: KrausChannel, layout: SystemLayout, L: Optional[TargetLike] = None,
              config: Optional[OptimizerConfig] = None, *, U=None, objective: str = "full",
              L_dat=None, output_factor=None,
              initial_states: Sequence[Tuple[np.ndarray, np.ndarray]] = (), jobs: int = 1) -> OptState:
    """Best-of-restarts alternating optimization.

    Restart 0 starts from C′ = I, then one restart per ``initial_states`` (C′, R) pair,
    then Haar-random C′ drawn from ``config.seed``. Ties on δ go to the lowest index.
    With ``jobs`` > 1 the restarts run in a thread pool; the result does not depend on it.
    """
    config = config or OptimizerConfig()
    if jobs < 1:
        raise ValueError(f"jobs: expected >= 1, got {jobs}")
    if E.dim != layout.d:
        raise DimensionError(f"channel: dim {E.dim} does not match layout dimension {layout.d}")
    if objective not in OBJECTIVES:
        raise ValueError(f"objective: expected one of {OBJECTIVES}, got {objective!r}")
    U = np.eye(layout.d, dtype=np.complex128) if U is None else as_cmatrix(U, "U")
    if U.shape != (layout.d, layout.d) or not is_unitary(U):
        raise DimensionError(f"U: expected a {layout.d}x{layout.d} unitary")

    if objective == "full":
        target = target_matrix(L) if L is not None else np.eye(layout.d, dtype=np.complex128)
        if target.shape != (layout.d, layout.d):
            raise DimensionError(f"target: shape {target.shape}, expected {layout.d}x{layout.d}")
        problem = _Problem(E.kraus_array(), layout, U, target, objective, resolve_output_factor(layout, output_factor))
    else:
        target = np.eye(layout.d_dat, dtype=np.complex128) if L_dat is None else as_cmatrix(L_dat, "L_dat")
        if target.shape != (layout.d_dat, layout.d_dat) or not is_unitary(target):
            raise DimensionError(f"L_dat: expected a {layout.d_dat}x{layout.d_dat} unitary")
        factor = resolve_output_factor(layout, output_factor)
        output_embedding(layout, factor)
        problem = _Problem(E.kraus_array(), layout, U, target, objective, factor, input_embedding(layout))

    starts = [("identity", np.eye(layout.d_trans, dtype=np.complex128), None)]
    for i, (c_seed, r_seed) in enumerate(initial_states):
        c_seed = as_cmatrix(c_seed, "seed C_prime")
        if c_seed.shape != (layout.d_trans, layout.d_trans) or not is_unitary(c_seed, 1e-8):
            raise DimensionError(f"seed {i}: C_prime must be a {layout.d_trans}x{layout.d_trans} unitary")
        starts.append((f"seeded-{i}", c_seed, r_seed))
    rng = np.random.default_rng(config.seed)
    for _ in range(config.restarts - 1):
        starts.append(("haar", haar_random_unitary(layout.d_trans, rng), None))

    logger.info(f"[ALTERNATE] {E.name or 'channel'} layout={layout} objective={objective} restarts={len(starts)}")

    def run(item) -> OptState:
        index, (label, c_start, r_start) = item
        return _run_restart(problem, config, index, label, c_start, r_start)

    if jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, len(starts))) as pool:
            states = list(pool.map(run, enumerate(starts)))
    else:
        states = [run(item) for item in enumerate(starts)]

    best: Optional[OptState] = None
    for index, state in enumerate(states):
        label = starts[index][0]
        logger.info(f"[ALTERNATE] restart {index} ({label}): δ={state.delta_value:.12f} "
                    f"fidelity={state.fidelity:.12f} iterations={state.iteration} converged={state.converged}")
        if best is None or state.delta_value < best.delta_value - 1e-12:
            best = state
    logger.info(f"[ALTERNATE] best restart {best.restart} ({best.start}): δ={best.delta_value:.12f}")
    return best
