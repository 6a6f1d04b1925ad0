#!/usr/bin/env python3
"""
Dense complex linear algebra for multipartite quantum systems.

Tensor products, partial traces, SVD/eigendecompositions and the PSD matrix
functions used by the optimizer. Every operator is a 2-D ``numpy`` array of
``complex128``; subsystem factors are always ordered data ⊗ encoding ⊗ recovery
and addressed through :class:`SystemLayout`.
"""

import string
import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, List, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

logger = logging.getLogger(__name__)

MAX_DIM = 4096
HERMITIAN_TOL = 1e-10
CLAMP_TOL = 1e-10
NEGATIVE_TOL = 1e-6


class LinalgError(ValueError):
    """Base class for linear-algebra input errors"""


class DimensionError(LinalgError):
    """Shapes do not conform or exceed MAX_DIM"""


class NotHermitianError(LinalgError):
    pass


class NotPSDError(LinalgError):
    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(f"matrix is not positive semidefinite (min eigenvalue {self.min_eigenvalue:.3e})")


class DecompositionError(LinalgError):
    """SVD or eigendecomposition did not converge"""


@dataclass(frozen=True)
class SystemLayout:
    """Dimensions of the data, encoding and recovery factors.

    The global tensor order is data ⊗ encoding ⊗ recovery; recovery is always the
    last factor.
    """
    d_dat: int
    d_enc: int = 1
    d_rec: int = 1

    DATA = 0
    ENCODING = 1
    RECOVERY = 2

    def __post_init__(self):
        for field_name in ("d_dat", "d_enc", "d_rec"):
            value = getattr(self, field_name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise DimensionError(f"layout: {field_name} must be an integer, got {value!r}")
        if self.d_dat < 2:
            raise DimensionError(f"layout: d_dat must be >= 2, got {self.d_dat}")
        if self.d_enc < 1 or self.d_rec < 1:
            raise DimensionError(f"layout: d_enc and d_rec must be >= 1, got {self.d_enc}, {self.d_rec}")
        if self.d > MAX_DIM:
            raise DimensionError(f"layout: total dimension {self.d} exceeds {MAX_DIM}")

    @property
    def d_anc(self) -> int:
        return self.d_enc * self.d_rec

    @property
    def d(self) -> int:
        return self.d_dat * self.d_anc

    @property
    def d_trans(self) -> int:
        """Dimension of the transmitted (noisy) part, data ⊗ encoding."""
        return self.d_dat * self.d_enc

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.d_dat, self.d_enc, self.d_rec)

    @property
    def maximally_entangled(self) -> bool:
        return self.d_enc == self.d_rec and self.d_enc > 1

    @classmethod
    def parse(cls, text: str) -> "SystemLayout":
        """Parse ``"d_dat,d_enc,d_rec"`` (missing trailing factors default to 1)."""
        try:
            parts = [int(chunk) for chunk in str(text).split(",") if chunk.strip()]
        except ValueError:
            raise DimensionError(f"layout: expected comma-separated integers, got {text!r}")
        if not 1 <= len(parts) <= 3:
            raise DimensionError(f"layout: expected 1 to 3 dimensions, got {text!r}")
        return cls(*parts)

    def __str__(self) -> str:
        return f"{self.d_dat},{self.d_enc},{self.d_rec}"


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name}: expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LinalgError(f"{name}: contains NaN or Inf entries")
    return arr


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def qubit_count(n: int) -> int:
    if not is_power_of_two(n):
        raise DimensionError(f"dimension {n} is not a power of 2")
    return int(n).bit_length() - 1


def basis_vector(dim: int, index: int = 0) -> np.ndarray:
    vec = np.zeros((dim, 1), dtype=np.complex128)
    vec[index, 0] = 1.0
    return vec


def kron(a, b) -> np.ndarray:
    a = as_cmatrix(a, "kron lhs")
    b = as_cmatrix(b, "kron rhs")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > MAX_DIM:
        raise DimensionError(f"kron: result {rows}x{cols} exceeds maximum dimension {MAX_DIM}")
    return np.kron(a, b)


def kron_all(*mats) -> np.ndarray:
    if not mats:
        return np.ones((1, 1), dtype=np.complex128)
    return reduce(kron, mats)


def partial_trace(a, factor_dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not in ``keep``; kept factors stay in their original order."""
    a = as_cmatrix(a, "partial_trace input")
    dims = [int(x) for x in factor_dims]
    n = len(dims)
    side = int(np.prod(dims)) if dims else 1
    if a.shape != (side, side):
        raise DimensionError(f"partial_trace: factor dims {dims} (product {side}) do not match shape {a.shape}")
    kept = sorted(set(keep))
    if any(k < 0 or k >= n for k in kept):
        raise DimensionError(f"partial_trace: keep {kept} out of range for {n} factors")
    if 2 * n > len(string.ascii_letters):
        raise DimensionError(f"partial_trace: too many factors ({n})")

    letters = string.ascii_letters
    row = [letters[i] for i in range(n)]
    col = [letters[n + i] if i in kept else letters[i] for i in range(n)]
    out = [row[i] for i in kept] + [col[i] for i in kept]
    subscripts = f"{''.join(row)}{''.join(col)}->{''.join(out)}"
    reduced = np.einsum(subscripts, a.reshape(dims + dims))
    kept_dim = int(np.prod([dims[i] for i in kept])) if kept else 1
    return np.asarray(reduced).reshape(kept_dim, kept_dim)


def svd_descending(a) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``a = U diag(s) V†`` with ``s`` non-increasing. Returns (U, s, V)."""
    a = as_cmatrix(a, "svd input")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as e:
        logger.error(f"[LINALG] SVD failed on {a.shape} matrix: {e}")
        raise DecompositionError(f"SVD did not converge: {e}") from e
    return u, s, vh.conj().T


def hermitian_defect(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(a, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    a = as_cmatrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name}: expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    defect = hermitian_defect(a)
    if defect > tol * scale:
        raise NotHermitianError(f"{name}: not Hermitian (max |A - A†| = {defect:.3e})")
    return a


def eigh(a) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = check_hermitian(a, name="eigh input")
    try:
        return np.linalg.eigh(0.5 * (a + a.conj().T))
    except np.linalg.LinAlgError as e:
        logger.error(f"[LINALG] eigh failed on {a.shape} matrix: {e}")
        raise DecompositionError(f"eigh did not converge: {e}") from e


def _clamped_spectrum(a) -> Tuple[np.ndarray, np.ndarray]:
    w, v = eigh(a)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w[0] < -NEGATIVE_TOL * scale:
        raise NotPSDError(w[0])
    return np.clip(w, 0.0, None), v


def psd_sqrt(a) -> np.ndarray:
    w, v = _clamped_spectrum(a)
    return (v * np.sqrt(w)) @ v.conj().T


def psd_inv_sqrt(a, eps: float = 1e-12) -> np.ndarray:
    """Pseudo-inverse square root: eigenvalues <= eps are mapped to zero."""
    w, v = _clamped_spectrum(a)
    inv = np.zeros_like(w)
    mask = w > eps
    inv[mask] = 1.0 / np.sqrt(w[mask])
    return (v * inv) @ v.conj().T


def psd_trace_sqrt(a) -> float:
    """Tr √a through the clamped spectrum."""
    w, _ = _clamped_spectrum(a)
    return float(np.sum(np.sqrt(w)))


def polar_unitary(a) -> np.ndarray:
    """Unitary factor of the polar decomposition ``a = Q·P``.

    Null directions of a rank-deficient ``a`` are completed with the unitary that
    keeps ``Q`` closest to the identity, so diag(3, 0) maps to I and 0 maps to I.
    """
    a = as_cmatrix(a, "polar input")
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"polar_unitary: expected a square matrix, got shape {a.shape}")
    u, s, v = svd_descending(a)
    cutoff = 1e-12 * max(float(s[0]) if s.size else 0.0, 1.0)
    rank = int(np.sum(s > cutoff))
    if rank == n:
        return u @ v.conj().T
    u_r, v_r = u[:, :rank], v[:, :rank]
    u_0, v_0 = u[:, rank:], v[:, rank:]
    completion = polar_unitary(v_0.conj().T @ u_0).conj().T
    return u_r @ v_r.conj().T + u_0 @ completion @ v_0.conj().T


def haar_random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise DimensionError(f"haar_random_unitary: n must be >= 1, got {n}")
    if n == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]], dtype=np.complex128)
    return np.asarray(unitary_group.rvs(n, random_state=rng), dtype=np.complex128)


def permute_factors(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Permutation unitary P with P|x_0 … x_n⟩ = |x_perm[0] … x_perm[n]⟩."""
    dims = [int(x) for x in dims]
    if sorted(perm) != list(range(len(dims))):
        raise DimensionError(f"permute_factors: {list(perm)} is not a permutation of {len(dims)} factors")
    total = int(np.prod(dims))
    if total > MAX_DIM:
        raise DimensionError(f"permute_factors: dimension {total} exceeds {MAX_DIM}")
    source = np.arange(total)
    digits = np.unravel_index(source, dims)
    target = np.ravel_multi_index(tuple(digits[p] for p in perm), [dims[p] for p in perm])
    out = np.zeros((total, total), dtype=np.complex128)
    out[target, source] = 1.0
    return out


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a), "fro"))


def simplex_projection(values) -> np.ndarray:
    """Euclidean projection of a real vector onto {x ≥ 0, Σx = 1}."""
    v = np.asarray(values, dtype=float).reshape(-1)
    u = np.sort(v)[::-1]
    excess = np.cumsum(u) - 1.0
    active = np.nonzero(u - excess / np.arange(1, v.size + 1) > 0)[0][-1]
    return np.clip(v - excess[active] / (active + 1), 0.0, None)


def density_projection(a) -> np.ndarray:
    """Nearest trace-one PSD matrix in Frobenius norm (eigenvalues projected onto the simplex)."""
    a = as_cmatrix(a, "density_projection")
    w, v = eigh(a)
    out = (v * simplex_projection(w)) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def is_unitary(a, atol: float = 1e-10) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.allclose(a.conj().T @ a, np.eye(a.shape[0]), atol=atol, rtol=0.0))


def isometry_defect(a) -> float:
    """max |A†A - I|"""
    a = np.asarray(a)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[1]))))


def schur_eigenbasis(a, tol: float = 1e-8) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenphases and eigenvectors of a normal matrix via the complex Schur form.

    Eigenvalues are ordered by angle in [0, 2π). Inside each degenerate cluster the
    basis is rebuilt by Gram-Schmidt over the projected canonical basis vectors, so
    every vector has its first significant component real and positive and the
    identity yields the canonical basis.
    """
    a = as_cmatrix(a, "eigenbasis input")
    n = a.shape[0]
    t, z = scipy.linalg.schur(a, output="complex")
    if np.max(np.abs(np.triu(t, 1))) > tol * max(1.0, float(np.max(np.abs(t)))):
        raise LinalgError("schur_eigenbasis: matrix is not normal")
    eigvals = np.diag(t).copy()
    angles = np.mod(np.angle(eigvals), 2 * np.pi)
    angles[angles > 2 * np.pi - tol] = 0.0
    order = np.argsort(angles, kind="stable")
    eigvals, z, angles = eigvals[order], z[:, order], angles[order]

    vectors: List[np.ndarray] = []
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(eigvals[stop] - eigvals[start]) < tol:
            stop += 1
        block = z[:, start:stop]
        projector = block @ block.conj().T
        found: List[np.ndarray] = []
        for j in range(n):
            if len(found) == stop - start:
                break
            cand = projector[:, j].copy()
            for prev in found:
                cand -= (prev.conj() @ cand) * prev
            norm = np.linalg.norm(cand)
            if norm > 1e-6:
                found.append(cand / norm)
        vectors.extend(found)
        start = stop
    return eigvals, np.column_stack(vectors)
