"""Dense complex linear algebra helpers and a small subspace toolkit.

The heavy lifting is delegated to LAPACK through numpy; this module pins the
tolerances and conventions that the rest of the package relies on.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NonHermitian, ZeroMatrix

HERMITIAN_TOL = 1e-10
ABS_FLOOR = 1e-300


def as_matrix(M) -> np.ndarray:
    """Return ``M`` as a finite 2d complex array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def default_rank_tol(shape) -> float:
    return 1e-10 * max(shape)


@dataclass(frozen=True)
class Subspace:
    """Subspace of C^d stored through an orthonormal basis (columns)."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        if self.basis.ndim != 2 or self.basis.shape[0] != self.ambient_dim:
            raise ValueError("basis does not live in the ambient space")
        if self.basis.shape[1] > self.ambient_dim:
            raise ValueError("more basis vectors than ambient dimension")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def complement_apply(self, V: np.ndarray) -> np.ndarray:
        """(1 - P) V without forming P."""
        return V - self.basis @ (self.basis.conj().T @ V)

    def contains(self, v, tol=1e-9) -> bool:
        v = np.asarray(v, dtype=complex).reshape(self.ambient_dim, -1)
        nv = np.linalg.norm(v)
        if nv == 0:
            return True
        return np.linalg.norm(self.complement_apply(v)) <= tol * nv

    @classmethod
    def zero(cls, d: int) -> "Subspace":
        return cls(d, np.zeros((d, 0), dtype=complex))

    @classmethod
    def full(cls, d: int) -> "Subspace":
        return cls(d, np.eye(d, dtype=complex))


def hermitian_spectrum(M):
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    w : ndarray
        Real eigenvalues in ascending order.
    V : ndarray
        Unitary matrix of eigenvectors (columns).
    """
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = np.linalg.norm(A, 2)
    if np.linalg.norm(A - A.conj().T, 2) > HERMITIAN_TOL * max(scale, ABS_FLOOR):
        raise NonHermitian("matrix is not Hermitian within tolerance")
    H = 0.5 * (A + A.conj().T)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return w, V


def hermitian_eigvals(M) -> np.ndarray:
    A = as_matrix(M)
    try:
        return np.linalg.eigvalsh(0.5 * (A + A.conj().T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NoConvergence(str(exc)) from exc


def general_spectrum(M) -> np.ndarray:
    """Eigenvalues (with algebraic multiplicity) of a square matrix."""
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NoConvergence(str(exc)) from exc


def singular_values(M) -> np.ndarray:
    return np.linalg.svd(as_matrix(M), compute_uv=False)


def numerical_rank(M, rank_tol=None) -> int:
    A = as_matrix(M)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] < ABS_FLOOR:
        return 0
    tol = default_rank_tol(A.shape) if rank_tol is None else rank_tol
    return int(np.sum(s > tol * s[0]))


def orthonormal_range(M, rank_tol=None) -> Subspace:
    """Orthonormal basis for the column space of ``M``.

    Singular values below ``rank_tol * sigma_max`` count as zero.  The default
    tolerance is ``1e-10 * max(rows, cols)``.
    """
    A = as_matrix(M)
    if rank_tol is None:
        rank_tol = default_rank_tol(A.shape)
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] < ABS_FLOOR:
        raise ZeroMatrix("all singular values are below the absolute floor")
    r = int(np.sum(s > rank_tol * s[0]))
    return Subspace(A.shape[0], U[:, :r])


def null_space(M, rank_tol=None) -> Subspace:
    A = as_matrix(M)
    if rank_tol is None:
        rank_tol = default_rank_tol(A.shape)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    if s.size == 0 or s[0] < ABS_FLOOR:
        return Subspace.full(A.shape[1])
    r = int(np.sum(s > rank_tol * s[0]))
    return Subspace(A.shape[1], Vh[r:].conj().T)


def subspace_intersect(spaces, tol=1e-9) -> Subspace:
    """Intersection of subspaces of a common ambient space.

    The intersection is the null space of sum_i (1 - P_i).  Since every vector
    of the result lies in the first space, the null space is computed on the
    coordinates of that space: with U_0 the first basis the Hermitian PSD
    matrix sum_i (1 - U_0^* P_i U_0) is diagonalized and eigenvalues below
    ``tol`` are kept.  No ambient-sized operator is formed.
    """
    spaces = list(spaces)
    if not spaces:
        raise ValueError("need at least one subspace")
    d = spaces[0].ambient_dim
    for S in spaces:
        if S.ambient_dim != d:
            raise DimensionMismatch(f"ambient dimensions differ: {S.ambient_dim} vs {d}")
    # start from the smallest space, it bounds the result
    order = sorted(range(len(spaces)), key=lambda i: spaces[i].dim)
    U0 = spaces[order[0]].basis
    r = U0.shape[1]
    if r == 0:
        return Subspace.zero(d)
    G = np.zeros((r, r), dtype=complex)
    for i in order[1:]:
        Ai = spaces[i].basis.conj().T @ U0
        G += np.eye(r) - Ai.conj().T @ Ai
    w, V = np.linalg.eigh(0.5 * (G + G.conj().T))
    keep = w <= tol
    basis = U0 @ V[:, keep]
    # re-orthonormalize against rounding
    if basis.shape[1]:
        q, _ = np.linalg.qr(basis)
        basis = q
    return Subspace(d, basis)


def projector_distance(S: Subspace, T: Subspace) -> float:
    """Spectral norm of P_S - P_T, computed without forming projectors."""
    if S.ambient_dim != T.ambient_dim:
        raise DimensionMismatch("ambient dimensions differ")
    if S.dim != T.dim:
        return 1.0
    if S.dim == 0:
        return 0.0
    # equal dimensions: ||P_S - P_T|| = ||(1 - P_S) U_T|| (largest principal sine)
    return float(min(1.0, np.linalg.norm(S.complement_apply(T.basis), 2)))


def psd_sqrt_inv(M, floor=1e-12):
    """Return (M^{1/2}, M^{-1/2}) for a PSD matrix, refusing tiny eigenvalues."""
    w, V = hermitian_spectrum(M)
    if w[0] <= floor:
        return None
    sq = (V * np.sqrt(w)) @ V.conj().T
    isq = (V / np.sqrt(w)) @ V.conj().T
    return sq, isq
