"""The maps Gamma_N, local ground spaces and the intersection property.

Conventions.  Physical basis vectors are the standard basis of C^n.  Multi
indices (mu_1, ..., mu_N) are enumerated big-endian: site 0 varies slowest, so
index = mu_1 n^{N-1} + ... + mu_N.  Columns of Gamma_N are labeled by matrix
units e_ij in lexicographic (row-major) order.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numkit
from .errors import NotNormalized, NotPrimitive, TooLarge
from .numkit import Subspace
from .transfer import KrausTuple, SpectralData, as_tuple, gap_constants, spectral_data

DENSE_ROW_CAP = 200_000


def window_products(B: KrausTuple, N: int, cap: int = DENSE_ROW_CAP) -> np.ndarray:
    """Array W of shape (n^N, k, k) with W[mu] = B_mu1 B_mu2 ... B_muN."""
    B = as_tuple(B)
    if N < 1:
        raise ValueError("N must be >= 1")
    if B.n**N > cap:
        raise TooLarge(f"n^N = {B.n}^{N} exceeds cap {cap}")
    W = B.mats
    k = B.k
    for _ in range(N - 1):
        W = np.einsum("aij,bjl->abil", W, B.mats).reshape(-1, k, k)
    return W


@dataclass
class GroundSpace:
    N: int
    k: int
    gamma: np.ndarray
    space: Subspace
    injective: bool
    sigma_min: float

    @property
    def dim(self) -> int:
        return self.space.dim

    def apply(self, C) -> np.ndarray:
        """Gamma_N(C) as a vector of length n^N."""
        return self.gamma @ np.asarray(C, dtype=complex).reshape(-1)

    def projector(self) -> np.ndarray:
        return self.space.projector()


def gamma_matrix(B: KrausTuple, N: int, cap: int = DENSE_ROW_CAP, rank_tol=None) -> GroundSpace:
    """Matrix of C -> sum_mu Tr(C B*_muN ... B*_mu1) psi_mu1 (x) ... (x) psi_muN.

    Tr(C (B_mu1...B_muN)^*) = sum_ij C_ij conj((B_mu1...B_muN)_ij), so the
    column of e_ij is the conjugated (i, j) entry of the window product.
    """
    B = as_tuple(B)
    W = window_products(B, N, cap)
    gamma = W.reshape(W.shape[0], -1).conj()
    s = numkit.singular_values(gamma)
    space = numkit.orthonormal_range(gamma, rank_tol)
    k2 = B.k**2
    sigma_min = float(s[k2 - 1]) if s.size >= k2 else 0.0
    return GroundSpace(
        N=N, k=B.k, gamma=gamma, space=space, injective=space.dim == k2, sigma_min=sigma_min,
    )


def _normalized_data(B: KrausTuple, sd: Optional[SpectralData]) -> SpectralData:
    if sd is None:
        sd = spectral_data(B)
    if not sd.primitive:
        raise NotPrimitive("tuple is not primitive")
    if abs(sd.r - 1.0) > 1e-8:
        raise NotNormalized(f"spectral radius {sd.r} differs from 1")
    return sd


def fcs_inner(B: KrausTuple, X, Y, sd: Optional[SpectralData] = None) -> complex:
    """<X, Y>_B = tr(rho X^* e Y)."""
    sd = _normalized_data(as_tuple(B), sd)
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    return complex(np.trace(sd.rho @ X.conj().T @ sd.e @ Y))


def _random_matrix(rng, k):
    return rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))


def overlap_bound_check(B: KrausTuple, N: int, trials: int = 50, seed=0, pairs=None) -> float:
    """Largest observed value of |<G X, G Y> - <X, Y>_B| - E(N) <X,X>^(1/2) <Y,Y>^(1/2).

    Nonpositive (up to rounding) means the overlap bound held on every sample.
    ``pairs`` may supply explicit (X, Y) pairs instead of random ones.
    """
    B = as_tuple(B)
    sd = _normalized_data(B, None)
    EN = gap_constants(B, sd).E_at(N)
    gs = gamma_matrix(B, N)
    if pairs is None:
        rng = np.random.default_rng(seed)
        pairs = [(_random_matrix(rng, B.k), _random_matrix(rng, B.k)) for _ in range(trials)]
    worst = -np.inf
    for X, Y in pairs:
        gx, gy = gs.apply(X), gs.apply(Y)
        lhs = abs(np.vdot(gx, gy) - fcs_inner(B, X, Y, sd))
        nx = fcs_inner(B, X, X, sd).real
        ny = fcs_inner(B, Y, Y, sd).real
        rhs = EN * np.sqrt(max(nx, 0.0) * max(ny, 0.0))
        worst = max(worst, lhs - rhs)
    return float(worst)


def embed_subspace_basis(U: np.ndarray, n: int, left: int, right: int) -> np.ndarray:
    """Columns of 1_{n^left} (x) U (x) 1_{n^right}."""
    return np.kron(np.kron(np.eye(n**left), U), np.eye(n**right))


def shifted_embeddings(space: Subspace, n: int, m: int, N: int):
    return [
        Subspace(n**N, embed_subspace_basis(space.basis, n, x, N - m - x))
        for x in range(N - m + 1)
    ]


@dataclass
class IntersectionRow:
    N: int
    dim: int
    expected_dim: int
    distance: float
    passed: bool


@dataclass
class IntersectionReport:
    m: int
    rows: list
    certified_m: Optional[int]
    empirical_pass: bool

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "certified_m": self.certified_m,
            "empirical_pass": self.empirical_pass,
            "rows": [vars(r) for r in self.rows],
            "method": "proved for all N when m >= certified_m; rows are finite checks",
        }


def intersection_check(B: KrausTuple, m: int, N_max: Optional[int] = None, tol: float = 1e-8) -> IntersectionReport:
    """Compare the intersection of shifted copies of G_m with G_N for N = m..N_max."""
    B = as_tuple(B)
    if m < 1:
        raise ValueError("m must be >= 1")
    if N_max is None:
        N_max = m + 4
    if N_max < m:
        raise ValueError("N_max must be >= m")
    if B.n**N_max > DENSE_ROW_CAP:
        raise TooLarge("window too large for the intersection check")
    Gm = gamma_matrix(B, m).space
    rows = []
    for N in range(m, N_max + 1):
        inter = numkit.subspace_intersect(shifted_embeddings(Gm, B.n, m, N))
        GN = gamma_matrix(B, N).space
        dist = numkit.projector_distance(inter, GN)
        rows.append(IntersectionRow(N, inter.dim, GN.dim, dist, dist <= tol))
    sd = spectral_data(B)
    certified = sd.s + 1 if sd.primitive and sd.s is not None else None
    return IntersectionReport(m, rows, certified, all(r.passed for r in rows))
