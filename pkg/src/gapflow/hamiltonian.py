"""Parent interactions, open-chain Hamiltonians and their gaps."""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse.linalg as spla

from . import numkit
from .errors import InvalidWindow, KernelDimensionMismatch, NoConvergence, TooLarge
from .groundspace import gamma_matrix
from .numkit import Subspace
from .transfer import KrausTuple, as_tuple, gap_constants, spectral_data

TAU_KER = 1e-8
DENSE_CAP = 4096
MATRIX_FREE_CAP = 2**20


@dataclass
class Term:
    m: int
    Q: np.ndarray
    weight: float
    basis: np.ndarray  # orthonormal basis of the ground space, Q = 1 - basis basis^*


@dataclass
class ChainInteraction:
    """Weighted projector interactions; one term, or two when mixing lengths."""

    n: int
    terms: List[Term]
    injective: bool = True

    @property
    def m(self) -> int:
        return self.terms[0].m

    @property
    def Q(self) -> np.ndarray:
        return self.terms[0].Q

    @property
    def m_max(self) -> int:
        return max(t.m for t in self.terms)

    @property
    def degenerate(self) -> bool:
        """True when some projector vanishes (ground space is everything)."""
        return any(t.basis.shape[1] == self.n**t.m for t in self.terms)


def build_interaction(B: KrausTuple, m: int, allow_noninjective: bool = True) -> ChainInteraction:
    """Interaction 1 - G_m with G_m the projector onto Ran Gamma_m."""
    B = as_tuple(B)
    gs = gamma_matrix(B, m)
    if not gs.injective and not allow_noninjective:
        raise ValueError(f"Gamma_{m} is not injective (rank {gs.dim} < {B.k**2})")
    U = gs.space.basis
    Q = np.eye(B.n**m) - U @ U.conj().T
    Q = 0.5 * (Q + Q.conj().T)
    return ChainInteraction(B.n, [Term(m, Q, 1.0, U)], gs.injective)


def mix_interactions(I0: ChainInteraction, I1: ChainInteraction, t: float) -> ChainInteraction:
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    a, b = I0.terms[0], I1.terms[0]
    terms = [Term(a.m, a.Q, 1.0 - t, a.basis), Term(b.m, b.Q, t, b.basis)]
    return ChainInteraction(I0.n, terms, I0.injective and I1.injective)


@dataclass
class ChainHamiltonian:
    """H on sites 0..N-1; dense when n^N <= dense_cap, else matrix free."""

    N: int
    interaction: ChainInteraction
    dense: Optional[np.ndarray] = None
    dense_cap: int = DENSE_CAP
    _op: Optional[object] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.interaction.n**self.N

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply H to a vector (or to the columns of a matrix) without forming H."""
        n = self.interaction.n
        v = np.asarray(v, dtype=complex)
        one = v.ndim == 1
        V = v.reshape(self.dim, -1)
        cols = V.shape[1]
        out = np.zeros_like(V)
        for term in self.interaction.terms:
            if term.weight == 0.0:
                continue
            m = term.m
            d = n**m
            U = term.basis
            for x in range(self.N - m + 1):
                T = V.reshape(n**x, d, n ** (self.N - m - x), cols)
                # Q = 1 - U U^*
                proj = np.einsum("ac,xcyz->xayz", U, np.einsum("ca,xcyz->xayz", U.conj(), T))
                out += term.weight * (T - proj).reshape(self.dim, cols)
        return out[:, 0] if one else out

    def operator(self):
        if self._op is None:
            self._op = spla.LinearOperator(
                (self.dim, self.dim), matvec=self.matvec, matmat=self.matvec, dtype=complex,
            )
        return self._op

    def norm_bound(self) -> float:
        return float(sum(t.weight * (self.N - t.m + 1) for t in self.interaction.terms))


def embed_local(Q: np.ndarray, n: int, x: int, m: int, N: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(n**x), Q), np.eye(n ** (N - m - x)))


def assemble(interaction: ChainInteraction, N: int, dense_cap: int = DENSE_CAP,
             matrix_free_cap: int = MATRIX_FREE_CAP, offset: int = 0) -> ChainHamiltonian:
    """Sum over x of 1^{x} (x) Q (x) 1^{N-m-x} (for each weighted term).

    ``offset`` only relabels the window (sites offset..offset+N-1); the matrix
    is the same, which is what translation invariance demands.
    """
    n = interaction.n
    if N < interaction.m_max:
        raise ValueError("N must be at least the interaction length")
    dim = n**N
    if dim > matrix_free_cap:
        raise TooLarge(f"n^N = {dim} exceeds matrix free cap {matrix_free_cap}")
    H = ChainHamiltonian(N, interaction, None, dense_cap)
    if dim <= dense_cap:
        D = np.zeros((dim, dim), dtype=complex)
        for term in interaction.terms:
            if term.weight == 0.0:
                continue
            for x in range(N - term.m + 1):
                D += term.weight * embed_local(term.Q, n, x, term.m, N)
        H.dense = 0.5 * (D + D.conj().T)
    return H


def lowest_eigenpairs(H: ChainHamiltonian, count: int, tol: float = 1e-9,
                      maxiter: int = 500, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Lowest ``count`` eigenpairs (ascending)."""
    if H.dense is not None:
        w, V = numkit.hermitian_spectrum(H.dense)
        return w[:count], V[:, :count]
    dim = H.dim
    # ask for k^2 + 4 Ritz pairs so degenerate kernels are resolved as a block
    nev = min(count + 3, dim - 2)
    rng = np.random.default_rng(seed)
    v0 = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    try:
        w, V = spla.eigsh(H.operator(), k=nev, which="SA", tol=tol * 1e-3, v0=v0,
                          ncv=min(dim, max(2 * nev + 1, 20)), maxiter=maxiter * dim)
    except spla.ArpackNoConvergence as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    Q, _ = np.linalg.qr(V)
    Hs = Q.conj().T @ H.matvec(Q)
    ws, Vs = np.linalg.eigh(0.5 * (Hs + Hs.conj().T))
    V = Q @ Vs
    res = np.linalg.norm(H.matvec(V[:, :count]) - V[:, :count] * ws[:count], axis=0)
    if res.max() > tol * max(H.norm_bound(), 1.0):
        raise NoConvergence(f"residual {res.max():.2e} above tolerance")
    return ws[:count], V[:, :count]


@dataclass
class KernelGap:
    kernel: Subspace
    gap: float
    eigenvalues: np.ndarray
    distance_to_reference: Optional[float] = None


def kernel_and_gap(H: ChainHamiltonian, expected_kernel_dim: int, tau_ker: float = TAU_KER,
                   reference: Optional[Subspace] = None) -> KernelGap:
    """Kernel (checked against the expected dimension) and spectral gap above it."""
    if expected_kernel_dim < 1:
        raise ValueError("expected_kernel_dim must be >= 1")
    d = expected_kernel_dim
    if d >= H.dim:
        raise KernelDimensionMismatch(d, np.array([]), "expected kernel fills the whole space")
    w, V = lowest_eigenpairs(H, d + 1)
    if w[d - 1] > tau_ker or w[d] <= tau_ker:
        raise KernelDimensionMismatch(d, w)
    ker = Subspace(H.dim, V[:, :d])
    dist = None
    if reference is not None:
        dist = numkit.projector_distance(ker, reference)
    return KernelGap(ker, float(w[d]), w, dist)


def open_chain_gap(B: KrausTuple, m: int, l: int) -> float:
    """gamma_{l,m}: gap of the length-l open chain built from 1 - G_m."""
    B = as_tuple(B)
    H = assemble(build_interaction(B, m), l)
    return kernel_and_gap(H, B.k**2).gap


@dataclass
class GapInequality:
    margin: float
    prefactor: float
    gamma_lm: float
    lbar: int
    window_valid: bool
    passed: bool
    H_norm: float


def certify_gap_inequality(B: KrausTuple, m: int, l: int, N: int, enforce_window: bool = True,
                           scale: float = 1.0) -> GapInequality:
    """Smallest eigenvalue of H_N - gamma_{l,m}/(4(l+2)) (1 - G_N).

    The inequality is only claimed for max(lbar, m) < l < N; outside that
    window :class:`InvalidWindow` is raised unless ``enforce_window`` is off.
    ``scale`` multiplies both H and gamma (homogeneity check).
    """
    B = as_tuple(B)
    sd = spectral_data(B)
    lbar = gap_constants(B, sd).lbar
    valid = max(lbar, m) < l < N
    if enforce_window and not valid:
        raise InvalidWindow(f"need max(lbar={lbar}, m={m}) < l={l} < N={N}")
    if not m <= l < N:
        raise InvalidWindow("need m <= l < N")
    n = B.n
    if n**N > DENSE_CAP:
        raise TooLarge("inequality check needs the dense Hamiltonian")
    g = scale * open_chain_gap(B, m, l)
    pref = g / (4 * (l + 2))
    H = scale * assemble(build_interaction(B, m), N).dense
    GN = gamma_matrix(B, N).space.projector()
    D = H - pref * (np.eye(n**N) - GN)
    margin = float(numkit.hermitian_eigvals(D)[0])
    Hn = float(np.linalg.norm(H, 2))
    return GapInequality(margin, pref, g, lbar, valid, margin >= -1e-9 * Hn, Hn)


def mixed_length_hamiltonian(B: KrausTuple, m: int, m2: int, t: float, N: int,
                             dense_cap: int = DENSE_CAP, interactions=None) -> ChainHamiltonian:
    """(1 - t) H_m + t H_m2 on N sites."""
    if m == m2:
        raise ValueError("lengths must differ")
    if N < max(m, m2):
        raise ValueError("N must be >= max(m, m2)")
    if interactions is None:
        interactions = (build_interaction(B, m), build_interaction(B, m2))
    return assemble(mix_interactions(interactions[0], interactions[1], t), N, dense_cap)
