"""Boundary maps R and L, edge states and the bulk state of a tuple.

Observables live on integer windows [b, a] of the chain and are matrices in
the big-endian product basis of that window.  Window products use the order
B_{mu_1} B_{mu_2} ... B_{mu_a} with mu_1 the leftmost site, the same order as
:func:`gapflow.groundspace.gamma_matrix`.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import numkit
from .errors import SingularWeight, TooLarge, WindowMismatch
from .groundspace import gamma_matrix, window_products
from .hamiltonian import build_interaction
from .transfer import KrausTuple, SpectralData, as_tuple, spectral_data

RIGHT = "right"
LEFT = "left"
WINDOW_CAP = 3**8
WEIGHT_FLOOR = 1e-12


@dataclass
class LocalObservable:
    window: Tuple[int, int]  # inclusive (b, a)
    A: np.ndarray

    def __post_init__(self):
        b, a = self.window
        if a < b:
            raise WindowMismatch("empty window")
        self.A = np.asarray(self.A, dtype=complex)
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ValueError("observable must be a square matrix")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("non-finite observable")

    @property
    def length(self) -> int:
        return self.window[1] - self.window[0] + 1

    def check(self, n: int):
        if self.A.shape[0] != n**self.length:
            raise WindowMismatch(f"matrix size {self.A.shape[0]} does not fit window {self.window}")

    def shifted(self, s: int) -> "LocalObservable":
        return LocalObservable((self.window[0] + s, self.window[1] + s), self.A)

    def embedded(self, n: int, window: Tuple[int, int]) -> "LocalObservable":
        """Same observable tensored with identities to fill a larger window."""
        b, a = window
        if b > self.window[0] or a < self.window[1]:
            raise WindowMismatch("target window must contain the observable window")
        left = self.window[0] - b
        right = a - self.window[1]
        A = np.kron(np.kron(np.eye(n**left), self.A), np.eye(n**right))
        return LocalObservable(window, A)


def identity_observable(n: int, window) -> LocalObservable:
    b, a = window
    return LocalObservable(window, np.eye(n ** (a - b + 1)))


@dataclass
class EdgeStateSpec:
    side: str
    omega: np.ndarray

    def __post_init__(self):
        if self.side not in (LEFT, RIGHT):
            raise ValueError("side must be 'left' or 'right'")
        w = np.asarray(self.omega, dtype=complex)
        if np.abs(np.trace(w) - 1) > 1e-10:
            raise ValueError("omega must have unit trace")
        if numkit.hermitian_eigvals(w)[0] < -1e-10:
            raise ValueError("omega must be positive semidefinite")
        self.omega = w


def _data(B, sd):
    return spectral_data(B) if sd is None else sd


def _sandwich_sum(B: KrausTuple, A: np.ndarray, length: int, middle: np.ndarray, left: bool) -> np.ndarray:
    if B.n**length > WINDOW_CAP:
        raise TooLarge("observable window too long")
    W = window_products(B, length)
    if left:
        # sum A[mu, nu] B_nu^* rho B_mu
        return np.einsum("mn,nji,jk,mkl->il", A, W.conj(), middle, W, optimize=True)
    # sum A[mu, nu] B_mu e B_nu^*
    return np.einsum("mn,mij,jk,nlk->il", A, W, middle, W.conj(), optimize=True)


def boundary_map(B: KrausTuple, side: str, A: LocalObservable, sd: Optional[SpectralData] = None) -> np.ndarray:
    """R(A) for windows [0, a-1] or L(A) for windows [-b, -1]."""
    B = as_tuple(B)
    A.check(B.n)
    sd = _data(B, sd)
    b, a = A.window
    if side == RIGHT:
        if b != 0:
            raise WindowMismatch("right boundary map needs a window starting at site 0")
        return _sandwich_sum(B, A.A, A.length, sd.e, left=False)
    if side == LEFT:
        if a != -1:
            raise WindowMismatch("left boundary map needs a window ending at site -1")
        return _sandwich_sum(B, A.A, A.length, sd.rho, left=True)
    raise ValueError("side must be 'left' or 'right'")


def _inverse_sqrt(X):
    X = 0.5 * (X + X.conj().T)
    w, V = numkit.hermitian_spectrum(X)
    if w[0] <= WEIGHT_FLOOR:
        raise SingularWeight(f"weight has eigenvalue {w[0]:.3e} below floor")
    return (V / np.sqrt(w)) @ V.conj().T


def _anchor(A: LocalObservable, n: int, side: str) -> LocalObservable:
    # extend the window to touch the boundary
    b, a = A.window
    if side == RIGHT:
        if b < 0:
            raise WindowMismatch("right edge state lives on sites >= 0")
        return A if b == 0 else A.embedded(n, (0, a))
    if a > -1:
        raise WindowMismatch("left edge state lives on sites <= -1")
    return A if a == -1 else A.embedded(n, (b, -1))


def edge_state_eval(B: KrausTuple, spec: EdgeStateSpec, A: LocalObservable,
                    sd: Optional[SpectralData] = None) -> complex:
    """omega(e^{-1/2} R(A) e^{-1/2}) or omega(rho^{-1/2} L(A) rho^{-1/2})."""
    B = as_tuple(B)
    sd = _data(B, sd)
    A.check(B.n)
    A = _anchor(A, B.n, spec.side)
    weight = sd.e if spec.side == RIGHT else sd.rho
    isq = _inverse_sqrt(weight)
    X = boundary_map(B, spec.side, A, sd)
    return complex(np.trace(spec.omega @ isq @ X @ isq))


def bulk_state_eval(B: KrausTuple, A: LocalObservable, sd: Optional[SpectralData] = None) -> complex:
    """sum A[mu, nu] tr(rho B_mu e B_nu^*); independent of where the window sits."""
    B = as_tuple(B)
    sd = _data(B, sd)
    A.check(B.n)
    X = _sandwich_sum(B, A.A, A.length, sd.e, left=False)
    return complex(np.trace(sd.rho @ X))


def interaction_observable(B: KrausTuple, m: int, start: int = 0) -> LocalObservable:
    Q = build_interaction(B, m).Q
    return LocalObservable((start, start + m - 1), Q)


def frustration_check(B: KrausTuple, m: int, state, shift_range: int, sd: Optional[SpectralData] = None) -> float:
    """max |state(tau_a(1 - G_m))| over the shifts that fit the state's half chain.

    ``state`` is an :class:`EdgeStateSpec` or the string ``"bulk"``.
    """
    B = as_tuple(B)
    sd = _data(B, sd)
    Q = interaction_observable(B, m)
    vals = []
    if isinstance(state, str):
        if state != "bulk":
            raise ValueError("state must be an EdgeStateSpec or 'bulk'")
        # evaluate on a common window so that the embedding code is exercised
        lo, hi = -shift_range, shift_range + m - 1
        for a in range(-shift_range, shift_range + 1):
            obs = Q.shifted(a).embedded(B.n, (lo, hi)) if B.n ** (hi - lo + 1) <= WINDOW_CAP else Q.shifted(a)
            vals.append(bulk_state_eval(B, obs, sd))
    elif state.side == RIGHT:
        for a in range(0, shift_range + 1):
            vals.append(edge_state_eval(B, state, Q.shifted(a), sd))
    else:
        for a in range(-shift_range, -m + 1):
            vals.append(edge_state_eval(B, state, Q.shifted(a), sd))
    return float(max(abs(v) for v in vals)) if vals else 0.0


@dataclass
class LimitRow:
    N: int
    value: complex
    limit: complex
    d: float
    bound: float
    passed: bool


def boundary_limit_check(B: KrausTuple, C, A: LocalObservable, N_list: Sequence[int],
                         sd: Optional[SpectralData] = None, safety: float = 10.0, floor: float = 1e-12):
    """d(N) = |<Gamma_N C, (A (x) 1) Gamma_N C> - tr(rho C^* R(A) C)|.

    The decay check is d(N) <= K lambda2^(N - a) with K fitted on the first
    entry times ``safety``; ``floor`` absorbs rounding.
    """
    B = as_tuple(B)
    sd = _data(B, sd)
    C = np.asarray(C, dtype=complex)
    A = _anchor(A, B.n, RIGHT)
    a = A.length
    R = boundary_map(B, RIGHT, A, sd)
    limit = complex(np.trace(sd.rho @ C.conj().T @ R @ C))
    rows = []
    for N in N_list:
        if N < a:
            raise WindowMismatch("N shorter than the observable window")
        v = gamma_matrix(B, N).apply(C).reshape(B.n**a, -1)
        val = complex(np.vdot(v, A.A @ v))
        rows.append([N, val, limit, abs(val - limit)])
    lam = sd.lambda2
    N0, d0 = rows[0][0], rows[0][3]
    K = safety * d0 / lam ** (N0 - a) if lam > 0 else 0.0
    out = []
    for N, val, lim, d in rows:
        bound = K * lam ** (N - a) + floor
        out.append(LimitRow(N, val, lim, d, bound, d <= bound))
    return out


def surjectivity_check(B: KrausTuple, a: int, sd: Optional[SpectralData] = None) -> int:
    """Rank of A -> R(A) on the n^{2a}-dimensional algebra of a sites."""
    B = as_tuple(B)
    sd = _data(B, sd)
    if B.n**a > 3**5:
        raise TooLarge("window too long for the surjectivity check")
    W = window_products(B, a)
    # image of |mu><nu| is B_mu e B_nu^*
    imgs = np.einsum("mij,jk,nlk->mnil", W, sd.e, W.conj()).reshape(-1, B.k**2)
    return numkit.numerical_rank(imgs.T)
