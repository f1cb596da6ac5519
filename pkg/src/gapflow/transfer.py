"""Kraus tuples, their transfer operators and derived spectral constants."""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import numkit
from .errors import (
    DegenerateSample,
    NotIrreducible,
    NotNormalized,
    NotPrimitive,
    NotPrimitiveWithin,
    ShapeMismatch,
)

# tolerance used to count eigenvalues that coincide with the spectral radius
PERRON_TOL = 1e-8
NORM_CONVENTION = "hilbert-schmidt induced operator norm on Mat_k"


@dataclass(frozen=True, eq=False)
class KrausTuple:
    """An n-tuple of k x k complex matrices, stored as an array of shape (n, k, k)."""

    mats: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        A = np.array(self.mats, dtype=complex)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ShapeMismatch(f"expected shape (n, k, k), got {A.shape}")
        if A.shape[0] < 2 or A.shape[1] < 1:
            raise ShapeMismatch("need n >= 2 and k >= 1")
        if not np.all(np.isfinite(A)):
            raise ValueError("non-finite entries")
        if not np.any(A):
            raise ValueError("all matrices are zero")
        A.setflags(write=False)
        object.__setattr__(self, "mats", A)

    @property
    def n(self) -> int:
        return self.mats.shape[0]

    @property
    def k(self) -> int:
        return self.mats.shape[1]

    def __getitem__(self, i):
        return self.mats[i]

    def __len__(self):
        return self.n

    def scaled(self, c) -> "KrausTuple":
        return KrausTuple(self.mats * c, self.name)

    def conjugated(self, g, ginv=None) -> "KrausTuple":
        """Tuple (g B_mu g^{-1})."""
        g = np.asarray(g, dtype=complex)
        if ginv is None:
            ginv = np.linalg.inv(g)
        return KrausTuple(np.einsum("ij,mjk,kl->mil", g, self.mats, ginv), self.name)

    def allclose(self, other, tol=1e-12) -> bool:
        return self.mats.shape == other.mats.shape and np.abs(self.mats - other.mats).max() <= tol


def as_tuple(B) -> KrausTuple:
    return B if isinstance(B, KrausTuple) else KrausTuple(B)


def apply_channel(B: KrausTuple, X) -> np.ndarray:
    """Sum_mu B_mu X B_mu^*."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (B.k, B.k):
        raise ShapeMismatch(f"X must be {B.k}x{B.k}, got {X.shape}")
    return np.einsum("mij,jk,mlk->il", B.mats, X, B.mats.conj())


def apply_adjoint(B: KrausTuple, X) -> np.ndarray:
    """Sum_mu B_mu^* X B_mu."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (B.k, B.k):
        raise ShapeMismatch(f"X must be {B.k}x{B.k}, got {X.shape}")
    return np.einsum("mji,jk,mkl->il", B.mats.conj(), X, B.mats)


def transfer_matrix(B: KrausTuple) -> np.ndarray:
    """k^2 x k^2 matrix of X -> sum B X B^* acting on row-major vec(X)."""
    return np.einsum("mij,mkl->ikjl", B.mats, B.mats.conj()).reshape(B.k**2, B.k**2)


def _hermitian_phase_fix(X):
    # eigenvectors are known up to a complex phase; fix it with the trace
    tr = np.trace(X)
    if abs(tr) > 0:
        X = X * (abs(tr) / tr)
    else:
        i = np.argmax(np.abs(np.diag(X)))
        d = X[i, i]
        if d != 0:
            X = X * (abs(d) / d)
    return 0.5 * (X + X.conj().T)


@dataclass
class SpectralData:
    """Transfer operator spectrum and fixed points ("primitive" implies the rest is meaningful)."""

    r: float
    eigenvalues: np.ndarray
    e: np.ndarray
    rho: np.ndarray
    a: float
    c: float
    lambda2: float
    primitive: bool
    s: Optional[int] = None
    perron_multiplicity: int = 1
    transfer: Optional[np.ndarray] = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "r": self.r,
            "lambda2": self.lambda2,
            "a": self.a,
            "c": self.c,
            "primitive": self.primitive,
            "s": self.s,
        }


def _inverse_norm(X) -> float:
    w = numkit.hermitian_eigvals(X)
    if w[0] <= 1e-14 * max(abs(w[-1]), 1e-300):
        return float("inf")
    return float(1.0 / w[0])


def spectral_data(B: KrausTuple, strict: bool = False, m_max: Optional[int] = None) -> SpectralData:
    """Spectral radius, fixed points and primitivity of the transfer operator.

    e is the right eigenvector of X -> sum B X B^* at the spectral radius r and
    rho the one of the adjoint; rho has unit trace and tr(rho e) = 1.

    With ``strict=True`` a non-positive-definite fixed point raises
    :class:`NotIrreducible`.
    """
    B = as_tuple(B)
    k = B.k
    M = transfer_matrix(B)
    ev = numkit.general_spectrum(M)
    mod = np.abs(ev)
    r = float(mod.max())
    if r <= 0:
        raise NotPrimitive("spectral radius vanishes (nilpotent transfer operator)")
    # the Perron root is real and positive; pick the eigenvalue closest to r
    ip = int(np.argmin(np.abs(ev - r)))
    perron_mult = int(np.sum(np.abs(ev - r) <= PERRON_TOL * r))
    rest = np.delete(mod, ip)
    lambda2 = float(rest.max()) if rest.size else 0.0

    I = np.eye(k * k)
    _, _, Vh = np.linalg.svd(M - r * I)
    e = _hermitian_phase_fix(Vh[-1].conj().reshape(k, k))
    _, _, Vh = np.linalg.svd(M.conj().T - r * I)
    rho = _hermitian_phase_fix(Vh[-1].conj().reshape(k, k))
    rho = rho / np.trace(rho).real
    e = e / np.trace(rho @ e).real
    e = 0.5 * (e + e.conj().T)
    rho = 0.5 * (rho + rho.conj().T)

    a = _inverse_norm(e)
    c = _inverse_norm(rho)
    definite = np.isfinite(a) and np.isfinite(c)
    if strict and not definite:
        raise NotIrreducible("fixed points are not strictly positive")

    s = None
    if perron_mult == 1:
        try:
            s = wielandt_index(B, m_max if m_max is not None else k**4)
        except NotPrimitiveWithin:
            s = None
    primitive = perron_mult == 1 and s is not None and definite
    return SpectralData(
        r=r,
        eigenvalues=ev,
        e=e,
        rho=rho,
        a=a,
        c=c,
        lambda2=lambda2,
        primitive=bool(primitive),
        s=s,
        perron_multiplicity=perron_mult,
        transfer=M,
    )


def monomial_span_dims(B: KrausTuple, m_max: int, rank_tol=None):
    """Dimensions of span{B_mu1 ... B_muj} for j = 1..m_max (stops at full)."""
    B = as_tuple(B)
    k = B.k
    full = k * k
    dims = []
    # orthonormal basis of K_j as columns of row-major vec
    cur = numkit.orthonormal_range(B.mats.reshape(B.n, full).T, rank_tol)
    dims.append(cur.dim)
    for _ in range(1, m_max):
        if cur.dim == full:
            break
        mats = cur.basis.T.reshape(-1, k, k)
        cand = np.einsum("mij,bjk->mbik", B.mats, mats).reshape(-1, full).T
        cur = numkit.orthonormal_range(cand, rank_tol)
        dims.append(cur.dim)
    return dims


def wielandt_index(B: KrausTuple, m_max: Optional[int] = None, rank_tol=None) -> int:
    """Least j such that the degree-j monomials span all of Mat_k.

    Raises :class:`NotPrimitiveWithin` if this does not happen for j <= m_max
    (default k^4).
    """
    B = as_tuple(B)
    if m_max is None:
        m_max = B.k**4
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    dims = monomial_span_dims(B, m_max, rank_tol)
    if dims[-1] == B.k**2:
        return len(dims)
    raise NotPrimitiveWithin(m_max, dims)


def is_primitive(B: KrausTuple) -> bool:
    try:
        return spectral_data(B).primitive
    except NotPrimitive:
        return False


def normalize(B: KrausTuple) -> KrausTuple:
    """Rescale so that the transfer operator has spectral radius one."""
    B = as_tuple(B)
    sd = spectral_data(B)
    if not sd.primitive:
        raise NotPrimitive("tuple is not primitive")
    return B.scaled(1.0 / np.sqrt(sd.r))


def unitalize(B: KrausTuple) -> KrausTuple:
    """Similarity transform r^{-1/2} h^{-1/2} B h^{1/2} with h the Perron eigenvector.

    The resulting channel maps the identity to itself.
    """
    B = as_tuple(B)
    sd = spectral_data(B)
    if sd.perron_multiplicity != 1:
        raise NotIrreducible("Perron eigenvalue is degenerate")
    roots = numkit.psd_sqrt_inv(sd.e, floor=1e-12 * np.abs(sd.e).max())
    if roots is None:
        raise NotIrreducible("Perron eigenvector is not strictly positive")
    hs, his = roots
    mats = np.einsum("ij,mjk,kl->mil", his, B.mats, hs) / np.sqrt(sd.r)
    return KrausTuple(mats, B.name)


def fixed_point_projection(sd: SpectralData) -> np.ndarray:
    """Matrix of X -> tr(rho X) e on row-major vec."""
    return np.outer(sd.e.reshape(-1), sd.rho.T.reshape(-1))


@dataclass
class GapConstants:
    E: np.ndarray  # E[N-1] = E(N) for N = 1..N_cap
    F: float
    L: int
    lbar: int
    tail: float  # bound on E(N) for N > N_cap
    envelope_rate: float
    envelope_const: float
    sup_E: float = field(default=0.0)

    @property
    def N_cap(self) -> int:
        return len(self.E)

    def E_at(self, N: int) -> float:
        if N < 1:
            raise ValueError("N starts at 1")
        if N <= self.N_cap:
            return float(self.E[N - 1])
        return self.envelope(N)

    def envelope(self, N: int) -> float:
        return self.envelope_const * self.envelope_rate**N

    def sup_from(self, N: int) -> float:
        """sup_{N' >= N} E(N')."""
        if N > self.N_cap:
            return self.envelope(N)
        return max(float(self.E[N - 1 :].max()), self.tail)


def _resolvent_envelope(Mc, rate, npts=512):
    # ||Mc^N|| <= rate^{N+1} sup_{|z|=rate} ||(z - Mc)^{-1}|| (Cauchy integral)
    z = rate * np.exp(2j * np.pi * (np.arange(npts) + 0.5) / npts)
    d = Mc.shape[0]
    best = 0.0
    for zz in z:
        s = np.linalg.svd(zz * np.eye(d) - Mc, compute_uv=False)
        best = max(best, 1.0 / s[-1])
    # 2x safety to cover the gaps between sampled circle points
    return 2.0 * rate * best


def gap_constants(B: KrausTuple, sd: Optional[SpectralData] = None, N_max: int = 10_000) -> GapConstants:
    """E(N) = k a c ||T^N (1 - P)||, F, L and lbar for a normalized tuple."""
    B = as_tuple(B)
    if sd is None:
        sd = spectral_data(B)
    if not sd.primitive:
        raise NotPrimitive("gap constants need a primitive tuple")
    if abs(sd.r - 1.0) > 1e-8:
        raise NotNormalized(f"spectral radius {sd.r} differs from 1")
    k = B.k
    M = transfer_matrix(B) / sd.r
    P = fixed_point_projection(sd)
    Mc = M - M @ P
    kac = k * sd.a * sd.c
    if np.abs(Mc).max() < 1e-15:
        Es = np.zeros(1)
        rate, const = 0.0, 0.0
    else:
        rate = 0.5 * (1.0 + sd.lambda2)
        const = kac * _resolvent_envelope(Mc, rate)
        # first N where the envelope is negligible, and where sqrt(N+1) rate^N decreases
        n_env = int(np.ceil(np.log(1e-14 / const) / np.log(rate))) if const > 1e-14 else 1
        n_mono = int(np.ceil(1.0 / (2.0 * np.log(1.0 / rate))))
        N_cap = int(min(max(n_env, n_mono, 1), N_max))
        Es = np.empty(N_cap)
        X = np.eye(k * k, dtype=complex)
        for i in range(N_cap):
            X = Mc @ X
            Es[i] = kac * np.linalg.norm(X, 2)
            if not np.all(np.isfinite(X)):  # pragma: no cover
                raise NotNormalized("powers diverged")
    N_cap = len(Es)
    tail = const * rate ** (N_cap + 1) if rate > 0 else 0.0
    sup_E = max(float(Es.max()), tail)
    F = (4.0 / (sd.a * sd.c)) * (sup_E + sd.c + sd.a * np.trace(sd.e).real)

    # suffix suprema including the tail
    suff = np.maximum.accumulate(Es[::-1])[::-1]
    suff = np.maximum(suff, tail)
    below = np.nonzero(suff < 0.5)[0]
    L = int(below[0] + 1) if below.size else N_cap + 1

    Ns = np.arange(1, N_cap + 1)
    EF = Es * F
    crit = np.sqrt(Ns + 1) * (3 * EF + 2) * EF + Es
    tF = tail * F
    crit_tail = np.sqrt(N_cap + 2) * (3 * tF + 2) * tF + tail
    suffc = np.maximum.accumulate(crit[::-1])[::-1]
    suffc = np.maximum(suffc, crit_tail)
    ok = np.nonzero(suffc < 1.0)[0]
    lbar = int(ok[0] + 1) if ok.size else N_cap + 1
    return GapConstants(
        E=Es, F=float(F), L=L, lbar=lbar, tail=float(tail),
        envelope_rate=float(rate), envelope_const=float(const), sup_E=sup_E,
    )


def complement_power_norms(sd: SpectralData, l_max: int) -> np.ndarray:
    """||T^l (1 - P)|| for l = 1..l_max with T the transfer operator divided by r."""
    M = sd.transfer / sd.r
    Mc = M - M @ fixed_point_projection(sd)
    out = np.empty(l_max)
    X = np.eye(M.shape[0], dtype=complex)
    for i in range(l_max):
        X = Mc @ X
        out[i] = np.linalg.norm(X, 2)
    return out


def uniform_path_decay(samples: Sequence, l_probe: int = 50, margin: float = 1e-6):
    """Uniform decay constants (c, lambda) over sampled tuples.

    ``samples`` is a list of :class:`SpectralData`.  lambda is
    the largest second eigenvalue modulus plus ``margin`` and c the largest
    measured prefactor sup_l ||T^l(1-P)|| / lambda^l for l <= l_probe.
    """
    if not samples:
        raise ValueError("no samples")
    for sd in samples:
        if not sd.primitive or abs(sd.r - 1) > 1e-8:
            raise NotNormalized("samples must be primitive with r = 1")
        if sd.lambda2 >= 1:
            raise DegenerateSample("second eigenvalue modulus reaches 1")
    lam = max(sd.lambda2 for sd in samples) + margin
    if lam >= 1:
        raise DegenerateSample("uniform rate is not below 1")
    ls = np.arange(1, l_probe + 1)
    c = 0.0
    for sd in samples:
        norms = complement_power_norms(sd, l_probe)
        c = max(c, float(np.max(norms / lam**ls)))
    return c, lam
