"""Path segments through the generic set Z_{n,k} and their composition.

A tuple B is in Z_{n,k} when some invertible W makes W^{-1} B_1 W diagonal
with eigenvalues in S_k and W^{-1} B_2 W free of zero entries.  Segments
carry such a witness W(t) in closed form, so membership along a segment is
checked on the witness frame instead of by re-diagonalizing.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from ..errors import DeltaNotFound, MembershipLost, NotPrimitiveAt
from ..transfer import KrausTuple, as_tuple, transfer_matrix
from .jordan import JordanStructure, explicit_diagonalizer, jordan_structure
from .planar import (PlanarCurve, avoid_finite_path, ordered_pairs, real_roots_in, sk_membership,
                     sk_path, sk_relative_margin)

Z_TOL = 1e-10
DELTA_GRID = 1000
DELTA_HALVINGS = 60
MEMBERSHIP_GRID = 101


# --------------------------------------------------------------------------- helpers

def _enc(a):
    a = np.asarray(a, dtype=complex)
    return {"shape": list(a.shape), "re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}


def _dec(d):
    return (np.array(d["re"]) + 1j * np.array(d["im"])).reshape(d["shape"])


def _unit_columns(W):
    W = W / np.linalg.norm(W, axis=0)
    # first component above 1e-12 |col| made real positive
    for j in range(W.shape[1]):
        col = W[:, j]
        idx = np.nonzero(np.abs(col) > 1e-12)[0][0]
        W[:, j] = col * (abs(col[idx]) / col[idx])
    return W


def z_membership(B, tol: float = Z_TOL):
    """(member, witness) by diagonalizing B_1.

    The witness has unit eigenvector columns with the first nonzero component
    real positive.  Defective or numerically non-diagonalizable B_1 gives
    (False, None).
    """
    member, W, _ = z_membership_margin(B, tol)
    return member, W


def z_membership_margin(B, tol: float = Z_TOL):
    """(member, witness, margin) with margin the smallest checked quantity."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    B = as_tuple(B)
    lam, W = np.linalg.eig(B.mats[0])
    ok, margin = sk_membership(lam, tol)
    if not ok:
        return False, None, margin
    W = _unit_columns(W)
    if np.linalg.cond(W) > 1e10:
        return False, None, 0.0
    E = np.linalg.solve(W, B.mats[1] @ W)
    margin = min(margin, float(np.abs(E).min()))
    return margin > tol, W, margin


def vandermonde_witness(lam, B2, a: int, b: int):
    """Coefficients zeta with sum_l zeta_l B_1^l B_2 B_1^{K-l} supported on |e_a><e_b|.

    B_1 = diag(lam) with lam in S_k and K = k(k-1).  Entry (x, y) of
    B_1^l B_2 B_1^{K-l} is (B_2)_{xy} lam_y^K (lam_x/lam_y)^l, so zeta solves a
    Vandermonde system on the k(k-1)+1 distinct ratios.  For a != b the result
    is lam_b^K (B_2)_{ab} |e_a><e_b|; for a == b all diagonal entries share the
    ratio 1 and the result is diag(lam_x^K (B_2)_{xx}).

    Returns (zeta, combination).
    """
    lam = np.asarray(lam, dtype=complex)
    B2 = np.asarray(B2, dtype=complex)
    k = lam.size
    K = k * (k - 1)
    ratios = [1.0 + 0j] + [lam[i] / lam[j] for i, j in ordered_pairs(k)]
    V = np.vander(np.array(ratios), K + 1, increasing=True)
    target = lam[a] / lam[b] if a != b else 1.0 + 0j
    rhs = np.array([1.0 if abs(r - target) == 0 else 0.0 for r in ratios], dtype=complex)
    zeta = np.linalg.solve(V, rhs)
    B1 = np.diag(lam)
    comb = sum(zeta[l] * np.linalg.matrix_power(B1, l) @ B2 @ np.linalg.matrix_power(B1, K - l)
               for l in range(K + 1))
    return zeta, comb


# sparse polynomials in t as {exponent: coefficient}

def _pmul(p, q):
    out: Dict[int, complex] = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
    return out


def _psub(p, q):
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0) - c
    return out


def _pclean(p, ref):
    thr = 1e-13 * max(ref, 1e-300)
    return {e: c for e, c in p.items() if abs(c) > thr}


def _pscale(p):
    return max((abs(c) for c in p.values()), default=0.0)


class _TPoly:
    """p(t) / t^{e_min} with the relative margin |q(t)| / sum |c_j| t^{e_j - e_min}."""

    def __init__(self, p, ref):
        p = _pclean(p, ref)
        if not p:
            self.zero = True
            return
        self.zero = False
        e0 = min(p)
        self.exps = np.array([e - e0 for e in sorted(p)], dtype=float)
        self.coefs = np.array([p[e] for e in sorted(p)], dtype=complex)

    def rel_margin(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.zero:
            return np.zeros_like(t)
        pw = t[:, None] ** self.exps[None, :]
        num = np.abs(pw @ self.coefs)
        den = pw @ np.abs(self.coefs)
        return num / den

    def has_root_in(self, hi):
        if self.zero:
            return True
        if self.exps.max() > 64:
            return False  # too ill conditioned for companion roots; grid evidence only
        dense = np.zeros(int(self.exps.max()) + 1, dtype=complex)
        dense[self.exps.astype(int)] = self.coefs
        r = real_roots_in(dense, 0.0, hi)
        return bool(np.any(r > 0))


def _sk_polys(coords):
    ref = max(_pscale(c) for c in coords) ** 2
    k = len(coords)
    out = [_TPoly(c, _pscale(c)) for c in coords]
    for i in range(k):
        for j in range(i + 1, k):
            out.append(_TPoly(_psub(coords[i], coords[j]), max(_pscale(coords[i]), _pscale(coords[j]))))
    pairs = ordered_pairs(k)
    for a in range(len(pairs)):
        i, j = pairs[a]
        for b in range(a + 1, len(pairs)):
            i2, j2 = pairs[b]
            x, y = _pmul(coords[i], coords[j2]), _pmul(coords[j], coords[i2])
            out.append(_TPoly(_psub(x, y), max(_pscale(x), _pscale(y), 1e-300 * ref)))
    return out


# --------------------------------------------------------------------------- segments

class Segment:
    kind = "Segment"

    def evaluate(self, s: float) -> np.ndarray:
        raise NotImplementedError

    def membership(self, s: float, tol: float = Z_TOL) -> Tuple[bool, float]:
        """Witness based membership in Z at local time s."""
        member, _, margin = z_membership_margin(self.evaluate(s), tol)
        return member, margin

    def start(self):
        return self.evaluate(0.0)

    def end(self):
        return self.evaluate(1.0)

    @property
    def breakpoints(self) -> List[float]:
        return []

    def to_dict(self) -> dict:
        raise NotImplementedError


class JordanApproach(Segment):
    """B_1(s) = A_1 + R diag(t^{N}) R^{-1}, B_2(s) = A_2 + t R S R^{-1}, t = delta s.

    S = sum over block pairs (l, l') of |f^{(l)}_{n_l}><f^{(l')}_1| in the Jordan
    basis and N = 4, 8, 16, ... per Jordan basis position.
    """

    kind = "JordanApproach"

    def __init__(self, A, js: JordanStructure, delta: float):
        self.A = as_tuple(A)
        self.js = js
        self.delta = float(delta)
        k = js.k
        self.exponents = np.array([2 ** (p + 2) for p in range(k)], dtype=int)
        offs = js.offsets()
        self.tops = [o + nb - 1 for o, (_, nb) in zip(offs, js.blocks)]
        self.firsts = list(offs)
        S = np.zeros((k, k), dtype=complex)
        for a in self.tops:
            for b in self.firsts:
                S[a, b] = 1.0
        self.S = S
        self.lam0 = np.concatenate([[lam] * nb for lam, nb in js.blocks]).astype(complex)
        self.X = js.Rinv @ self.A.mats[1] @ js.R
        self._RSR = js.R @ S @ js.Rinv

    # closed form pieces
    def eigenvalues(self, s):
        t = self.delta * s
        return self.lam0 + t ** self.exponents

    def _blocks_at(self, t):
        lam = self.lam0 + t ** self.exponents
        out, o = [], 0
        for _, nb in self.js.blocks:
            out.append(list(lam[o:o + nb]))
            o += nb
        return out

    def evaluate(self, s):
        t = self.delta * float(s)
        R, Ri = self.js.R, self.js.Rinv
        out = np.array(self.A.mats, dtype=complex)
        if t == 0.0:
            return out
        out[0] = out[0] + R @ np.diag((t ** self.exponents).astype(complex)) @ Ri
        out[1] = out[1] + t * self._RSR
        return out

    def witness(self, s):
        t = self.delta * float(s)
        Pm, _, _ = explicit_diagonalizer(self._blocks_at(t), gap_tol=0.0)
        return _unit_columns(self.js.R @ Pm)

    def entry_margins(self, t):
        """|entry of P^{-1} R^{-1} B_2 R P| / |d c| for the dominant product d c."""
        Pm, Pi, _ = explicit_diagonalizer(self._blocks_at(t), gap_tol=0.0)
        E = Pi @ (self.X + t * self.S) @ Pm
        k = self.js.k
        offs = self.js.offsets()
        bl = np.concatenate([[l] * nb for l, (_, nb) in enumerate(self.js.blocks)])
        out = np.empty((k, k))
        for b in range(k):
            for bp in range(k):
                l, lp = bl[b], bl[bp]
                dc = Pi[b, self.tops[l]] * Pm[self.firsts[lp], bp]
                out[b, bp] = abs(E[b, bp]) / abs(dc)
        return out

    def sk_polys(self):
        coords = [{0: complex(l), int(e): 1.0 + 0j} if l != 0 else {int(e): 1.0 + 0j}
                  for l, e in zip(self.lam0, self.exponents)]
        return _sk_polys(coords)

    def membership(self, s, tol=Z_TOL):
        t = self.delta * float(s)
        if t == 0.0:
            member, _, margin = z_membership_margin(self.A, tol)
            return member, margin
        sk = min(float(p.rel_margin(t)[0]) for p in self.sk_polys())
        ent = float(self.entry_margins(t).min())
        margin = min(sk, ent)
        return margin > tol, margin

    def to_dict(self):
        return {
            "kind": self.kind,
            "A": _enc(self.A.mats),
            "R": _enc(self.js.R),
            "blocks": [[[lam.real, lam.imag], nb] for lam, nb in self.js.blocks],
            "exponents": self.exponents.tolist(),
            "delta": self.delta,
        }


def _entry_condition(X, S_pairs, k, t):
    """Relative margin 1 - |X| k^2 t^2 / |c + t| over the coupled entries c."""
    K = np.linalg.norm(X, 2)
    t = np.atleast_1d(t)
    out = np.full(t.shape, np.inf)
    for c in S_pairs:
        den = np.abs(c + t)
        with np.errstate(divide="ignore"):
            val = np.where(den > 0, 1.0 - K * k * k * t**2 / den, -np.inf)
        out = np.minimum(out, val)
    return out


def _delta_ok(seg: JordanApproach, delta: float, grid: int, tol: float) -> bool:
    ts = delta * np.arange(1, grid + 1) / grid
    polys = seg.sk_polys()
    for p in polys:
        if p.zero or p.rel_margin(ts).min() < tol or p.has_root_in(delta):
            return False
    pairs = [seg.X[a, b] for a in seg.tops for b in seg.firsts]
    if _entry_condition(seg.X, pairs, seg.js.k, ts).min() < tol:
        return False
    for c in pairs:
        if abs(c.imag) <= 1e-14 * max(1.0, abs(c)) and 0 < -c.real <= delta:
            return False
    return True


def jordan_approach_segment(A, structure: Optional[JordanStructure] = None, grid: int = DELTA_GRID,
                            tol: float = Z_TOL, halvings: int = DELTA_HALVINGS) -> JordanApproach:
    """Segment from A into Z; delta found by halving from 1/2."""
    A = as_tuple(A)
    js = jordan_structure(A.mats[0]) if structure is None else structure
    delta = 0.5
    seg = JordanApproach(A, js, delta)
    for _ in range(halvings + 1):
        if _delta_ok(seg, delta, grid, tol):
            seg.delta = delta
            return seg
        delta *= 0.5
    raise DeltaNotFound(f"no admissible delta after {halvings} halvings")


def _gl_interpolation(WA, WE):
    """(theta, L) with WA e^{i theta} expm(L) = WE and expm well defined on [0, 1].

    The principal logarithm is used after a scalar rotation e^{-i theta} that
    keeps the spectrum of WA^{-1} WE away from the negative real axis.
    """
    G = np.linalg.solve(WA, WE)
    ev = np.linalg.eigvals(G)
    best = None
    for theta in (0.0, np.pi / 2, -np.pi / 2, np.pi, np.pi / 4, -np.pi / 4, 3 * np.pi / 4, -3 * np.pi / 4):
        ang = np.abs(np.angle(ev * np.exp(-1j * theta)))
        score = np.pi - ang.max()
        if best is None or score > best[0] + 1e-12:
            best = (score, theta)
        if theta == 0.0 and score > 0.1:
            break
    theta = best[1]
    L = sla.logm(np.exp(-1j * theta) * G)
    if np.linalg.norm(WA @ (np.exp(1j * theta) * sla.expm(L)) - WE) > 1e-8 * max(1.0, np.linalg.norm(WE)):
        raise MembershipLost(0.0, "GL interpolation is inaccurate")
    return theta, L


class InsideZ(Segment):
    """B(s) = W(s) Abar(s) W(s)^{-1} with W(s) = W_A e^{i theta s} expm(s L).

    Abar_1(s) = diag(lambda(s)), Abar_2(s) = [xi_ab(s)], Abar_i linear for i >= 3.
    evaluate(0) and evaluate(1) return the declared endpoints.
    """

    kind = "InsideZ"

    def __init__(self, start, end, WA, WE, theta, L, lam_curves, entry_curves, tails0, tails1,
                 relative=False):
        self.A = np.array(start, dtype=complex)
        self.E = np.array(end, dtype=complex)
        self.WA, self.WE = np.asarray(WA, dtype=complex), np.asarray(WE, dtype=complex)
        self.WA_inv = np.linalg.inv(self.WA)
        self.theta = float(theta)
        self.L = np.asarray(L, dtype=complex)
        self.lam_curves = list(lam_curves)
        self.entry_curves = [list(r) for r in entry_curves]
        self.tails0 = np.asarray(tails0, dtype=complex)
        self.tails1 = np.asarray(tails1, dtype=complex)
        self.relative = bool(relative)

    @property
    def k(self):
        return self.WA.shape[0]

    def witness(self, s):
        return self.WA @ (np.exp(1j * self.theta * s) * sla.expm(s * self.L))

    def frame(self, s):
        """Abar(s) of shape (n, k, k)."""
        k = self.k
        n = self.A.shape[0]
        out = np.zeros((n, k, k), dtype=complex)
        out[0] = np.diag([c(s) for c in self.lam_curves])
        out[1] = np.array([[c(s) for c in row] for row in self.entry_curves])
        if n > 2:
            out[2:] = (1 - s) * self.tails0 + s * self.tails1
        return out

    def evaluate(self, s):
        s = float(s)
        if s == 0.0:
            return self.A.copy()
        if s == 1.0:
            return self.E.copy()
        W = self.witness(s)
        Winv = np.exp(-1j * self.theta * s) * sla.expm(-s * self.L) @ self.WA_inv
        return np.einsum("ij,mjk,kl->mil", W, self.frame(s), Winv)

    def membership(self, s, tol=Z_TOL):
        lam = np.array([c(s) for c in self.lam_curves])
        if self.relative:
            sk = sk_relative_margin(lam)
        else:
            sk = sk_membership(lam, tol)[1]
        ent = min(abs(c(s)) for row in self.entry_curves for c in row)
        margin = min(sk, ent)
        return margin > tol, margin

    def to_dict(self):
        return {
            "kind": self.kind,
            "start": _enc(self.A), "end": _enc(self.E),
            "WA": _enc(self.WA), "WE": _enc(self.WE),
            "theta": self.theta, "L": _enc(self.L),
            "lambda": [c.to_dict() for c in self.lam_curves],
            "entries": [[c.to_dict() for c in row] for row in self.entry_curves],
            "tails0": _enc(self.tails0), "tails1": _enc(self.tails1),
            "relative": self.relative,
        }


def _frame_data(T, W=None, lam=None):
    """Witness, eigenvalues and frame entries of a Z member."""
    T = as_tuple(T)
    if W is None:
        ok, W = z_membership(T)
        if not ok:
            raise MembershipLost(0.0, "endpoint is not in Z")
    frame = np.einsum("ij,mjk,kl->mil", np.linalg.inv(W), T.mats, W)
    if lam is None:
        lam = np.diag(frame[0]).copy()
    return W, np.asarray(lam, dtype=complex), frame


def _const_curve(z):
    return PlanarCurve("Line", z, z)


def inz_segment(A, E, seed: int = 0, witness_a=None, lam_a=None, witness_e=None, lam_e=None,
                grid: int = MEMBERSHIP_GRID, tol: float = Z_TOL) -> InsideZ:
    """Segment inside Z from A to E, verified on a grid of ``grid`` points."""
    A, E = as_tuple(A), as_tuple(E)
    WA, lamA, FA = _frame_data(A, witness_a, lam_a)
    WE, lamE, FE = _frame_data(E, witness_e, lam_e)
    relative = min(sk_membership(lamA, 1e-8)[1], sk_membership(lamE, 1e-8)[1]) <= 1e-8
    lam_curves, _ = sk_path(lamA, lamE, seed=seed, relative=relative)
    k = A.k
    entries = []
    for a in range(k):
        row = []
        for b in range(k):
            x, y = FA[1, a, b], FE[1, a, b]
            row.append(_const_curve(x) if x == y else avoid_finite_path(x, y, [0.0])[0])
        entries.append(row)
    theta, L = _gl_interpolation(WA, WE)
    seg = InsideZ(A.mats, E.mats, WA, WE, theta, L, lam_curves, entries, FA[2:], FE[2:], relative)
    for s in np.linspace(0.0, 1.0, grid):
        ok, _ = seg.membership(s, tol)
        if not ok:
            raise MembershipLost(float(s), "witness frame left Z")
    return seg


class Reversed(Segment):
    kind = "Reversed"

    def __init__(self, inner: Segment):
        self.inner = inner

    def evaluate(self, s):
        return self.inner.evaluate(1.0 - float(s))

    def membership(self, s, tol=Z_TOL):
        return self.inner.membership(1.0 - float(s), tol)

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict()}


def ramp(s):
    return 3 * s**2 - 2 * s**3


class ConstantReparam(Segment):
    """inner(a + (b - a) phi(s)) with phi the identity or a C^1 ramp with flat ends."""

    kind = "ConstantReparam"

    def __init__(self, inner: Segment, a: float = 0.0, b: float = 1.0, smooth: bool = False):
        self.inner, self.a, self.b, self.smooth = inner, float(a), float(b), bool(smooth)

    def _phi(self, s):
        s = float(s)
        if s == 0.0:
            return self.a
        if s == 1.0:
            return self.b
        return self.a + (self.b - self.a) * (ramp(s) if self.smooth else s)

    def evaluate(self, s):
        return self.inner.evaluate(self._phi(s))

    def membership(self, s, tol=Z_TOL):
        return self.inner.membership(self._phi(s), tol)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "smooth": self.smooth,
                "inner": self.inner.to_dict()}


class Linear(Segment):
    """(1 - s) A + s E; used for tails and for sabotage fixtures."""

    kind = "Linear"

    def __init__(self, A, E):
        self.A = np.array(as_tuple(A).mats)
        self.E = np.array(as_tuple(E).mats)
        if self.A.shape != self.E.shape:
            raise ValueError("endpoints must have the same shape")

    def evaluate(self, s):
        s = float(s)
        if s == 0.0:
            return self.A.copy()
        if s == 1.0:
            return self.E.copy()
        return (1 - s) * self.A + s * self.E

    def to_dict(self):
        return {"kind": self.kind, "A": _enc(self.A), "E": _enc(self.E)}


# --------------------------------------------------------------------------- paths

class MatrixPath:
    """Segments on consecutive intervals [times[i], times[i+1]] of [0, 1]."""

    def __init__(self, segments: Sequence[Segment], times: Optional[Sequence[float]] = None):
        self.segments = list(segments)
        if times is None:
            times = np.linspace(0.0, 1.0, len(self.segments) + 1).tolist()
        times = [float(x) for x in times]
        if len(times) != len(self.segments) + 1 or times[0] != 0.0 or times[-1] != 1.0:
            raise ValueError("times must run from 0 to 1 with one more entry than segments")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must increase")
        self.times = times
        first = self.segments[0].evaluate(0.0)
        self.n, self.k = first.shape[0], first.shape[1]

    @property
    def breakpoints(self) -> List[float]:
        return self.times[1:-1]

    def locate(self, t: float) -> Tuple[int, float]:
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise ValueError("t must lie in [0, 1]")
        i = 0
        while i < len(self.segments) - 1 and t > self.times[i + 1]:
            i += 1
        a, b = self.times[i], self.times[i + 1]
        s = (t - a) / (b - a)
        return i, min(max(s, 0.0), 1.0)

    def evaluate(self, t: float) -> np.ndarray:
        i, s = self.locate(t)
        return self.segments[i].evaluate(s)

    def evaluate_one_sided(self, t: float, side: int) -> np.ndarray:
        """Limit from the left (side=-1) or the right (side=+1) at a junction."""
        if t in self.times[1:-1]:
            j = self.times.index(t)
            return self.segments[j - 1].evaluate(1.0) if side < 0 else self.segments[j].evaluate(0.0)
        return self.evaluate(t)

    def tuple_at(self, t: float) -> KrausTuple:
        return KrausTuple(self.evaluate(t))

    def membership(self, t: float, tol: float = Z_TOL):
        i, s = self.locate(t)
        return self.segments[i].membership(s, tol)

    def junction_jumps(self) -> List[float]:
        return [float(np.abs(self.segments[j - 1].evaluate(1.0) - self.segments[j].evaluate(0.0)).max())
                for j in range(1, len(self.segments))]

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "times": self.times, "breakpoints": self.breakpoints,
                "segments": [s.to_dict() for s in self.segments]}


def connect(A, E, m: int, seed: int = 0, smooth: bool = False, grid: int = MEMBERSHIP_GRID) -> MatrixPath:
    """Three-piece path A -> Z -> E on [0, 1/3], [1/3, 2/3], [2/3, 1].

    Requires m >= 2k(k-1)+3.  With ``smooth`` every piece is reparametrized by
    a ramp so that one-sided derivatives vanish at the junctions.
    """
    A, E = as_tuple(A), as_tuple(E)
    if A.mats.shape != E.mats.shape:
        raise ValueError("endpoints must have the same (n, k)")
    k = A.k
    if m < 2 * k * (k - 1) + 3:
        raise ValueError(f"need m >= 2k(k-1)+3 = {2 * k * (k - 1) + 3}")
    jA = jordan_approach_segment(A)
    jE = jordan_approach_segment(E)
    TA, TE = jA.evaluate(1.0), jE.evaluate(1.0)
    mid = inz_segment(TA, TE, seed=seed, witness_a=jA.witness(1.0), lam_a=jA.eigenvalues(1.0),
                      witness_e=jE.witness(1.0), lam_e=jE.eigenvalues(1.0), grid=grid)
    segs = [jA, mid, Reversed(jE)]
    if smooth:
        segs = [ConstantReparam(s, 0.0, 1.0, smooth=True) for s in segs]
    return MatrixPath(segs, [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])


def spectral_radius(mats) -> float:
    M = transfer_matrix(as_tuple(mats))
    return float(np.abs(np.linalg.eigvals(M)).max())


class NormalizedPath(MatrixPath):
    """base(t) / sqrt(r(t)) with r the spectral radius of the transfer operator."""

    def __init__(self, base: MatrixPath, check: bool = True):
        self.base = base
        self.segments = base.segments
        self.times = base.times
        self.n, self.k = base.n, base.k
        self.check = check

    def _scale(self, X, t):
        ev = np.abs(np.linalg.eigvals(transfer_matrix(KrausTuple(X))))
        ev.sort()
        r = ev[-1]
        if r <= 1e-300:
            raise NotPrimitiveAt(t, "spectral radius vanishes")
        if self.check and ev.size > 1 and ev[-2] >= r * (1 - 1e-10):
            raise NotPrimitiveAt(t, "peripheral spectrum is not simple")
        return X / np.sqrt(r)

    def evaluate(self, t):
        return self._scale(self.base.evaluate(t), t)

    def evaluate_one_sided(self, t, side):
        return self._scale(self.base.evaluate_one_sided(t, side), t)

    def membership(self, t, tol=Z_TOL):
        return self.base.membership(t, tol)

    def junction_jumps(self):
        return [float(np.abs(self.evaluate_one_sided(t, -1) - self.evaluate_one_sided(t, 1)).max())
                for t in self.breakpoints]

    def to_dict(self):
        d = self.base.to_dict()
        d["normalized"] = True
        return d


def normalize_path(path: MatrixPath, check: bool = True) -> NormalizedPath:
    return NormalizedPath(path, check)


# --------------------------------------------------------------------------- deserialization

def _curve(d):
    return PlanarCurve.from_dict(d)


def segment_from_dict(d) -> Segment:
    kind = d["kind"]
    if kind == "JordanApproach":
        A = KrausTuple(_dec(d["A"]))
        R = _dec(d["R"])
        blocks = [(complex(l[0], l[1]), int(nb)) for l, nb in d["blocks"]]
        js = JordanStructure(R, np.linalg.inv(R), blocks, 0.0)
        return JordanApproach(A, js, d["delta"])
    if kind == "InsideZ":
        return InsideZ(_dec(d["start"]), _dec(d["end"]), _dec(d["WA"]), _dec(d["WE"]), d["theta"],
                       _dec(d["L"]), [_curve(c) for c in d["lambda"]],
                       [[_curve(c) for c in row] for row in d["entries"]],
                       _dec(d["tails0"]), _dec(d["tails1"]), d.get("relative", False))
    if kind == "Reversed":
        return Reversed(segment_from_dict(d["inner"]))
    if kind == "ConstantReparam":
        return ConstantReparam(segment_from_dict(d["inner"]), d["a"], d["b"], d["smooth"])
    if kind == "Linear":
        return Linear(_dec(d["A"]), _dec(d["E"]))
    raise ValueError(f"unknown segment kind {kind!r}")


def path_from_dict(d) -> MatrixPath:
    p = MatrixPath([segment_from_dict(s) for s in d["segments"]], d["times"])
    return normalize_path(p) if d.get("normalized") else p
