"""Curves in the complex plane: generic eigenvalue tuples and detours around points."""
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from ..errors import DegenerateEndpoints, RetriesExhausted

SK_GRID = 10_000
SK_TOL = 1e-10


def ordered_pairs(k: int):
    return [(i, j) for i in range(k) for j in range(k) if i != j]


def sk_constraints(lam) -> np.ndarray:
    """Values |l_i|, |l_i - l_j| and |l_i/l_j - l_i'/l_j'| over all index choices."""
    lam = np.asarray(lam, dtype=complex).ravel()
    k = lam.size
    vals = list(np.abs(lam))
    for i in range(k):
        for j in range(i + 1, k):
            vals.append(abs(lam[i] - lam[j]))
    if k >= 2:
        if np.any(lam == 0):
            vals.append(0.0)
        else:
            P = ordered_pairs(k)
            ratios = np.array([lam[i] / lam[j] for i, j in P])
            for a in range(len(P)):
                for b in range(a + 1, len(P)):
                    vals.append(abs(ratios[a] - ratios[b]))
    return np.array(vals, dtype=float)


def sk_membership(lam, tol: float = SK_TOL):
    """(member, margin) for the set of vectors with nonzero distinct entries and distinct ratios."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    margin = float(sk_constraints(lam).min())
    return margin > tol, margin


def sk_relative_margin(lam) -> float:
    """Scale free version of the S_k margin.

    Differences are measured against the size of the terms that cancel, so
    that the test is meaningful for eigenvalues of very different magnitude.
    Exact zeros give 0.
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    k = lam.size
    if np.any(np.abs(lam) < 1e-300):
        return 0.0
    vals = [1.0]
    for i in range(k):
        for j in range(i + 1, k):
            vals.append(abs(lam[i] - lam[j]) / max(abs(lam[i]), abs(lam[j])))
    P = ordered_pairs(k)
    for a in range(len(P)):
        i, j = P[a]
        for b in range(a + 1, len(P)):
            i2, j2 = P[b]
            x, y = lam[i] * lam[j2], lam[j] * lam[i2]
            vals.append(abs(x - y) / max(abs(x), abs(y)))
    return float(min(vals))


def bump(t):
    """Smooth profile supported on [0, 1]: 16 t^2 (1 - t)^2, peak 1 at t = 1/2."""
    t = np.asarray(t, dtype=float)
    return 16.0 * t**2 * (1.0 - t) ** 2


def bump_derivative(t):
    t = np.asarray(t, dtype=float)
    return 32.0 * t * (1.0 - t) * (1.0 - 2.0 * t)


BUMP_COEFFS = np.array([0.0, 0.0, 16.0, -32.0, 16.0])


@dataclass
class PlanarCurve:
    """Endpoint-exact smooth curve in C.

    kinds
      Line        start + t (end - start)
      DetourArc   start + (end - start) (t + i a 4t(1-t)), a = control["bulge"]
      RandomBump  start + t (end - start) + amplitude * bump(t)
    """

    kind: str
    start: complex
    end: complex
    control: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.start = complex(self.start)
        self.end = complex(self.end)
        if "amplitude" in self.control:
            self.control["amplitude"] = complex(self.control["amplitude"])
        if "bulge" in self.control:
            self.control["bulge"] = float(self.control["bulge"])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        z0, z1 = complex(self.start), complex(self.end)
        if self.kind == "Line":
            out = z0 + t * (z1 - z0)
        elif self.kind == "DetourArc":
            a = self.control["bulge"]
            out = z0 + (z1 - z0) * (t + 1j * a * 4.0 * t * (1.0 - t))
        elif self.kind == "RandomBump":
            amp = complex(self.control["amplitude"])
            out = z0 + t * (z1 - z0) + amp * bump(t)
        else:
            raise ValueError(f"unknown curve kind {self.kind}")
        # exact endpoints
        out = np.where(t == 0.0, z0, out)
        out = np.where(t == 1.0, z1, out)
        return out if out.ndim else complex(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        z0, z1 = complex(self.start), complex(self.end)
        if self.kind == "Line":
            out = (z1 - z0) * np.ones_like(t)
        elif self.kind == "DetourArc":
            a = self.control["bulge"]
            out = (z1 - z0) * (1.0 + 1j * a * 4.0 * (1.0 - 2.0 * t))
        else:
            amp = complex(self.control["amplitude"])
            out = (z1 - z0) + amp * bump_derivative(t)
        return out if np.ndim(out) else complex(out)

    def poly(self) -> np.ndarray:
        """Coefficients in t, lowest degree first (every kind is polynomial)."""
        z0, z1 = complex(self.start), complex(self.end)
        if self.kind == "Line":
            return np.array([z0, z1 - z0])
        if self.kind == "DetourArc":
            a = self.control["bulge"]
            w = z1 - z0
            return np.array([z0, w * (1 + 4j * a), -4j * a * w])
        amp = complex(self.control["amplitude"])
        c = amp * BUMP_COEFFS.astype(complex)
        c[0] += z0
        c[1] += z1 - z0
        return c

    def to_dict(self) -> dict:
        ctrl = {}
        for key, v in self.control.items():
            ctrl[key] = [v.real, v.imag] if isinstance(v, complex) else v
        return {
            "kind": self.kind,
            "start": [complex(self.start).real, complex(self.start).imag],
            "end": [complex(self.end).real, complex(self.end).imag],
            "control": ctrl,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlanarCurve":
        ctrl = dict(d.get("control", {}))
        if "amplitude" in ctrl:
            ctrl["amplitude"] = complex(*ctrl["amplitude"])
        return cls(d["kind"], complex(*d["start"]), complex(*d["end"]), ctrl)


def _min_distance(curve: PlanarCurve, F, ts) -> float:
    if len(F) == 0:
        return np.inf
    z = curve(ts)
    F = np.asarray(list(F), dtype=complex)
    return float(np.abs(z[:, None] - F[None, :]).min())


_BULGES = (0.0, 0.5, -0.5, 0.25, -0.25, 0.75, -0.75, 1.0, -1.0, 0.125, -0.125, 0.375, -0.375,
           0.625, -0.625, 0.875, -0.875)


def avoid_finite_path(chi: complex, eta: complex, F: Sequence[complex], samples: int = 4001):
    """Smooth curve from chi to eta missing the finite set F.

    Candidates are parabolic arcs chi + (eta - chi)(t + i a 4t(1-t)) with
    |a| <= 1, so |xi(t) - chi| <= sqrt(1 + a^2)|eta - chi| <= 2|eta - chi|.
    The straight line (a = 0) is kept when it already clears F by a quarter
    of the best achievable clearance; otherwise the arc with the largest
    sampled distance to F wins (ties: larger imaginary part at t = 1/2).

    Returns (curve, margin_out) with margin_out the sampled distance to F.
    """
    chi, eta = complex(chi), complex(eta)
    F = [complex(f) for f in F]
    if chi == eta:
        raise DegenerateEndpoints("chi and eta coincide")
    if any(f == chi or f == eta for f in F):
        raise DegenerateEndpoints("an endpoint lies in F")
    if not F:
        return PlanarCurve("Line", chi, eta), float("inf")
    ts = np.linspace(0.0, 1.0, samples)
    scored = []
    for a in _BULGES:
        c = PlanarCurve("Line", chi, eta) if a == 0 else PlanarCurve("DetourArc", chi, eta, {"bulge": a})
        scored.append((_min_distance(c, F, ts), c))
    best = max(s for s, _ in scored)
    line_score = scored[0][0]
    if line_score >= 0.25 * best and line_score > 0:
        return scored[0][1], line_score
    top = [c for s, c in scored if s >= best * (1 - 1e-12)]
    top.sort(key=lambda c: -complex(c(0.5)).imag)
    return top[0], best


def sk_path_margin(curves: List[PlanarCurve], grid: int = SK_GRID) -> float:
    ts = np.linspace(0.0, 1.0, grid)
    Z = np.stack([np.asarray(c(ts)) for c in curves], axis=1)
    return float(_grid_margin_fast(Z).min())


def _grid_margin_fast(Z: np.ndarray) -> np.ndarray:
    """Row-wise minimum of the S_k constraints for an array of shape (T, k)."""
    T, k = Z.shape
    out = np.abs(Z).min(axis=1)
    for i in range(k):
        for j in range(i + 1, k):
            out = np.minimum(out, np.abs(Z[:, i] - Z[:, j]))
    if k >= 2:
        with np.errstate(divide="ignore", invalid="ignore"):
            P = ordered_pairs(k)
            R = np.stack([Z[:, i] / Z[:, j] for i, j in P], axis=1)
            for a in range(len(P)):
                for b in range(a + 1, len(P)):
                    d = np.abs(R[:, a] - R[:, b])
                    out = np.minimum(out, np.where(np.isfinite(d), d, 0.0))
    return out


def _grid_margin_relative(Z: np.ndarray) -> np.ndarray:
    """Row-wise :func:`sk_relative_margin` for an array of shape (T, k)."""
    T, k = Z.shape
    A = np.abs(Z)
    out = np.where(A.min(axis=1) < 1e-300, 0.0, 1.0)
    for i in range(k):
        for j in range(i + 1, k):
            den = np.maximum(np.maximum(A[:, i], A[:, j]), 1e-300)
            out = np.minimum(out, np.abs(Z[:, i] - Z[:, j]) / den)
    pairs = ordered_pairs(k)
    for a in range(len(pairs)):
        i, j = pairs[a]
        for b in range(a + 1, len(pairs)):
            i2, j2 = pairs[b]
            x, y = Z[:, i] * Z[:, j2], Z[:, j] * Z[:, i2]
            den = np.maximum(np.maximum(np.abs(x), np.abs(y)), 1e-300)
            out = np.minimum(out, np.abs(x - y) / den)
    return out


def real_roots_in(coeffs, lo: float, hi: float, slack: float = 1e-9) -> np.ndarray:
    """Real roots in [lo, hi] of a complex polynomial (coefficients lowest first).

    A root counts as real when its imaginary part is below ``slack`` times its
    size.  Identically vanishing polynomials return the whole interval as
    [lo, hi].
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    scale = np.abs(c).max() if c.size else 0.0
    if c.size == 0 or scale == 0.0:
        return np.array([lo, hi])
    c = c / scale
    # drop negligible top coefficients only; small low ones locate roots near 0
    top = np.nonzero(np.abs(c) >= 1e-15)[0][-1]
    c = c[: top + 1]
    if c.size <= 1:
        return np.array([])
    r = P.polyroots(c)
    sz = np.maximum(1.0, np.abs(r))
    real = np.abs(r.imag) <= slack * sz
    rr = r.real[real]
    return rr[(rr >= lo - slack) & (rr <= hi + slack)]


def sk_polynomials(coord_polys):
    """Polynomials whose nonvanishing on an interval means the curve stays in S_k."""
    k = len(coord_polys)
    out = []
    for i in range(k):
        out.append(coord_polys[i])
        for j in range(i + 1, k):
            out.append(P.polysub(coord_polys[i], coord_polys[j]))
    pairs = ordered_pairs(k)
    for a in range(len(pairs)):
        i, j = pairs[a]
        for b in range(a + 1, len(pairs)):
            i2, j2 = pairs[b]
            out.append(P.polysub(P.polymul(coord_polys[i], coord_polys[j2]),
                                 P.polymul(coord_polys[j], coord_polys[i2])))
    return out


def curves_cross_bad_set(curves: List["PlanarCurve"], slack: float = 1e-9) -> bool:
    polys = sk_polynomials([c.poly() for c in curves])
    return any(real_roots_in(p, 0.0, 1.0, slack).size for p in polys)


def sk_path(lam, mu, seed=0, tol: float = SK_TOL, grid: int = SK_GRID, retries: int = 64,
            relative: bool = False):
    """Per-coordinate curves from lam to mu staying inside S_k on a fine grid.

    The straight segment is tried first.  A candidate is accepted when its
    grid margin exceeds ``tol`` and none of the constraint polynomials (all
    curves are polynomial in t) has a real root in [0, 1].  Otherwise a
    seeded random bump of amplitude at most the endpoint margin is added.
    With ``relative`` the endpoint and grid margins are the scale free ones of
    :func:`sk_relative_margin`, for eigenvalues of very different sizes.

    Returns (curves, margin).
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    mu = np.asarray(mu, dtype=complex).ravel()
    if lam.shape != mu.shape:
        raise ValueError("endpoints must have the same length")
    ok0, m0 = sk_membership(lam, 1e-8)
    ok1, m1 = sk_membership(mu, 1e-8)
    fast = _grid_margin_fast
    # endpoints of size ~1e-9 put roots that close to t = 0 or 1
    slack = 1e-9
    if relative:
        slack = 1e-13
        ok0 = sk_relative_margin(lam) > 1e-8
        ok1 = sk_relative_margin(mu) > 1e-8
        fast = _grid_margin_relative
    if not (ok0 and ok1):
        raise DegenerateEndpoints("endpoints must lie in S_k with margin > 1e-8")
    k = lam.size
    ts = np.linspace(0.0, 1.0, grid)
    if np.array_equal(lam, mu):
        curves = [PlanarCurve("Line", z, z) for z in lam]
        return curves, float(min(m0, m1))
    curves = [PlanarCurve("Line", a, b) for a, b in zip(lam, mu)]
    Z = np.stack([c(ts) for c in curves], axis=1)
    margin = float(fast(Z).min())
    if margin > tol and not curves_cross_bad_set(curves, slack):
        return curves, margin
    rng = np.random.default_rng(seed)
    scale = min(m0, m1)
    for _ in range(retries):
        d = rng.normal(size=k) + 1j * rng.normal(size=k)
        d *= scale * rng.uniform(0.25, 1.0) / np.abs(d).max()
        curves = [
            PlanarCurve("RandomBump", a, b, {"amplitude": complex(x)}) for a, b, x in zip(lam, mu, d)
        ]
        Z = np.stack([c(ts) for c in curves], axis=1)
        margin = float(fast(Z).min())
        if margin > tol and not curves_cross_bad_set(curves, slack):
            return curves, margin
    raise RetriesExhausted(f"no admissible bump in {retries} tries")
