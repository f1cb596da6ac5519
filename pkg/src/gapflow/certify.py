"""Grid certificates for gapped paths of parent Hamiltonians.

Everything here is evidence on a finite grid of times, not a proof between
grid points; certificates say so in their ``method`` field.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import numkit
from .errors import GapflowError, KernelDimensionMismatch, NotPrimitiveAt, TooLarge
from .groundspace import gamma_matrix, intersection_check
from .hamiltonian import (DENSE_CAP, TAU_KER, assemble, build_interaction, kernel_and_gap,
                          mixed_length_hamiltonian)
from .transfer import (NORM_CONVENTION, KrausTuple, as_tuple, gap_constants, spectral_data,
                       uniform_path_decay)

GRID_DEFAULT = 21
MEMBERSHIP_GRID = 101
LIPSCHITZ_SAFETY = 3.0
STEP_FACTOR = 10.0
R_TOL = 1e-9
KERNEL_DIST_TOL = 1e-8
PROBE_H = 1e-5

PATH_CSV_HEADER = ["t", "r", "s", "sigma_min_B1", "gap", "kernel_dim"]
MIX_CSV_HEADER = ["t", "gap", "kernel_dim", "kernel_distance"]

METHOD_PATH = ("grid evidence: per-t spectral data, Wielandt index, dense or matrix-free "
               "eigensolves and projector steps at the listed times only")
METHOD_MIX = "grid evidence: per-t eigensolves of the mixed-length Hamiltonian at the listed times only"


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("GAPFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _ordered_map(fn, items):
    """Map in a thread pool; results are ordered like the inputs."""
    w = worker_count()
    if w == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


@dataclass
class GapCertificate:
    grid: List[float]
    records: List[Dict]
    parameters: Dict
    uniform_gap: float
    passed: bool
    breakpoints: List[float] = field(default_factory=list)
    failures: List[Dict] = field(default_factory=list)
    extras: Dict = field(default_factory=dict)
    method: str = METHOD_PATH

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "records": self.records,
            "parameters": self.parameters,
            "uniform_gap": self.uniform_gap,
            "pass": self.passed,
            "breakpoints": self.breakpoints,
            "failures": self.failures,
            "extras": self.extras,
            "method": self.method,
            "norm_convention": NORM_CONVENTION,
        }

    def csv_rows(self, header=PATH_CSV_HEADER) -> List[List]:
        return [[r.get(h) for h in header] for r in self.records]


def _fail(rec, reason):
    rec["failure"] = reason
    return rec


def _path_point(path, t, m, l, N, tol_ker, dense_cap):
    rec = {"t": float(t), "r": None, "s": None, "sigma_min_B1": None, "gap_l": None, "gap": None,
           "kernel_dim": None, "lbar": None, "window_valid": None, "failure": None}
    try:
        X = path.evaluate(t)
    except NotPrimitiveAt:
        return _fail(rec, "NotPrimitive"), None, None
    B = KrausTuple(X)
    k = B.k
    rec["sigma_min_B1"] = float(numkit.singular_values(B.mats[0])[-1])
    sd = spectral_data(B)
    rec["r"] = sd.r
    rec["s"] = sd.s
    if not sd.primitive:
        return _fail(rec, "NotPrimitive"), None, None
    if abs(sd.r - 1.0) > R_TOL:
        return _fail(rec, "NotNormalized"), None, sd
    if sd.s + 1 > m:
        return _fail(rec, "WielandtTooLarge"), None, sd
    lbar = gap_constants(B, sd).lbar
    rec["lbar"] = int(lbar)
    rec["window_valid"] = bool(max(lbar, m) < l < N)
    G = gamma_matrix(B, m)
    basis = G.space.basis
    if G.space.dim != k * k:
        return _fail(rec, "ProjectorRank"), basis, sd
    inter = build_interaction(B, m)
    try:
        rec["gap_l"] = kernel_and_gap(assemble(inter, l, dense_cap), k * k, tol_ker).gap
        ref = gamma_matrix(B, N).space if B.n**N <= 200_000 else None
        kg = kernel_and_gap(assemble(inter, N, dense_cap), k * k, tol_ker, reference=ref)
    except KernelDimensionMismatch as exc:
        rec["kernel_dim"] = int(np.sum(np.asarray(exc.eigenvalues) <= tol_ker))
        return _fail(rec, "KernelDimensionMismatch"), basis, sd
    rec["gap"] = kg.gap
    rec["kernel_dim"] = kg.kernel.dim
    rec["kernel_distance"] = kg.distance_to_reference
    if kg.distance_to_reference is not None and kg.distance_to_reference > KERNEL_DIST_TOL:
        return _fail(rec, "KernelNotGroundSpace"), basis, sd
    if not kg.gap > 0:
        return _fail(rec, "GapClosed"), basis, sd
    return rec, basis, sd


def _projector_basis(path, t, m):
    try:
        X = path.evaluate(t)
    except NotPrimitiveAt:
        return None
    return gamma_matrix(KrausTuple(X), m).space.basis


def _step(U, V):
    return numkit.projector_distance(numkit.Subspace(U.shape[0], U), numkit.Subspace(V.shape[0], V))


def lipschitz_estimate(path, m, grid: int = MEMBERSHIP_GRID) -> float:
    """Safety factor times the largest projector step per unit time on a fine grid."""
    ts = np.linspace(0.0, 1.0, grid)
    bases = _ordered_map(lambda t: _projector_basis(path, t, m), ts)
    dt = ts[1] - ts[0]
    # points where the path cannot be normalized are reported by the per-t checks
    steps = [_step(bases[i - 1], bases[i]) for i in range(1, grid)
             if bases[i - 1] is not None and bases[i] is not None
             and bases[i - 1].shape == bases[i].shape]
    return LIPSCHITZ_SAFETY * max(steps, default=0.0) / dt


def verify_path(path, m: int, l: int, N: int, grid_size: int = GRID_DEFAULT, tol_ker: float = TAU_KER,
                dense_cap: int = DENSE_CAP, seed: Optional[int] = None, grid=None,
                membership_grid: int = MEMBERSHIP_GRID) -> GapCertificate:
    """Per-t checks along a normalized path.

    ``m`` may be below k^4+1; every sample then has to satisfy s(t)+1 <= m.
    The gap inequality window max(lbar, m) < l is recorded per sample in
    ``window_valid`` and does not by itself fail the certificate.
    """
    k = path.k
    if m < 2 * k * (k - 1) + 3:
        raise ValueError(f"need m >= 2k(k-1)+3 = {2 * k * (k - 1) + 3}")
    if not m <= l < N:
        raise ValueError("need m <= l < N")
    ts = np.linspace(0.0, 1.0, grid_size) if grid is None else np.sort(np.asarray(grid, dtype=float))
    if ts[0] != 0.0 or ts[-1] != 1.0:
        raise ValueError("grid must contain 0 and 1")
    out = _ordered_map(lambda t: _path_point(path, t, m, l, N, tol_ker, dense_cap), ts)
    records = [o[0] for o in out]
    bases = [o[1] for o in out]
    sds = [o[2] for o in out]
    lip = lipschitz_estimate(path, m, membership_grid)
    for i in range(1, len(ts)):
        if bases[i] is None or bases[i - 1] is None:
            continue
        st = _step(bases[i - 1], bases[i])
        records[i]["projector_step"] = st
        bound = STEP_FACTOR * (ts[i] - ts[i - 1]) * lip
        records[i]["step_bound"] = bound
        if st > bound and records[i]["failure"] is None:
            records[i]["failure"] = "ProjectorJump"
    records[0]["projector_step"] = 0.0
    failures = [{"t": r["t"], "reason": r["failure"]} for r in records if r["failure"]]
    gaps = [r["gap"] for r in records if r["gap"] is not None]
    uniform = float(min(gaps)) if gaps else 0.0
    gaps_l = [r["gap_l"] for r in records if r["gap_l"] is not None]
    extras = {"uniform_gap_l": float(min(gaps_l)) if gaps_l else 0.0,
              "gap_prefactor": float(min(gaps_l)) / (4 * (l + 2)) if gaps_l else 0.0,
              "lipschitz_estimate": lip,
              "all_windows_valid": all(r["window_valid"] for r in records if r["window_valid"] is not None),
              "max_lbar": max((r["lbar"] for r in records if r["lbar"] is not None), default=None)}
    good = [sd for sd in sds if sd is not None and sd.primitive and abs(sd.r - 1) <= 1e-8]
    if good and not failures:
        try:
            c, lam = uniform_path_decay(good)
            extras["uniform_decay"] = {"c": c, "lambda": lam}
        except GapflowError as exc:
            extras["uniform_decay"] = {"error": str(exc)}
    params = {"m": m, "l": l, "N": N, "grid_size": int(len(ts)), "tol_ker": tol_ker, "r_tol": R_TOL,
              "kernel_distance_tol": KERNEL_DIST_TOL, "lipschitz_safety": LIPSCHITZ_SAFETY,
              "step_factor": STEP_FACTOR, "seed": seed, "n": path.n, "k": k}
    return GapCertificate(
        grid=[float(t) for t in ts], records=records, parameters=params, uniform_gap=uniform,
        passed=not failures and uniform > 0, breakpoints=list(getattr(path, "breakpoints", [])),
        failures=failures, extras=extras, method=METHOD_PATH,
    )


def _deriv_central(f, t, h):
    return (f(t + h) - f(t - h)) / (2 * h)


def _deriv_one_sided(f, t, h, side):
    return side * (f(t + side * h) - f(t)) / h


def smoothness_probe(path, probe_points=10, h: float = PROBE_H) -> dict:
    """Finite difference derivatives at interior probes and at breakpoints.

    Interior probes use central differences at h and h/2 with one Richardson
    step and report ratio = max/min of the two estimates' norms (1 when both
    vanish).  At breakpoints the one-sided Richardson derivatives are reported
    separately together with their difference.
    """
    bps = list(getattr(path, "breakpoints", []))
    f = path.evaluate
    if isinstance(probe_points, int):
        cand = np.linspace(0.0, 1.0, probe_points + 2)[1:-1]
    else:
        cand = np.asarray(probe_points, dtype=float)
    probes = []
    for t in cand:
        t = float(t)
        if t - 2 * h < 0 or t + 2 * h > 1 or any(abs(t - b) < 10 * h for b in bps):
            continue
        d1 = _deriv_central(f, t, h)
        d2 = _deriv_central(f, t, h / 2)
        rich = (4 * d2 - d1) / 3
        n1, n2 = np.abs(d1).max(), np.abs(d2).max()
        ratio = 1.0 if max(n1, n2) < 1e-12 else float(max(n1, n2) / max(min(n1, n2), 1e-300))
        probes.append({"t": t, "derivative": rich, "norm": float(np.abs(rich).max()), "ratio": ratio,
                       "stable": ratio <= 1.1})
    breaks = []
    for b in bps:
        sides = {}
        for side in (-1, 1):
            d1 = _deriv_one_sided(f, b, h, side)
            d2 = _deriv_one_sided(f, b, h / 2, side)
            sides[side] = 2 * d2 - d1
        breaks.append({"t": float(b), "left": sides[-1], "right": sides[1],
                       "difference": float(np.abs(sides[-1] - sides[1]).max())})
    return {"h": h, "probes": probes, "breakpoints": breaks,
            "all_stable": all(p["stable"] for p in probes)}


def _intersection_status(B, m, N) -> dict:
    sd = spectral_data(B)
    cert = sd.s + 1 if sd.primitive and sd.s is not None else None
    if cert is not None and m >= cert:
        return {"m": m, "status": "certified", "certified_m": cert}
    try:
        rep = intersection_check(B, m, N_max=N)
    except TooLarge:
        return {"m": m, "status": "unchecked", "certified_m": cert}
    return {"m": m, "status": "empirical" if rep.empirical_pass else "failed", "certified_m": cert,
            "max_distance": max(r.distance for r in rep.rows)}


def mixed_length_certificate(B, m: int, m2: int, N: int, grid_size: int = 11, tol_ker: float = TAU_KER,
                             dense_cap: int = DENSE_CAP, seed: Optional[int] = None) -> GapCertificate:
    """Kernel and gap of (1 - t) H_m + t H_m2 on N sites for t on a uniform grid."""
    B = as_tuple(B)
    if m == m2:
        raise ValueError("lengths must differ")
    if N < max(m, m2):
        raise ValueError("N must be >= max(m, m2)")
    k = B.k
    ts = np.linspace(0.0, 1.0, grid_size)
    ref = gamma_matrix(B, N).space
    inters = (build_interaction(B, m), build_interaction(B, m2))

    def point(t):
        rec = {"t": float(t), "gap": None, "kernel_dim": None, "kernel_distance": None, "failure": None}
        H = mixed_length_hamiltonian(B, m, m2, float(t), N, dense_cap, inters)
        try:
            kg = kernel_and_gap(H, k * k, tol_ker, reference=ref)
        except KernelDimensionMismatch as exc:
            ev = np.asarray(exc.eigenvalues)
            rec["kernel_dim"] = int(np.sum(ev <= tol_ker)) if ev.size else None
            if H.dense is not None:
                rec["kernel_dim"] = int(np.sum(numkit.hermitian_eigvals(H.dense) <= tol_ker))
            return _fail(rec, "KernelDimensionMismatch")
        rec.update(gap=kg.gap, kernel_dim=kg.kernel.dim, kernel_distance=kg.distance_to_reference)
        if kg.distance_to_reference > KERNEL_DIST_TOL:
            return _fail(rec, "KernelNotGroundSpace")
        if not kg.gap > 0:
            return _fail(rec, "GapClosed")
        return rec

    records = _ordered_map(point, ts)
    failures = [{"t": r["t"], "reason": r["failure"]} for r in records if r["failure"]]
    gaps = [r["gap"] for r in records if r["gap"] is not None]
    uniform = float(min(gaps)) if gaps else 0.0
    params = {"m": m, "m2": m2, "N": N, "grid_size": grid_size, "tol_ker": tol_ker,
              "kernel_distance_tol": KERNEL_DIST_TOL, "seed": seed, "n": B.n, "k": k}
    extras = {"intersection": [_intersection_status(B, m, N), _intersection_status(B, m2, N)]}
    return GapCertificate(
        grid=[float(t) for t in ts], records=records, parameters=params, uniform_gap=uniform,
        passed=not failures and uniform > 0, failures=failures, extras=extras, method=METHOD_MIX,
    )
