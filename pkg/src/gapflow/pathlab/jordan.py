"""Jordan structure of a matrix and the closed-form diagonalizer of perturbed Jordan blocks."""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .. import numkit
from ..errors import DegenerateEigenvalues, JordanFailure

CLUSTER_TOL = 1e-8


def jordan_matrix(blocks: Sequence[Sequence[complex]]) -> np.ndarray:
    """Block diagonal matrix, block l = diag(lam^(l)) + superdiagonal ones."""
    k = sum(len(b) for b in blocks)
    J = np.zeros((k, k), dtype=complex)
    o = 0
    for b in blocks:
        nb = len(b)
        J[o:o + nb, o:o + nb] = np.diag(np.asarray(b, dtype=complex)) + np.eye(nb, k=1)
        o += nb
    return J


def block_diagonalizer(lam: Sequence[complex]) -> Tuple[np.ndarray, np.ndarray]:
    """P and P^{-1} for one block with distinct diagonal lam (no inversion performed).

    P[b, a] = prod_{j=b}^{a-1} 1/(lam_a - lam_j) for a > b, P^{-1}[a, b] =
    prod_{j=a+1}^{b} 1/(lam_a - lam_j) for a < b, ones on the diagonals.
    """
    lam = np.asarray(lam, dtype=complex)
    nb = lam.size
    P = np.eye(nb, dtype=complex)
    Pi = np.eye(nb, dtype=complex)
    for a in range(nb):
        # column a of P, rows b < a; built from b = a-1 downward
        acc = 1.0 + 0j
        for b in range(a - 1, -1, -1):
            acc = acc / (lam[a] - lam[b])
            P[b, a] = acc
        # row a of P^{-1}, columns b > a
        acc = 1.0 + 0j
        for b in range(a + 1, nb):
            acc = acc / (lam[a] - lam[b])
            Pi[a, b] = acc
    return P, Pi


def explicit_diagonalizer(blocks: Sequence[Sequence[complex]], gap_tol: float = 1e-12):
    """(P, P_inv, D) with J = P D P^{-1} for J = jordan_matrix(blocks).

    Each block needs pairwise distinct entries (distance above ``gap_tol``).
    """
    for b in blocks:
        b = np.asarray(b, dtype=complex)
        for i in range(b.size):
            for j in range(i + 1, b.size):
                if abs(b[i] - b[j]) <= gap_tol or b[i] == b[j]:
                    raise DegenerateEigenvalues(f"block entries {b[i]} and {b[j]} coincide")
    k = sum(len(b) for b in blocks)
    P = np.zeros((k, k), dtype=complex)
    Pi = np.zeros((k, k), dtype=complex)
    o = 0
    for b in blocks:
        nb = len(b)
        p, pi = block_diagonalizer(b)
        P[o:o + nb, o:o + nb] = p
        Pi[o:o + nb, o:o + nb] = pi
        o += nb
    D = np.diag(np.concatenate([np.asarray(b, dtype=complex) for b in blocks]))
    return P, Pi, D


@dataclass
class JordanStructure:
    """A = R J R^{-1} with J made of blocks (eigenvalue, size)."""

    R: np.ndarray
    Rinv: np.ndarray
    blocks: List[Tuple[complex, int]]
    residual: float

    @property
    def k(self) -> int:
        return self.R.shape[0]

    def J(self) -> np.ndarray:
        return jordan_matrix([[lam] * nb for lam, nb in self.blocks])

    def offsets(self) -> List[int]:
        out, o = [], 0
        for _, nb in self.blocks:
            out.append(o)
            o += nb
        return out


def _cluster(ev, tol):
    # single linkage on pairwise distances
    k = ev.size
    labels = list(range(k))

    def find(i):
        while labels[i] != i:
            labels[i] = labels[labels[i]]
            i = labels[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if abs(ev[i] - ev[j]) <= tol:
                labels[find(i)] = find(j)
    groups = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def _snap(z, scale):
    z = complex(z)
    re, im = z.real, z.imag
    if abs(re) <= 1e-14 * scale:
        re = 0.0
    if abs(im) <= 1e-14 * scale:
        im = 0.0
    return complex(re, im)


def _chains(Nc: np.ndarray, rank_tol: float):
    """Jordan chains of a nearly nilpotent matrix Nc; returns list of (top vector, size)."""
    a = Nc.shape[0]
    powers = [np.eye(a, dtype=complex)]
    dims = [0]
    for j in range(1, a + 1):
        powers.append(powers[-1] @ Nc)
        s = np.linalg.svd(powers[j], compute_uv=False)
        dims.append(int(np.sum(s <= rank_tol)))
        if dims[-1] == a:
            break
    if dims[-1] != a:
        raise JordanFailure("generalized eigenspace is not annihilated by a power of A - lambda")
    p = len(dims) - 1
    if any(dims[j] < dims[j - 1] for j in range(1, p + 1)):
        raise JordanFailure("kernel dimensions are not monotone")
    count_ge = [0] + [dims[j] - dims[j - 1] for j in range(1, p + 1)] + [0]
    if any(count_ge[j] < count_ge[j + 1] for j in range(1, p + 1)):
        raise JordanFailure("inconsistent block counts")

    def kernel(j):
        if j == 0:
            return np.zeros((a, 0), dtype=complex)
        _, s, Vh = np.linalg.svd(powers[j])
        r = int(np.sum(s > rank_tol))
        return Vh[r:].conj().T

    chains = []
    for size in range(p, 0, -1):
        need = count_ge[size] - count_ge[size + 1]
        if need == 0:
            continue
        avoid = [kernel(size - 1)]
        for v, S in chains:
            avoid.append((np.linalg.matrix_power(Nc, S - size) @ v).reshape(a, 1))
        avoid = np.hstack(avoid)
        Ks = kernel(size)
        if avoid.shape[1]:
            Qa, _ = np.linalg.qr(avoid)
            Ks = Ks - Qa @ (Qa.conj().T @ Ks)
        U, s, _ = np.linalg.svd(Ks, full_matrices=False)
        if s.size < need or s[need - 1] <= 1e-6:
            raise JordanFailure("could not extract independent chain tops")
        for i in range(need):
            chains.append((U[:, i], size))
    return chains


def jordan_structure(A, tol: float = CLUSTER_TOL) -> JordanStructure:
    """Numerical Jordan decomposition A = R J R^{-1}.

    Eigenvalues are clustered at max(tol, 10 (eps |A|)^(1/k)) to absorb the
    splitting of defective eigenvalues; clusters closer than ten times that
    tolerance are refused.  Within a cluster the chain structure comes from the
    ranks of (A - lambda)^j on the invariant subspace.  The result is checked
    by reconstruction to 1e-8 |A|.
    """
    A = numkit.as_matrix(A)
    k = A.shape[0]
    scale = max(np.linalg.norm(A, 2), 1e-300)
    eps = np.finfo(float).eps
    ctol = max(tol * max(scale, 1.0), 10.0 * (eps * max(scale, 1.0)) ** (1.0 / k))
    ev = numkit.general_spectrum(A)
    groups = _cluster(ev, ctol)
    centers = [_snap(ev[g].mean(), max(scale, 1.0)) for g in groups]
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            d = np.abs(ev[groups[i]][:, None] - ev[groups[j]][None, :]).min()
            if d <= 10 * ctol:
                raise JordanFailure("eigenvalue clusters are too close; supply the structure explicitly")
    order = sorted(range(len(groups)), key=lambda i: (centers[i].real, centers[i].imag))
    cols, blocks = [], []
    for gi in order:
        lam = centers[gi]
        mult = groups[gi].size
        # orthonormal basis of the invariant subspace of this cluster (ordered Schur)
        T, Z, sdim = sla.schur(A, output="complex", sort=lambda z: abs(z - lam) <= ctol * 2)
        if sdim != mult:
            raise JordanFailure("Schur reordering did not isolate the cluster")
        Q1 = Z[:, :mult]
        Nc = Q1.conj().T @ A @ Q1 - lam * np.eye(mult)
        rank_tol = 1e3 * ctol * max(1.0, np.linalg.norm(Nc, 2)) ** 1
        chains = _chains(Nc, rank_tol)
        for v, size in chains:
            vecs = [v]
            for _ in range(size - 1):
                vecs.append(Nc @ vecs[-1])
            # f_1 = N^{size-1} v, ..., f_size = v
            for w in reversed(vecs):
                cols.append(Q1 @ w)
            blocks.append((lam, size))
    R = np.stack(cols, axis=1)
    if np.linalg.cond(R) > 1e12:
        raise JordanFailure("Jordan basis is numerically singular")
    Rinv = np.linalg.inv(R)
    J = jordan_matrix([[lam] * nb for lam, nb in blocks])
    res = float(np.linalg.norm(A - R @ J @ Rinv, 2))
    if res > 1e-8 * max(scale, 1.0):
        raise JordanFailure(f"reconstruction residual {res:.2e} too large")
    return JordanStructure(R, Rinv, blocks, res)
