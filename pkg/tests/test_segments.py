import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapflow.errors import NotPrimitiveAt
from gapflow.fixtures import aklt, random_tuple
from gapflow.pathlab import (
    ConstantReparam,
    Linear,
    MatrixPath,
    Reversed,
    connect,
    inz_segment,
    jordan_approach_segment,
    normalize_path,
    path_from_dict,
    vandermonde_witness,
    z_membership,
)
from gapflow.pathlab.jordan import jordan_structure
from gapflow.pathlab.planar import sk_membership
from gapflow.pathlab.segments import spectral_radius
from gapflow.transfer import KrausTuple, normalize, wielandt_index

GOLDEN = Path(__file__).parent / "golden"


def tup(*mats):
    return KrausTuple(np.stack([np.asarray(m, dtype=complex) for m in mats]))


def eig_oracle_member(B, tol=1e-10):
    # independent check: eigenvalues in S_k and no zero entry of W^-1 B_2 W
    lam, W = np.linalg.eig(B[0])
    if not sk_membership(lam, tol)[0]:
        return False
    E = np.linalg.inv(W) @ B[1] @ W
    return np.abs(E).min() > tol * np.abs(W).max() * np.abs(np.linalg.inv(W)).max()


def eig_oracle_relative(B, tol=1e-10):
    # scale free version for eigenvalues of very different magnitude
    from gapflow.pathlab.planar import sk_relative_margin
    lam, W = np.linalg.eig(B[0])
    if sk_relative_margin(lam) <= tol:
        return False
    E = np.linalg.inv(W) @ B[1] @ W
    return np.abs(E).min() > tol * np.abs(E).max()


def test_z_membership_diagonal():
    ok, W = z_membership(tup(np.diag([1, 2]), np.ones((2, 2))))
    assert ok and np.abs(W - np.eye(2)).max() < 1e-14


def test_z_membership_jordan_block():
    ok, W = z_membership(tup([[1, 1], [0, 1]], np.ones((2, 2))))
    assert not ok and W is None


def test_z_membership_aklt():
    B = aklt()
    assert not z_membership(B)[0]
    # reordered so that B_1 = -sqrt(1/3) sigma_z: eigenvalues +-1/sqrt(3) share the ratio -1
    R = KrausTuple(B.mats[[1, 0, 2]])
    ok, _ = z_membership(R)
    assert not ok


def test_witness_phase_convention(rng):
    B = random_tuple(2, 3, rng)
    ok, W = z_membership(B)
    assert ok
    assert np.abs(np.linalg.norm(W, axis=0) - 1).max() < 1e-12
    for j in range(3):
        first = W[np.nonzero(np.abs(W[:, j]) > 1e-12)[0][0], j]
        assert abs(first.imag) < 1e-14 and first.real > 0


def test_vandermonde_witness(rng):
    lam = np.array([0.7 + 0.2j, -0.4 + 0.5j])
    B2 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    K = 2
    for a in range(2):
        for b in range(2):
            zeta, comb = vandermonde_witness(lam, B2, a, b)
            if a != b:
                target = np.zeros((2, 2), dtype=complex)
                target[a, b] = lam[b] ** K * B2[a, b]
            else:
                target = np.diag(lam**K * np.diag(B2))
            assert np.abs(comb - target).max() < 1e-8


def test_jordan_approach_diagonal_first_try(rng):
    # the entry condition |X| k^2 t^2 < |c + t| at t = 1/2 needs a moderate A_2
    A2 = 0.1 * (1 + 0.3 * rng.uniform(size=(2, 2)))
    A = tup(np.diag([0.5, -0.8j]), A2)
    seg = jordan_approach_segment(A)
    assert seg.delta == 0.5
    assert np.abs(seg.evaluate(0.0) - A.mats).max() == 0
    # B_1 moves only by the tiny powers t^4, t^8
    d = seg.evaluate(1.0)[0] - A.mats[0]
    assert np.abs(d).max() <= 0.5**4 * 10


def test_jordan_approach_exponents():
    A = tup([[0, 1], [0, 0]], np.eye(2))
    seg = jordan_approach_segment(A)
    assert seg.exponents.tolist() == [4, 8]
    t = seg.delta * 0.6
    lam = np.sort_complex(np.linalg.eigvals(seg.evaluate(0.6)[0]))
    assert np.abs(lam - np.sort_complex(np.array([t**4, t**8]))).max() < 1e-12
    for s in np.linspace(0.05, 1, 20):
        assert seg.membership(s)[0]
        assert eig_oracle_relative(seg.evaluate(s))


def test_jordan_approach_aklt():
    seg = jordan_approach_segment(aklt())
    assert np.abs(seg.evaluate(0.0) - aklt().mats).max() == 0
    for s in np.linspace(0.01, 1, 25):
        ok, _ = seg.membership(s)
        assert ok
    # numeric diagonalization agrees away from the nilpotent end
    assert z_membership(KrausTuple(seg.evaluate(1.0)))[0]
    assert eig_oracle_member(seg.evaluate(1.0))


def test_inz_constant():
    A = normalize(random_tuple(3, 2, np.random.default_rng(0)))
    seg = inz_segment(A, A)
    for s in (0.0, 0.3, 1.0):
        assert np.abs(seg.evaluate(s) - A.mats).max() < 1e-12


def test_inz_tail_only(rng):
    A = random_tuple(3, 2, rng)
    mats = np.array(A.mats)
    mats[2] = rng.normal(size=(2, 2))
    E = KrausTuple(mats)
    seg = inz_segment(A, E)
    mid = seg.evaluate(0.5)
    assert np.abs(mid[:2] - A.mats[:2]).max() < 1e-10
    assert np.abs(mid[2] - 0.5 * (A.mats[2] + E.mats[2])).max() < 1e-10


def test_inz_golden():
    g = json.loads((GOLDEN / "inz_k2_n3.json").read_text())
    rng = np.random.default_rng(g["generator_seed"])
    A = random_tuple(3, 2, rng)
    E = random_tuple(3, 2, rng)
    seg = inz_segment(A, E, seed=g["seed"])
    curves = seg.to_dict()
    assert curves["lambda"] == g["segment"]["lambda"]
    assert curves["entries"] == g["segment"]["entries"]
    for s, (re, im) in zip(np.linspace(0, 1, 11), g["samples"]):
        assert np.abs(seg.evaluate(s) - (np.array(re) + 1j * np.array(im))).max() < 1e-10
    for s in np.linspace(0, 1, 101):
        assert eig_oracle_member(seg.evaluate(s))


def check_path(path, A, E, numeric=True):
    assert np.abs(path.evaluate(0.0) - A.mats).max() <= 1e-12
    assert np.abs(path.evaluate(1.0) - E.mats).max() <= 1e-12
    assert max(path.junction_jumps()) <= 1e-10
    assert path.breakpoints == [1 / 3, 2 / 3]
    k = A.k
    for t in np.linspace(0, 1, 103)[1:-1]:
        ok, _ = path.membership(t)
        assert ok
        B = KrausTuple(path.evaluate(t))
        assert np.linalg.svd(B.mats[0], compute_uv=False).min() > 0
        if numeric:
            assert z_membership(B)[0]
            assert wielandt_index(B, k * k) <= k * k


def test_connect_random_pair():
    rng = np.random.default_rng(3)
    A, E = random_tuple(2, 2, rng), random_tuple(2, 2, rng)
    check_path(connect(A, E, 7), A, E)


def test_connect_self():
    A = random_tuple(2, 2, np.random.default_rng(5))
    check_path(connect(A, A, 7), A, A)


def test_connect_aklt_to_random():
    A = aklt()
    E = normalize(random_tuple(3, 2, np.random.default_rng(8)))
    path = connect(A, E, 7)
    check_path(path, A, E, numeric=False)
    # numeric diagonalization is reliable away from the nilpotent end
    for t in np.linspace(0.1, 0.9, 17):
        assert z_membership(KrausTuple(path.evaluate(t)))[0]


def test_connect_k1():
    A = KrausTuple(np.array([[[1.0]], [[0.5]]]))
    E = KrausTuple(np.array([[[-2.0j]], [[0.1]]]))
    path = connect(A, E, 3)
    for t in np.linspace(0, 1, 51):
        assert np.abs(path.evaluate(t)).max() > 0
        assert abs(path.evaluate(t)[0, 0, 0]) > 0


def test_connect_requires_length():
    A = random_tuple(2, 2, np.random.default_rng(1))
    with pytest.raises(ValueError):
        connect(A, A, 6)


def test_connect_smooth_option():
    rng = np.random.default_rng(3)
    A, E = random_tuple(2, 2, rng), random_tuple(2, 2, rng)
    path = connect(A, E, 7, smooth=True)
    h = 1e-6
    for tb in path.breakpoints:
        left = (path.evaluate(tb) - path.evaluate(tb - h)) / h
        right = (path.evaluate(tb + h) - path.evaluate(tb)) / h
        assert np.abs(left).max() < 1e-3 and np.abs(right).max() < 1e-3


def test_path_serialization_roundtrip():
    rng = np.random.default_rng(3)
    A, E = random_tuple(2, 2, rng), random_tuple(2, 2, rng)
    path = normalize_path(connect(A, E, 7))
    back = path_from_dict(json.loads(json.dumps(path.to_dict())))
    for t in np.linspace(0, 1, 13):
        assert np.abs(back.evaluate(t) - path.evaluate(t)).max() < 1e-12


def test_normalize_constant_paths():
    B = aklt()
    p = normalize_path(MatrixPath([Linear(B, B)]))
    assert np.abs(p.evaluate(0.4) - B.mats).max() < 1e-12
    p2 = normalize_path(MatrixPath([Linear(B.scaled(2.0), B.scaled(2.0))]))
    assert np.abs(p2.evaluate(0.7) - B.mats).max() < 1e-12


def test_normalize_connect_radius():
    A = aklt()
    E = normalize(random_tuple(3, 2, np.random.default_rng(8)))
    p = normalize_path(connect(A, E, 7))
    for t in np.linspace(0, 1, 41):
        assert abs(spectral_radius(p.evaluate(t)) - 1) <= 1e-9


def test_normalize_not_primitive():
    I = KrausTuple(np.stack([np.eye(2), np.zeros((2, 2))]))
    p = normalize_path(MatrixPath([Linear(I, I)]))
    with pytest.raises(NotPrimitiveAt):
        p.evaluate(0.5)
    Z = KrausTuple(np.stack([[[0, 1], [0, 0]], np.zeros((2, 2))]))
    with pytest.raises(NotPrimitiveAt):
        normalize_path(MatrixPath([Linear(Z, Z)])).evaluate(0.5)


def test_reversed_and_reparam():
    rng = np.random.default_rng(2)
    A, E = random_tuple(2, 2, rng), random_tuple(2, 2, rng)
    L = Linear(A, E)
    assert np.abs(Reversed(L).evaluate(0.25) - L.evaluate(0.75)).max() == 0
    C = ConstantReparam(L, 0.2, 0.6)
    assert np.abs(C.evaluate(0.5) - L.evaluate(0.4)).max() < 1e-15
    S = ConstantReparam(L, 0.0, 1.0, smooth=True)
    assert np.abs(S.evaluate(0.5) - L.evaluate(0.5)).max() < 1e-15


def test_matrix_path_times_validation():
    B = aklt()
    with pytest.raises(ValueError):
        MatrixPath([Linear(B, B)], [0.0, 0.5])
    with pytest.raises(ValueError):
        MatrixPath([Linear(B, B), Linear(B, B)], [0.0, 0.7, 0.5])


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10_000))
def test_connect_property(seed):
    rng = np.random.default_rng(seed)
    A, E = random_tuple(2, 2, rng), random_tuple(2, 2, rng)
    path = connect(A, E, 7, seed=seed)
    assert np.abs(path.evaluate(0.0) - A.mats).max() <= 1e-12
    assert np.abs(path.evaluate(1.0) - E.mats).max() <= 1e-12
    assert max(path.junction_jumps()) <= 1e-10
    for t in np.linspace(0, 1, 21)[1:-1]:
        assert path.membership(t)[0]
