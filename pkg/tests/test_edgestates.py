import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapflow.edgestates import (
    LEFT,
    RIGHT,
    EdgeStateSpec,
    LocalObservable,
    boundary_limit_check,
    boundary_map,
    bulk_state_eval,
    edge_state_eval,
    frustration_check,
    identity_observable,
    interaction_observable,
    surjectivity_check,
)
from gapflow.errors import SingularWeight, WindowMismatch
from gapflow.fixtures import aklt, product_tuple, random_tuple
from gapflow.transfer import KrausTuple, normalize, spectral_data

DIAG = np.diag([1.0, 0.0, -1.0])


def rand_state(rng, k):
    X = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    w = X @ X.conj().T
    return w / np.trace(w)


def right_map_oracle(B, A, a, e):
    # sum over multi-indices of <mu|A|nu> B_mu e B_nu^*
    k = B.k
    out = np.zeros((k, k), dtype=complex)
    idx = list(itertools.product(range(B.n), repeat=a))
    prods = []
    for mu in idx:
        P = np.eye(k, dtype=complex)
        for x in mu:
            P = P @ B.mats[x]
        prods.append(P)
    for i, Pm in enumerate(prods):
        for j, Pn in enumerate(prods):
            out += A[i, j] * Pm @ e @ Pn.conj().T
    return out


def test_right_map_identity_aklt():
    R = boundary_map(aklt(), RIGHT, identity_observable(3, (0, 1)))
    assert np.abs(R - np.eye(2)).max() < 1e-12


def test_left_map_identity_is_rho(rng):
    B = normalize(random_tuple(2, 2, rng))
    L = boundary_map(B, LEFT, identity_observable(2, (-2, -1)))
    assert np.abs(L - spectral_data(B).rho).max() < 1e-9
    R = boundary_map(B, RIGHT, identity_observable(2, (0, 2)))
    assert np.abs(R - spectral_data(B).e).max() < 1e-9


def test_map_zero():
    assert np.abs(boundary_map(aklt(), RIGHT, LocalObservable((0, 0), np.zeros((3, 3))))).max() == 0


def test_map_product():
    B = product_tuple()
    one = boundary_map(B, RIGHT, LocalObservable((0, 0), np.diag([1.0, 0.0])))
    two = boundary_map(B, RIGHT, LocalObservable((0, 0), np.diag([0.0, 1.0])))
    assert abs(one[0, 0] - 1) < 1e-14 and abs(two[0, 0]) < 1e-14


def test_map_matches_oracle(rng):
    B = normalize(random_tuple(2, 2, rng))
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    e = spectral_data(B).e
    R = boundary_map(B, RIGHT, LocalObservable((0, 1), A))
    assert np.abs(R - right_map_oracle(B, A, 2, e)).max() < 1e-12


def test_map_window_errors():
    with pytest.raises(WindowMismatch):
        boundary_map(aklt(), RIGHT, identity_observable(3, (1, 2)))
    with pytest.raises(WindowMismatch):
        boundary_map(aklt(), LEFT, identity_observable(3, (-3, -2)))
    with pytest.raises(WindowMismatch):
        boundary_map(aklt(), RIGHT, LocalObservable((0, 1), np.eye(3)))


def test_map_completely_positive(rng):
    B = normalize(random_tuple(2, 2, rng))
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    R = boundary_map(B, RIGHT, LocalObservable((0, 1), X @ X.conj().T))
    assert np.linalg.eigvalsh(0.5 * (R + R.conj().T)).min() >= -1e-12


def test_edge_state_normalized(rng):
    B = normalize(random_tuple(2, 3, rng))
    for side, win in ((RIGHT, (0, 1)), (LEFT, (-2, -1))):
        spec = EdgeStateSpec(side, rand_state(rng, 3))
        assert abs(edge_state_eval(B, spec, identity_observable(2, win)) - 1) < 1e-9


def test_edge_state_aklt_symmetry():
    spec = EdgeStateSpec(RIGHT, np.eye(2) / 2)
    assert abs(edge_state_eval(aklt(), spec, LocalObservable((0, 0), DIAG))) < 1e-12


def test_edge_state_product(rng):
    B = product_tuple()
    spec = EdgeStateSpec(RIGHT, np.eye(1))
    A = rng.normal(size=(2, 2))
    assert abs(edge_state_eval(B, spec, LocalObservable((0, 0), A)) - A[0, 0]) < 1e-12


def test_edge_state_singular_weight():
    # e = diag(1, 0) for an upper triangular tuple
    B = KrausTuple(np.stack([np.diag([1.0, 0.5]), np.array([[0.0, 1.0], [0.0, 0.0]])]))
    with pytest.raises(SingularWeight):
        edge_state_eval(B, EdgeStateSpec(RIGHT, np.eye(2) / 2), identity_observable(2, (0, 0)))


def test_edge_spec_validation():
    with pytest.raises(ValueError):
        EdgeStateSpec(RIGHT, np.eye(2))
    with pytest.raises(ValueError):
        EdgeStateSpec("up", np.eye(2) / 2)


def test_bulk_examples():
    B = aklt()
    assert abs(bulk_state_eval(B, identity_observable(3, (0, 2))) - 1) < 1e-12
    assert abs(bulk_state_eval(B, interaction_observable(B, 2))) < 1e-12
    P = product_tuple()
    assert abs(bulk_state_eval(P, LocalObservable((0, 0), np.diag([1.0, 0.0]))) - 1) < 1e-14


def test_bulk_translation_invariance(rng):
    B = normalize(random_tuple(2, 2, rng))
    A = LocalObservable((0, 1), rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    assert abs(bulk_state_eval(B, A) - bulk_state_eval(B, A.shifted(5))) < 1e-12
    # padding with identities leaves the value unchanged as well
    wide = A.embedded(2, (-1, 2))
    assert abs(bulk_state_eval(B, A) - bulk_state_eval(B, wide)) < 1e-12


def test_bulk_matches_right_edge_for_unital():
    # with e = 1 the right edge state for omega = rho is the bulk state
    B = aklt()
    rng = np.random.default_rng(7)
    spec = EdgeStateSpec(RIGHT, spectral_data(B).rho)
    for _ in range(5):
        A = LocalObservable((0, 1), rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9)))
        assert abs(edge_state_eval(B, spec, A) - bulk_state_eval(B, A)) < 1e-12


def test_frustration_free(rng):
    B = aklt()
    spec = EdgeStateSpec(RIGHT, rand_state(rng, 2))
    assert frustration_check(B, 2, spec, 3) <= 1e-9
    assert frustration_check(B, 2, EdgeStateSpec(LEFT, rand_state(rng, 2)), 4) <= 1e-9
    assert frustration_check(B, 2, "bulk", 2) <= 1e-9
    assert frustration_check(product_tuple(), 1, "bulk", 2) == 0


def test_limit_check_aklt():
    B = aklt()
    A = LocalObservable((0, 0), DIAG)
    # C = 1 gives a limit and finite values that vanish by symmetry, so use a generic C
    C = np.array([[1.0, 0.3], [-0.2, 0.7]])
    rows = boundary_limit_check(B, C, A, [3, 4, 5, 6, 7])
    assert all(r.passed for r in rows)
    ds = [r.d for r in rows]
    assert max(ds) > 0
    assert all(d2 <= d1 / 3 * 1.0001 + 1e-13 for d1, d2 in zip(ds, ds[1:]))


def test_limit_check_product_and_zero():
    P = product_tuple()
    rows = boundary_limit_check(P, np.eye(1), LocalObservable((0, 0), np.diag([1.0, 0.0])), [1, 2, 3])
    assert all(r.d < 1e-14 for r in rows)
    rows = boundary_limit_check(aklt(), np.zeros((2, 2)), LocalObservable((0, 0), DIAG), [2, 3])
    assert all(r.d == 0 and r.limit == 0 for r in rows)


def test_surjectivity():
    assert surjectivity_check(aklt(), 2) == 4
    assert surjectivity_check(product_tuple(), 1) == 1
    # a = 1 < s: reported rather than raised
    assert surjectivity_check(aklt(), 1) == 4


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_states_are_states_and_affine(seed, lam):
    rng = np.random.default_rng(seed)
    B = normalize(random_tuple(2, 2, rng))
    w1, w2 = rand_state(rng, 2), rand_state(rng, 2)
    A = LocalObservable((0, 1), rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    v1 = edge_state_eval(B, EdgeStateSpec(RIGHT, w1), A)
    v2 = edge_state_eval(B, EdgeStateSpec(RIGHT, w2), A)
    vm = edge_state_eval(B, EdgeStateSpec(RIGHT, lam * w1 + (1 - lam) * w2), A)
    assert abs(vm - lam * v1 - (1 - lam) * v2) < 1e-12
    nA = np.linalg.norm(A.A, 2)
    assert abs(v1) <= nA + 1e-9
    assert abs(bulk_state_eval(B, A)) <= nA + 1e-9
    L = LocalObservable((-2, -1), A.A)
    assert abs(edge_state_eval(B, EdgeStateSpec(LEFT, w1), L)) <= nA + 1e-9
