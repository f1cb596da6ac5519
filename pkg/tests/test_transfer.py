import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapflow.errors import NotNormalized, NotPrimitive, NotPrimitiveWithin, ShapeMismatch
from gapflow.fixtures import aklt, identity_tuple, product_tuple, random_tuple
from gapflow.transfer import (
    KrausTuple,
    apply_adjoint,
    apply_channel,
    gap_constants,
    normalize,
    spectral_data,
    transfer_matrix,
    uniform_path_decay,
    unitalize,
    wielandt_index,
)


def loop_transfer(B):
    # entrywise oracle: vec(B X B^*)[i*k+j] = sum B[i,a] X[a,b] conj(B[j,b])
    k = B.k
    M = np.zeros((k * k, k * k), dtype=complex)
    for mat in B.mats:
        for i in range(k):
            for j in range(k):
                for a in range(k):
                    for b in range(k):
                        M[i * k + j, a * k + b] += mat[i, a] * np.conj(mat[j, b])
    return M


def single(B1):
    # one Kraus matrix padded with a zero partner
    B1 = np.asarray(B1, dtype=complex)
    return KrausTuple(np.stack([B1, np.zeros_like(B1)]))


def test_channel_aklt_unital():
    B = aklt()
    assert np.abs(apply_channel(B, np.eye(2)) - np.eye(2)).max() < 1e-14


def test_channel_zero():
    assert np.abs(apply_channel(aklt(), np.zeros((2, 2)))).max() == 0


def test_channel_diagonal():
    B = single(np.diag([1.0, 2.0]))
    assert np.abs(apply_channel(B, np.eye(2)) - np.diag([1.0, 4.0])).max() < 1e-14


def test_channel_shape_error():
    with pytest.raises(ShapeMismatch):
        apply_channel(aklt(), np.eye(3))


def test_transfer_matrix_matches_loops(rng):
    B = random_tuple(3, 3, rng)
    assert np.abs(transfer_matrix(B) - loop_transfer(B)).max() < 1e-13
    X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.abs(transfer_matrix(B) @ X.reshape(-1) - apply_channel(B, X).reshape(-1)).max() < 1e-13


def test_adjoint_duality(rng):
    B = random_tuple(2, 3, rng)
    X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    Y = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    lhs = np.trace(Y.conj().T @ apply_channel(B, X))
    rhs = np.trace(apply_adjoint(B, Y).conj().T @ X)
    assert abs(lhs - rhs) < 1e-12


def test_spectral_data_aklt():
    sd = spectral_data(aklt())
    assert abs(sd.r - 1) < 1e-12
    ev = np.sort(sd.eigenvalues.real)
    assert np.abs(ev - np.array([-1 / 3, -1 / 3, -1 / 3, 1])).max() < 1e-12
    assert np.abs(sd.eigenvalues.imag).max() < 1e-12
    assert np.abs(sd.e - np.eye(2)).max() < 1e-12
    assert np.abs(sd.rho - np.eye(2) / 2).max() < 1e-12
    assert abs(sd.a - 1) < 1e-12 and abs(sd.c - 2) < 1e-12
    assert sd.primitive and sd.s == 2


def test_spectral_data_scalar():
    sd = spectral_data(product_tuple())
    assert abs(sd.r - 1) < 1e-14
    assert abs(sd.e[0, 0] - 1) < 1e-14 and abs(sd.rho[0, 0] - 1) < 1e-14
    assert sd.primitive


def test_identity_channel_not_primitive():
    sd = spectral_data(identity_tuple())
    assert abs(sd.r - 1) < 1e-14
    assert np.abs(sd.eigenvalues - 1).max() < 1e-12
    assert not sd.primitive


def test_wielandt_examples():
    assert wielandt_index(aklt()) == 2
    assert wielandt_index(product_tuple()) == 1
    B = KrausTuple(np.stack([np.diag([1.0, 0.5]), np.array([[0.0, 1.0], [1.0, 0.0]])]))
    assert wielandt_index(B) <= 4
    with pytest.raises(NotPrimitiveWithin):
        wielandt_index(identity_tuple(), 16)


def test_normalize_examples():
    B = aklt()
    assert normalize(B).allclose(B, 1e-12)
    assert normalize(B.scaled(2.0)).allclose(B, 1e-12)
    out = normalize(KrausTuple(np.array([[[3.0]], [[4.0]]])))
    assert np.abs(out.mats.ravel() - np.array([0.6, 0.8])).max() < 1e-12
    with pytest.raises(NotPrimitive):
        normalize(identity_tuple())


def test_unitalize_examples(rng):
    B = aklt()
    assert unitalize(B).allclose(B, 1e-12)
    out = unitalize(KrausTuple(np.array([[[3.0]], [[4.0]]])))
    assert np.abs(out.mats.ravel() - np.array([0.6, 0.8])).max() < 1e-12
    U = unitalize(random_tuple(2, 2, rng))
    assert np.abs(apply_channel(U, np.eye(2)) - np.eye(2)).max() < 1e-9


def test_gap_constants_aklt():
    g = gap_constants(aklt())
    N = np.arange(1, g.N_cap + 1)
    assert np.abs(g.E - 4.0 * 3.0 ** (-N)).max() < 1e-12
    assert abs(g.E[0] - 4 / 3) < 1e-12 and abs(g.E[1] - 4 / 9) < 1e-12
    assert abs(g.F - 32 / 3) < 1e-9
    assert g.L == 2
    # independent scalar evaluation of the lbar criterion with E(N) = 4 3^-N, F = 32/3
    F = 32 / 3

    def crit(n):
        E = 4.0 * 3.0 ** (-n)
        return np.sqrt(n + 1) * (3 * E * F + 2) * E * F + E

    lbar = next(l for l in range(1, 200) if all(crit(n) < 1 for n in range(l, 400)))
    assert g.lbar == lbar == 6


def test_gap_constants_product():
    g = gap_constants(product_tuple())
    assert np.abs(g.E).max() == 0
    assert g.L == 1 and g.lbar == 1


def test_gap_constants_need_normalized():
    with pytest.raises(NotNormalized):
        gap_constants(aklt().scaled(2.0))


def test_gap_constants_tail_bounds_table(rng):
    B = normalize(random_tuple(2, 2, rng))
    g = gap_constants(B)
    # powers beyond the table stay below the analytic tail bound
    sd = spectral_data(B)
    from gapflow.transfer import complement_power_norms
    norms = complement_power_norms(sd, g.N_cap + 20)
    kac = B.k * sd.a * sd.c
    assert np.abs(kac * norms[: g.N_cap] - g.E).max() < 1e-10
    assert (kac * norms[g.N_cap:]).max() <= g.envelope(g.N_cap + 1) + 1e-14
    assert g.L <= g.lbar


def test_aklt_decay_ratio():
    g = gap_constants(aklt())
    E = g.E[g.E > 1e-300]
    assert np.all(E[1:] <= (1 / 3) * E[:-1] * (1 + 1e-6))


def test_uniform_path_decay_examples():
    sd = spectral_data(aklt())
    c, lam = uniform_path_decay([sd] * 5)
    assert abs(lam - (1 / 3 + 1e-6)) < 1e-12
    c1, lam1 = uniform_path_decay([sd])
    assert abs(c1 - c) < 1e-12 and abs(lam1 - lam) < 1e-12
    # measured prefactor for AKLT: ||T^l(1-P)|| = 3^-l
    l = np.arange(1, 51)
    assert abs(c - np.max(3.0 ** (-l) / lam**l)) < 1e-9


def test_uniform_path_decay_max_semantics(rng):
    samples = []
    for _ in range(6):
        samples.append(spectral_data(normalize(random_tuple(2, 2, rng))))
    c, lam = uniform_path_decay(samples)
    assert abs(lam - max(s.lambda2 for s in samples) - 1e-6) < 1e-12


def test_uniform_path_decay_rejects_empty():
    with pytest.raises(ValueError):
        uniform_path_decay([])


def psd(rng, k):
    X = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return X @ X.conj().T


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(1, 3))
def test_channel_preserves_psd(seed, n, k):
    rng = np.random.default_rng(seed)
    B = random_tuple(n, k, rng, primitive=False)
    X = psd(rng, k)
    Y = apply_channel(B, X)
    assert np.abs(Y - Y.conj().T).max() < 1e-12
    assert np.linalg.eigvalsh(Y).min() >= -1e-10 * np.linalg.norm(X)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_rho_invariance(seed):
    rng = np.random.default_rng(seed)
    B = random_tuple(2, 3, rng)
    sd = spectral_data(B)
    for _ in range(20):
        X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        lhs = np.trace(sd.rho @ apply_channel(B, X))
        assert abs(lhs - sd.r * np.trace(sd.rho @ X)) < 1e-9 * max(1, np.linalg.norm(X))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_normalize_idempotent_and_unitary_covariant(seed):
    rng = np.random.default_rng(seed)
    B = random_tuple(2, 2, rng)
    N1 = normalize(B)
    assert normalize(N1).allclose(N1, 1e-10)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    C = N1.conjugated(Q, Q.conj().T)
    e1 = np.sort_complex(np.round(spectral_data(N1).eigenvalues, 9))
    e2 = np.sort_complex(np.round(spectral_data(C).eigenvalues, 9))
    assert np.abs(e1 - e2).max() < 1e-8
    assert abs(spectral_data(normalize(C)).r - 1) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_wielandt_similarity_invariant(seed):
    rng = np.random.default_rng(seed)
    B = random_tuple(2, 3, rng)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert wielandt_index(B) == wielandt_index(B.conjugated(g))
