"""Reference tuples used in tests, examples and the CLI."""
import numpy as np

from .transfer import KrausTuple, is_primitive, normalize

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def aklt() -> KrausTuple:
    """Spin-1 valence bond tuple with n = 3, k = 2 (unital, trace preserving)."""
    mats = np.stack([
        np.sqrt(2 / 3) * SIGMA_PLUS,
        -np.sqrt(1 / 3) * SIGMA_Z,
        -np.sqrt(2 / 3) * SIGMA_MINUS,
    ])
    return KrausTuple(mats, name="aklt")


def product_tuple(n: int = 2) -> KrausTuple:
    """k = 1 tuple (1, 0, ..., 0) whose state is the product e_1 (x) e_1 (x) ..."""
    mats = np.zeros((n, 1, 1), dtype=complex)
    mats[0, 0, 0] = 1.0
    return KrausTuple(mats, name="product")


def identity_tuple(n: int = 2, k: int = 2) -> KrausTuple:
    """(1, 0, ..., 0): the identity channel, not primitive for k >= 2."""
    mats = np.zeros((n, k, k), dtype=complex)
    mats[0] = np.eye(k)
    return KrausTuple(mats, name="identity")


def random_tuple(n: int, k: int, rng, primitive: bool = True) -> KrausTuple:
    """Complex Ginibre tuple; generic draws are primitive with invertible B_1."""
    rng = np.random.default_rng(rng)
    for _ in range(100):
        mats = rng.normal(size=(n, k, k)) + 1j * rng.normal(size=(n, k, k))
        B = KrausTuple(mats / np.sqrt(2 * k * n))
        if not primitive or is_primitive(B):
            return B
    raise RuntimeError("failed to draw a primitive tuple")  # pragma: no cover


def seeded_pair(seed: int = 3, n: int = 2, k: int = 2):
    """Two normalized random primitive tuples drawn from one seeded generator."""
    rng = np.random.default_rng(seed)
    return normalize(random_tuple(n, k, rng)), normalize(random_tuple(n, k, rng))
