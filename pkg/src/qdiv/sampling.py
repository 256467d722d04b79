"""Random states, directions and channels for property tests and multistarts.

Every sampler takes a ``numpy.random.Generator`` (or anything accepted by
``numpy.random.default_rng``), so runs are reproducible from one seed.
"""

import numpy as np

from .channel import pauli_affine, pauli_affine_is_cp, random_channel
from .matcore import DensityMatrix


def rng_from(seed):
    return np.random.default_rng(seed)


def spawn(seed, n):
    """``n`` independent child generators derived from ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def ginibre(n, rng):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_density(n, rng, mix=0.0, rank=None):
    """Random full-rank state ``(1 - mix) G G^*/Tr + mix I/n``.

    ``mix`` > 0 keeps the spectrum away from the boundary.
    """
    G = rng.standard_normal((n, rank or n)) + 1j * rng.standard_normal((n, rank or n))
    P = G @ G.conj().T
    P = P / np.trace(P).real
    P = (1.0 - mix) * P + mix * np.eye(n) / n
    P = 0.5 * (P + P.conj().T)
    return P / np.trace(P).real


def random_state(n, rng, mix=0.0):
    return DensityMatrix(random_density(n, rng, mix))


def random_hermitian(n, rng):
    A = ginibre(n, rng)
    return 0.5 * (A + A.conj().T)


def random_traceless(n, rng, norm=1.0):
    """Random traceless Hermitian matrix with Frobenius norm ``norm``."""
    A = random_hermitian(n, rng)
    A = A - np.trace(A).real / n * np.eye(n)
    return norm * A / np.linalg.norm(A)


def random_unitary(n, rng):
    Q, R = np.linalg.qr(ginibre(n, rng))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_cptp(dim_in, rng, dim_out=None, rank=None):
    return random_channel(dim_in, dim_out, rank=rank, rng=rng)


def random_rotation(rng):
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_unital_T(rng, diagonal=False, max_tries=10_000):
    """Random ``T`` such that ``w -> T w`` is a valid unital qubit channel.

    Diagonal candidates are drawn uniformly in ``[-1, 1]^3`` and rejected by
    the Choi test; non-diagonal ones are rotated diagonal ones ``R1 D R2``.
    """
    for _ in range(max_tries):
        d = rng.uniform(-1.0, 1.0, 3)
        if not pauli_affine_is_cp(np.diag(d), np.zeros(3)):
            continue
        if diagonal:
            return np.diag(d)
        return random_rotation(rng) @ np.diag(d) @ random_rotation(rng)
    raise RuntimeError("failed to sample a CP-valid T")


def random_pauli_channel(rng, unital=True, diagonal=False):
    """Random qubit channel via ``pauli_affine`` (rejection on the Choi test)."""
    if unital:
        return pauli_affine(T=random_unital_T(rng, diagonal), t=np.zeros(3))
    while True:
        T = rng.uniform(-1, 1, (3, 3)) * rng.uniform(0, 1)
        t = rng.uniform(-1, 1, 3) * rng.uniform(0, 1)
        if pauli_affine_is_cp(T, t):
            return pauli_affine(T=T, t=t)
