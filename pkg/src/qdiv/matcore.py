"""Dense Hermitian linear algebra, coordinatization and superoperators.

Matrices are plain ``numpy`` arrays.  Strictly positive unit-trace states are
wrapped in :class:`DensityMatrix`, which validates once and caches its
eigendecomposition.  Linear maps on ``n x n`` matrices are stored as
:class:`SuperOperator` objects holding an ``n^2 x n^2`` matrix in the
coordinates of an orthonormal Hermitian basis (normalized identity followed
by generalized Gell-Mann matrices).  Restricted to Hermitian arguments, every
Hermiticity-preserving map then has a real representation.
"""

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, DomainError, ValidationError

#: smallest admissible eigenvalue of an "invertible" density matrix
EPS_POS = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12


def as_matrix(A, name="A"):
    """Return ``A`` as a finite, square complex array."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError("finite", f"{name} contains NaN or Inf entries")
    return M


def hermitian_residual(A):
    """Relative self-adjointness defect ``max|A - A^*| / ||A||_F``."""
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(A - A.conj().T)) / scale)


def as_hermitian(A, name="A", tol=HERMITIAN_TOL):
    """Validate self-adjointness and return the exactly symmetrized matrix."""
    M = as_matrix(A, name)
    res = hermitian_residual(M)
    if res > tol:
        raise ValidationError(
            "hermitian", f"{name} is not self-adjoint (relative defect {res:.3e} > {tol:.0e})"
        )
    return 0.5 * (M + M.conj().T)


def eigh(H):
    """Spectral decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real, ascending.
    eigenvectors : ndarray
        Unitary matrix whose columns are the eigenvectors.
    """
    if isinstance(H, DensityMatrix):
        return H.eigenvalues, H.eigenvectors
    M = as_hermitian(H, "H")
    w, U = np.linalg.eigh(M)
    return w, U


def mat_fun(H, f, name=None):
    """Apply the scalar function ``f`` to a Hermitian matrix spectrally.

    ``f`` must accept and return arrays.  If ``f`` produces a non-finite value
    on some eigenvalue a :class:`DomainError` naming that eigenvalue is raised.
    """
    w, U = eigh(H)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w), dtype=float)
    bad = ~np.isfinite(fw)
    if np.any(bad):
        label = name or getattr(f, "__name__", "f")
        raise DomainError(f"eigenvalue {float(w[bad][0])!r} is outside the domain of {label}")
    return (U * fw) @ U.conj().T


class DensityMatrix:
    """Strictly positive, unit-trace Hermitian matrix with cached spectrum.

    Parameters
    ----------
    rho : array_like
        The state.  Validated for self-adjointness (relative defect at most
        ``1e-12``), unit trace (within ``trace_tol``) and strict positivity
        (smallest eigenvalue above :data:`EPS_POS`).
    """

    __slots__ = ("matrix", "eigenvalues", "eigenvectors")

    def __init__(self, rho, *, trace_tol=TRACE_TOL, name="state"):
        M = as_hermitian(rho, name)
        tr = np.trace(M).real
        if abs(tr - 1.0) > trace_tol:
            raise ValidationError("trace", f"{name} has trace {float(tr)!r}, expected 1")
        w, U = np.linalg.eigh(M)
        if w[0] <= EPS_POS:
            raise ValidationError(
                "positivity",
                f"{name} smallest eigenvalue {float(w[0])!r} is not above {EPS_POS:.0e}",
            )
        self.matrix = M
        self.eigenvalues = w
        self.eigenvectors = U

    @property
    def dim(self):
        return self.matrix.shape[0]

    def fun(self, f):
        """``U diag(f(p)) U^*`` using the cached eigendecomposition."""
        return (self.eigenvectors * f(self.eigenvalues)) @ self.eigenvectors.conj().T

    def sqrt(self):
        return self.fun(np.sqrt)

    def inv(self):
        return self.fun(lambda p: 1.0 / p)

    def log(self):
        return self.fun(np.log)

    def power(self, t):
        return self.fun(lambda p: p**t)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, spectrum={np.round(self.eigenvalues, 6)})"


def as_density(P, name="state"):
    """Coerce to :class:`DensityMatrix` (pass-through for existing instances)."""
    if isinstance(P, DensityMatrix):
        return P
    return DensityMatrix(P, name=name)


def _check_same_dim(*mats):
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")


# ---------------------------------------------------------------------------
# Hermitian basis and coordinates
# ---------------------------------------------------------------------------


def _gell_mann_elements(n):
    elems = [np.eye(n, dtype=complex) / np.sqrt(n)]
    r2 = np.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            S = np.zeros((n, n), dtype=complex)
            S[j, k] = S[k, j] = 1.0 / r2
            A = np.zeros((n, n), dtype=complex)
            A[j, k] = -1j / r2
            A[k, j] = 1j / r2
            elems.extend([S, A])
    for l in range(1, n):
        d = np.zeros(n)
        d[:l] = 1.0
        d[l] = -float(l)
        elems.append(np.diag(d / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(elems)


class HermitianBasis:
    """Hilbert-Schmidt orthonormal basis of Hermitian ``n x n`` matrices.

    The first element is ``I / sqrt(n)``; the remaining ``n^2 - 1`` are
    traceless and span the tangent space of the state manifold.
    """

    def __init__(self, elements, tol=1e-12):
        E = np.asarray(elements, dtype=complex)
        if E.ndim != 3 or E.shape[1] != E.shape[2] or E.shape[0] != E.shape[1] ** 2:
            raise DimensionError(f"expected n^2 matrices of size n x n, got shape {E.shape}")
        n = E.shape[1]
        flat = E.reshape(n * n, n * n)
        gram = flat.conj() @ flat.T
        if np.max(np.abs(gram - np.eye(n * n))) > tol:
            raise ValidationError("orthonormal", "basis elements are not HS-orthonormal")
        if np.max(np.abs(E - np.conj(np.transpose(E, (0, 2, 1))))) > tol:
            raise ValidationError("hermitian", "basis elements must be Hermitian")
        if np.max(np.abs(E[0] - np.eye(n) / np.sqrt(n))) > tol:
            raise ValidationError("identity", "first basis element must be I/sqrt(n)")
        self.elements = E
        self.dim = n
        self._flat = flat
        # coordinates(A) = W vec(A) with W unitary, vec row-major
        self._W = flat.conj()

    @classmethod
    def gell_mann(cls, n):
        return _gell_mann_basis(int(n))

    def rotated(self, R):
        """Mix the traceless elements with a real orthogonal matrix ``R``."""
        R = np.asarray(R, dtype=float)
        m = self.dim**2 - 1
        if R.shape != (m, m) or np.max(np.abs(R.T @ R - np.eye(m))) > 1e-12:
            raise ValidationError("orthogonal", f"R must be a {m}x{m} orthogonal matrix")
        new = self.elements.copy()
        new[1:] = np.einsum("ij,jab->iab", R, self.elements[1:])
        return HermitianBasis(new)

    @property
    def size(self):
        return self.dim**2

    def complex_coordinates(self, A):
        A = np.asarray(A, dtype=complex)
        if A.shape != (self.dim, self.dim):
            raise DimensionError(f"expected {self.dim}x{self.dim} matrix, got {A.shape}")
        return self._W @ A.reshape(-1)

    def coordinates(self, A):
        """Real coordinates ``c_i = Tr(B_i A)`` of a Hermitian matrix."""
        A = as_hermitian(A)
        return self.complex_coordinates(A).real

    def from_coordinates(self, c):
        c = np.asarray(c)
        if c.shape != (self.size,):
            raise DimensionError(f"expected {self.size} coordinates, got shape {c.shape}")
        return (self._flat.T @ c).reshape(self.dim, self.dim)

    def to_coordinates(self, L, out_basis=None):
        """Coordinate matrix of a map given on row-major ``vec``."""
        out = self if out_basis is None else out_basis
        return out._W @ L @ self._W.conj().T

    def to_natural(self, S, out_basis=None):
        out = self if out_basis is None else out_basis
        return out._W.conj().T @ S @ self._W


@lru_cache(maxsize=None)
def _gell_mann_basis(n):
    return HermitianBasis(_gell_mann_elements(n))


def coordinates(A, basis=None):
    A = as_hermitian(A)
    basis = basis or HermitianBasis.gell_mann(A.shape[0])
    return basis.coordinates(A)


def from_coordinates(c, basis=None):
    c = np.asarray(c)
    if basis is None:
        n = int(round(np.sqrt(c.size)))
        if n * n != c.size:
            raise DimensionError(f"{c.size} coordinates do not describe a square matrix")
        basis = HermitianBasis.gell_mann(n)
    return basis.from_coordinates(c)


# ---------------------------------------------------------------------------
# Superoperators
# ---------------------------------------------------------------------------


class SuperOperator:
    """Linear map ``C^{n_in x n_in} -> C^{n_out x n_out}`` in Gell-Mann coordinates."""

    def __init__(self, matrix, dim_in, dim_out=None):
        dim_out = dim_in if dim_out is None else dim_out
        M = np.asarray(matrix, dtype=complex)
        if M.shape != (dim_out**2, dim_in**2):
            raise DimensionError(
                f"representation must be {dim_out**2}x{dim_in**2}, got {M.shape}"
            )
        self.matrix = M
        self.dim_in = dim_in
        self.dim_out = dim_out

    @property
    def dim(self):
        return self.dim_in

    @classmethod
    def from_natural(cls, L, dim_in, dim_out=None):
        """Build from the matrix acting on row-major ``vec``."""
        dim_out = dim_in if dim_out is None else dim_out
        bi = HermitianBasis.gell_mann(dim_in)
        bo = HermitianBasis.gell_mann(dim_out)
        return cls(bi.to_coordinates(np.asarray(L, dtype=complex), bo), dim_in, dim_out)

    @property
    def natural(self):
        bi = HermitianBasis.gell_mann(self.dim_in)
        bo = HermitianBasis.gell_mann(self.dim_out)
        return bi.to_natural(self.matrix, bo)

    def apply(self, A):
        A = np.asarray(A, dtype=complex)
        if A.shape != (self.dim_in, self.dim_in):
            raise DimensionError(f"expected {self.dim_in}x{self.dim_in} input, got {A.shape}")
        return (self.natural @ A.reshape(-1)).reshape(self.dim_out, self.dim_out)

    __call__ = apply

    def __matmul__(self, other):
        if not isinstance(other, SuperOperator):
            return NotImplemented
        if other.dim_out != self.dim_in:
            raise DimensionError("composition dimension mismatch")
        return SuperOperator(self.matrix @ other.matrix, other.dim_in, self.dim_out)

    def is_hermitian(self, tol=1e-10):
        M = self.matrix
        return M.shape[0] == M.shape[1] and np.max(np.abs(M - M.conj().T)) <= tol * max(
            1.0, np.max(np.abs(M))
        )

    def eigvalsh(self):
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def fun(self, f):
        """Functional calculus for maps that are Hermitian w.r.t. Hilbert-Schmidt."""
        if not self.is_hermitian():
            raise ValidationError("hermitian", "functional calculus needs an HS-Hermitian map")
        H = 0.5 * (self.matrix + self.matrix.conj().T)
        w, V = np.linalg.eigh(H)
        with np.errstate(all="ignore"):
            fw = np.asarray(f(w), dtype=float)
        if not np.all(np.isfinite(fw)):
            raise DomainError(f"eigenvalue {float(w[~np.isfinite(fw)][0])!r} outside domain of f")
        return SuperOperator((V * fw) @ V.conj().T, self.dim_in)

    def inverse(self):
        return SuperOperator(np.linalg.inv(self.matrix), self.dim_out, self.dim_in)

    def real_matrix(self):
        """Representation restricted to Hermitian arguments (must be real)."""
        M = self.matrix
        if np.max(np.abs(M.imag)) > 1e-10 * max(1.0, np.max(np.abs(M))):
            raise ValidationError("hermiticity_preserving", "map does not preserve Hermiticity")
        return M.real.copy()


def identity_super(n):
    return SuperOperator(np.eye(n * n), n)


def left_super(Q):
    """``A -> Q A``."""
    Q = as_matrix(np.asarray(Q), "Q")
    n = Q.shape[0]
    return SuperOperator.from_natural(np.kron(Q, np.eye(n)), n)


def right_super(P):
    """``A -> A P``."""
    P = as_matrix(np.asarray(P), "P")
    n = P.shape[0]
    return SuperOperator.from_natural(np.kron(np.eye(n), P.T), n)


def relative_modular(Q, P):
    """Relative modular operator ``A -> Q A P^{-1}``."""
    Q = as_density(Q, "Q")
    P = as_density(P, "P")
    _check_same_dim(Q.matrix, P.matrix)
    return left_super(Q.matrix) @ right_super(P.inv())


class ModularSpectrum(NamedTuple):
    """Weighted spectrum of ``Delta_{Q,P}`` seen from ``P^{1/2}``.

    ``weights[j, k] = p_j |<y_k, x_j>|^2`` and ``ratios[j, k] = q_k / p_j``
    where ``x_j`` (``y_k``) are eigenvectors of ``P`` (``Q``).
    """

    weights: np.ndarray
    ratios: np.ndarray

    def expect(self, f):
        """``sum_jk weights * f(ratios)``."""
        return float(np.sum(self.weights * f(self.ratios)))


def modular_spectrum(Q, P):
    Q = as_density(Q, "Q")
    P = as_density(P, "P")
    _check_same_dim(Q.matrix, P.matrix)
    p, X = P.eigenvalues, P.eigenvectors
    q, Y = Q.eigenvalues, Q.eigenvectors
    overlap = np.abs(X.conj().T @ Y) ** 2  # [j, k] = |<x_j, y_k>|^2
    weights = p[:, None] * overlap
    ratios = q[None, :] / p[:, None]
    return ModularSpectrum(weights, ratios)


def hs_inner(A, B):
    """Hilbert-Schmidt inner product ``Tr A^* B``."""
    return np.vdot(np.asarray(A).reshape(-1), np.asarray(B).reshape(-1))
