"""Stochastic (completely positive, trace-preserving) maps.

Channels are stored as Kraus lists ``phi(A) = sum_k V_k A V_k^*``.  The
natural (row-major ``vec``) matrix, the real Gell-Mann representation and the
Choi matrix are derived on demand.

Choi convention: ``C = sum_ij E_ij (x) phi(E_ij)`` with row index
``i * n_out + a``; complete positivity is ``C >= 0`` and trace preservation is
``Tr_out C = I``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError, ValidationError
from .matcore import SuperOperator, as_hermitian, as_matrix

TP_TOL = 1e-10
CHOI_TOL = 1e-10
KRAUS_DROP = 1e-12

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class QuantumChannel:
    """CPTP map ``C^{n_in x n_in} -> C^{n_out x n_out}`` in Kraus form.

    Parameters
    ----------
    kraus : sequence of (n_out, n_in) arrays
    kind : str, optional
        Free-form structural tag (``"identity"``, ``"constant"``,
        ``"partial_trace"``, ...) used to select witnesses and exact shortcuts.
    """

    def __init__(self, kraus, *, kind="kraus", params=None, tp_tol=TP_TOL):
        ks = [np.asarray(V, dtype=complex) for V in kraus]
        if not ks:
            raise ValidationError("kraus", "at least one Kraus operator is required")
        shape = ks[0].shape
        if len(shape) != 2 or any(V.shape != shape for V in ks):
            raise DimensionError("Kraus operators must share one 2-d shape")
        if not all(np.all(np.isfinite(V)) for V in ks):
            raise ValidationError("finite", "Kraus operators contain NaN or Inf")
        self.kraus = tuple(ks)
        self.dim_out, self.dim_in = shape
        self.kind = kind
        self.params = dict(params or {})
        S = sum(V.conj().T @ V for V in ks)
        res = np.abs(S - np.eye(self.dim_in))
        if res.max() > tp_tol:
            row = int(np.unravel_index(np.argmax(res), res.shape)[0])
            raise ValidationError(
                "trace_preserving",
                f"sum V_k^* V_k deviates from I by {res.max():.3e} (row {row})",
            )

    # -- action -----------------------------------------------------------

    def _check_in(self, A):
        A = np.asarray(A, dtype=complex)
        if A.shape != (self.dim_in, self.dim_in):
            raise DimensionError(f"expected {self.dim_in}x{self.dim_in} input, got {A.shape}")
        return A

    def apply(self, A):
        A = self._check_in(A)
        return sum(V @ A @ V.conj().T for V in self.kraus)

    __call__ = apply

    def adjoint_apply(self, B):
        B = np.asarray(B, dtype=complex)
        if B.shape != (self.dim_out, self.dim_out):
            raise DimensionError(f"expected {self.dim_out}x{self.dim_out} input, got {B.shape}")
        return sum(V.conj().T @ B @ V for V in self.kraus)

    def adjoint(self):
        """The adjoint map as a (unital, generally not TP) Kraus list."""
        return [V.conj().T for V in self.kraus]

    # -- representations -------------------------------------------------

    @cached_property
    def natural(self):
        """Matrix acting on row-major ``vec``: ``sum_k V_k (x) conj(V_k)``."""
        return sum(np.kron(V, V.conj()) for V in self.kraus)

    @cached_property
    def representation(self):
        return SuperOperator.from_natural(self.natural, self.dim_in, self.dim_out)

    @cached_property
    def real_matrix(self):
        """Real Gell-Mann representation (``n_out^2 x n_in^2``)."""
        return self.representation.real_matrix()

    @cached_property
    def traceless_block(self):
        """Restriction to the traceless subspaces (drops the identity coordinate)."""
        return self.real_matrix[1:, 1:]

    def choi(self):
        vs = [V.T.reshape(-1) for V in self.kraus]
        return sum(np.outer(v, v.conj()) for v in vs)

    def bloch(self):
        """``(T, t)`` with ``phi((I + w.sigma)/2) = (I + (Tw + t).sigma)/2`` (qubits)."""
        if self.dim_in != 2 or self.dim_out != 2:
            raise DimensionError("Bloch representation needs a qubit-to-qubit channel")
        T = np.array(
            [[0.5 * np.trace(PAULI[i] @ self.apply(PAULI[j])).real for j in range(3)] for i in range(3)]
        )
        img = self.apply(np.eye(2))
        t = np.array([0.5 * np.trace(PAULI[i] @ img).real for i in range(3)])
        return T, t

    def is_unital(self, tol=1e-10):
        return self.dim_in == self.dim_out and np.max(
            np.abs(self.apply(np.eye(self.dim_in)) - np.eye(self.dim_out))
        ) <= tol

    def is_constant(self, tol=1e-12):
        """True when every traceless input is annihilated (one-dimensional image)."""
        B = self.traceless_block
        return B.size == 0 or float(np.max(np.abs(B))) <= tol

    def to_dict(self):
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in V] for V in self.kraus],
        }

    def __repr__(self):
        return f"QuantumChannel(kind={self.kind!r}, {self.dim_in}->{self.dim_out}, rank={len(self.kraus)})"


# ---------------------------------------------------------------------------
# CPTP checks and synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CPTPDiagnostics:
    valid: bool
    tp_residual: float
    choi_min_eigenvalue: float
    message: str

    def __bool__(self):
        return self.valid


def choi_from_natural(L, dim_in, dim_out=None):
    """Choi matrix of the map whose row-major ``vec`` matrix is ``L``."""
    dim_out = dim_in if dim_out is None else dim_out
    L = np.asarray(L, dtype=complex)
    if L.shape != (dim_out**2, dim_in**2):
        raise DimensionError(f"natural matrix must be {dim_out**2}x{dim_in**2}, got {L.shape}")
    # phi(E_ij) = column i*n_in + j reshaped; C[(i,a),(j,b)] = phi(E_ij)[a,b]
    T = L.reshape(dim_out, dim_out, dim_in, dim_in)  # [a, b, i, j]
    return np.transpose(T, (2, 0, 3, 1)).reshape(dim_in * dim_out, dim_in * dim_out)


def _choi_of(obj, dim_in=None, dim_out=None):
    if isinstance(obj, QuantumChannel):
        return obj.choi(), obj.dim_in, obj.dim_out
    if isinstance(obj, SuperOperator):
        return choi_from_natural(obj.natural, obj.dim_in, obj.dim_out), obj.dim_in, obj.dim_out
    L = np.asarray(obj, dtype=complex)
    if dim_in is None:
        dim_in = int(round(np.sqrt(L.shape[1])))
    dim_out = dim_in if dim_out is None else dim_out
    return choi_from_natural(L, dim_in, dim_out), dim_in, dim_out


def is_cptp(obj, dim_in=None, dim_out=None, tol=CHOI_TOL):
    """Check complete positivity and trace preservation through the Choi matrix.

    ``obj`` is a :class:`QuantumChannel`, a :class:`SuperOperator` or a
    natural ``vec`` matrix.  Returns a truthy/falsy :class:`CPTPDiagnostics`.
    """
    C, n_in, n_out = _choi_of(obj, dim_in, dim_out)
    Ch = 0.5 * (C + C.conj().T)
    herm = float(np.max(np.abs(C - C.conj().T)))
    evals = np.linalg.eigvalsh(Ch)
    tr_out = np.einsum("iaja->ij", C.reshape(n_in, n_out, n_in, n_out))
    tp = float(np.max(np.abs(tr_out - np.eye(n_in))))
    problems = []
    if herm > tol:
        problems.append(f"Choi matrix not Hermitian (defect {herm:.3e}): map does not preserve Hermiticity")
    if evals[0] < -tol:
        problems.append(f"CP condition fails: Choi eigenvalue {evals[0]:.6e} < 0")
    if tp > tol:
        problems.append(f"TP condition fails: partial trace residual {tp:.3e}")
    return CPTPDiagnostics(not problems, tp, float(evals[0]), "; ".join(problems) or "ok")


def kraus_from_choi(C, dim_in, dim_out=None, *, kind="kraus", params=None):
    """Synthesize Kraus operators from a PSD Choi matrix.

    ``V[a, i] = sqrt(lambda) v[i * n_out + a]`` for every eigenpair with
    ``lambda > 1e-12``.
    """
    dim_out = dim_in if dim_out is None else dim_out
    C = as_hermitian(C, "Choi matrix", tol=1e-10)
    if C.shape[0] != dim_in * dim_out:
        raise DimensionError(f"Choi matrix must be {dim_in * dim_out} square, got {C.shape}")
    w, V = np.linalg.eigh(C)
    if w[0] < -CHOI_TOL:
        raise ValidationError("choi_psd", f"CP condition fails: Choi eigenvalue {w[0]:.6e} < 0")
    kraus = [
        (np.sqrt(lam) * V[:, k]).reshape(dim_in, dim_out).T for k, lam in enumerate(w) if lam > KRAUS_DROP
    ]
    return QuantumChannel(kraus, kind=kind, params=params)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def identity_channel(n):
    return QuantumChannel([np.eye(n)], kind="identity", params={"n": n})


def unitary_channel(U):
    U = as_matrix(U, "U")
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-10:
        raise ValidationError("unitary", "U is not unitary")
    return QuantumChannel([U], kind="unitary")


def constant_channel(rho0, dim_in=None):
    """``A -> Tr(A) rho0``; ``dim_in`` defaults to the dimension of ``rho0``."""
    R = as_hermitian(rho0, "rho0", tol=1e-12)
    tr = np.trace(R).real
    if abs(tr - 1.0) > 1e-12:
        raise ValidationError("trace", f"rho0 has trace {float(tr)!r}, expected 1")
    r, Y = np.linalg.eigh(R)
    if r[0] < -1e-12:
        raise ValidationError("positivity", f"rho0 has negative eigenvalue {float(r[0])!r}")
    n_out = R.shape[0]
    n_in = n_out if dim_in is None else int(dim_in)
    kraus = []
    for k in range(n_out):
        if r[k] <= KRAUS_DROP:
            continue
        for i in range(n_in):
            V = np.zeros((n_out, n_in), dtype=complex)
            V[:, i] = np.sqrt(r[k]) * Y[:, k]
            kraus.append(V)
    return QuantumChannel(kraus, kind="constant", params={"rho": R})


def depolarizing(n, lam):
    """``rho -> lam rho + (1 - lam) Tr(rho) I / n`` (CP for ``-1/(n^2-1) <= lam <= 1``)."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        # negative lam may still be CP; go through the Choi route
        L = lam * np.eye(n * n) + (1 - lam) / n * np.outer(np.eye(n).reshape(-1), np.eye(n).reshape(-1))
        return kraus_from_choi(choi_from_natural(L, n), n, kind="depolarizing", params={"lam": lam})
    if lam == 1.0:
        return QuantumChannel([np.eye(n)], kind="depolarizing", params={"lam": lam})
    base = constant_channel(np.eye(n) / n)
    if lam == 0.0:
        return QuantumChannel(base.kraus, kind="depolarizing", params={"lam": lam})
    kraus = [np.sqrt(lam) * np.eye(n)] + [np.sqrt(1 - lam) * V for V in base.kraus]
    return QuantumChannel(kraus, kind="depolarizing", params={"lam": lam})


def compose(phi, psi):
    """``phi o psi`` (apply ``psi`` first)."""
    if psi.dim_out != phi.dim_in:
        raise DimensionError("composition dimension mismatch")
    kraus = [V @ W for V in phi.kraus for W in psi.kraus]
    kind = "constant" if "constant" in (phi.kind, psi.kind) else "composition"
    return QuantumChannel(kraus, kind=kind)


def convex_combine(x, phi1, phi2):
    """``x phi1 + (1 - x) phi2``."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValidationError("convex_weight", f"x must lie in [0, 1], got {x!r}")
    if (phi1.dim_in, phi1.dim_out) != (phi2.dim_in, phi2.dim_out):
        raise DimensionError("convex combination of channels with different shapes")
    kraus = [np.sqrt(x) * V for V in phi1.kraus if x > 0] + [
        np.sqrt(1 - x) * V for V in phi2.kraus if x < 1
    ]
    return QuantumChannel(kraus, kind="convex")


def partial_trace_channel(n):
    """``[[A, B], [C, D]] -> A + D`` from ``2n x 2n`` to ``n x n``."""
    n = int(n)
    if n < 1:
        raise ValidationError("dimension", f"n must be >= 1, got {n}")
    V0 = np.hstack([np.eye(n), np.zeros((n, n))])
    V1 = np.hstack([np.zeros((n, n)), np.eye(n)])
    return QuantumChannel([V0, V1], kind="partial_trace", params={"n": n})


def transpose_natural(n):
    """Natural ``vec`` matrix of the (positive but not CP) transpose map."""
    L = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            L[j * n + i, i * n + j] = 1.0
    return L


@dataclass(frozen=True)
class PauliAffineSpec:
    """Affine Bloch map ``w -> T w + t``."""

    T: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if T.shape != (3, 3) or t.shape != (3,):
            raise DimensionError("PauliAffineSpec needs a 3x3 T and a length-3 t")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "t", t)


def pauli_affine_natural(T, t):
    basis = [np.eye(2, dtype=complex)] + list(PAULI)
    images = [np.eye(2) + np.einsum("i,iab->ab", t, PAULI)] + [
        np.einsum("i,iab->ab", T[:, j], PAULI) for j in range(3)
    ]
    # phi is determined on the basis {I, s1, s2, s3}; express on E_ij
    L = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[i, j] = 1.0
            coeffs = [0.5 * np.trace(B.conj().T @ E) for B in basis]
            img = sum(c * Im for c, Im in zip(coeffs, images))
            L[:, i * 2 + j] = img.reshape(-1)
    return L


def pauli_affine(spec=None, *, T=None, t=None):
    """Qubit channel with Bloch action ``w -> T w + t``.

    Raises :class:`ValidationError` (``choi_psd``) if the affine map is not
    completely positive.
    """
    if spec is None:
        spec = PauliAffineSpec(T if T is not None else np.eye(3), t if t is not None else np.zeros(3))
    elif not isinstance(spec, PauliAffineSpec):
        spec = PauliAffineSpec(*spec)
    C = choi_from_natural(pauli_affine_natural(spec.T, spec.t), 2)
    w = np.linalg.eigvalsh(0.5 * (C + C.conj().T))
    if w[0] < -CHOI_TOL:
        raise ValidationError(
            "choi_psd", f"CP condition fails for Pauli-affine map: Choi eigenvalue {w[0]:.6e} < 0"
        )
    kind = "identity" if np.array_equal(spec.T, np.eye(3)) and not np.any(spec.t) else "pauli_affine"
    return kraus_from_choi(C, 2, kind=kind, params={"T": spec.T.tolist(), "t": spec.t.tolist()})


def pauli_affine_is_cp(T, t, tol=CHOI_TOL):
    C = choi_from_natural(pauli_affine_natural(np.asarray(T, float), np.asarray(t, float)), 2)
    return bool(np.linalg.eigvalsh(0.5 * (C + C.conj().T))[0] >= -tol)


def nonunital_example(alpha, tau):
    """``(I + w.sigma)/2 -> (I + alpha w_1 sigma_1 + tau sigma_2)/2``."""
    return pauli_affine(T=np.diag([alpha, 0.0, 0.0]), t=np.array([0.0, tau, 0.0]))


def random_channel(dim_in, dim_out=None, rank=None, rng=None):
    """Random CPTP map from a Haar-like random isometry ``C^{n_in} -> C^{n_out} (x) C^rank``."""
    dim_out = dim_in if dim_out is None else dim_out
    rank = rank or dim_in * dim_out
    rng = np.random.default_rng(rng)
    Z = rng.standard_normal((dim_out * rank, dim_in)) + 1j * rng.standard_normal((dim_out * rank, dim_in))
    Qm, R = np.linalg.qr(Z)
    Qm = Qm * (np.diag(R) / np.abs(np.diag(R)))  # fix phases
    kraus = [Qm[k * dim_out : (k + 1) * dim_out, :] for k in range(rank)]
    return QuantumChannel(kraus, kind="random")
