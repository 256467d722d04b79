"""Monotone Riemannian metrics ``M_P(A, B) = Tr A Omega_P(B)``.

``Omega_P = R_P^{-1} k(Delta_{P,P})`` is diagonal in the eigenbasis of ``P``:
writing ``A' = U^* A U`` with ``P = U diag(p) U^*``,

    Omega_P(A)'_{jl} = A'_{jl} k(p_j / p_l) / p_l .

All computations use the *raw* ``k``, which is exactly what the mixed second
derivative of ``H_g`` produces, so that :func:`metric_from_hessian` and
:func:`metric_eval` agree without normalization factors.
"""

import numpy as np
from scipy.linalg import solve_sylvester

from . import gfun as _gfun
from .divergence import relative_entropy_value
from .errors import BoundaryError, NumericalError, SingularityError, ValidationError
from .matcore import (
    EPS_POS,
    DensityMatrix,
    HermitianBasis,
    SuperOperator,
    as_density,
    as_matrix,
    hermitian_residual,
)

TRACELESS_TOL = 1e-12


def kernel_matrix(g, p):
    """``K[j, l] = k(p_j / p_l) / p_l`` for a spectrum ``p``."""
    p = np.asarray(p, dtype=float)
    ratios = p[:, None] / p[None, :]
    return g.k(ratios) / p[None, :]


class MetricOperator:
    """``Omega_P`` for a fixed ``g`` and state ``P``.

    Applications are ``O(n^3)`` (two basis changes); dense coordinate
    representations are built on demand for the eigenvalue pencils.
    """

    def __init__(self, g, P):
        self.g = _gfun.parse(g)
        self.P = as_density(P, "P")
        self._K = kernel_matrix(self.g, self.P.eigenvalues)
        if not np.all(np.isfinite(self._K)) or np.any(self._K <= 0):
            raise NumericalError("metric kernel is not finite and positive")

    @property
    def dim(self):
        return self.P.dim

    def _conj(self, A, fn):
        U = self.P.eigenvectors
        A = np.asarray(A, dtype=complex)
        return U @ fn(U.conj().T @ A @ U) @ U.conj().T

    def apply(self, A):
        return self._conj(A, lambda X: X * self._K)

    __call__ = apply

    def apply_inverse(self, A):
        return self._conj(A, lambda X: X / self._K)

    def form(self, A, B):
        """``Tr A Omega_P(B)`` (real part; exact for Hermitian arguments)."""
        U = self.P.eigenvectors
        Ap = U.conj().T @ np.asarray(A, dtype=complex) @ U
        Bp = U.conj().T @ np.asarray(B, dtype=complex) @ U
        return float(np.sum(Ap.T * Bp * self._K).real)

    def coordinate_matrix(self, basis=None, inverse=False):
        """Real symmetric ``G[i, j] = Tr B_i Omega(B_j)`` over a Hermitian basis."""
        basis = basis or HermitianBasis.gell_mann(self.dim)
        U = self.P.eigenvectors
        E = basis.elements
        Ep = np.einsum("ab,kbc,cd->kad", U.conj().T, E, U)
        F = Ep / self._K if inverse else Ep * self._K
        # Tr(B_i' F_j) with B_i' Hermitian -> sum conj(B_i') * F_j
        G = np.einsum("iab,jab->ij", Ep.conj(), F).real
        return 0.5 * (G + G.T)

    def superoperator(self):
        return SuperOperator(self.coordinate_matrix().astype(complex), self.dim)

    def inverse_superoperator(self):
        return SuperOperator(self.coordinate_matrix(inverse=True).astype(complex), self.dim)


def omega(g, P):
    return MetricOperator(g, P)


def omega_functional(g, P):
    """``R_P^{-1} k(Delta_{P,P})`` by superoperator functional calculus.

    Independent of the entrywise construction; used to cross-check it.
    """
    from .matcore import relative_modular, right_super

    g = _gfun.parse(g)
    P = as_density(P, "P")
    D = relative_modular(P, P)
    return right_super(P.inv()) @ D.fun(lambda w: g.k(np.clip(w, 1e-300, None)))


def _traceless(A, name):
    A = as_matrix(A, name)
    if hermitian_residual(A) > 1e-12:
        raise ValidationError("hermitian", f"{name} is not self-adjoint")
    tr = np.trace(A)
    if abs(tr) > TRACELESS_TOL * max(1.0, np.linalg.norm(A)):
        raise ValidationError("traceless", f"{name} has trace {tr.real:.3e}, expected 0")
    return 0.5 * (A + A.conj().T)


def metric_eval(g, P, A, B):
    """``M_P(A, B) = Tr A Omega_P(B)`` for traceless Hermitian ``A, B``."""
    A = _traceless(A, "A")
    B = _traceless(B, "B")
    return MetricOperator(g, P).form(A, B)


def _mixed_difference(g, P, A, B, h):
    def H(x, y):
        try:
            S = DensityMatrix(P + x * A, name="P+hA")
            T = DensityMatrix(P + y * B, name="P+hB")
        except ValidationError as exc:
            raise BoundaryError(f"finite-difference stencil left the state space (h={h:g})") from exc
        return relative_entropy_value(g, S, T)

    d = H(h, h) - H(h, -h) - H(-h, h) + H(-h, -h)
    return -d / (4.0 * h * h)


def metric_from_hessian(g, P, A, B, h=1e-4, richardson=True):
    """``-d^2/dx dy H_g(P + xA, P + yB)`` at 0 by central differences.

    With ``richardson`` the ``O(h^2)`` error is removed using the ``h/2``
    stencil.
    """
    g = _gfun.parse(g)
    P = as_density(P, "P").matrix
    A = _traceless(A, "A")
    B = _traceless(B, "B")
    d1 = _mixed_difference(g, P, A, B, h)
    if not richardson:
        return d1
    d2 = _mixed_difference(g, P, A, B, h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def trace_identities_check(g, P, A):
    """Return ``(Tr Omega(A) - k(1) Tr A P^{-1}, Tr Omega^{-1}(A) - Tr A P / k(1))``."""
    g = _gfun.parse(g)
    op = MetricOperator(g, P)
    A = np.asarray(A, dtype=complex)
    k1 = g.k_raw_at_one()
    r1 = np.trace(op.apply(A)) - k1 * np.trace(A @ op.P.inv())
    r2 = np.trace(op.apply_inverse(A)) - np.trace(A @ op.P.matrix) / k1
    return float(abs(r1)), float(abs(r2))


def sandwich_check(g, P, samples, rtol=1e-12):
    """Bures <= normalized ``M^g`` <= quadratic on every sample direction.

    Each form is divided by its own raw ``k(1)`` before comparing.
    """
    g = _gfun.parse(g)
    ops = [MetricOperator(h, P) for h in (_gfun.bures(), g, _gfun.quadratic())]
    scales = [h.g.k_raw_at_one() for h in ops]
    for A in samples:
        lo, mid, hi = (op.form(A, A) / s for op, s in zip(ops, scales))
        if mid < lo * (1 - rtol) - 1e-15 or mid > hi * (1 + rtol) + 1e-15:
            return False
    return True


def metric_monotonicity_check(g, channel, P, A, slack=1e-9):
    """``<phi(A), Omega_{phi(P)} phi(A)> <= <A, Omega_P A>`` within ``slack``."""
    g = _gfun.parse(g)
    P = as_density(P, "P")
    out = channel.apply(P.matrix)
    try:
        Q = DensityMatrix(out, name="phi(P)")
    except ValidationError as exc:
        raise BoundaryError(f"phi(P) is not strictly positive: {exc}") from exc
    before = MetricOperator(g, P).form(A, A)
    phiA = channel.apply(A)
    after = MetricOperator(g, Q).form(phiA, phiA)
    return after <= before + slack * max(1.0, abs(before))


def resolvent_form(P, Q, A, s):
    """``Tr A^* (R_P + s L_Q)^{-1}(A)``, i.e. ``Tr A^* X`` with ``s Q X + X P = A``."""
    P = np.asarray(P, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    A = np.asarray(A, dtype=complex)
    try:
        X = solve_sylvester(s * Q, P, A)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularityError(f"resolvent solve failed: {exc}") from exc
    return float(np.vdot(A, X).real)


def resolvent_schwarz_gap(channel, P, Q, A, s):
    """``Tr A^*(R_P+sL_Q)^{-1}A - Tr phi(A)^*(R_{phi P}+sL_{phi Q})^{-1}phi(A)``.

    Non-negative for every stochastic map.
    """
    P = as_density(P, "P").matrix
    Q = as_density(Q, "Q").matrix
    return resolvent_form(P, Q, A, s) - resolvent_form(
        channel.apply(P), channel.apply(Q), channel.apply(A), s
    )


def batched_forms(g, S, V):
    """``M_{S_b}(V_b, V_b)`` for stacks of states ``S`` and directions ``V``.

    Returns ``inf`` where a state is not strictly positive.
    """
    p, U = np.linalg.eigh(S)
    out = np.full(S.shape[0], np.inf)
    ok = p[:, 0] > EPS_POS
    if not np.any(ok):
        return out
    p, U, V = p[ok], U[ok], V[ok]
    Uh = np.conj(np.swapaxes(U, 1, 2))
    Vp = Uh @ V @ U
    ratios = p[:, :, None] / p[:, None, :]
    K = g.k(ratios) / p[:, None, :]
    out[ok] = np.sum(np.abs(Vp) ** 2 * K, axis=(1, 2))
    return out
