"""Relative g-entropies of strictly positive density matrices.

The reference evaluation is spectral: with ``P = sum_j p_j x_j x_j^*`` and
``Q = sum_k q_k y_k y_k^*``,

    H_g(P, Q) = sum_{j,k} p_j |<y_k, x_j>|^2 g(q_k / p_j).

The closed forms and resolvent representations below are independent routes
used to cross-check it.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_sylvester

from . import gfun as _gfun
from .errors import NumericalError, SingularityError, ValidationError
from .matcore import _check_same_dim, as_density, modular_spectrum

NONNEG_SLACK = 1e-12


@dataclass(frozen=True)
class DivergenceResult:
    value: float
    g: dict
    method: str

    def __post_init__(self):
        if not np.isfinite(self.value) or self.value < -NONNEG_SLACK:
            raise NumericalError(
                f"relative entropy {float(self.value)!r} violates non-negativity ({self.method})"
            )

    def __float__(self):
        return float(self.value)


def _pair(P, Q):
    P = as_density(P, "P")
    Q = as_density(Q, "Q")
    _check_same_dim(P.matrix, Q.matrix)
    return P, Q


def relative_entropy(g, P, Q):
    """``H_g(P, Q) = Tr P^{1/2} g(Delta_{Q,P}) P^{1/2}`` via the modular spectrum."""
    g = _gfun.parse(g)
    P, Q = _pair(P, Q)
    value = modular_spectrum(Q, P).expect(g)
    return DivergenceResult(value, g.to_dict(), "spectral")


def relative_entropy_value(g, P, Q):
    """Unwrapped spectral value (no result object, no sign check)."""
    return modular_spectrum(Q, P).expect(g)


def h_log_closed(P, Q):
    """``Tr P (log P - log Q)``."""
    P, Q = _pair(P, Q)
    return float(np.trace(P.matrix @ (P.log() - Q.log())).real)


def h_quad_closed(P, Q):
    """``Tr (P - Q) P^{-1} (P - Q)``."""
    P, Q = _pair(P, Q)
    D = P.matrix - Q.matrix
    return float(np.trace(D @ P.inv() @ D).real)


def _resolvent_form(P, Q, s):
    # Tr (Q - P) X with Q X + s X P = Q - P, i.e. X = (L_Q + s R_P)^{-1}(Q - P)
    D = Q.matrix - P.matrix
    try:
        X = solve_sylvester(Q.matrix, s * P.matrix, D)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularityError(f"resolvent solve failed: {exc}") from exc
    if not np.all(np.isfinite(X)):
        raise SingularityError("resolvent solve produced non-finite values")
    return float(np.trace(D @ X).real)


def h_bures_closed(P, Q):
    """``Tr (Q - P) X`` where ``Q X + X P = Q - P``."""
    P, Q = _pair(P, Q)
    return _resolvent_form(P, Q, 1.0)


def h_power_closed(alpha, P, Q):
    """``1 - Tr Q^alpha P^{1 - alpha}``."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha", f"alpha must lie in (0, 1), got {alpha!r}")
    P, Q = _pair(P, Q)
    return float(1.0 - np.trace(Q.power(alpha) @ P.power(1.0 - alpha)).real)


def relative_entropy_integral(g, P, Q):
    """Resolvent representation for a finitely supported measure.

    ``b Tr(Q-P)P^{-1}(Q-P) + c Tr(Q-P)Q^{-1}(Q-P)
    + sum_i m_i Tr(Q-P)(L_Q + s_i R_P)^{-1}(Q-P)``; the linear term drops out.
    """
    g = _gfun.parse(g)
    if g.variant != "atoms" or g.form != "g":
        raise ValidationError("variant", "integral representation needs an atoms g-function")
    P, Q = _pair(P, Q)
    D = Q.matrix - P.matrix
    total = 0.0
    if g.b:
        total += g.b * float(np.trace(D @ P.inv() @ D).real)
    if g.c:
        total += g.c * float(np.trace(D @ Q.inv() @ D).real)
    for s, m in g.atoms:
        total += m * _resolvent_form(P, Q, s)
    return total


def relative_entropy_symmetrized(g, P, Q):
    """``H_g(P, Q) + H_g(Q, P)``."""
    g = _gfun.parse(g)
    P, Q = _pair(P, Q)
    return relative_entropy_value(g, P, Q) + relative_entropy_value(g, Q, P)


def closed_form(g, P, Q):
    """Best available non-spectral route for ``g``, or ``None``.

    Returns ``(value, method)``.
    """
    g = _gfun.parse(g)
    if g.form == "hat":
        res = closed_form(g.hat(), Q, P)
        return None if res is None else (res[0], res[1] + "+swap")
    if g.form == "sym":
        base = replace(g, form="g")
        a = closed_form(base, P, Q)
        b = closed_form(base, Q, P)
        if a is None or b is None:
            return None
        return a[0] + b[0], a[1] + "+sym"
    v = g.variant
    if v == "log":
        return h_log_closed(P, Q), "closed_form"
    if v == "quadratic":
        return h_quad_closed(P, Q), "closed_form"
    if v == "power":
        return h_power_closed(g.alpha, P, Q), "closed_form"
    if v == "ratio":
        if g.s0 == 1.0:
            return h_bures_closed(P, Q), "closed_form"
        return relative_entropy_integral(_gfun.atom_measure(atoms=[(g.s0, 1.0)]), P, Q), "integral"
    return relative_entropy_integral(g, P, Q), "integral"
