"""Geodesic distances of the monotone metrics.

For the minimal (Bures) metric closed forms are available through the
fidelity ``F(P, Q) = Tr (sqrt(P) Q sqrt(P))^{1/2}``:

* :func:`bures_distance` -- the chordal form ``sqrt(2 (1 - F))``;
* :func:`bures_angle` -- ``arccos F``, the arc length along the geodesic.

With the raw ``k(w) = 2 / (1 + w)`` the numeric geodesic length of the
``(w-1)^2/(w+1)`` metric equals ``2 arccos F`` (see ``tests/test_geodesic.py``).

For general ``g`` the path energy

    E = m * sum_i M_{(S_i + S_{i+1})/2}(S_{i+1} - S_i)

over ``m`` uniform segments is minimized by red-black block Gauss-Seidel
sweeps: every interior point takes a damped Newton step on its own two
segments (points of one colour do not share segments, so a whole colour is
updated in one batched evaluation).  The Hessian model is the frozen metric
``2 (G_left + G_right)``, which is positive definite, so each step is a
descent direction; backtracking makes the objective monotone.

Each sweep is preceded by one damped step of the whole path with the
block-tridiagonal frozen-metric Hessian, which removes the slow long-wave
error modes of pure Gauss-Seidel.  Paths are solved on a coarse grid first
and refined by midpoint insertion.
"""

from dataclasses import dataclass, field

import numpy as np

from . import gfun as _gfun
from .errors import BoundaryError, NumericalError
from .matcore import EPS_POS, HermitianBasis, as_density, _check_same_dim
from .metric import batched_forms


def fidelity(P, Q):
    """``Tr (sqrt(P) Q sqrt(P))^{1/2}``, clipped to ``[0, 1]``."""
    P = as_density(P, "P")
    Q = as_density(Q, "Q")
    _check_same_dim(P.matrix, Q.matrix)
    s = np.linalg.svd(P.sqrt() @ Q.sqrt(), compute_uv=False)
    return float(min(1.0, np.sum(s)))


def _chordal(P, Q):
    # D = min_U ||sqrt(P) - sqrt(Q) U||_F, evaluated without the 1 - F cancellation
    sP, sQ = P.sqrt(), Q.sqrt()
    W, _, Vh = np.linalg.svd(sQ @ sP)
    U = W @ Vh
    return float(np.linalg.norm(sP - U.conj().T @ sQ))


def bures_distance(P, Q):
    """Chordal Bures distance ``D`` with ``D^2 = 2 (1 - F(P, Q))``."""
    P = as_density(P, "P")
    Q = as_density(Q, "Q")
    _check_same_dim(P.matrix, Q.matrix)
    return _chordal(P, Q)


def bures_angle(P, Q):
    """Bures angle ``arccos F(P, Q) = 2 arcsin(D / 2)``: arc length of the Bures geodesic."""
    return float(2.0 * np.arcsin(min(1.0, bures_distance(P, Q) / 2.0)))


def hellinger_squared(P, Q):
    """``Tr (sqrt(P) - sqrt(Q))^2``, an upper bound for the squared chordal distance."""
    P = as_density(P, "P")
    Q = as_density(Q, "Q")
    D = P.sqrt() - Q.sqrt()
    return float(np.trace(D @ D).real)


# ---------------------------------------------------------------------------
# numeric geodesics
# ---------------------------------------------------------------------------


@dataclass
class GeodesicConfig:
    m: int = 32
    coarse_m: int = 4
    max_sweeps: int = 2000
    tol: float = 1e-13
    fd_step: float = 1e-6
    max_backtracks: int = 40


@dataclass
class GeodesicPath:
    """Discrete path ``S_0 = P, ..., S_m = Q`` with its energy and length."""

    segments: list
    energy: float
    length: float
    segment_forms: np.ndarray = field(repr=False, default=None)
    history: list = field(default_factory=list, repr=False)
    sweeps: int = 0
    converged: bool = True

    @property
    def m(self):
        return len(self.segments) - 1

    def to_dict(self):
        return {
            "m": self.m,
            "energy": self.energy,
            "length": self.length,
            "sweeps": self.sweeps,
            "converged": self.converged,
            "segments": [[[[float(z.real), float(z.imag)] for z in row] for row in S] for S in self.segments],
        }


class _Path:
    """Coordinates of a discrete path in a traceless Hermitian basis."""

    def __init__(self, g, n):
        self.g = g
        self.n = n
        basis = HermitianBasis.gell_mann(n)
        self.E = basis.elements[1:]
        self.center = np.eye(n) / n

    def states(self, X):
        return self.center + np.einsum("ik,kab->iab", X, self.E)

    def coords(self, S):
        return np.einsum("kab,ba->k", self.E, S).real

    def segment_forms(self, X):
        S = self.states(X)
        mid = 0.5 * (S[1:] + S[:-1])
        return batched_forms(self.g, mid, S[1:] - S[:-1])

    def gram(self, mids):
        """Frozen-metric coordinate matrices ``G[b] = [Tr E_i Omega_{S_b}(E_j)]``."""
        p, U = np.linalg.eigh(mids)
        Uh = np.conj(np.swapaxes(U, 1, 2))
        Ep = Uh[:, None] @ self.E[None] @ U[:, None]
        K = self.g.k(p[:, :, None] / p[:, None, :]) / p[:, None, :]
        G = np.einsum("biac,bjac->bij", Ep.conj(), Ep * K[:, None]).real
        return 0.5 * (G + np.swapaxes(G, 1, 2))


def _min_eig(S):
    return np.linalg.eigvalsh(S)[:, 0]


def _local(model, X, idx):
    forms = model.segment_forms(X)
    return forms[idx - 1] + forms[idx]


def _sweep(model, X, idx, cfg):
    """One damped Newton update of all interior points ``idx`` (one colour)."""
    d = X.shape[1]
    h = cfg.fd_step
    grad = np.empty((len(idx), d))
    for a in range(d):
        Xp = X.copy()
        Xm = X.copy()
        Xp[idx, a] += h
        Xm[idx, a] -= h
        grad[:, a] = (_local(model, Xp, idx) - _local(model, Xm, idx)) / (2 * h)
    S = model.states(X)
    G = model.gram(0.5 * (S[1:] + S[:-1]))
    H = 2.0 * (G[idx - 1] + G[idx])
    step = -np.linalg.solve(H, grad[:, :, None])[:, :, 0]
    f0 = _local(model, X, idx)
    t = np.ones(len(idx))
    pending = np.ones(len(idx), dtype=bool)
    Xnew = X.copy()
    for _ in range(cfg.max_backtracks):
        trial = X.copy()
        trial[idx[pending]] = X[idx[pending]] + t[pending, None] * step[pending]
        ok_pos = np.ones(len(idx), dtype=bool)
        ok_pos[pending] = _min_eig(model.states(trial[idx[pending]])) > EPS_POS
        f1 = np.full(len(idx), np.inf)
        f1[pending & ok_pos] = _local(model, trial, idx)[pending & ok_pos]
        accept = pending & (f1 <= f0)
        Xnew[idx[accept]] = trial[idx[accept]]
        pending &= ~accept
        if not pending.any():
            break
        t[pending] *= 0.5
    return Xnew


def _full_gradient(model, X, h):
    """Gradient of the total segment sum at every interior point.

    Points of one parity do not share segments, so each coordinate of a whole
    parity class is differenced in one batched evaluation.
    """
    m = len(X) - 1
    grad = np.zeros((m + 1, X.shape[1]))
    for idx in (np.arange(1, m, 2), np.arange(2, m, 2)):
        if not len(idx):
            continue
        for a in range(X.shape[1]):
            Xp = X.copy()
            Xm = X.copy()
            Xp[idx, a] += h
            Xm[idx, a] -= h
            grad[idx, a] = (_local(model, Xp, idx) - _local(model, Xm, idx)) / (2 * h)
    return grad[1:-1]


def _global_step(model, X, cfg):
    """Damped step with the frozen-metric block-tridiagonal Hessian."""
    m = len(X) - 1
    d = X.shape[1]
    if m < 2:
        return X
    S = model.states(X)
    G = model.gram(0.5 * (S[1:] + S[:-1]))
    N = (m - 1) * d
    H = np.zeros((N, N))
    for i in range(1, m):
        r = slice((i - 1) * d, i * d)
        H[r, r] = 2.0 * (G[i - 1] + G[i])
        if i < m - 1:
            c = slice(i * d, (i + 1) * d)
            H[r, c] = -2.0 * G[i]
            H[c, r] = -2.0 * G[i]
    grad = _full_gradient(model, X, cfg.fd_step).reshape(-1)
    step = -np.linalg.solve(H, grad).reshape(m - 1, d)
    f0 = float(np.sum(model.segment_forms(X)))
    t = 1.0
    for _ in range(cfg.max_backtracks):
        trial = X.copy()
        trial[1:-1] += t * step
        if np.all(_min_eig(model.states(trial[1:-1])) > EPS_POS):
            f1 = float(np.sum(model.segment_forms(trial)))
            if f1 <= f0:
                return trial
        t *= 0.5
    return X


def _refine(X):
    """Insert midpoints: ``m`` segments -> ``2m`` segments."""
    out = np.empty((2 * (len(X) - 1) + 1, X.shape[1]))
    out[0::2] = X
    out[1::2] = 0.5 * (X[1:] + X[:-1])
    return out


def _solve(model, X, cfg):
    m = len(X) - 1
    odd = np.arange(1, m, 2)
    even = np.arange(2, m, 2)
    history = [m * float(np.sum(model.segment_forms(X)))]
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        X = _global_step(model, X, cfg)
        for idx in (odd, even):
            if len(idx):
                X = _sweep(model, X, idx, cfg)
        E = m * float(np.sum(model.segment_forms(X)))
        if not np.isfinite(E):
            raise NumericalError("path energy became non-finite")
        prev = history[-1]
        history.append(E)
        if prev - E <= cfg.tol * max(prev, 1e-300):
            converged = True
            break
    return X, history, sweeps, converged


def geodesic_distance(g, P, Q, m=None, config=None):
    """Numeric geodesic distance and the optimized path.

    Returns ``(length, GeodesicPath)``; the objective history is
    non-increasing by construction.
    """
    cfg = config or GeodesicConfig()
    m = int(cfg.m if m is None else m)
    if m < 2:
        raise ValueError("need at least 2 segments")
    g = _gfun.parse(g)
    P = as_density(P, "P")
    Q = as_density(Q, "Q")
    _check_same_dim(P.matrix, Q.matrix)
    model = _Path(g, P.dim)
    x0, x1 = model.coords(P.matrix), model.coords(Q.matrix)
    if np.allclose(x0, x1, rtol=0, atol=1e-15):
        segs = [P.matrix.copy() for _ in range(m + 1)]
        return 0.0, GeodesicPath(segs, 0.0, 0.0, np.zeros(m), [0.0], 0, True)
    # nested initialization: solve on the coarsest grid, refine by bisection
    levels = [m]
    while levels[-1] % 2 == 0 and levels[-1] // 2 >= cfg.coarse_m:
        levels.append(levels[-1] // 2)
    levels.reverse()
    ts = np.linspace(0.0, 1.0, levels[0] + 1)[:, None]
    X = (1 - ts) * x0 + ts * x1
    history = []
    sweeps = 0
    converged = True
    for level in levels:
        if len(X) - 1 != level:
            X = _refine(X)
        X, hist, sw, conv = _solve(model, X, cfg)
        history = hist
        sweeps += sw
        converged = conv
    forms = model.segment_forms(X)
    if not np.all(np.isfinite(forms)):
        raise BoundaryError("geodesic path left the positive cone")
    energy = m * float(np.sum(forms))
    length = float(np.sum(np.sqrt(np.clip(forms, 0.0, None))))
    S = model.states(X)
    S[0], S[-1] = P.matrix, Q.matrix
    return length, GeodesicPath(list(S), energy, length, forms, history, sweeps, converged)


def path_energy(g, path, m_factor=True):
    """``m * sum_i M_{mid_i}(S_{i+1} - S_i)`` for a list of states."""
    g = _gfun.parse(g)
    S = np.asarray([np.asarray(s, dtype=complex) for s in path])
    if len(S) < 2:
        return 0.0
    forms = batched_forms(g, 0.5 * (S[1:] + S[:-1]), S[1:] - S[:-1])
    if not np.all(np.isfinite(forms)):
        raise BoundaryError("path leaves the positive cone")
    m = len(S) - 1
    return float(np.sum(forms)) * (m if m_factor else 1)


def path_length(g, path):
    g = _gfun.parse(g)
    S = np.asarray([np.asarray(s, dtype=complex) for s in path])
    forms = batched_forms(g, 0.5 * (S[1:] + S[:-1]), S[1:] - S[:-1])
    return float(np.sum(np.sqrt(np.clip(forms, 0.0, None))))
