"""Contraction coefficients of stochastic maps.

For a channel ``phi`` and ``g`` the module estimates

* ``riem``      ``sup_P lambda_2(phi, P)``, where ``lambda_2`` is the largest
                eigenvalue of the pencil ``(S^T Omega_{phi(P)} S, Omega_P)`` on
                traceless Hermitian coordinates;
* ``relent``    ``sup H_g(phi P, phi Q) / H_g(P, Q)``;
* ``geod``      ``sup D_g(phi P, phi Q)^2 / D_g(P, Q)^2``;
* ``dobrushin`` ``1/2 sup Tr|phi(E - F)|`` over orthogonal rank-one projections;

All suprema are estimated by multistart Nelder-Mead and reported as lower
bounds with their witnesses, except where a closed form exists (qubit
Dobrushin coefficient, identity and constant channels).
"""

import hashlib
import io as _io
import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize, minimize_scalar

from . import gfun as _gfun
from .channel import QuantumChannel, constant_channel, convex_combine
from .divergence import relative_entropy_value
from .errors import BoundaryError, NumericalError, ValidationError
from .geodesic import GeodesicConfig, bures_angle, geodesic_distance
from .matcore import EPS_POS, DensityMatrix, HermitianBasis, as_density
from .metric import MetricOperator, kernel_matrix

#: eigenvalue floor of optimizer iterates
STATE_FLOOR = 1e-8
#: eigenvalue floor for pair objectives: spectral H_g and fidelities lose about
#: eps/floor relative accuracy, which must stay below the ordering slack
PAIR_FLOOR = 1e-6
ETA_SLACK = 1e-9
SEPARATION_MIN = 1e-6
#: agreement required between a ratio and its rotated-frame recomputation
RELIABLE_RTOL = 1e-10
REPORT_HEADER = "# qdiv-report v1"


@dataclass
class OptimizerConfig:
    """Multistart protocol shared by all estimators."""

    starts: int = 32
    seed: int = 0
    maxiter: int = 2000
    tol: float = 1e-10
    xtol: float = 1e-7
    threads: int = None
    geod_pairs: int = 2
    geod_m: int = 16
    witness_eps: tuple = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
    #: iteration cap for the pair searches; their best values come mostly
    #: from the pairs seeded around the Riemannian witness
    pair_maxiter: int = 600

    def workers(self):
        if self.threads is not None:
            return max(1, int(self.threads))
        return max(1, int(os.environ.get("QDIV_THREADS", "1")))

    def child_rngs(self, tag, n):
        ss = np.random.SeedSequence([int(self.seed) & 0xFFFFFFFFFFFFFFFF, _tag_int(tag)])
        return [np.random.default_rng(s) for s in ss.spawn(n)]


def _tag_int(tag):
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:4], "little")


@dataclass
class EtaEstimate:
    value: float
    kind: str
    semantics: str
    witness: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = float(self.value)
        if not np.isfinite(self.value):
            raise NumericalError(f"{self.kind} estimate is not finite")

    def to_dict(self):
        w = _serialize(self.witness)
        return {
            "value": self.value,
            "kind": self.kind,
            "semantics": self.semantics,
            "witness": w,
            "witness_digest": _digest(w),
            "trace": _serialize(self.trace),
        }


def _serialize(obj):
    if isinstance(obj, dict):
        return {str(k): _serialize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_serialize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return _serialize_complex(obj)
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _serialize_complex(a):
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [_serialize_complex(x) for x in a]


def _digest(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# the eigenvalue pencil
# ---------------------------------------------------------------------------


def _omega_block(g, p, U, E):
    """``[Tr E_i Omega(E_j)]`` for traceless basis elements ``E``."""
    Ep = U.conj().T[None] @ E @ U[None]
    K = kernel_matrix(g, p)
    G = np.einsum("iac,jac->ij", Ep.conj(), Ep * K).real
    return 0.5 * (G + G.T)


class Pencil:
    """Reusable ``lambda_2`` evaluator for one ``(g, phi)`` pair."""

    def __init__(self, g, channel, basis_in=None, basis_out=None):
        self.g = _gfun.parse(g)
        self.channel = channel
        bi = basis_in or HermitianBasis.gell_mann(channel.dim_in)
        bo = basis_out or HermitianBasis.gell_mann(channel.dim_out)
        if basis_in is None and basis_out is None:
            self.S = channel.traceless_block
        else:
            S = bi.to_coordinates(channel.natural, bo)
            self.S = np.ascontiguousarray(S.real[1:, 1:])
        self.E_in = bi.elements[1:]
        self.E_out = bo.elements[1:]
        self.K = np.array(channel.kraus)
        self.constant = channel.is_constant()

    def image(self, P):
        return np.einsum("kab,bc,kdc->ad", self.K, P, self.K.conj())

    def solve(self, P, vector=False):
        """``lambda_2`` at ``P`` (and the maximizing direction if requested)."""
        P = np.asarray(P, dtype=complex)
        if self.constant:
            return (0.0, np.zeros(len(self.S[0]))) if vector else 0.0
        p, U = np.linalg.eigh(P)
        if p[0] <= EPS_POS:
            raise BoundaryError(f"P is not strictly positive (eigenvalue {p[0]:.3e})")
        Q = self.image(P)
        Q = 0.5 * (Q + Q.conj().T)
        q, V = np.linalg.eigh(Q)
        if q[0] <= EPS_POS:
            raise BoundaryError(f"phi(P) is not strictly positive (eigenvalue {q[0]:.3e})")
        Gin = _omega_block(self.g, p, U, self.E_in)
        Gout = _omega_block(self.g, q, V, self.E_out)
        A = self.S.T @ Gout @ self.S
        L = np.linalg.cholesky(Gin)
        X = solve_triangular(L, A, lower=True)
        M = solve_triangular(L, X.T, lower=True)
        M = 0.5 * (M + M.T)
        if not vector:
            return float(np.linalg.eigvalsh(M)[-1])
        w, Y = np.linalg.eigh(M)
        a = solve_triangular(L.T, Y[:, -1], lower=False)
        return float(w[-1]), a

    def direction(self, coords):
        return np.einsum("k,kab->ab", coords, self.E_in)


def lambda2(g, channel, P, basis=None, basis_out=None):
    """Largest pencil eigenvalue ``lambda_2(phi, P)``."""
    P = as_density(P, "P")
    if P.dim != channel.dim_in:
        raise ValidationError("dimension", f"P has dim {P.dim}, channel expects {channel.dim_in}")
    return Pencil(g, channel, basis, basis_out).solve(P.matrix)


@dataclass(frozen=True)
class PhiBigDiagnostics:
    ok: bool
    trace_residual: float
    eigenpair_residual: float

    def __bool__(self):
        return self.ok


def phi_big_check(g, channel, P, samples=8, rng=None, tol=1e-9):
    """``Phi = Omega_P^{-1} o phi^* o Omega_{phi(P)}`` is trace preserving and
    ``Phi(phi(P)) = P``."""
    g = _gfun.parse(g)
    P = as_density(P, "P")
    Q = DensityMatrix(channel.apply(P.matrix), name="phi(P)")
    om_in = MetricOperator(g, P)
    om_out = MetricOperator(g, Q)

    def Phi(B):
        return om_in.apply_inverse(channel.adjoint_apply(om_out.apply(B)))

    rng = np.random.default_rng(rng)
    tr_res = 0.0
    for _ in range(samples):
        B = rng.standard_normal((Q.dim, Q.dim)) + 1j * rng.standard_normal((Q.dim, Q.dim))
        B = B + B.conj().T
        tr_res = max(tr_res, abs(np.trace(Phi(B)) - np.trace(B)) / max(1.0, np.linalg.norm(B)))
    eig_res = float(np.max(np.abs(Phi(channel.apply(P.matrix)) - P.matrix)))
    return PhiBigDiagnostics(bool(tr_res <= tol and eig_res <= tol), float(tr_res), eig_res)


# ---------------------------------------------------------------------------
# parameterizations and the multistart driver
# ---------------------------------------------------------------------------


def n_state_params(n):
    return n * n


def floor_state(P, floor):
    p, U = np.linalg.eigh(0.5 * (P + np.conj(P).T))
    if p[0] >= floor:
        return np.asarray(P, dtype=complex)
    p = np.maximum(p, floor)
    p = p / p.sum()
    return (U * p) @ U.conj().T


def state_from_params(x, n, floor=STATE_FLOOR):
    """``P = G G^* / Tr`` with ``G`` lower triangular, spectrum floored at ``floor``."""
    G = np.zeros((n, n), dtype=complex)
    G[np.diag_indices(n)] = x[:n]
    il = np.tril_indices(n, -1)
    m = len(il[0])
    G[il] = x[n : n + m] + 1j * x[n + m : n + 2 * m]
    P = G @ G.conj().T
    tr = np.trace(P).real
    if not np.isfinite(tr) or tr <= 0:
        return np.eye(n, dtype=complex) / n
    P = P / tr
    p, U = np.linalg.eigh(0.5 * (P + P.conj().T))
    if p[0] < floor:
        p = np.maximum(p, floor)
        p = p / p.sum()
        P = (U * p) @ U.conj().T
    return 0.5 * (P + P.conj().T)


def params_from_state(P):
    """Inverse of :func:`state_from_params` (Cholesky factor)."""
    P = np.asarray(P, dtype=complex)
    n = P.shape[0]
    G = np.linalg.cholesky(P)
    il = np.tril_indices(n, -1)
    return np.concatenate([G[np.diag_indices(n)].real, G[il].real, G[il].imag])


def identity_params(n):
    return params_from_state(np.eye(n) / n)


def _run_starts(objective, x0s, cfg, maxiter=None):
    """Minimize ``objective`` from every start; ordered, deterministic results."""
    maxiter = cfg.maxiter if maxiter is None else maxiter

    def one(x0):
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": cfg.xtol, "fatol": cfg.tol, "adaptive": len(x0) > 6},
        )
        return res.x, float(res.fun), int(res.nit), bool(res.success)

    workers = cfg.workers()
    if workers > 1 and len(x0s) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(one, x0s))
    return [one(x0) for x0 in x0s]


def _trace(cfg, results, extra=None):
    t = {
        "starts": len(results),
        "iterations": int(sum(r[2] for r in results)),
        "failures": int(sum(not r[3] for r in results)),
        "seed": int(cfg.seed),
    }
    if extra:
        t.update(extra)
    return t


def _exact(kind, value, witness=None, reason=""):
    return EtaEstimate(value, kind, "exact", witness or {}, {"reason": reason})


def _is_identity(channel):
    return channel.kind == "identity" or (
        channel.dim_in == channel.dim_out
        and np.allclose(channel.real_matrix, np.eye(channel.dim_in**2), rtol=0, atol=1e-14)
    )


def _doubled(M):
    n = M.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, :n] = M / 2
    out[n:, n:] = M / 2
    return out


def doubled_block_witness(P, other):
    """``(diag(P, P)/2, diag(X, X)/2)`` for the ``2n -> n`` partial trace."""
    return _doubled(np.asarray(P, dtype=complex)), _doubled(np.asarray(other, dtype=complex))


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def eta_riem(g, channel, config=None, extra_states=()):
    """``sup_P lambda_2(phi, P)`` by multistart Nelder-Mead over ``P = G G^*/Tr``.

    The maximally mixed state is always the first start.
    """
    cfg = config or OptimizerConfig()
    g = _gfun.parse(g)
    n = channel.dim_in
    pencil = Pencil(g, channel)
    if pencil.constant:
        return _exact("riem", 0.0, {"P": np.eye(n) / n}, "traceless inputs are annihilated")

    def value_at(P):
        try:
            return pencil.solve(P)
        except (BoundaryError, np.linalg.LinAlgError):
            return 0.0

    def objective(x):
        return -value_at(state_from_params(x, n))

    rngs = cfg.child_rngs("riem", max(cfg.starts - 1, 0))
    x0s = [identity_params(n)] + [r.standard_normal(n_state_params(n)) for r in rngs]
    results = _run_starts(objective, x0s, cfg)
    candidates = [state_from_params(x, n) for x, *_ in results]
    candidates += [np.eye(n, dtype=complex) / n] + [np.asarray(P, dtype=complex) for P in extra_states]
    if channel.kind == "partial_trace":
        k = channel.params["n"]
        candidates.append(_doubled(np.eye(k) / k))
    vals = [value_at(P) for P in candidates]
    # accept the best candidate whose value is reproduced in a rotated frame
    U, V = _frames(cfg, channel, "riem")
    rotated = Pencil(g, QuantumChannel([V @ K @ U.conj().T for K in channel.kraus], kind=channel.kind))
    rejected = 0
    for best in np.argsort(vals, kind="stable")[::-1]:
        P = candidates[best]
        try:
            check = rotated.solve(_conj(P, U))
        except (BoundaryError, np.linalg.LinAlgError):
            check = np.inf
        if abs(check - vals[best]) <= RELIABLE_RTOL * max(1.0, abs(vals[best])):
            break
        rejected += 1
    else:
        P = np.eye(n, dtype=complex) / n
    lam, a = pencil.solve(P, vector=True)
    A = pencil.direction(a)
    semantics = "exact" if _is_identity(channel) else "lower_bound"
    trace = _trace(cfg, results, {"rejected_unreliable": rejected})
    return EtaEstimate(lam, "riem", semantics, {"P": P, "A": A}, trace)


def _safe_density(M):
    try:
        return DensityMatrix(M)
    except ValidationError:
        return None


def _conj(M, U):
    return M if U is None else U @ M @ U.conj().T


def pair_ratio(div, channel, P, Q, U=None, V=None):
    """``div(phi P, phi Q) / div(P, Q)``, 0 for coincident or boundary pairs.

    ``U`` and ``V`` optionally rotate the input and output frames; the exact
    value is unchanged, the rounding is not.
    """
    Pd, Qd = _safe_density(_conj(P, U)), _safe_density(_conj(Q, U))
    if Pd is None or Qd is None:
        return 0.0
    if np.linalg.norm(Pd.matrix - Qd.matrix) < SEPARATION_MIN:
        return 0.0
    den = div(Pd, Qd)
    if not den > 0:
        return 0.0
    fP = _safe_density(_conj(channel.apply(np.asarray(P, dtype=complex)), V))
    fQ = _safe_density(_conj(channel.apply(np.asarray(Q, dtype=complex)), V))
    if fP is None or fQ is None:
        return 0.0
    return div(fP, fQ) / den


def relent_ratio(g, channel, P, Q, U=None, V=None):
    """``H_g(phi P, phi Q) / H_g(P, Q)``."""
    g = _gfun.parse(g)
    return pair_ratio(lambda A, B: relative_entropy_value(g, A, B), channel, P, Q, U, V)


def _frames(cfg, channel, tag):
    from .sampling import random_unitary

    r = cfg.child_rngs(tag + "-frame", 1)[0]
    return random_unitary(channel.dim_in, r), random_unitary(channel.dim_out, r)


def _select(pairs, ratio, frames):
    """Best pair whose ratio is reproducible in a rotated frame.

    Near-coincident or nearly degenerate pairs can carry rounding errors far
    above the ordering slack; such candidates are discarded.
    """
    U, V = frames
    best, best_val, rejected = None, 0.0, 0
    for P, Q in pairs:
        r0 = ratio(P, Q, None, None)
        if r0 <= best_val:
            continue
        r1 = ratio(P, Q, U, V)
        if abs(r0 - r1) > RELIABLE_RTOL * max(1.0, abs(r0)):
            rejected += 1
            continue
        best, best_val = (P, Q), r0
    return best, best_val, rejected


def _witness_pairs(P, A, eps_list):
    """``(P, P + e A)`` and ``(P + e A, P)`` with ``A`` scaled to stay inside the cone."""
    P = floor_state(P, PAIR_FLOOR)
    pmin = np.linalg.eigvalsh(P)[0]
    A = np.asarray(A, dtype=complex)
    nrm = np.max(np.abs(np.linalg.eigvalsh(A)))
    if nrm == 0:
        return []
    A = A * (0.5 * pmin / nrm)
    out = []
    for e in eps_list:
        for s in (1.0, -1.0):
            Q = P + s * e * A
            out += [(P, Q), (Q, P)]
    return out


def _block_pairs(channel, cfg, tag):
    if channel.kind != "partial_trace":
        return []
    from .sampling import random_density

    m = channel.params["n"]
    r = cfg.child_rngs(tag + "-block", 1)[0]
    return [doubled_block_witness(random_density(m, r, 0.2), random_density(m, r, 0.2))]


def _pair_search(kind, ratio, channel, cfg, riem, extra_pairs=(), eps=None):
    n = channel.dim_in
    k = n_state_params(n)

    def unpack(x):
        return state_from_params(x[:k], n, PAIR_FLOOR), state_from_params(x[k:], n, PAIR_FLOOR)

    def objective(x):
        return -ratio(*unpack(x), None, None)

    rngs = cfg.child_rngs(kind, cfg.starts)
    x0s = [r.standard_normal(2 * k) for r in rngs]
    if x0s:
        x0s[0][:k] = identity_params(n)
    results = _run_starts(objective, x0s, cfg, min(cfg.maxiter, cfg.pair_maxiter))
    pairs = [unpack(x) for x, *_ in results]
    if riem is not None and "A" in riem.witness:
        pairs += _witness_pairs(riem.witness["P"], riem.witness["A"], eps or cfg.witness_eps)
    pairs += [tuple(np.asarray(M, dtype=complex) for M in pq) for pq in extra_pairs]
    pairs += _block_pairs(channel, cfg, kind)
    best, val, rejected = _select(pairs, ratio, _frames(cfg, channel, kind))
    semantics = "exact" if _is_identity(channel) else "lower_bound"
    witness = {} if best is None else {"P": best[0], "Q": best[1]}
    return EtaEstimate(val, kind, semantics, witness, _trace(cfg, results, {"rejected_unreliable": rejected}))


def eta_relent(g, channel, config=None, riem=None, extra_pairs=()):
    """``sup H_g(phi P, phi Q) / H_g(P, Q)`` over pairs ``P != Q``.

    Random multistarts are complemented by pairs ``(P*, P* +- e A*)`` around
    the Riemannian witness ``riem`` (an :class:`EtaEstimate`), whose ratios
    tend to ``lambda_2(P*)``.
    """
    cfg = config or OptimizerConfig()
    g = _gfun.parse(g)
    if channel.is_constant():
        return _exact("relent", 0.0, {}, "image is one-dimensional")

    def ratio(P, Q, U, V):
        return relent_ratio(g, channel, P, Q, U, V)

    return _pair_search("relent", ratio, channel, cfg, riem, extra_pairs)


def _is_bures(g):
    return g.variant == "ratio" and g.s0 == 1.0 and g.form == "g"


def eta_geod(g, channel, config=None, riem=None, distance="angle"):
    """``sup D_g(phi P, phi Q)^2 / D_g(P, Q)^2``.

    For the ``(w-1)^2/(w+1)`` family the distance is the closed-form Bures
    angle (``distance="chordal"`` uses ``sqrt(2(1 - F))`` instead) and pairs
    are optimized by multistart.  Otherwise numeric geodesics are evaluated on
    the Riemannian witness pairs and ``config.geod_pairs`` random pairs.
    """
    cfg = config or OptimizerConfig()
    g = _gfun.parse(g)
    if channel.is_constant():
        return _exact("geod", 0.0, {}, "image is one-dimensional")
    if _is_bures(g):
        from .geodesic import bures_distance

        dist = bures_angle if distance == "angle" else bures_distance

        def ratio(P, Q, U, V):
            return pair_ratio(lambda A, B: dist(A, B) ** 2, channel, P, Q, U, V)

        est = _pair_search("geod", ratio, channel, cfg, riem)
        est.trace["distance"] = f"bures_{distance}"
        return est
    gcfg = GeodesicConfig(m=cfg.geod_m)

    def gdist(A, B):
        return geodesic_distance(g, A, B, config=gcfg)[0] ** 2

    from .sampling import random_density

    n = channel.dim_in
    pairs = [(random_density(n, r, 0.2), random_density(n, r, 0.2)) for r in cfg.child_rngs("geod", cfg.geod_pairs)]
    if riem is not None and "A" in riem.witness:
        pairs += _witness_pairs(riem.witness["P"], riem.witness["A"], cfg.witness_eps[:1])[:2]
    pairs += _block_pairs(channel, cfg, "geod")
    vals = [pair_ratio(gdist, channel, P, Q) for P, Q in pairs]
    best = int(np.argmax(vals)) if vals else None
    semantics = "exact" if _is_identity(channel) else "lower_bound"
    witness = {} if best is None else {"P": pairs[best][0], "Q": pairs[best][1]}
    trace = {"starts": len(pairs), "iterations": 0, "failures": 0, "seed": int(cfg.seed)}
    trace.update(distance="numeric_geodesic", m=cfg.geod_m)
    return EtaEstimate(vals[best] if vals else 0.0, "geod", semantics, witness, trace)


def _trace_norm(H):
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (H + H.conj().T)))))


def dobrushin_ratio(channel, u, v):
    """``1/2 Tr|phi(uu^* - vv^*)|`` after orthonormalizing ``(u, v)``."""
    u = u / np.linalg.norm(u)
    v = v - np.vdot(u, v) * u
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return 0.0
    v = v / nv
    D = np.outer(u, u.conj()) - np.outer(v, v.conj())
    return 0.5 * _trace_norm(channel.apply(D))


def eta_dobrushin(channel, config=None):
    """Trace-norm contraction on traceless inputs.

    Exact for qubit channels (largest singular value of the Bloch matrix);
    otherwise a multistart search over orthonormal pure-state pairs.
    """
    cfg = config or OptimizerConfig()
    n = channel.dim_in
    if channel.is_constant():
        return _exact("dobrushin", 0.0, {}, "traceless inputs are annihilated")
    if _is_identity(channel):
        return _exact("dobrushin", 1.0, {"u": np.eye(n)[0], "v": np.eye(n)[1]}, "identity channel")
    if n == 2 and channel.dim_out == 2:
        T, _ = channel.bloch()
        _, s, Vt = np.linalg.svd(T)
        return _exact("dobrushin", s[0], {"bloch_direction": Vt[0]}, "largest singular value of T")

    def objective(x):
        u = x[:n] + 1j * x[n : 2 * n]
        v = x[2 * n : 3 * n] + 1j * x[3 * n :]
        if np.linalg.norm(u) < 1e-12:
            return 0.0
        return -dobrushin_ratio(channel, u, v)

    rngs = cfg.child_rngs("dobrushin", cfg.starts)
    x0s = [r.standard_normal(4 * n) for r in rngs]
    results = _run_starts(objective, x0s, cfg)
    cands = []
    for x, *_ in results:
        cands.append((x[:n] + 1j * x[n : 2 * n], x[2 * n : 3 * n] + 1j * x[3 * n :]))
    E = np.eye(n, dtype=complex)
    cands += [(E[i], E[j]) for i in range(n) for j in range(i + 1, n)]
    vals = [dobrushin_ratio(channel, u, v) if np.linalg.norm(u) > 1e-12 else 0.0 for u, v in cands]
    best = int(np.argmax(vals))
    u, v = cands[best]
    return EtaEstimate(vals[best], "dobrushin", "lower_bound", {"u": u, "v": v}, _trace(cfg, results))


def unital_lower_bound(channel, tol=1e-10):
    """``Lambda_2(phi^* phi) = sup_{Tr A = 0} Tr|phi(A)|^2 / Tr|A|^2`` for unital ``phi``."""
    if not channel.is_unital(tol):
        raise ValidationError("unital", "unital lower bound requires phi(I) = I")
    S = channel.traceless_block
    if S.size == 0 or channel.is_constant():
        return 0.0
    return float(np.linalg.eigvalsh(S.T @ S)[-1])


def _validate_nonunital(alpha, tau, s0):
    if not (alpha > 0 and tau > 0 and alpha + tau <= 1 + 1e-15):
        raise ValidationError("parameters", f"need alpha, tau > 0 and alpha + tau <= 1, got ({alpha}, {tau})")
    if not s0 >= 0:
        raise ValidationError("s0", f"s0 must be >= 0, got {s0!r}")


def nonunital_curve(omega, alpha, tau, s0):
    """``lambda_2`` along ``P = (I + omega sigma_1)/2`` for the non-unital map.

    ``c = ((1 - s0)/(1 + s0))^2`` (``c = 1`` in the quadratic limit
    ``s0 -> inf`` and at ``s0 = 0``):

        alpha^2 (1 - omega^2)(1 - tau^2 - c alpha^2 omega^2)
        / ((1 - tau^2 - alpha^2 omega^2)(1 - c tau^2 - c alpha^2 omega^2))
    """
    c = 1.0 if np.isinf(s0) else ((1.0 - s0) / (1.0 + s0)) ** 2
    w2 = np.asarray(omega, dtype=float) ** 2
    a2, t2 = alpha * alpha, tau * tau
    return a2 * (1 - w2) * (1 - t2 - c * a2 * w2) / ((1 - t2 - a2 * w2) * (1 - c * t2 - c * a2 * w2))


def nonunital_formula_eval(alpha, tau, s0):
    """``sup_{0 <= omega < 1}`` of :func:`nonunital_curve`: grid scan plus
    golden-section refinement around the best grid point."""
    _validate_nonunital(alpha, tau, s0)
    grid = np.linspace(0.0, 1.0, 2001)[:-1]
    vals = nonunital_curve(grid, alpha, tau, s0)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best = float(vals[i])
    if hi > lo:
        res = minimize_scalar(
            lambda w: -float(nonunital_curve(w, alpha, tau, s0)),
            bracket=None,
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, -float(res.fun))
    return best


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def channel_descriptor(channel):
    d = {"kind": channel.kind, "dim_in": channel.dim_in, "dim_out": channel.dim_out}
    d["digest"] = _digest(_serialize(np.round(channel.real_matrix, 12)))
    return d


@dataclass
class ContractionReport:
    g: dict
    channel: dict
    estimates: dict
    checks: dict
    probes: dict
    seed: int
    config: dict

    def to_dict(self):
        return {
            "g": self.g,
            "channel": self.channel,
            "estimates": {k: v.to_dict() for k, v in self.estimates.items()},
            "checks": _serialize(self.checks),
            "probes": _serialize(self.probes),
            "seed": self.seed,
            "config": _serialize(self.config),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def csv_rows(self):
        label = _gfun.GFunction.from_dict(self.g).label
        for kind in sorted(self.estimates):
            e = self.estimates[kind].to_dict()
            yield [label, self.channel["kind"], self.channel["digest"], kind, repr(e["value"]), e["semantics"], e["witness_digest"], self.seed]

    def to_csv(self):
        return reports_to_csv([self])


def reports_to_csv(reports):
    buf = _io.StringIO()
    buf.write(REPORT_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["g", "channel", "channel_digest", "kind", "value", "semantics", "witness_digest", "seed"])
    for r in reports:
        for row in r.csv_rows():
            w.writerow(row)
    return buf.getvalue()


def _check(lhs, rhs, slack, relation="<="):
    holds = lhs <= rhs + slack if relation == "<=" else lhs >= rhs - slack
    return {"lhs": lhs, "rhs": rhs, "slack": slack, "relation": relation, "holds": bool(holds)}


def bounds_report(g, channel, config=None, geod=True):
    """All estimates for ``(g, phi)`` together with the inequality checks.

    Conjecture probes are recorded as signed deltas and never judged.
    """
    cfg = config or OptimizerConfig()
    g = _gfun.parse(g)
    est = {}
    est["riem"] = eta_riem(g, channel, cfg)
    est["relent"] = eta_relent(g, channel, cfg, riem=est["riem"])
    sym_g = g.sym()
    sym = eta_relent(sym_g, channel, cfg, riem=est["riem"])
    # H_sym ratios never exceed the better of the two ordered ratios
    if sym.witness:
        P, Q = sym.witness["P"], sym.witness["Q"]
        for a, b in ((P, Q), (Q, P)):
            r = relent_ratio(g, channel, a, b)
            if r > est["relent"].value:
                est["relent"] = EtaEstimate(r, "relent", est["relent"].semantics, {"P": a, "Q": b}, est["relent"].trace)
    est["sym"] = EtaEstimate(sym.value, "sym", sym.semantics, sym.witness, sym.trace)
    if geod:
        est["geod"] = eta_geod(g, channel, cfg, riem=est["riem"])
    est["dobrushin"] = eta_dobrushin(channel, cfg)
    riem_log = est["riem"] if g == _gfun.log() else eta_riem(_gfun.log(), channel, cfg)
    riem_quad = est["riem"] if g == _gfun.quadratic() else eta_riem(_gfun.quadratic(), channel, cfg)
    est["riem_log"] = EtaEstimate(riem_log.value, "riem_log", riem_log.semantics, riem_log.witness, riem_log.trace)
    est["riem_quad"] = EtaEstimate(riem_quad.value, "riem_quad", riem_quad.semantics, riem_quad.witness, riem_quad.trace)
    unital = channel.dim_in == channel.dim_out and channel.is_unital()
    if unital:
        lb = unital_lower_bound(channel)
        est["unital_lower"] = EtaEstimate(lb, "unital_lower", "exact", {}, {"source": "Lambda_2(phi^* phi)"})

    tol_order = 1e-6 + cfg.tol
    geod_slack = tol_order + 2e-3 if not _is_bures(g) else tol_order
    checks = {}
    for k, e in est.items():
        checks[f"{k}<=1"] = _check(e.value, 1.0, ETA_SLACK)
    checks["relent>=riem"] = _check(est["relent"].value, est["riem"].value, tol_order, ">=")
    checks["relent>=sym"] = _check(est["relent"].value, est["sym"].value, tol_order, ">=")
    checks["sym>=riem"] = _check(est["sym"].value, est["riem"].value, tol_order, ">=")
    if geod:
        checks["riem>=geod"] = _check(est["riem"].value, est["geod"].value, geod_slack, ">=")
    checks["riem_log<=dobrushin"] = _check(riem_log.value, est["dobrushin"].value, tol_order)
    checks["dobrushin<=sqrt(riem_quad)"] = _check(est["dobrushin"].value, float(np.sqrt(riem_quad.value)), tol_order)
    if unital:
        checks["riem>=unital_lower"] = _check(est["riem"].value, est["unital_lower"].value, 1e-12, ">=")
    # convexity in phi: mix with the constant channel onto the image of I/n
    rho = channel.apply(np.eye(channel.dim_in) / channel.dim_in)
    const = constant_channel(0.5 * (rho + rho.conj().T), dim_in=channel.dim_in)
    mix = convex_combine(0.5, channel, const)
    eta_mix = eta_riem(g, mix, cfg).value
    checks["convexity_riem"] = _check(eta_mix, 0.5 * est["riem"].value, tol_order)

    probes = {
        "relent-riem": est["relent"].value - est["riem"].value,
        "sym-riem": est["sym"].value - est["riem"].value,
        "dobrushin-riem": est["dobrushin"].value - est["riem"].value,
    }
    if geod:
        probes["riem-geod"] = est["riem"].value - est["geod"].value
    if unital:
        probes["riem-unital_lower"] = est["riem"].value - est["unital_lower"].value
    return ContractionReport(
        g.to_dict(), channel_descriptor(channel), est, checks, probes, int(cfg.seed), asdict(cfg)
    )


def probe_conjectures(channel, gs, config=None):
    """Per-``g`` signed deltas for the two open conjectures (never asserted)."""
    cfg = config or OptimizerConfig()
    unital = channel.dim_in == channel.dim_out and channel.is_unital()
    lb = unital_lower_bound(channel) if unital else None
    rows = []
    for spec in gs:
        g = _gfun.parse(spec)
        riem = eta_riem(g, channel, cfg)
        relent = eta_relent(g, channel, cfg, riem=riem)
        row = {
            "g": g.to_dict(),
            "label": g.label,
            "riem": riem.value,
            "relent": relent.value,
            "relent-riem": relent.value - riem.value,
        }
        if unital:
            row["riem-unital_lower"] = riem.value - lb
        rows.append(row)
    riems = [r["riem"] for r in rows]
    return {
        "channel": channel_descriptor(channel),
        "unital": bool(unital),
        "unital_lower": lb,
        "rows": rows,
        "riem_spread": float(max(riems) - min(riems)) if riems else 0.0,
        "seed": int(cfg.seed),
    }
