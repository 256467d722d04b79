"""JSON file formats for states and channels.

Matrices are row-major nested lists whose entries are either real numbers or
``[re, im]`` pairs.  A state file holds a matrix, either bare or as
``{"matrix": ...}``.  A channel file holds one of

* ``{"dim_in": n, "dim_out": m, "kraus": [V_1, V_2, ...]}``
* ``{"pauli_affine": {"T": 3x3, "t": [x, y, z]}}``
* ``{"partial_trace": {"n": k}}``
* ``{"constant": {"rho": matrix, "dim_in": n}}``   (``dim_in`` optional)
* ``{"identity": {"n": k}}``
* ``{"natural": L, "dim_in": n, "dim_out": m}``  (row-major ``vec`` matrix)
* ``{"choi": C, "dim_in": n, "dim_out": m}``

Every malformed input raises :class:`~qdiv.errors.ValidationError` naming the
violated invariant.
"""

import json
from pathlib import Path

import numpy as np

from .channel import (
    QuantumChannel,
    choi_from_natural,
    constant_channel,
    identity_channel,
    is_cptp,
    kraus_from_choi,
    partial_trace_channel,
    pauli_affine,
    pauli_affine_natural,
)
from .errors import DimensionError, ValidationError
from .matcore import DensityMatrix


def _entry(z, where):
    if isinstance(z, bool):
        raise ValidationError("format", f"{where}: booleans are not numbers")
    if isinstance(z, (int, float)):
        return complex(z)
    if isinstance(z, (list, tuple)) and len(z) == 2 and all(isinstance(x, (int, float)) for x in z):
        return complex(z[0], z[1])
    raise ValidationError("format", f"{where}: expected a number or [re, im], got {z!r}")


def matrix_from_json(obj, name="matrix"):
    """Complex 2-d array from nested lists of numbers / ``[re, im]`` pairs."""
    if isinstance(obj, dict) and "matrix" in obj:
        obj = obj["matrix"]
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ValidationError("format", f"{name} must be a non-empty list of rows")
    ncol = len(obj[0])
    for i, row in enumerate(obj):
        if len(row) != ncol:
            raise DimensionError(f"{name}: row {i} has {len(row)} entries, expected {ncol}")
    return np.array(
        [[_entry(z, f"{name}[{i}][{j}]") for j, z in enumerate(row)] for i, row in enumerate(obj)],
        dtype=complex,
    )


def matrix_to_json(M):
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def read_json(source):
    """Parse a path (``str``/``Path``) or pass through an already-loaded object."""
    if isinstance(source, (str, Path)):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ValidationError("file", f"cannot read {source}: {exc.strerror}") from exc
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError("json", f"{source}: {exc}") from exc
    return source


def load_state(source, name="state"):
    """Validated :class:`DensityMatrix` from a state file or object."""
    return DensityMatrix(matrix_from_json(read_json(source), name), name=name)


def save_state(path, P):
    Path(path).write_text(json.dumps({"matrix": matrix_to_json(P)}))


def _dims(obj, n_in_default=None):
    n_in = obj.get("dim_in", n_in_default)
    n_out = obj.get("dim_out", n_in)
    return n_in, n_out


def _kraus_list(obj):
    ks = obj.get("kraus")
    if not isinstance(ks, list) or not ks:
        raise ValidationError("format", "'kraus' must be a non-empty list of matrices")
    ks = [matrix_from_json(V, f"kraus[{k}]") for k, V in enumerate(ks)]
    n_in, n_out = _dims(obj, ks[0].shape[1])
    for k, V in enumerate(ks):
        if V.shape != (n_out, n_in):
            raise DimensionError(f"kraus[{k}] has shape {V.shape}, expected ({n_out}, {n_in})")
    return ks


def _pauli_args(obj):
    spec = obj["pauli_affine"]
    try:
        T = np.asarray(spec.get("T", np.eye(3)), dtype=float)
        t = np.asarray(spec.get("t", [0.0, 0.0, 0.0]), dtype=float)
    except (TypeError, ValueError, AttributeError) as exc:
        raise ValidationError("format", f"pauli_affine needs numeric T and t: {exc}") from exc
    if T.shape != (3, 3) or t.shape != (3,):
        raise DimensionError("pauli_affine needs a 3x3 T and a length-3 t")
    return T, t


def _square(obj, key):
    M = matrix_from_json(obj[key], key)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{key} must be square, got {M.shape}")
    return M


def _natural_dims(L, obj):
    n_in = obj.get("dim_in") or int(round(np.sqrt(L.shape[1])))
    n_out = obj.get("dim_out") or int(round(np.sqrt(L.shape[0])))
    if L.shape != (n_out**2, n_in**2):
        raise DimensionError(f"natural matrix must be {n_out**2}x{n_in**2}, got {L.shape}")
    return n_in, n_out


def _int_param(obj, key, field="n"):
    spec = obj[key]
    if not isinstance(spec, dict) or not isinstance(spec.get(field), int) or spec[field] < 1:
        raise ValidationError("format", f"{key} needs a positive integer '{field}'")
    return spec[field]


def load_channel(source):
    """Validated :class:`QuantumChannel` from a channel file or object."""
    obj = read_json(source)
    if isinstance(obj, QuantumChannel):
        return obj
    if not isinstance(obj, dict):
        raise ValidationError("format", "channel description must be a JSON object")
    if "kraus" in obj:
        return QuantumChannel(_kraus_list(obj))
    if "pauli_affine" in obj:
        T, t = _pauli_args(obj)
        return pauli_affine(T=T, t=t)
    if "partial_trace" in obj:
        return partial_trace_channel(_int_param(obj, "partial_trace"))
    if "identity" in obj:
        return identity_channel(_int_param(obj, "identity"))
    if "constant" in obj:
        spec = obj["constant"]
        if not isinstance(spec, dict) or "rho" not in spec:
            raise ValidationError("format", "constant channel needs 'rho'")
        return constant_channel(matrix_from_json(spec["rho"], "rho"), dim_in=spec.get("dim_in"))
    if "natural" in obj:
        L = matrix_from_json(obj["natural"], "natural")
        n_in, n_out = _natural_dims(L, obj)
        diag = is_cptp(L, n_in, n_out)
        if not diag:
            raise ValidationError("cptp", diag.message)
        return kraus_from_choi(choi_from_natural(L, n_in, n_out), n_in, n_out)
    if "choi" in obj:
        C = _square(obj, "choi")
        n_in = obj.get("dim_in")
        if n_in is None:
            raise ValidationError("format", "choi channel needs 'dim_in'")
        return kraus_from_choi(C, n_in, obj.get("dim_out", C.shape[0] // n_in))
    raise ValidationError("format", f"unknown channel format with keys {sorted(obj)}")


def _natural_of(obj):
    """``(L, n_in, n_out)`` without enforcing CPTP, for diagnostics."""
    if "kraus" in obj:
        ks = _kraus_list(obj)
        n_out, n_in = ks[0].shape
        return sum(np.kron(V, V.conj()) for V in ks), n_in, n_out
    if "pauli_affine" in obj:
        return pauli_affine_natural(*_pauli_args(obj)), 2, 2
    if "natural" in obj:
        L = matrix_from_json(obj["natural"], "natural")
        return (L, *_natural_dims(L, obj))
    if "choi" in obj:
        C = _square(obj, "choi")
        n_in = obj.get("dim_in")
        if n_in is None:
            raise ValidationError("format", "choi channel needs 'dim_in'")
        n_out = obj.get("dim_out", C.shape[0] // n_in)
        if C.shape[0] != n_in * n_out:
            raise DimensionError(f"Choi matrix must be {n_in * n_out} square, got {C.shape}")
        # invert the Choi reshuffle
        L = np.transpose(C.reshape(n_in, n_out, n_in, n_out), (1, 3, 0, 2)).reshape(n_out**2, n_in**2)
        return L, n_in, n_out
    ch = load_channel(obj)
    return ch.natural, ch.dim_in, ch.dim_out


def channel_diagnostics(source):
    """TP residual, Choi eigenvalue floor and unitality of a channel description.

    Unlike :func:`load_channel` this never raises on a non-CPTP map; the
    returned dict has ``valid`` false and a ``message`` naming the failure.
    """
    obj = read_json(source)
    if not isinstance(obj, dict):
        raise ValidationError("format", "channel description must be a JSON object")
    L, n_in, n_out = _natural_of(obj)
    diag = is_cptp(L, n_in, n_out)
    unital = n_in == n_out and bool(
        np.max(np.abs(L @ np.eye(n_in).reshape(-1) - np.eye(n_out).reshape(-1))) <= 1e-10
    )
    return {
        "valid": bool(diag.valid),
        "dim_in": int(n_in),
        "dim_out": int(n_out),
        "tp_residual": diag.tp_residual,
        "choi_min_eigenvalue": diag.choi_min_eigenvalue,
        "unital": unital,
        "message": diag.message,
    }
