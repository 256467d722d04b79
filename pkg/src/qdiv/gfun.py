"""Operator convex functions ``g`` with ``g(1) = 0`` and their derived functions.

A :class:`GFunction` is one of five variants

========== ==============================================================
``log``        ``-log w``
``quadratic``  ``(w - 1)^2``
``ratio``      ``(w - 1)^2 / (w + s0)``, ``s0 > 0``
``power``      ``1 - w^alpha``, ``0 < alpha < 1``
``atoms``      ``a(w-1) + b(w-1)^2 + c(w-1)^2/w + sum_i m_i (w-1)^2/(w+s_i)``
========== ==============================================================

together with a *form*: the function itself (``"g"``), its transpose
``w g(1/w)`` (``"hat"``) or the symmetrization ``g + hat g`` (``"sym"``).

The metric function ``k(w) = (g(w) + w g(1/w)) / (w - 1)^2`` is always
returned in its *raw* normalization unless ``normalized=True`` is requested,
in which case it is divided by ``k(1)``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, ValidationError

VARIANTS = ("log", "quadratic", "ratio", "power", "atoms")
FORMS = ("g", "hat", "sym")

# |w - 1| below which k is evaluated from its Taylor series
SERIES_RADIUS = 1e-6


@dataclass(frozen=True)
class GFunction:
    variant: str
    s0: float = None
    alpha: float = None
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    atoms: tuple = field(default=())
    form: str = "g"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError("variant", f"unknown g variant {self.variant!r}")
        if self.form not in FORMS:
            raise ValidationError("form", f"unknown form {self.form!r}")
        if self.variant == "ratio":
            if self.s0 is None or not np.isfinite(self.s0) or self.s0 <= 0:
                raise ValidationError("s0", f"ratio variant needs s0 > 0, got {self.s0!r}")
        if self.variant == "power":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValidationError("alpha", f"power variant needs 0 < alpha < 1, got {self.alpha!r}")
        if self.variant == "atoms":
            if self.b < 0 or self.c < 0:
                raise ValidationError("coefficients", "atoms variant needs b >= 0 and c >= 0")
            atoms = tuple((float(s), float(m)) for s, m in self.atoms)
            for s, m in atoms:
                if s <= 0 or m <= 0:
                    raise ValidationError("atoms", f"atom (s={s}, m={m}) must have s > 0 and m > 0")
            if self.b == 0 and self.c == 0 and not atoms:
                raise ValidationError("atoms", "atoms variant is purely linear (no curvature)")
            object.__setattr__(self, "atoms", atoms)

    # -- evaluation -------------------------------------------------------

    def _base(self, w):
        v = self.variant
        if v == "log":
            return -np.log(w)
        if v == "quadratic":
            return (w - 1.0) ** 2
        if v == "ratio":
            return (w - 1.0) ** 2 / (w + self.s0)
        if v == "power":
            return 1.0 - w**self.alpha
        x2 = (w - 1.0) ** 2
        out = self.a * (w - 1.0) + self.b * x2 + self.c * x2 / w
        for s, m in self.atoms:
            out = out + m * x2 / (w + s)
        return out

    def __call__(self, w):
        w = _positive(w)
        if self.form == "g":
            r = self._base(w)
        elif self.form == "hat":
            r = w * self._base(1.0 / w)
        else:
            r = self._base(w) + w * self._base(1.0 / w)
        return r if np.ndim(r) else float(r)

    def hat(self):
        """Transpose ``w g(1/w)``; swaps the arguments of the relative entropy."""
        if self.form == "sym":
            return self
        return replace(self, form="hat" if self.form == "g" else "g")

    def sym(self):
        return replace(self, form="sym")

    @property
    def k_scale(self):
        # g and hat g share k; g + hat g doubles it
        return 2.0 if self.form == "sym" else 1.0

    def k_raw_at_one(self):
        v = self.variant
        if v == "log":
            k1 = 1.0
        elif v == "quadratic":
            k1 = 2.0
        elif v == "ratio":
            k1 = 2.0 / (1.0 + self.s0)
        elif v == "power":
            k1 = self.alpha * (1.0 - self.alpha)
        else:
            k1 = 2.0 * (self.b + self.c) + sum(2.0 * m / (1.0 + s) for s, m in self.atoms)
        return self.k_scale * k1

    def k(self, w, normalized=False):
        """Metric function ``k``; vectorized over ``w``."""
        w = _positive(w)
        scalar = np.ndim(w) == 0
        w = np.atleast_1d(np.asarray(w, dtype=float))
        v = self.variant
        if v == "quadratic":
            r = (w + 1.0) / w
        elif v == "ratio":
            s = self.s0
            r = (w + 1.0) * (1.0 + s) / ((1.0 + w * s) * (w + s))
        elif v == "atoms":
            r = (self.b + self.c) * (1.0 + 1.0 / w)
            for s, m in self.atoms:
                r = r + m * (1.0 / (w + s) + 1.0 / (1.0 + w * s))
        else:
            x = w - 1.0
            near = np.abs(x) < SERIES_RADIUS
            r = np.empty_like(w)
            far = ~near
            xf = x[far]
            if v == "log":
                r[far] = np.log(w[far]) / xf
                r[near] = _log_series(x[near])
            else:
                al = self.alpha
                lw = np.log(w[far])
                r[far] = np.expm1(al * lw) * np.expm1((1.0 - al) * lw) / xf**2
                r[near] = _power_series(x[near], al)
        r = r * self.k_scale
        if normalized:
            r = r / self.k_raw_at_one()
        return float(r[0]) if scalar else r

    # -- description ------------------------------------------------------

    @property
    def label(self):
        v = self.variant
        if v == "ratio":
            base = f"ratio(s0={self.s0:g})"
        elif v == "power":
            base = f"power(alpha={self.alpha:g})"
        elif v == "atoms":
            base = f"atoms(a={self.a:g},b={self.b:g},c={self.c:g},n={len(self.atoms)})"
        else:
            base = v
        return base if self.form == "g" else f"{self.form}[{base}]"

    def to_dict(self):
        d = {"variant": self.variant}
        if self.variant == "ratio":
            d["s0"] = self.s0
        elif self.variant == "power":
            d["alpha"] = self.alpha
        elif self.variant == "atoms":
            d.update(a=self.a, b=self.b, c=self.c, atoms=[list(t) for t in self.atoms])
        if self.form != "g":
            d["form"] = self.form
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        variant = d.pop("variant", None)
        form = d.pop("form", "g")
        if variant == "ratio":
            g = ratio(float(d["s0"]))
        elif variant == "power":
            g = power(float(d["alpha"]))
        elif variant == "atoms":
            g = atom_measure(
                a=float(d.get("a", 0.0)),
                b=float(d.get("b", 0.0)),
                c=float(d.get("c", 0.0)),
                atoms=[tuple(t) for t in d.get("atoms", [])],
            )
        elif variant in ("log", "quadratic"):
            g = cls(variant)
        else:
            raise ValidationError("variant", f"unknown g variant {variant!r}")
        return replace(g, form=form) if form != "g" else g


def _positive(w):
    arr = np.asarray(w, dtype=float)
    if np.any(~(arr > 0)):
        bad = arr[~(arr > 0)].ravel()[0] if arr.ndim else arr
        raise DomainError(f"g-functions are defined for w > 0, got {float(bad)!r}")
    return arr if arr.ndim else float(arr)


def _log_series(x):
    return 1.0 - x / 2.0 + x**2 / 3.0 - x**3 / 4.0 + x**4 / 5.0


def _power_series(x, alpha):
    u = alpha * (1.0 - alpha)
    return u * (
        1.0
        - x / 2.0
        + (4.0 - u) * x**2 / 12.0
        - (2.0 - u) * x**3 / 8.0
        + (u * u - 52.0 * u + 72.0) * x**4 / 360.0
    )


# -- constructors -----------------------------------------------------------

LOG = GFunction("log")
QUADRATIC = GFunction("quadratic")


def log():
    return LOG


def quadratic():
    return QUADRATIC


def ratio(s0):
    return GFunction("ratio", s0=float(s0))


def bures():
    """``(w - 1)^2 / (w + 1)``: the minimal metric function."""
    return ratio(1.0)


def power(alpha):
    return GFunction("power", alpha=float(alpha))


def atom_measure(a=0.0, b=0.0, c=0.0, atoms=()):
    return GFunction("atoms", a=float(a), b=float(b), c=float(c), atoms=tuple(atoms))


def parse(spec):
    """Parse a g-spec: a dict, JSON-like mapping, or a shorthand string.

    Shorthands: ``log``, ``quadratic``, ``bures``, ``ratio:<s0>``,
    ``power:<alpha>``.
    """
    if isinstance(spec, GFunction):
        return spec
    if isinstance(spec, dict):
        return GFunction.from_dict(spec)
    s = str(spec).strip().lower()
    name, _, arg = s.partition(":")
    if name in ("log", "quadratic") and not arg:
        return GFunction(name)
    if name == "bures" and not arg:
        return bures()
    if name == "ratio" and arg:
        return ratio(float(arg))
    if name == "power" and arg:
        return power(float(arg))
    raise ValidationError("g_spec", f"cannot parse g specification {spec!r}")


# -- module-level operations ------------------------------------------------


def g_eval(g, w):
    return g(w)


def g_hat(g):
    return g.hat()


def g_sym(g):
    return g.sym()


def k_eval(g, w, normalization="raw"):
    if normalization not in ("raw", "normalized"):
        raise ValidationError("normalization", f"unknown normalization {normalization!r}")
    return g.k(w, normalized=normalization == "normalized")


def k_bounds_check(g, grid, rtol=1e-12):
    """``2/(w+1) <= k~(w) <= (w+1)/(2w)`` on every grid point (normalized k)."""
    w = _positive(np.atleast_1d(np.asarray(grid, dtype=float)))
    kt = g.k(w, normalized=True)
    lower = 2.0 / (w + 1.0)
    upper = (w + 1.0) / (2.0 * w)
    return bool(np.all(kt >= lower * (1 - rtol)) and np.all(kt <= upper * (1 + rtol)))
