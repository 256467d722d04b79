"""Command-line interface.

::

    qdiv divergence P.json Q.json [--g log --g bures ...]
    qdiv metric P.json A.json [B.json] [--g ...] [--hessian]
    qdiv geodesic P.json Q.json [--g ...] [--m 32] [--path-out path.json]
    qdiv contract channel.json [--g ...] [--no-geod]
    qdiv probe-conjectures channel.json [--g ...]
    qdiv validate channel.json

Common flags: ``--seed``, ``--starts``, ``--tol``, ``--format json|csv``,
``--out``.  Output is deterministic: the same inputs and flags give
byte-identical JSON.  Exit codes: 0 success, 2 invalid input, 3 numerical
failure.
"""

import argparse
import csv
import io as _io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gfun as _gfun
from .contraction import (
    REPORT_HEADER,
    OptimizerConfig,
    bounds_report,
    probe_conjectures,
    reports_to_csv,
)
from .divergence import closed_form, relative_entropy
from .errors import NumericalError, QdivError, ValidationError
from .geodesic import GeodesicConfig, bures_angle, bures_distance, geodesic_distance
from .io import channel_diagnostics, load_channel, load_state, matrix_from_json, read_json
from .metric import metric_eval, metric_from_hessian

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3

DEFAULT_GS = ("log", "quadratic", "bures", "power:0.5")


@dataclass
class RunConfig:
    seed: int = 0
    starts: int = 32
    tol: float = 1e-10
    maxiter: int = 2000
    format: str = "json"
    max_dim: int = 8
    gs: list = field(default_factory=lambda: list(DEFAULT_GS))

    @classmethod
    def from_args(cls, args):
        if not 0 <= args.seed < 2**64:
            raise ValidationError("seed", f"seed must be a 64-bit unsigned integer, got {args.seed}")
        if args.starts < 1:
            raise ValidationError("starts", f"need at least one start, got {args.starts}")
        return cls(
            seed=args.seed,
            starts=args.starts,
            tol=args.tol,
            maxiter=args.maxiter,
            format=args.format,
            max_dim=args.max_dim,
            gs=list(args.g or DEFAULT_GS),
        )

    def optimizer(self):
        return OptimizerConfig(starts=self.starts, seed=self.seed, maxiter=self.maxiter, tol=self.tol)

    def parsed_gs(self):
        return [_gfun.parse(s) for s in self.gs]

    def check_dim(self, n, what):
        if n > self.max_dim:
            raise ValidationError("dimension", f"{what} has dimension {n} > --max-dim {self.max_dim}")


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def render_json(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def render_csv(header, rows):
    buf = _io.StringIO()
    buf.write(REPORT_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands: each returns the rendered text
# ---------------------------------------------------------------------------


def cmd_divergence(args, cfg):
    P = load_state(args.P, "P")
    Q = load_state(args.Q, "Q")
    cfg.check_dim(P.dim, "P")
    rows = []
    for g in cfg.parsed_gs():
        res = relative_entropy(g, P, Q)
        row = {"g": g.to_dict(), "label": g.label, "value": res.value, "method": res.method}
        alt = closed_form(g, P, Q)
        if alt is not None:
            row["check_value"], row["check_method"] = float(alt[0]), alt[1]
            row["residual"] = abs(res.value - float(alt[0]))
        rows.append(row)
    if cfg.format == "csv":
        return render_csv(
            ["g", "value", "method", "check_value", "check_method", "residual"],
            [[r["label"], r["value"], r["method"], r.get("check_value", ""), r.get("check_method", ""), r.get("residual", "")] for r in rows],
        )
    return render_json({"dim": P.dim, "divergences": rows})


def _traceless_input(source, name):
    return matrix_from_json(read_json(source), name)


def cmd_metric(args, cfg):
    P = load_state(args.P, "P")
    cfg.check_dim(P.dim, "P")
    A = _traceless_input(args.A, "A")
    B = _traceless_input(args.B, "B") if args.B else A
    rows = []
    for g in cfg.parsed_gs():
        raw = metric_eval(g, P, A, B)
        row = {"g": g.to_dict(), "label": g.label, "raw": raw, "normalized": raw / g.k_raw_at_one()}
        if args.hessian:
            fd = metric_from_hessian(g, P, A, B, h=args.h)
            row["hessian"] = fd
            row["hessian_residual"] = abs(fd - raw)
        rows.append(row)
    if cfg.format == "csv":
        return render_csv(
            ["g", "raw", "normalized", "hessian", "hessian_residual"],
            [[r["label"], r["raw"], r["normalized"], r.get("hessian", ""), r.get("hessian_residual", "")] for r in rows],
        )
    return render_json({"dim": P.dim, "metric": rows})


def cmd_geodesic(args, cfg):
    P = load_state(args.P, "P")
    Q = load_state(args.Q, "Q")
    cfg.check_dim(P.dim, "P")
    rows, paths = [], []
    for g in cfg.parsed_gs():
        length, path = geodesic_distance(g, P, Q, m=args.m, config=GeodesicConfig(m=args.m))
        rows.append(
            {
                "g": g.to_dict(),
                "label": g.label,
                "length": length,
                "energy": path.energy,
                "m": path.m,
                "sweeps": path.sweeps,
                "converged": path.converged,
            }
        )
        paths.append({"label": g.label, **path.to_dict()})
    if args.path_out:
        _emit(render_json({"paths": paths}), args.path_out)
    bures = {"distance": bures_distance(P, Q), "angle": bures_angle(P, Q)}
    if cfg.format == "csv":
        return render_csv(
            ["g", "length", "energy", "m", "converged", "bures_distance", "bures_angle"],
            [[r["label"], r["length"], r["energy"], r["m"], r["converged"], bures["distance"], bures["angle"]] for r in rows],
        )
    return render_json({"dim": P.dim, "bures": bures, "geodesics": rows})


def _pool_map(fn, items, workers):
    """Map preserving input order (results never depend on completion order)."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def cmd_contract(args, cfg):
    ch = load_channel(args.channel)
    cfg.check_dim(max(ch.dim_in, ch.dim_out), "channel")
    opt = cfg.optimizer()
    reports = _pool_map(lambda g: bounds_report(g, ch, opt, geod=not args.no_geod), cfg.parsed_gs(), opt.workers())
    if cfg.format == "csv":
        return reports_to_csv(reports)
    return render_json({"seed": cfg.seed, "reports": [r.to_dict() for r in reports]})


def cmd_probe(args, cfg):
    ch = load_channel(args.channel)
    cfg.check_dim(max(ch.dim_in, ch.dim_out), "channel")
    table = probe_conjectures(ch, cfg.parsed_gs(), cfg.optimizer())
    if cfg.format == "csv":
        return render_csv(
            ["g", "riem", "relent", "relent-riem", "riem-unital_lower"],
            [[r["label"], r["riem"], r["relent"], r["relent-riem"], r.get("riem-unital_lower", "")] for r in table["rows"]],
        )
    return render_json(table)


def cmd_validate(args, cfg):
    diag = channel_diagnostics(args.channel)
    if cfg.format == "csv":
        keys = ["valid", "dim_in", "dim_out", "tp_residual", "choi_min_eigenvalue", "unital", "message"]
        text = render_csv(keys, [[diag[k] for k in keys]])
    else:
        text = render_json(diag)
    if not diag["valid"]:
        raise _InvalidWithOutput(text, ValidationError("cptp", diag["message"]))
    return text


class _InvalidWithOutput(Exception):
    def __init__(self, text, error):
        self.text, self.error = text, error


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(p):
    p.add_argument("--g", action="append", metavar="SPEC", help="g specification (repeatable): log, quadratic, bures, ratio:S0, power:A")
    p.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed (default 0)")
    p.add_argument("--starts", type=int, default=32, help="multistart count (default 32)")
    p.add_argument("--tol", type=float, default=1e-10, help="optimizer objective tolerance")
    p.add_argument("--maxiter", type=int, default=2000, help="iterations per local search")
    p.add_argument("--max-dim", type=int, default=8, help="refuse inputs above this dimension")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write output to this file instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="qdiv", description="Quantum g-divergences, monotone metrics and contraction coefficients.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divergence", help="relative g-entropies of a state pair")
    p.add_argument("P")
    p.add_argument("Q")
    _common(p)
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("metric", help="monotone metric M_P(A, B)")
    p.add_argument("P")
    p.add_argument("A")
    p.add_argument("B", nargs="?")
    p.add_argument("--hessian", action="store_true", help="also report the finite-difference Hessian of H_g")
    p.add_argument("--h", type=float, default=1e-4, help="finite-difference step")
    _common(p)
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("geodesic", help="numeric geodesic distance")
    p.add_argument("P")
    p.add_argument("Q")
    p.add_argument("--m", type=int, default=32, help="number of path segments")
    p.add_argument("--path-out", help="write the optimized paths as JSON")
    _common(p)
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("contract", help="contraction coefficients and bound checks")
    p.add_argument("channel")
    p.add_argument("--no-geod", action="store_true", help="skip the geodesic coefficient")
    _common(p)
    p.set_defaults(func=cmd_contract)

    p = sub.add_parser("probe-conjectures", help="per-g deltas for the open conjectures")
    p.add_argument("channel")
    _common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("validate", help="CPTP diagnostics of a channel file")
    p.add_argument("channel")
    _common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
        if args.command in ("geodesic",) and args.m < 2:
            raise ValidationError("segments", f"--m must be at least 2, got {args.m}")
        text = args.func(args, cfg)
    except _InvalidWithOutput as exc:
        _emit(exc.text, args.out)
        print(f"qdiv: invalid: {exc.error}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as exc:
        print(f"qdiv: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"qdiv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except QdivError as exc:
        print(f"qdiv: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"qdiv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
