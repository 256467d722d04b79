"""Acceptance criteria 1-11.

Every clause is recorded with the ``criterion`` fixture; a per-criterion
PASS/FAIL line is printed in the terminal summary.  Clauses that do not hold
numerically are left failing on purpose.
"""

import json
import time

import numpy as np
import pytest

from conftest import FOUR_G, sample_direction
from qdiv import gfun
from qdiv.channel import constant_channel, nonunital_example, partial_trace_channel, pauli_affine
from qdiv.cli import main
from qdiv.contraction import (
    OptimizerConfig,
    bounds_report,
    doubled_block_witness,
    eta_dobrushin,
    eta_geod,
    eta_relent,
    eta_riem,
    lambda2,
    nonunital_formula_eval,
    probe_conjectures,
    relent_ratio,
)
from qdiv.divergence import closed_form, relative_entropy_value
from qdiv.geodesic import bures_angle, bures_distance, geodesic_distance
from qdiv.metric import MetricOperator, metric_eval, metric_from_hessian, trace_identities_check
from qdiv.sampling import random_cptp, random_density, random_hermitian, random_unital_T

SEED = 20241015
CFG = OptimizerConfig(starts=4, seed=SEED, maxiter=600, geod_pairs=1, geod_m=8)


def _rng(k):
    return np.random.default_rng([SEED, k])


def test_criterion_01_representation_equivalence(criterion):
    rng = _rng(1)
    gs = [gfun.log(), gfun.quadratic(), gfun.bures(), gfun.ratio(3.0), gfun.power(0.5)]
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(500):
        n = 2 + i % 5
        P, Q = random_density(n, rng), random_density(n, rng)
        for g in gs:
            spectral = relative_entropy_value(g, P, Q)
            other, _ = closed_form(g, P, Q)
            worst = max(worst, abs(spectral - other) / abs(other))
    elapsed = time.perf_counter() - t0
    ok = criterion(1, worst <= 1e-9 and elapsed < 30, f"max relative deviation {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_02_monotonicity(criterion):
    rng = _rng(2)
    gs = [gfun.parse(s) for s in FOUR_G]
    t0 = time.perf_counter()
    h_viol = m_viol = 0
    for i in range(10_000):
        n = 2 + i % 3
        phi = random_cptp(n, rng)
        P, Q = random_density(n, rng, 0.01), random_density(n, rng, 0.01)
        A = sample_direction(rng, n)
        fP, fQ, fA = phi.apply(P), phi.apply(Q), phi.apply(A)
        for g in gs:
            if relative_entropy_value(g, fP, fQ) > relative_entropy_value(g, P, Q) + 1e-9:
                h_viol += 1
            before = MetricOperator(g, P).form(A, A)
            if MetricOperator(g, fP).form(fA, fA) > before + 1e-9 * max(1.0, before):
                m_viol += 1
    elapsed = time.perf_counter() - t0
    ok = criterion(
        2,
        h_viol == 0 and m_viol == 0 and elapsed < 120,
        f"{h_viol} entropy / {m_viol} metric violations over 10^4 triples x 4 g, {elapsed:.1f} s",
    )
    assert ok


def test_criterion_03_hessian_identity(criterion):
    rng = _rng(3)
    worst = 0.0
    for spec in FOUR_G:
        g = gfun.parse(spec)
        for i in range(100):
            n = 2 + i % 3
            P = random_density(n, rng, 0.2)
            A, B = sample_direction(rng, n), sample_direction(rng, n)
            fd = metric_from_hessian(g, P, A, B)
            worst = max(worst, abs(fd - metric_eval(g, P, A, B)))
    ok = criterion(3, worst <= 1e-5, f"max |finite difference - metric| = {worst:.2e}")
    assert ok


def test_criterion_04_trace_identities(criterion):
    rng = _rng(4)
    worst = 0.0
    for spec in FOUR_G:
        g = gfun.parse(spec)
        for i in range(100):
            n = 2 + i % 3
            r1, r2 = trace_identities_check(g, random_density(n, rng, 0.1), random_hermitian(n, rng))
            worst = max(worst, r1, r2)
    ok = criterion(4, worst <= 1e-10, f"max residual {worst:.2e}")
    assert ok


@pytest.mark.parametrize(
    "g",
    [gfun.log(), gfun.quadratic(), gfun.bures(), gfun.ratio(3.0), gfun.ratio(0.01), gfun.power(0.5), gfun.power(0.1)],
    ids=lambda g: g.label,
)
def test_criterion_05_scalar_sandwich(g, criterion):
    w = np.logspace(-4, 4, 1000)
    kt = g.k(w, normalized=True)
    lo, hi = 2 / (w + 1), (w + 1) / (2 * w)
    ok = bool(np.all(kt >= lo * (1 - 1e-12)) and np.all(kt <= hi * (1 + 1e-12)))
    detail = f"{g.label}: min k/lower {np.min(kt / lo):.6f}, max k/upper {np.max(kt / hi):.6f}"
    if g == gfun.quadratic():
        dev = np.max(np.abs(kt / hi - 1))
        ok = ok and dev <= 4 * np.finfo(float).eps
        detail += f", upper equality deviation {dev:.1e}"
    if g == gfun.bures():
        dev = np.max(np.abs(kt / lo - 1))
        ok = ok and dev <= 4 * np.finfo(float).eps
        detail += f", lower equality deviation {dev:.1e}"
    assert criterion(5, ok, detail)


def test_criterion_06_qubit_unital(criterion):
    rng = _rng(6)
    Ts = [random_unital_T(rng, diagonal=True) for _ in range(20)] + [random_unital_T(rng) for _ in range(20)]
    t0 = time.perf_counter()
    worst_riem = worst_dob = 0.0
    for T in Ts:
        phi = pauli_affine(T=T)
        expected = np.linalg.eigvalsh(T.T @ T)[-1]
        for spec in FOUR_G:
            worst_riem = max(worst_riem, abs(eta_riem(spec, phi, CFG).value - expected))
        worst_dob = max(worst_dob, abs(eta_dobrushin(phi).value - np.linalg.svd(T, compute_uv=False)[0]))
    elapsed = time.perf_counter() - t0
    ok = criterion(
        6,
        worst_riem <= 1e-6 and worst_dob <= 1e-6 and elapsed < 300,
        f"max |eta_riem - ||T||^2| = {worst_riem:.1e}, max |eta_dob - ||T||| = {worst_dob:.1e}, {elapsed:.1f} s",
    )
    assert ok


NONUNITAL = [(0.6, 0.3), (0.5, 0.4), (0.3, 0.3)]


@pytest.mark.parametrize("alpha, tau", NONUNITAL)
def test_criterion_07_quadratic_and_dobrushin(alpha, tau, criterion):
    phi = nonunital_example(alpha, tau)
    riem = eta_riem("quadratic", phi, CFG).value
    dob = eta_dobrushin(phi).value
    expected = alpha**2 / (1 - tau**2)
    ok = abs(riem - expected) <= 1e-4 and abs(dob - alpha) <= 1e-6
    assert criterion(7, ok, f"(a={alpha}, t={tau}) riem {riem:.7f} vs {expected:.7f}, dobrushin {dob:.7f}")


@pytest.mark.parametrize("alpha, tau", NONUNITAL)
def test_criterion_07_small_s0_matches_formula(alpha, tau, criterion):
    phi = nonunital_example(alpha, tau)
    riem = eta_riem(gfun.ratio(0.01), phi, CFG).value
    formula = nonunital_formula_eval(alpha, tau, 0.01)
    assert criterion(7, abs(riem - formula) <= 1e-4, f"(a={alpha}, t={tau}) s0=0.01: riem {riem:.7f} vs formula {formula:.7f}")


@pytest.mark.parametrize("alpha, tau", NONUNITAL)
def test_criterion_07_small_s0_exceeds_quadratic(alpha, tau, criterion):
    phi = nonunital_example(alpha, tau)
    small = eta_riem(gfun.ratio(0.01), phi, CFG).value
    quad = eta_riem("quadratic", phi, CFG).value
    assert criterion(7, small > quad, f"(a={alpha}, t={tau}) s0=0.01: {small:.7f} vs quadratic {quad:.7f}")


def test_criterion_08_constant_channel(criterion):
    phi = constant_channel(np.diag([0.3, 0.7]))
    values = {}
    for spec in FOUR_G:
        values[f"riem[{spec}]"] = eta_riem(spec, phi, CFG)
        values[f"relent[{spec}]"] = eta_relent(spec, phi, CFG)
        values[f"geod[{spec}]"] = eta_geod(spec, phi, CFG)
    values["dobrushin"] = eta_dobrushin(phi)
    ok = all(e.value == 0.0 and e.semantics == "exact" for e in values.values())
    assert criterion(8, ok, f"{len(values)} estimates, max value {max(e.value for e in values.values())}")


def test_criterion_08_partial_trace(criterion):
    rng = _rng(8)
    phi = partial_trace_channel(2)
    P, Q = random_density(2, rng, 0.1), random_density(2, rng, 0.1)
    Pd, Qd = doubled_block_witness(P, Q)
    ratios = [relent_ratio(spec, phi, Pd, Qd) for spec in FOUR_G]
    lams = [lambda2(spec, phi, doubled_block_witness(P, P)[0]) for spec in FOUR_G]
    riem = [eta_riem(spec, phi, CFG).value for spec in FOUR_G]
    ok = (
        max(abs(r - 1) for r in ratios) <= 1e-12
        and max(abs(x - 1) for x in lams) <= 1e-12
        and all(abs(x - 1) <= 1e-9 for x in riem)
    )
    detail = f"block ratios dev {max(abs(r - 1) for r in ratios):.1e}, lambda2 dev {max(abs(x - 1) for x in lams):.1e}, eta_riem {riem}"
    assert criterion(8, ok, detail)


@pytest.mark.parametrize("spec", ["bures", "log"])
def test_criterion_09_ordering(spec, criterion):
    rng = _rng(9)
    bad = []
    for i in range(10):
        phi = random_cptp(2, rng)
        rep = bounds_report(spec, phi, CFG)
        names = ["relent>=riem", "riem>=geod", "riem_log<=dobrushin", "dobrushin<=sqrt(riem_quad)"]
        bad += [f"#{i}:{k}" for k in names if not rep.checks[k]["holds"]]
    slack = rep.checks["riem>=geod"]["slack"]
    assert criterion(9, not bad, f"g={spec}: failures {bad or 'none'} (riem>=geod slack {slack:.1e})")


def _qubit_pairs(rng, k):
    return [(random_density(2, rng, 0.05), random_density(2, rng, 0.05)) for _ in range(k)]


def test_criterion_10_geodesic_proportional_to_bures_distance(criterion):
    rng = _rng(10)
    ratios = []
    for P, Q in _qubit_pairs(rng, 20):
        length, _ = geodesic_distance("bures", P, Q, m=32)
        ratios.append(length / bures_distance(P, Q))
    std = float(np.std(ratios))
    assert criterion(10, std < 1e-3, f"length / D_Bures: mean {np.mean(ratios):.5f}, std {std:.2e}")


def test_criterion_10_triangle_inequality(criterion):
    rng = _rng(11)
    worst = -np.inf
    for _ in range(1000):
        A, B, C = (random_density(2, rng) for _ in range(3))
        worst = max(worst, bures_distance(A, C) - bures_distance(A, B) - bures_distance(B, C))
    assert criterion(10, worst <= 1e-9, f"max d(A,C) - d(A,B) - d(B,C) = {worst:.2e}")


def test_bures_geodesic_length_is_twice_the_angle():
    """The numeric length is proportional to the arc length ``arccos F``."""
    rng = _rng(10)
    ratios = []
    for P, Q in _qubit_pairs(rng, 20):
        length, _ = geodesic_distance("bures", P, Q, m=32)
        ratios.append(length / bures_angle(P, Q))
    assert np.std(ratios) < 1e-3
    assert np.mean(ratios) == pytest.approx(2.0, rel=1e-3)


def test_criterion_11_probes(criterion, tmp_path, capsys):
    rng = _rng(12)
    spreads = []
    for _ in range(5):
        phi = pauli_affine(T=random_unital_T(rng))
        spreads.append(probe_conjectures(phi, FOUR_G, CFG)["riem_spread"])
    phi = pauli_affine(T=random_unital_T(rng))
    a = json.dumps(probe_conjectures(phi, FOUR_G, CFG), sort_keys=True, default=float)
    b = json.dumps(probe_conjectures(phi, FOUR_G, CFG), sort_keys=True, default=float)
    path = tmp_path / "ch.json"
    path.write_text(json.dumps({"pauli_affine": {"T": random_unital_T(rng).tolist(), "t": [0, 0, 0]}}))
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert main(["probe-conjectures", str(path), "--seed", "3", "--starts", "3", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    capsys.readouterr()
    ok = max(spreads) < 1e-5 and a == b and outs[0] == outs[1]
    assert criterion(11, ok, f"max per-g spread {max(spreads):.1e}, reports byte-identical: {a == b and outs[0] == outs[1]}")
