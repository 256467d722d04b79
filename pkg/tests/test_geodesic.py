import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import sample_pair
from qdiv import gfun
from qdiv.errors import DimensionError
from qdiv.geodesic import (
    GeodesicConfig,
    bures_angle,
    bures_distance,
    fidelity,
    geodesic_distance,
    hellinger_squared,
    path_energy,
    path_length,
)
from qdiv.sampling import random_cptp, random_density


def test_equal_states():
    P = np.diag([0.3, 0.7])
    assert bures_distance(P, P) == pytest.approx(0, abs=1e-12)
    length, path = geodesic_distance("log", P, P, m=8)
    assert length == 0.0 and path.energy == 0.0
    assert path_energy("log", path.segments) == 0.0


def test_diagonal_example(diag_pair):
    P, Q = diag_pair
    expected = 2 * (1 - (np.sqrt(0.375) + np.sqrt(0.125)))
    assert bures_distance(P, Q) ** 2 == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.06815, abs=1e-5)


def test_symmetric_and_bounded(rng):
    for _ in range(20):
        P, Q = sample_pair(rng, 3, mix=0.0)
        d = bures_distance(P, Q)
        assert d == pytest.approx(bures_distance(Q, P), rel=1e-10)
        assert d**2 <= hellinger_squared(P, Q) + 1e-10
        assert 0 <= fidelity(P, Q) <= 1
        assert bures_angle(P, Q) == pytest.approx(2 * np.arcsin(d / 2), rel=1e-12)


def test_angle_is_arccos_fidelity(rng):
    P, Q = sample_pair(rng, 3)
    assert np.cos(bures_angle(P, Q)) == pytest.approx(fidelity(P, Q), rel=1e-12)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        bures_distance(np.eye(2) / 2, np.eye(3) / 3)


def test_triangle_inequality(rng):
    for _ in range(1000):
        n = rng.integers(2, 4)
        A, B, C = (random_density(n, rng) for _ in range(3))
        assert bures_distance(A, C) <= bures_distance(A, B) + bures_distance(B, C) + 1e-9


def test_path_energy_two_segment_quadratic():
    P, Q = np.diag([0.2, 0.8]), np.diag([0.6, 0.4])
    path = [P, 0.5 * (P + Q), Q]
    expected = 0.0
    for a, b in zip(path[:-1], path[1:]):
        d, mid = b - a, 0.5 * (a + b)
        expected += 2 * np.trace(d @ np.linalg.inv(mid) @ d).real
    assert path_energy("quadratic", path) == pytest.approx(2 * expected, rel=1e-12)


@pytest.mark.parametrize("spec", ["log", "quadratic", "bures", "power:0.5"])
def test_geodesic_invariants(spec, rng):
    P, Q = sample_pair(rng, 2)
    length, path = geodesic_distance(spec, P, Q, m=16)
    assert path.m == 16
    np.testing.assert_allclose(path.segments[0], P)
    np.testing.assert_allclose(path.segments[-1], Q)
    for S in path.segments:
        assert np.trace(S).real == pytest.approx(1, abs=1e-12)
        assert np.linalg.eigvalsh(S).min() > 0
    assert length**2 <= path.energy * (1 + 1e-12)
    assert np.all(np.diff(path.history) <= 1e-15 * path.history[0])
    assert path_length(spec, path.segments) == pytest.approx(length, rel=1e-12)
    # straight line is never shorter than the optimized path
    ts = np.linspace(0, 1, 17)
    line = [(1 - t) * P + t * Q for t in ts]
    assert path_energy(spec, line) >= path.energy * (1 - 1e-12)


@pytest.mark.parametrize("spec", ["log", "bures"])
def test_refinement_converges(spec, rng):
    P, Q = sample_pair(rng, 2)
    l16, _ = geodesic_distance(spec, P, Q, m=16)
    l32, _ = geodesic_distance(spec, P, Q, m=32)
    assert abs(l32 - l16) < 1e-3


def test_bures_metric_length_is_twice_angle(rng):
    ratios = []
    for _ in range(5):
        P, Q = sample_pair(rng, 2)
        length, _ = geodesic_distance("bures", P, Q, m=32)
        ratios.append(length / bures_angle(P, Q))
    np.testing.assert_allclose(ratios, 2.0, rtol=1e-3)


def test_symmetry(rng):
    P, Q = sample_pair(rng, 2)
    assert geodesic_distance("log", P, Q, m=16)[0] == pytest.approx(geodesic_distance("log", Q, P, m=16)[0], rel=1e-6)


def test_monotone_under_channels(rng):
    for _ in range(3):
        phi = random_cptp(2, rng)
        P, Q = sample_pair(rng, 2)
        before = geodesic_distance("log", P, Q, m=16)[0]
        after = geodesic_distance("log", phi.apply(P), phi.apply(Q), m=16)[0]
        assert after <= before + 2e-3


def test_normalized_ordering(rng):
    for _ in range(3):
        P, Q = sample_pair(rng, 2)

        def d(spec):
            g = gfun.parse(spec)
            return geodesic_distance(g, P, Q, m=16)[0] / np.sqrt(g.k_raw_at_one())

        assert d("quadratic") >= d("log") - 2e-3
        assert d("log") >= d("bures") - 2e-3


def test_config_roundtrip(rng):
    P, Q = sample_pair(rng, 2)
    length, path = geodesic_distance("log", P, Q, config=GeodesicConfig(m=8))
    d = path.to_dict()
    assert d["m"] == 8 and len(d["segments"]) == 9 and d["length"] == length
