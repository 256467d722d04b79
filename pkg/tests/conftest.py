import numpy as np
import pytest

from qdiv import gfun
from qdiv.contraction import OptimizerConfig
from qdiv.sampling import random_density, random_traceless

#: the four g families of the library, by shorthand
FOUR_G = ["log", "quadratic", "bures", "power:0.5"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fast_cfg():
    """Small multistart budget for unit tests."""
    return OptimizerConfig(starts=4, seed=7, maxiter=600, geod_pairs=1, geod_m=8)


@pytest.fixture
def diag_pair():
    return np.diag([0.5, 0.5]).astype(complex), np.diag([0.75, 0.25]).astype(complex)


def sample_pair(rng, n, mix=0.1):
    return random_density(n, rng, mix), random_density(n, rng, mix)


def sample_direction(rng, n):
    return random_traceless(n, rng)


def all_gs():
    return [gfun.parse(s) for s in FOUR_G]


# -- acceptance bookkeeping ------------------------------------------------

_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """``criterion(k, ok, detail)`` records one clause of acceptance criterion ``k``."""
    store = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(k, ok, detail=""):
        store.setdefault(k, []).append((bool(ok), request.node.name, detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(store):
        clauses = store[k]
        ok = all(c[0] for c in clauses)
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}")
        for passed, name, detail in clauses:
            terminalreporter.write_line(f"    [{'ok' if passed else 'FAILED'}] {name}: {detail}")
