import os
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from straloop.hastruct import resolve_and_assemble
from straloop.modelfile import bundled, bundled_names
from straloop.synthesis import run_fixpoint

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("quick", max_examples=15, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@lru_cache(maxsize=None)
def synthesized(name: str):
    """``(modelfile, family, partition)`` for a bundled model, computed once."""
    mf = bundled(name)
    fam, part = run_fixpoint(mf.model(), mf.spec, mf.k, method=mf.method, threads=1)
    return mf, fam, part


@lru_cache(maxsize=None)
def reactor_automaton(restricted: bool = True):
    mf, fam, part = synthesized("reactor")
    init = mf.inits if restricted else None
    return resolve_and_assemble(mf.model(), fam, part, mf.spec, init=init)


@pytest.fixture(scope="session")
def reactor():
    return synthesized("reactor")


@pytest.fixture(scope="session")
def reactor_model(reactor):
    return reactor[0].model()


@pytest.fixture(scope="session")
def family(reactor):
    return reactor[1]


@pytest.fixture(scope="session")
def partition(reactor):
    return reactor[2]


@pytest.fixture(scope="session")
def automaton():
    return reactor_automaton(True)


@pytest.fixture(params=bundled_names())
def model_name(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = getattr(sys.modules.get("test_acceptance"), "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
