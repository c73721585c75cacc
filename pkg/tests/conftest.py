import pytest
from hypothesis import HealthCheck, settings

from bucketed_hash import available_backends, generate_keys, make_config
from bucketed_hash.core import threshold_from_pct

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BACKENDS = available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def small_config(kind, n, lf, b=None, pct=80, seed=0, **kw):
    b = b or {"1cht": 1, "bcht": 16, "bp2ht": 32, "iht": 32}[kind]
    t = threshold_from_pct(pct, b) if kind == "iht" else None
    return make_config(kind, n, lf, b, t, seed=seed, **kw)


@pytest.fixture(scope="session")
def keys_10k():
    return generate_keys(11, 10_000)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
