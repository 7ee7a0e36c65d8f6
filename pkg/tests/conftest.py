import numpy as np
import pytest

from lmfcc.kernels import KernelSet, MfccConfig


@pytest.fixture(scope="session")
def default_kernels():
    return KernelSet.initial(MfccConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    results = request.config.stash[_ACCEPTANCE_KEY]

    def record(name, passed, detail):
        results[name] = (bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(results):
        passed, detail = results[name]
        terminalreporter.write_line(f"{name} {'PASS' if passed else 'FAIL'}  {detail}")
