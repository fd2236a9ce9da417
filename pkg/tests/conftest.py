import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ttheat import tt_core

settings.register_profile(
    "ttheat", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ttheat")


def random_tt(rng, sizes=(8, 8, 8), ranks=(3, 2), centering="vertex"):
    n1, n2, n3 = sizes
    r1, r2 = ranks
    cores = [rng.standard_normal((1, n1, r1)), rng.standard_normal((r1, n2, r2)),
             rng.standard_normal((r2, n3, 1))]
    return tt_core.TTTensor3(cores, centering)


def dense(A):
    return tt_core.to_full(A).data


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Verdicts of tests/test_acceptance.py, printed once at the end of the run.
ACCEPTANCE = {}


def record_acceptance(number, title, ok, detail):
    ACCEPTANCE[number] = (title, ok, detail)
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{n}. {'PASS' if ok else 'FAIL'}  {title}: {detail}")
