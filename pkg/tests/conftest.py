import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "swlab", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("swlab")

# criterion label -> list of (check name, passed, detail); filled by test_acceptance
ACCEPTANCE_RESULTS: dict[str, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS, key=lambda s: (len(s.split()[0]), s)):
        for name, ok, detail in ACCEPTANCE_RESULTS[label]:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label} / {name}: {detail}")
