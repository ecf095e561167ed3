import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

_ACCEPTANCE_MODULE = "test_acceptance"


def pytest_runtest_logreport(report):
    """Print one pass/fail line per acceptance criterion."""
    if report.when != "call":
        return
    module = report.nodeid.split("::", 1)[0]
    if _ACCEPTANCE_MODULE not in module:
        return
    name = report.nodeid.split("::", 1)[1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {status}: {name}")


@pytest.fixture
def tmp_log(tmp_path):
    return tmp_path / "arena.log.jsonl"
