import pytest
from hypothesis import HealthCheck, settings

from mirlab.instances import knapsack2
from mirlab.model import to_standard_form

settings.register_profile(
    "mirlab", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("mirlab")


@pytest.fixture
def knapsack():
    return to_standard_form(knapsack2())


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion as PASS or FAIL for the terminal summary."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    class Recorder:
        def __init__(self):
            self.key = None

        def __call__(self, number, title):
            self.key = (number, title)
            results[self.key] = "FAIL"
            return self

        def passed(self, detail=""):
            results[self.key] = "PASS" + (f" ({detail})" if detail else "")

        def failed(self, detail=""):
            results[self.key] = "FAIL" + (f" ({detail})" if detail else "")

    return Recorder()


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), status in sorted(results.items()):
        terminalreporter.write_line(f"criterion {number} {status.split()[0]}: {title} {' '.join(status.split()[1:])}".rstrip())
