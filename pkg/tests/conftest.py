import time

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SESSION_START = time.monotonic()
ACCEPTANCE_LINES: list[str] = []


def pytest_collection_modifyitems(config, items):
    # acceptance checks run last so the runtime criterion sees the whole suite
    items.sort(key=lambda item: item.nodeid.split("::")[0].endswith("test_acceptance.py"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
