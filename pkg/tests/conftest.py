import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from bhnoma.scenario import ScenarioConfig  # noqa: E402


@pytest.fixture
def small_cfg():
    """Four beams, two lit, four users on three carriers."""
    return ScenarioConfig(beam_count=4, max_active_beams=2, window_slots=4, users_per_beam=4,
                          subcarriers_per_beam=3, max_carriers_per_user=2)


@pytest.fixture
def scaled_cfg():
    return ScenarioConfig(beam_count=12, max_active_beams=2, window_slots=16,
                          demand_range=(150e6, 1050e6))


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and rep.passed):
        return
    number, title = marker.args
    details = [str(v) for k, v in item.user_properties if k == "detail"]
    _CRITERIA[number] = (title, rep.passed, details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, details = _CRITERIA[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)
