import pytest

from tagrocchio.data import Poi, ProfileEntry, UserProfile
from tagrocchio.experiments import Dataset
from tagrocchio.fixtures import generate_fixture

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _criteria[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")


@pytest.fixture(scope="session")
def small_dataset():
    return Dataset.from_fixture(generate_fixture(3, n_users=4, n_pois=80, n_tags=12))


@pytest.fixture
def sample_profile():
    return UserProfile(
        "u1",
        (
            ProfileEntry(Poi.from_raw("duomo", ["history", "architecture"]), 4),
            ProfileEntry(Poi.from_raw("fitzwilliam", ["history", "museum"]), 3),
            ProfileEntry(Poi.from_raw("temple-bar", ["pub", "beer", "bar-hopping"]), 1),
            ProfileEntry(Poi.from_raw("keens", ["pub", "restaurants"]), 2),
        ),
    )
