import pytest

from raspref.backends.scripted import ScriptedBackend, hash_embedding
from raspref.domain import Problem, StructuredPrompt, Trajectory
from raspref.store import TrajectoryStore

_acceptance: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion this test gates")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    num, text = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _acceptance[num] = (outcome, text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_acceptance, key=lambda n: int(str(n))):
        outcome, text = _acceptance[num]
        terminalreporter.write_line(f"criterion {num}: {outcome}  {text}")


@pytest.fixture
def backend():
    return ScriptedBackend()


@pytest.fixture
def store(tmp_path):
    return TrajectoryStore.open(tmp_path / "store")


def make_trajectory(i: int, statement: str | None = None, trace: str | None = None, dim: int = 256, **kw):
    statement = statement or f"Problem number {i} about item{i} and widget{i}."
    return Trajectory(
        problem=Problem(id=f"p{i}", statement=statement),
        prompt=StructuredPrompt(instructions="Solve it."),
        trace=trace or f"Compute item{i} total.\n#### {i}",
        embedding=hash_embedding(statement, dim).values,
        **kw,
    )
