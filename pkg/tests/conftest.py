import pytest

from latticefp.data import textile_path
from latticefp.modelfile import load_model

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def textile():
    model, _ = load_model(textile_path())
    return model


@pytest.fixture
def record():
    """Log a one-line verdict for the acceptance summary."""
    def _record(label, passed, detail=""):
        _ACCEPTANCE.append((label, passed, detail))
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")

