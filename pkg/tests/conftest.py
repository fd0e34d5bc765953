from __future__ import annotations

from pathlib import Path

import pytest

from viewclean.session import Session

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def golden_metadata_csv() -> bytes:
    return (DATA_DIR / "golden_metadata.csv").read_bytes()


@pytest.fixture(scope="session")
def providers_sample_csv() -> bytes:
    return (DATA_DIR / "providers_sample.csv").read_bytes()


@pytest.fixture(scope="session")
def case_study_csv() -> bytes:
    return (DATA_DIR / "case_study.csv").read_bytes()


@pytest.fixture
def fixture_session(golden_metadata_csv) -> Session:
    """Fresh session holding the 12-row golden table as 'metadata'."""
    session = Session()
    session.load_table(golden_metadata_csv, name="metadata", id_attribute="ID")
    return session


@pytest.fixture
def sample_session(providers_sample_csv) -> Session:
    session = Session()
    session.load_table(providers_sample_csv, name="sample", id_attribute="ID")
    return session


@pytest.fixture
def case_study_session(case_study_csv) -> Session:
    session = Session()
    session.load_table(case_study_csv, name="dias")
    return session


@pytest.fixture
def frozen_clock(monkeypatch):
    """Pin every timestamp the package generates to one instant."""
    fixed = "2024-01-01T00:00:00+00:00"

    def fake_now() -> str:
        return fixed

    for module in ("viewclean.model", "viewclean.marking", "viewclean.corrections", "viewclean.session"):
        monkeypatch.setattr(f"{module}.now_iso", fake_now)
    return fixed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") != "call" and outcome == "passed":
                continue
            name = nodeid.split("::")[-1]
            lines.append((name, label))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, label in sorted(set(lines)):
            terminalreporter.write_line(f"{label}: {name}")
