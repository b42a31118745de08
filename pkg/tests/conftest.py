import json

import numpy as np
import pytest

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in sorted(_ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"ACCEPTANCE {name}: {outcome}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as handle:
        for line in lines:
            handle.write(line + "\n")
    return path


def make_record_file(path, rows):
    return write_lines(path, [json.dumps(r) for r in rows])


@pytest.fixture
def record_file_factory(tmp_path):
    def _make(name, rows):
        return make_record_file(tmp_path / name, rows)

    return _make
