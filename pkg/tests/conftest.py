import pytest

from lrt import config as C
from lrt import pipeline

# acceptance verdicts, collected for the terminal summary
VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        VERDICTS[number] = line
        with capsys.disabled():
            print(f"\n{line}")

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])


@pytest.fixture(scope="session")
def reduced_cfg():
    return C.resolve("reduced")


@pytest.fixture(scope="session")
def reduced_data(reduced_cfg):
    """Training and test sets of the reduced profile (about 30 s to generate)."""
    return pipeline.make_training(reduced_cfg), pipeline.make_test(reduced_cfg)
