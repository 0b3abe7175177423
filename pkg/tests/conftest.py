import pytest

from sumfunc.sieve import BUILTIN_KINDS, build_tables, constant

BIG = 10**7


@pytest.fixture(scope="session")
def big_tables():
    """Every built-in kind up to 10^7 from one sieve pass."""
    return build_tables(BUILTIN_KINDS, BIG)


@pytest.fixture(scope="session")
def small_tables():
    return build_tables(BUILTIN_KINDS + (constant(1),), 5000)


_acceptance_lines = []


@pytest.fixture
def acceptance_line():
    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
