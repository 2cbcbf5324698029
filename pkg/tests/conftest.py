import functools

import pytest

from freebound import disk, normalize, rectangle, square


@functools.lru_cache(maxsize=None)
def domain(tag: str, n: int):
    spec = {"disk": disk, "square": square, "rectangle2": lambda n: rectangle(2.0, n)}[tag](n)
    return normalize(spec)


@pytest.fixture(scope="session")
def get_domain():
    return domain


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
