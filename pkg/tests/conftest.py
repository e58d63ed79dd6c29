import random

import pytest

from bimem import kernels


@pytest.fixture
def rng():
    return random.Random(1234)


KERNEL_IMPLS = [pytest.param(kernels.python, id="python")]
if kernels.compiled is not None:
    KERNEL_IMPLS.append(pytest.param(kernels.compiled, id="cython"))


@pytest.fixture(params=KERNEL_IMPLS)
def kernel_impl(request):
    return request.param


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL line per acceptance criterion for the run summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, ok: bool | None, detail: str) -> bool | None:
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"[criterion {number:2d}] {status}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
