import os

import pytest

from oukraichnan.harness import SweepConfig, run_sweep

SWEEP_SEED = 20261016
_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def default_sweep():
    """The default four-eps sweep, run once per session (about a quarter hour on one core)."""
    return run_sweep(SweepConfig(), seed=SWEEP_SEED, workers=int(os.environ.get("OUKRAICHNAN_WORKERS", "1")))


@pytest.fixture
def record_criterion():
    def record(name: str, ok: bool, detail: str):
        _ACCEPTANCE[name] = (bool(ok), detail)
        print(f"{name}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s[1:])):
        ok, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{name:<4} {'PASS' if ok else 'FAIL'}  {detail}")
