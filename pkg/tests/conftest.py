import numpy as np
import pytest

from patchsep.audio_io import Waveform

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(criterion, passed, detail=""):
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def noise_1s():
    return Waveform(np.random.default_rng(7).uniform(-0.5, 0.5, 8000), 8000)


def toy_templates(seed=0, copies=200, dim=150, jitter=0.01):
    """Two random templates, ``copies`` jittered copies of each, plus membership labels."""
    r = np.random.default_rng(seed)
    templates = r.uniform(0.1, 0.9, size=(2, dim))
    membership = np.repeat([0, 1], copies)
    data = templates[membership] + r.uniform(-jitter, jitter, size=(2 * copies, dim))
    return data, membership
