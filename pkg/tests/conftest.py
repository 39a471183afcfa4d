import numpy as np
import pytest
from hypothesis import settings

from varlex import GridDomain

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def unit():
    return GridDomain.interval(0.0, 1.0, 1024)


@pytest.fixture
def square():
    return GridDomain.box((0.0, 0.0), (1.0, 1.0), (64, 64))


def smooth_samples(domain, rng, terms=6):
    """Random trigonometric sum on the first coordinate, bounded and smooth."""
    x = domain.centers[:, 0]
    k = rng.integers(1, 5, size=terms)
    a = rng.normal(size=terms) / k
    ph = rng.uniform(0, 2 * np.pi, size=terms)
    return np.cos(2 * np.pi * np.outer(x, k) + ph) @ a + rng.normal()


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``criterion(n, title, ok, detail)``; the test then fails if ``ok`` is false.
    """
    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
