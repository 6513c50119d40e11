import numpy as np
import pytest

from nfisac.array import ArrayConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def cfg32():
    return ArrayConfig.half_wavelength(32, 300e9)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_row_orthonormal(rng, k, n):
    "Haar-ish k x n matrix with orthonormal rows."
    q, r = np.linalg.qr(crandn(rng, n, k))
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q.conj().T


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str):
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
