import math

import numpy as np
import pytest
from scipy.linalg import expm

from iontc.qops import Generator, all_generators, generator_matrix
from iontc.seqmodel import Pulse, PulseSequence


def expm_oracle(g: Generator, theta: float, n: int) -> np.ndarray:
    """Generic scaling-and-squaring exponential of the Hermitian generator."""
    return expm(-1j * g.coefficient * theta * generator_matrix(g, n))


def random_sequence(rng, n_qubits: int, length: int, include_y: bool = True, scale: float = math.pi) -> PulseSequence:
    gens = all_generators(n_qubits, include_y=include_y)
    return PulseSequence(
        tuple(Pulse(gens[rng.integers(len(gens))], float(rng.uniform(-scale, scale))) for _ in range(length)),
        n_qubits,
    )


def central_differences(f, x: float, h: float):
    f0, fp, fm = f(x), f(x + h), f(x - h)
    return (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for the acceptance summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
        print(line)
        lines.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
