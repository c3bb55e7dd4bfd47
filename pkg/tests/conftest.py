from __future__ import annotations

import numpy as np
import pytest

from tnnfl.numeric import RngStream, haar_unitaries
from tnnfl.oracle import McConfig, run_chunks
from tnnfl.states import contract_peps_batch

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


_NORM_CACHE: dict[tuple, np.ndarray] = {}


@pytest.fixture(scope="session")
def peps_norms():
    """Cached samples of <Ψ|Ψ> for Haar PEPS, keyed by (L, d, D, n_samples, seed)."""

    def get(L: int, d: int, D: int, n_samples: int, seed: int) -> np.ndarray:
        key = (L, d, D, n_samples, seed)
        if key not in _NORM_CACHE:
            dim = D * D * d

            def sampler(gen, count):
                u = haar_unitaries(dim, count * L * L, gen).reshape(count, L, L, dim, dim)
                return (np.abs(contract_peps_batch(u, d, D)) ** 2).sum(axis=1)

            _NORM_CACHE[key] = run_chunks(sampler, McConfig(n_samples, seed))
        return _NORM_CACHE[key]

    return get


@pytest.fixture
def rng():
    return RngStream(12345).generator()
