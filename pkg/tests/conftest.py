from __future__ import annotations

import sys

import numpy as np
import pytest

from skewtorsion.numerics import Tolerance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tol():
    return Tolerance()


def random_skew(rng, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return a - a.T


def random_orthogonal(rng, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def unit_vector(rng, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
