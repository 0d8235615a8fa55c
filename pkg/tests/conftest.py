import itertools
from functools import reduce

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def kron_all(mats):
    return reduce(np.kron, mats)


def dense_post_vote(m, votes, pre_fourier=False):
    """Reference post-vote vector built from full Kronecker products.

    Shares nothing with the sparse simulator: the Fourier and shift matrices
    are written out from their defining formulas here.
    """
    n = len(votes)
    w = np.zeros(m**n, dtype=complex)
    repunit = sum(m**p for p in range(n))
    w[np.arange(m) * repunit] = m**-0.5
    jl = np.outer(np.arange(m), np.arange(m))
    f = np.exp(2j * np.pi * jl / m) / np.sqrt(m)
    shifts = []
    for a in votes:
        p = np.zeros((m, m))
        for j in range(m):
            p[(j + a) % m, j] = 1
        shifts.append(p)
    if pre_fourier:
        w = kron_all([f] * n) @ w
        return kron_all(shifts) @ w
    return kron_all([p @ f for p in shifts]) @ w


def constraint_slice(m, shifts):
    """All tuples (l_k + a_k mod m) with sum(l) = 0 mod m, by brute force."""
    n = len(shifts)
    return sorted(
        tuple((l + a) % m for l, a in zip(ls, shifts))
        for ls in itertools.product(range(m), repeat=n)
        if sum(ls) % m == 0
    )


@pytest.fixture
def acceptance_report():
    def report(criterion, ok, detail=""):
        ACCEPTANCE_LINES.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
