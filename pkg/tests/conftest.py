"""Shared oracles: a dense-matrix simulator built from Kronecker products.

Independent of the strided kernels in ``qkonc.statevec``; only used to
check them.
"""

from __future__ import annotations

import itertools
import math
from functools import reduce

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def expm_pauli(P: np.ndarray, a: float) -> np.ndarray:
    """exp(-i a P / 2) for P with P @ P = 1."""
    return math.cos(a / 2) * np.eye(P.shape[0]) - 1j * math.sin(a / 2) * P


def embed(ops: dict[int, np.ndarray], n: int) -> np.ndarray:
    """Tensor product with qubit 0 as the least-significant index bit."""
    return reduce(np.kron, [ops.get(q, I2) for q in reversed(range(n))])


def oracle_unitary(kind: str, targets, angle, n: int) -> np.ndarray:
    if kind == "H":
        return embed({targets[0]: H}, n)
    if kind == "X":
        return embed({targets[0]: X}, n)
    if kind in ("RX", "RY", "RZ"):
        P = {"RX": X, "RY": Y, "RZ": Z}[kind]
        return embed({targets[0]: expm_pauli(P, angle)}, n)
    if kind == "RZZ":
        return expm_pauli(embed({targets[0]: Z, targets[1]: Z}, n), angle)
    if kind == "CZ":
        return np.eye(2**n) - 2 * embed({targets[0]: (I2 - Z) / 2, targets[1]: (I2 - Z) / 2}, n)
    if kind == "CNOT":
        c, t = targets
        P1 = (I2 - Z) / 2
        return embed({c: (I2 + Z) / 2}, n) + embed({c: P1, t: X}, n)
    if kind == "GlobalRX":
        return reduce(np.matmul, [embed({q: expm_pauli(X, angle)}, n) for q in range(n)])
    if kind == "GlobalRZZ":
        U = np.eye(2**n, dtype=complex)
        for i, j in itertools.combinations(range(n), 2):
            U = expm_pauli(embed({i: Z, j: Z}, n), 2 * angle) @ U
        return U
    raise ValueError(kind)


def oracle_run(n: int, gates) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for g in gates:
        psi = oracle_unitary(g.kind.value, g.targets, g.angle, n) @ psi
    return psi


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
