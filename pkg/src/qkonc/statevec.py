"""Dense pure-state simulation.

Amplitudes live in a flat complex128 array; qubit ``q`` is bit ``q`` of the
basis index (qubit 0 is the least-significant bit).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

NORM_TOL = 1e-12


class GateKind(str, enum.Enum):
    H = "H"
    X = "X"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    RZZ = "RZZ"
    CNOT = "CNOT"
    CZ = "CZ"
    GLOBAL_RX = "GlobalRX"
    GLOBAL_RZZ = "GlobalRZZ"


PARAMETRIC = frozenset(
    {GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RZZ, GateKind.GLOBAL_RX, GateKind.GLOBAL_RZZ}
)
TWO_QUBIT = frozenset({GateKind.RZZ, GateKind.CNOT, GateKind.CZ})
# rotations exp(-i a P / 2) with P a single Pauli string: two-term shift rule applies
SHIFTABLE = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RZZ})
SELF_INVERSE = frozenset({GateKind.H, GateKind.X, GateKind.CNOT, GateKind.CZ})


# -- parameter slots ---------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class DataComponent:
    """Angle ``scale * x[index]``."""

    index: int
    scale: float = 1.0


@dataclass(frozen=True)
class Theta:
    """Angle ``scale * theta[index]``."""

    index: int
    scale: float = 1.0


@dataclass(frozen=True)
class DataExpr:
    """Product form ``scale * prod(offset - x[i] for i in indices)``."""

    indices: tuple[int, ...]
    scale: float = 2.0
    offset: float = math.pi


Slot = Union[Constant, DataComponent, Theta, DataExpr]


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    targets: tuple[int, ...]
    param: Slot | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind in PARAMETRIC and self.param is None:
            raise ValueError(f"{self.kind.value} needs a parameter slot")
        if self.kind not in PARAMETRIC and self.param is not None:
            raise ValueError(f"{self.kind.value} takes no parameter")
        if self.kind in TWO_QUBIT:
            if len(self.targets) != 2 or self.targets[0] == self.targets[1]:
                raise ValueError(f"{self.kind.value} needs two distinct targets, got {self.targets}")
        elif self.kind not in (GateKind.GLOBAL_RX, GateKind.GLOBAL_RZZ) and len(self.targets) != 1:
            raise ValueError(f"{self.kind.value} acts on one qubit, got {self.targets}")

    @property
    def angle(self) -> float | None:
        if isinstance(self.param, Constant):
            return self.param.value
        return None


# -- state -------------------------------------------------------------------


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


class NormDriftError(RuntimeError):
    """Raised when a gate sequence leaves the state off the unit sphere."""


def check_norm(amps: np.ndarray, tol: float = NORM_TOL) -> None:
    drift = abs(float(np.vdot(amps, amps).real) - 1.0)
    if drift > tol:
        raise NormDriftError(f"state norm drifted by {drift:.3e}")


# -- diagonal helpers (cached per qubit count) --------------------------------


@lru_cache(maxsize=64)
def _bits(n: int, q: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx >> q) & 1).astype(np.intp)


@lru_cache(maxsize=32)
def _popcount(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    count = np.zeros(1 << n, dtype=np.intp)
    for q in range(n):
        count += (idx >> q) & 1
    return count


@lru_cache(maxsize=64)
def _cnot_pairs(n: int, control: int, target: int) -> tuple[np.ndarray, np.ndarray]:
    sel = np.flatnonzero((_bits(n, control) == 1) & (_bits(n, target) == 0))
    return sel, sel | (1 << target)


def _zz_eigen(n: int) -> np.ndarray:
    # sum_{i<j} z_i z_j on each popcount value k: ((n - 2k)^2 - n) / 2
    k = np.arange(n + 1)
    return ((n - 2 * k) ** 2 - n) / 2.0


# -- kernels (in place on a flat array) ---------------------------------------


def _apply_1q(amps: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    view = amps.reshape(1 << (n - 1 - q), 2, 1 << q)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    view[:, 1, :] = m[1, 0] * a0 + m[1, 1] * a1


def _rx(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def _apply_inplace(amps: np.ndarray, n: int, kind: GateKind, targets: Sequence[int], angle: float | None) -> None:
    if kind is GateKind.H:
        _apply_1q(amps, n, targets[0], _H)
    elif kind is GateKind.X:
        _apply_1q(amps, n, targets[0], _X)
    elif kind is GateKind.RX:
        _apply_1q(amps, n, targets[0], _rx(angle))
    elif kind is GateKind.RY:
        _apply_1q(amps, n, targets[0], _ry(angle))
    elif kind is GateKind.RZ:
        table = np.array([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
        amps *= table[_bits(n, targets[0])]
    elif kind is GateKind.RZZ:
        parity = _bits(n, targets[0]) ^ _bits(n, targets[1])
        table = np.array([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
        amps *= table[parity]
    elif kind is GateKind.CZ:
        both = _bits(n, targets[0]) & _bits(n, targets[1])
        amps[both.astype(bool)] *= -1.0
    elif kind is GateKind.CNOT:
        lo, hi = _cnot_pairs(n, targets[0], targets[1])
        amps[lo], amps[hi] = amps[hi], amps[lo].copy()
    elif kind is GateKind.GLOBAL_RX:
        m = _rx(angle)
        for q in range(n):
            _apply_1q(amps, n, q, m)
    elif kind is GateKind.GLOBAL_RZZ:
        table = np.exp(-1j * angle * _zz_eigen(n))
        amps *= table[_popcount(n)]
    else:  # pragma: no cover
        raise ValueError(f"unknown gate kind {kind}")


def _validate(n: int, gate: Gate, angle: float | None) -> None:
    for t in gate.targets:
        if not 0 <= t < n:
            raise ValueError(f"target {t} out of range for {n} qubits")
    if gate.kind in PARAMETRIC:
        if angle is None or not math.isfinite(angle):
            raise ValueError(f"non-finite angle {angle!r} for {gate.kind.value}")


def apply_gate(state: StateVector, gate: Gate, angle: float | None = None) -> StateVector:
    """Return the image of ``state`` under ``gate``.

    ``angle`` overrides the gate's slot; it is required unless the slot is a
    ``Constant``. The input state is left untouched.
    """
    if angle is None:
        angle = gate.angle
    _validate(state.n_qubits, gate, angle)
    amps = state.amplitudes.copy()
    _apply_inplace(amps, state.n_qubits, gate.kind, gate.targets, angle)
    check_norm(amps)
    return StateVector(state.n_qubits, amps)


def run(n_qubits: int, gates: Sequence[Gate], initial: StateVector | None = None) -> StateVector:
    """Simulate a fully bound gate list starting from ``initial`` (default |0...0>)."""
    if initial is None:
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
    else:
        if initial.n_qubits != n_qubits:
            raise ValueError("initial state has the wrong qubit count")
        amps = initial.amplitudes.copy()
    for gate in gates:
        angle = gate.angle
        _validate(n_qubits, gate, angle)
        _apply_inplace(amps, n_qubits, gate.kind, gate.targets, angle)
    check_norm(amps)
    return StateVector(n_qubits, amps)


def fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap ``|<a|b>|^2``.

    Also accepts two ``DickeState`` values, whose basis is orthonormal.
    """
    if type(a) is not type(b):
        raise TypeError("fidelity needs two states of the same representation")
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    ov = np.vdot(a.amplitudes, b.amplitudes)
    # re^2 + im^2 is invariant under conjugation, so argument order never matters
    return float(min(ov.real * ov.real + ov.imag * ov.imag, 1.0))


def prob_all_zeros(state: StateVector) -> float:
    # |0...0> is the k = 0 Dicke state, so index 0 works for both representations
    a0 = state.amplitudes[0]
    return float(a0.real * a0.real + a0.imag * a0.imag)


def z_string_expectation(state: StateVector, mask: int) -> float:
    """<psi| prod_{q in mask} Z_q |psi> by direct summation over basis states."""
    n = state.n_qubits
    idx = np.arange(1 << n, dtype=np.int64)
    parity = np.zeros(1 << n, dtype=np.int64)
    for q in range(n):
        if (mask >> q) & 1:
            parity ^= (idx >> q) & 1
    probs = np.abs(state.amplitudes) ** 2
    return float(np.sum(np.where(parity == 1, -probs, probs)))


# -- symmetric-subspace fast path ---------------------------------------------
#
# Circuits built only from GlobalRX / GlobalRZZ and started in |0...0> never
# leave the span of the Dicke states |D_k> (k = number of ones). That span has
# dimension n + 1, so such circuits are simulated exactly in O(n^2) per gate.

SYMMETRIC_KINDS = frozenset({GateKind.GLOBAL_RX, GateKind.GLOBAL_RZZ})


@dataclass
class DickeState:
    """Pure state of the permutation-symmetric subspace, in the Dicke basis."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.n_qubits + 1,):
            raise ValueError(f"expected {self.n_qubits + 1} Dicke amplitudes")

    def to_full(self) -> StateVector:
        n = self.n_qubits
        k = _popcount(n)
        binom = np.array([math.comb(n, j) for j in range(n + 1)], dtype=np.float64)
        return StateVector(n, self.amplitudes[k] / np.sqrt(binom[k]))


@lru_cache(maxsize=64)
def _sum_x_eigh(n: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(n)
    off = np.sqrt((k + 1.0) * (n - k))
    sx = np.diag(off, 1) + np.diag(off, -1)
    return np.linalg.eigh(sx)


def run_symmetric(n_qubits: int, gates: Sequence[Gate]) -> DickeState:
    amps = np.zeros(n_qubits + 1, dtype=np.complex128)
    amps[0] = 1.0
    evals, evecs = _sum_x_eigh(n_qubits)
    zz = _zz_eigen(n_qubits)
    for gate in gates:
        angle = gate.angle
        _validate(n_qubits, gate, angle)
        if gate.kind is GateKind.GLOBAL_RX:
            amps = evecs @ (np.exp(-0.5j * angle * evals) * (evecs.T @ amps))
        elif gate.kind is GateKind.GLOBAL_RZZ:
            amps = amps * np.exp(-1j * angle * zz)
        else:
            raise ValueError(f"{gate.kind.value} does not preserve the symmetric subspace")
    check_norm(amps)
    return DickeState(n_qubits, amps)
