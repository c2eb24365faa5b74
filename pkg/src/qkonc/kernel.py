"""Fidelity kernels and Gram matrices.

Exact entries come from overlaps of cached encoded states; shot-sampled
entries draw Bernoulli outcomes of the all-zeros measurement after the
compiled circuit ``W^dagger(x') W(x)``.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .circuits import Circuit, bind, encode, is_symmetric
from .sampling import parallel_map, stream
from .statevec import fidelity, prob_all_zeros, run, run_symmetric


class _Counter:
    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def add(self, k: int = 1) -> None:
        with self._lock:
            self.value += k

    def reset(self) -> None:
        with self._lock:
            self.value = 0


# number of encoded-state preparations performed by this module
preparations = _Counter()


def _check_encoder(circuit: Circuit) -> None:
    if circuit.n_theta_slots:
        raise ValueError(
            f"circuit has {circuit.n_theta_slots} unbound Theta slots; "
            "kernels need a pure data encoder (see Circuit.as_encoder)"
        )


def encode_states(circuit: Circuit, data, threads: int = 1) -> list:
    _check_encoder(circuit)
    X = _as_dataset(data, circuit.n_data_slots)
    states = parallel_map(lambda i: encode(circuit, X[i]), X.shape[0], threads)
    preparations.add(len(states))
    return states


def kernel_entry(circuit: Circuit, x, x_prime) -> float:
    _check_encoder(circuit)
    a = encode(circuit, x)
    b = encode(circuit, x_prime)
    preparations.add(2)
    return fidelity(a, b)


def compiled_probability(circuit: Circuit, x, x_prime) -> float:
    """All-zeros probability after ``W^dagger(x') W(x)`` on |0...0>."""
    _check_encoder(circuit)
    gates = bind(circuit, x) + bind(circuit.adjoint(), x_prime)
    if is_symmetric(circuit):
        state = run_symmetric(circuit.n_qubits, gates)
    else:
        state = run(circuit.n_qubits, gates)
    return prob_all_zeros(state)


def sample_all_zeros(p: float, shots: int, rng: np.random.Generator) -> float:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = min(max(p, 0.0), 1.0)
    return int(rng.binomial(shots, p)) / shots


def kernel_entry_shots(circuit: Circuit, x, x_prime, shots: int, rng: np.random.Generator) -> float:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return sample_all_zeros(compiled_probability(circuit, x, x_prime), shots, rng)


@dataclass
class GramMatrix:
    entries: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def off_diagonal(self) -> np.ndarray:
        iu = np.triu_indices(self.size, k=1)
        return self.entries[iu]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.entries:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"meta": self.meta, "entries": self.entries.tolist()}, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "GramMatrix":
        d = json.loads(text)
        return cls(np.asarray(d["entries"], dtype=np.float64), d["meta"])

    @classmethod
    def from_csv(cls, text: str, meta: dict | None = None) -> "GramMatrix":
        rows = [[float(v) for v in r] for r in csv.reader(io.StringIO(text)) if r]
        return cls(np.asarray(rows, dtype=np.float64), meta or {})


def _as_dataset(data, dim: int) -> np.ndarray:
    if isinstance(data, np.ndarray):
        X = np.asarray(data, dtype=np.float64)
        if X.ndim == 1 and dim <= 1:
            X = X.reshape(-1, 1)
    else:
        rows = [np.atleast_1d(np.asarray(r, dtype=np.float64)) for r in data]
        if any(r.shape != (dim,) for r in rows):
            raise ValueError(f"inconsistent dimensions: every point must have {dim} components")
        X = np.array(rows).reshape(len(rows), dim)
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"inconsistent dimensions: data has shape {X.shape}, circuit expects {dim} components")
    return X


def gram(
    circuit: Circuit,
    dataset,
    shots: int = 0,
    seed: int = 0,
    threads: int = 1,
) -> GramMatrix:
    """Kernel matrix over ``dataset`` (rows are points).

    One state preparation per point; bitwise-equal points get exactly 1.
    With ``shots > 0`` each upper-triangle entry is a binomial estimate
    drawn from its own ``(seed, i, j)`` stream, and the estimate is
    mirrored so the matrix stays exactly symmetric.
    """
    if shots < 0:
        raise ValueError("shots must be >= 0")
    X = _as_dataset(dataset, circuit.n_data_slots)
    states = encode_states(circuit, X, threads)
    n = len(states)
    K = np.zeros((n, n), dtype=np.float64)

    def row(i: int) -> np.ndarray:
        vals = np.empty(n - i)
        for j in range(i, n):
            # equal inputs give the same pure state; skip the norm roundoff
            p = 1.0 if np.array_equal(X[i], X[j]) else fidelity(states[i], states[j])
            vals[j - i] = p if shots == 0 else sample_all_zeros(p, shots, stream(seed, i, j))
        return vals

    for i, vals in enumerate(parallel_map(row, n, threads)):
        K[i, i:] = vals
        K[i:, i] = vals
    meta = {
        "ansatz": None if circuit.spec is None else circuit.spec.to_dict(),
        "n_qubits": circuit.n_qubits,
        "shots": shots,
        "seed": seed,
    }
    return GramMatrix(K, meta)
