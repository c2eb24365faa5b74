"""Circuit IR, parameter binding and the ansatz catalog."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Any

import numpy as np

from .statevec import (
    SELF_INVERSE,
    Constant,
    DataComponent,
    DataExpr,
    Gate,
    GateKind,
    Slot,
    SYMMETRIC_KINDS,
    DickeState,
    StateVector,
    Theta,
    run,
    run_symmetric,
)


class Family(str, enum.Enum):
    HAVLICEK = "HavlicekZZ"
    PERM_INVARIANT = "PermInvariant"
    HARDWARE_EFFICIENT = "HardwareEfficient"
    PRODUCT_RX = "ProductRX"


FAMILY_ALIASES = {
    "havlicek": Family.HAVLICEK,
    "havlicekzz": Family.HAVLICEK,
    "zz": Family.HAVLICEK,
    "perm": Family.PERM_INVARIANT,
    "perminvariant": Family.PERM_INVARIANT,
    "hardware": Family.HARDWARE_EFFICIENT,
    "hardwareefficient": Family.HARDWARE_EFFICIENT,
    "hwe": Family.HARDWARE_EFFICIENT,
    "product": Family.PRODUCT_RX,
    "productrx": Family.PRODUCT_RX,
}


def parse_family(name: str | Family) -> Family:
    if isinstance(name, Family):
        return name
    try:
        return Family(name)
    except ValueError:
        pass
    key = name.lower().replace("_", "").replace("-", "")
    if key not in FAMILY_ALIASES:
        raise ValueError(f"unknown ansatz family {name!r}")
    return FAMILY_ALIASES[key]


@dataclass(frozen=True)
class AnsatzSpec:
    family: Family
    n_qubits: int
    depth: int = 1
    entanglement: str = "full"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", parse_family(self.family))
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.entanglement not in ("full", "linear"):
            raise ValueError(f"entanglement must be 'full' or 'linear', got {self.entanglement!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family.value,
            "n_qubits": self.n_qubits,
            "depth": self.depth,
            "entanglement": self.entanglement,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_data_slots: int = 0
    n_theta_slots: int = 0
    spec: AnsatzSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for t in g.targets:
                if not 0 <= t < self.n_qubits:
                    raise ValueError(f"gate {g.kind.value} targets qubit {t} outside 0..{self.n_qubits - 1}")
            p = g.param
            if isinstance(p, DataComponent) and not 0 <= p.index < self.n_data_slots:
                raise ValueError(f"data slot {p.index} >= n_data_slots={self.n_data_slots}")
            if isinstance(p, DataExpr) and any(not 0 <= i < self.n_data_slots for i in p.indices):
                raise ValueError(f"data expression {p.indices} exceeds n_data_slots={self.n_data_slots}")
            if isinstance(p, Theta) and not 0 <= p.index < self.n_theta_slots:
                raise ValueError(f"theta slot {p.index} >= n_theta_slots={self.n_theta_slots}")

    def __len__(self) -> int:
        return len(self.gates)

    def adjoint(self) -> "Circuit":
        """Inverse circuit: reversed order, every rotation angle negated."""
        inv = []
        for g in reversed(self.gates):
            if g.kind in SELF_INVERSE:
                inv.append(g)
            else:
                inv.append(replace(g, param=_negate(g.param)))
        return replace(self, gates=tuple(inv), spec=None)

    def as_encoder(self) -> "Circuit":
        """Re-read Theta slots as data components, so the circuit encodes x."""
        if self.n_data_slots:
            raise ValueError("circuit already has data slots")
        gates = [
            replace(g, param=DataComponent(g.param.index, g.param.scale)) if isinstance(g.param, Theta) else g
            for g in self.gates
        ]
        return replace(self, gates=tuple(gates), n_data_slots=self.n_theta_slots, n_theta_slots=0)

    def to_json(self) -> str:
        return json.dumps(circuit_to_dict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return circuit_from_dict(json.loads(text))


def _negate(p: Slot) -> Slot:
    if isinstance(p, Constant):
        return Constant(-p.value)
    return replace(p, scale=-p.scale)


# -- binding -----------------------------------------------------------------


def _as_vector(v, size: int, what: str) -> np.ndarray:
    arr = np.asarray([] if v is None else v, dtype=np.float64).reshape(-1)
    if arr.shape[0] != size:
        raise ValueError(f"dimension mismatch: {what} has length {arr.shape[0]}, circuit expects {size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite entries in {what}")
    return arr


def slot_value(p: Slot, x: np.ndarray, theta: np.ndarray) -> float:
    if isinstance(p, Constant):
        return float(p.value)
    if isinstance(p, DataComponent):
        return p.scale * float(x[p.index])
    if isinstance(p, Theta):
        return p.scale * float(theta[p.index])
    if isinstance(p, DataExpr):
        prod = 1.0
        for i in p.indices:
            prod *= p.offset - float(x[i])
        return p.scale * prod
    raise TypeError(f"unknown slot {p!r}")


def bind(circuit: Circuit, x=None, theta=None) -> list[Gate]:
    """Resolve every slot; returns gates carrying ``Constant`` angles only."""
    xv = _as_vector(x, circuit.n_data_slots, "x")
    tv = _as_vector(theta, circuit.n_theta_slots, "theta")
    out = []
    for g in circuit.gates:
        if g.param is None or isinstance(g.param, Constant):
            out.append(g)
        else:
            out.append(Gate(g.kind, g.targets, Constant(slot_value(g.param, xv, tv))))
    return out


def prepare(circuit: Circuit, x=None, theta=None, initial: StateVector | None = None) -> StateVector:
    """Dense simulation of the bound circuit on ``initial`` (default |0...0>)."""
    return run(circuit.n_qubits, bind(circuit, x, theta), initial)


def is_symmetric(circuit: Circuit) -> bool:
    return bool(circuit.gates) and all(g.kind in SYMMETRIC_KINDS for g in circuit.gates)


def encode(circuit: Circuit, x=None, theta=None) -> StateVector | DickeState:
    """Circuit applied to |0...0>, using the Dicke-basis path when every gate is symmetric."""
    gates = bind(circuit, x, theta)
    if is_symmetric(circuit):
        return run_symmetric(circuit.n_qubits, gates)
    return run(circuit.n_qubits, gates)


# -- ansatz catalog ----------------------------------------------------------


def _pairs(n: int, entanglement: str) -> list[tuple[int, int]]:
    if entanglement == "full":
        return list(combinations(range(n), 2))
    return [(i, i + 1) for i in range(n - 1)]


def build_havlicek(n: int, depth: int = 2, entanglement: str = "full") -> Circuit:
    """ZZ feature map: per layer H on all qubits, RZ(2 x_i), RZZ(2(pi-x_i)(pi-x_j))."""
    if n < 1:
        raise ValueError("HavlicekZZ needs n >= 1")
    spec = AnsatzSpec(Family.HAVLICEK, n, depth, entanglement)
    gates: list[Gate] = []
    for _ in range(depth):
        gates += [Gate(GateKind.H, (q,)) for q in range(n)]
        gates += [Gate(GateKind.RZ, (q,), DataComponent(q, 2.0)) for q in range(n)]
        gates += [Gate(GateKind.RZZ, (i, j), DataExpr((i, j))) for i, j in _pairs(n, entanglement)]
    return Circuit(n, tuple(gates), n_data_slots=n, spec=spec)


def build_perm_invariant(n: int, depth: int | None = None) -> Circuit:
    """Alternating GlobalRX / GlobalRZZ layers; data slots are consumed cyclically."""
    if n < 2:
        raise ValueError("PermInvariant needs n >= 2")
    depth = n if depth is None else depth
    spec = AnsatzSpec(Family.PERM_INVARIANT, n, depth)
    gates: list[Gate] = []
    for layer in range(1, depth + 1):
        gates.append(Gate(GateKind.GLOBAL_RX, tuple(range(n)), DataComponent((2 * layer - 2) % n)))
        gates.append(Gate(GateKind.GLOBAL_RZZ, tuple(range(n)), DataComponent((2 * layer - 1) % n)))
    return Circuit(n, tuple(gates), n_data_slots=n, spec=spec)


_HE_AXES = (GateKind.RX, GateKind.RY, GateKind.RZ)


def build_hardware_efficient(n: int, depth: int = 1, seed: int = 0) -> Circuit:
    """Random-axis single-qubit rotations (one Theta slot each) followed by a CZ chain."""
    if n < 2:
        raise ValueError("HardwareEfficient needs n >= 2")
    spec = AnsatzSpec(Family.HARDWARE_EFFICIENT, n, depth, seed=seed)
    rng = np.random.default_rng(seed)
    axes = rng.integers(0, 3, size=(depth, n))
    gates: list[Gate] = []
    slot = 0
    for layer in range(depth):
        for q in range(n):
            gates.append(Gate(_HE_AXES[axes[layer, q]], (q,), Theta(slot)))
            slot += 1
        gates += [Gate(GateKind.CZ, (q, q + 1)) for q in range(n - 1)]
    return Circuit(n, tuple(gates), n_theta_slots=slot, spec=spec)


def build_product_rx(n: int, depth: int = 1) -> Circuit:
    """One RX(x_i) per qubit: kernel is prod_i cos^2((x_i - x'_i)/2)."""
    if n < 1:
        raise ValueError("ProductRX needs n >= 1")
    gates = tuple(Gate(GateKind.RX, (q,), DataComponent(q)) for q in range(n))
    return Circuit(n, gates, n_data_slots=n, spec=AnsatzSpec(Family.PRODUCT_RX, n, depth))


def build(spec: AnsatzSpec) -> Circuit:
    f = spec.family
    if f is Family.HAVLICEK:
        return build_havlicek(spec.n_qubits, spec.depth, spec.entanglement)
    if f is Family.PERM_INVARIANT:
        return build_perm_invariant(spec.n_qubits, spec.depth)
    if f is Family.HARDWARE_EFFICIENT:
        return build_hardware_efficient(spec.n_qubits, spec.depth, spec.seed)
    return build_product_rx(spec.n_qubits, spec.depth)


def build_encoder(spec: AnsatzSpec) -> Circuit:
    """Data-encoding form of any catalog ansatz (Theta slots become data slots)."""
    c = build(spec)
    return c.as_encoder() if c.n_theta_slots else c


# -- serialization -----------------------------------------------------------


def _slot_to_dict(p: Slot | None) -> dict[str, Any] | None:
    if p is None:
        return None
    if isinstance(p, Constant):
        return {"type": "constant", "value": p.value}
    if isinstance(p, DataComponent):
        return {"type": "data", "index": p.index, "scale": p.scale}
    if isinstance(p, Theta):
        return {"type": "theta", "index": p.index, "scale": p.scale}
    return {"type": "data_expr", "indices": list(p.indices), "scale": p.scale, "offset": p.offset}


def _slot_from_dict(d: dict[str, Any] | None) -> Slot | None:
    if d is None:
        return None
    t = d["type"]
    if t == "constant":
        return Constant(float(d["value"]))
    if t == "data":
        return DataComponent(int(d["index"]), float(d.get("scale", 1.0)))
    if t == "theta":
        return Theta(int(d["index"]), float(d.get("scale", 1.0)))
    if t == "data_expr":
        return DataExpr(tuple(int(i) for i in d["indices"]), float(d["scale"]), float(d["offset"]))
    raise ValueError(f"unknown slot type {t!r}")


def circuit_to_dict(c: Circuit) -> dict[str, Any]:
    return {
        "n_qubits": c.n_qubits,
        "n_data_slots": c.n_data_slots,
        "n_theta_slots": c.n_theta_slots,
        "spec": None if c.spec is None else c.spec.to_dict(),
        "gates": [
            {"kind": g.kind.value, "targets": list(g.targets), "param": _slot_to_dict(g.param)} for g in c.gates
        ],
    }


def circuit_from_dict(d: dict[str, Any]) -> Circuit:
    spec = d.get("spec")
    return Circuit(
        n_qubits=int(d["n_qubits"]),
        gates=tuple(Gate(GateKind(g["kind"]), tuple(g["targets"]), _slot_from_dict(g["param"])) for g in d["gates"]),
        n_data_slots=int(d.get("n_data_slots", 0)),
        n_theta_slots=int(d.get("n_theta_slots", 0)),
        spec=None if spec is None else AnsatzSpec(**spec),
    )


def identity_circuit(n: int, n_theta_slots: int = 0) -> Circuit:
    return Circuit(n, (), n_theta_slots=n_theta_slots)

