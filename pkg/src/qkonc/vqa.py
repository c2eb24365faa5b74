"""Cost functions of parameterized circuits, their gradients, and the
Monte-Carlo estimates of barren plateaus and cost concentration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import Circuit, bind, encode, is_symmetric
from .sampling import VarianceEstimate, estimate, parallel_map, stream, uniform_angles
from .statevec import (
    SELF_INVERSE,
    SHIFTABLE,
    _apply_inplace,
    DataComponent,
    DataExpr,
    DickeState,
    Gate,
    Theta,
    fidelity,
    prob_all_zeros,
    run,
    run_symmetric,
)


class UnsupportedRuleError(ValueError):
    """Parameter-shift requested for a slot whose generator has more than two eigenvalues."""


@dataclass(frozen=True)
class CostSpec:
    """``C(theta, x) = Tr[W(theta) U(x) rho0 U(x)^dag W(theta)^dag O]``.

    ``observable=None`` means ``O = |0...0><0...0|``. Passing a circuit ``V``
    uses ``O = V(x)|0><0|V(x)^dag`` instead, which is how the kernel
    construction feeds the second data point in through the measurement.
    With ``params_as_data`` the parameter vector fills the variational
    circuit's data slots (theta -> x substitution).
    """

    variational: Circuit
    embedding: Circuit | None = None
    observable: Circuit | None = None
    weights: tuple[float, ...] | None = None
    params_as_data: bool = False

    def __post_init__(self):
        n = self.variational.n_qubits
        for c in (self.embedding, self.observable):
            if c is not None and c.n_qubits != n:
                raise ValueError("embedding/observable qubit count differs from the variational circuit")
        if self.embedding is not None and self.observable is not None:
            if self.embedding.n_data_slots != self.observable.n_data_slots:
                raise ValueError("embedding and observable disagree on the data dimension")
        if self.weights is not None:
            w = tuple(float(c) for c in self.weights)
            if not all(math.isfinite(c) for c in w):
                raise ValueError("weights must be finite")
            object.__setattr__(self, "weights", w)

    @property
    def n_params(self) -> int:
        v = self.variational
        return v.n_data_slots if self.params_as_data else v.n_theta_slots

    @property
    def data_dim(self) -> int:
        for c in (self.embedding, self.observable):
            if c is not None:
                return c.n_data_slots
        return 0


def kernel_cost_spec(ansatz: Circuit) -> CostSpec:
    """Cost whose value at (theta, x) is the fidelity kernel of ``ansatz`` at (x, theta)."""
    return CostSpec(variational=ansatz, observable=ansatz, params_as_data=True)


def _bind_variational(spec: CostSpec, theta) -> list[Gate]:
    if spec.params_as_data:
        return bind(spec.variational, x=theta)
    return bind(spec.variational, theta=theta)


def _evaluate(spec: CostSpec, var_gates: list[Gate], x) -> float:
    v = spec.variational
    if spec.embedding is None:
        gates = var_gates
        symmetric = is_symmetric(v)
    else:
        gates = bind(spec.embedding, x=x) + var_gates
        symmetric = is_symmetric(spec.embedding) and (not v.gates or is_symmetric(v))
    if symmetric and gates:
        state = run_symmetric(v.n_qubits, gates)
    else:
        state = run(v.n_qubits, gates)
    if spec.observable is None:
        return prob_all_zeros(state)
    target = encode(spec.observable, x)
    if type(target) is not type(state):
        target = target.to_full() if isinstance(target, DickeState) else target
        state = state.to_full() if isinstance(state, DickeState) else state
    return fidelity(target, state)


def _check_x(spec: CostSpec, x) -> np.ndarray:
    xv = np.asarray([] if x is None else x, dtype=np.float64).reshape(-1)
    if xv.shape[0] != spec.data_dim:
        raise ValueError(f"dimension mismatch: x has length {xv.shape[0]}, cost expects {spec.data_dim}")
    return xv


def cost(spec: CostSpec, theta, x=None) -> float:
    xv = _check_x(spec, x)
    return _evaluate(spec, _bind_variational(spec, theta), xv)


def total_cost(spec: CostSpec, theta, xs: Sequence) -> float:
    """Weighted sum over data points; weights default to ``1/N``."""
    n = len(xs)
    w = spec.weights if spec.weights is not None else (1.0 / n,) * n
    if len(w) != n:
        raise ValueError(f"{len(w)} weights for {n} data points")
    return math.fsum(c * cost(spec, theta, x) for c, x in zip(w, xs))


# -- gradients -----------------------------------------------------------------


def _occurrences(spec: CostSpec, mu: int) -> list[tuple[int, float | None]]:
    """Gate positions driven by parameter ``mu``; scale is None for nonlinear slots."""
    occ = []
    for pos, g in enumerate(spec.variational.gates):
        p = g.param
        if spec.params_as_data:
            if isinstance(p, DataComponent) and p.index == mu:
                occ.append((pos, p.scale))
            elif isinstance(p, DataExpr) and mu in p.indices:
                occ.append((pos, None))
        elif isinstance(p, Theta) and p.index == mu:
            occ.append((pos, p.scale))
    return occ


def shift_eligible(spec: CostSpec, mu: int) -> bool:
    gates = spec.variational.gates
    return all(scale is not None and gates[pos].kind in SHIFTABLE for pos, scale in _occurrences(spec, mu))


def _target_amplitudes(spec: CostSpec, x) -> np.ndarray:
    n = spec.variational.n_qubits
    if spec.observable is None:
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[0] = 1.0
        return amps
    t = encode(spec.observable, x)
    return (t.to_full() if isinstance(t, DickeState) else t).amplitudes.copy()


def _inverse_inplace(amps: np.ndarray, n: int, g: Gate) -> None:
    _apply_inplace(amps, n, g.kind, g.targets, None if g.kind in SELF_INVERSE else -g.angle)


def _shift_differences(spec: CostSpec, var_gates: list[Gate], x, positions: set[int]) -> dict[int, float]:
    """``(C(+pi/2) - C(-pi/2)) / 2`` for each listed variational gate.

    One backward pass: ``ket`` is peeled back to the state entering gate
    ``k`` and ``bra`` carries the observable state back through the gates
    after ``k``, so each shifted cost is a single overlap.
    """
    n = spec.variational.n_qubits
    emb = [] if spec.embedding is None else bind(spec.embedding, x=x)
    gates = emb + var_gates
    ket = run(n, gates).amplitudes.copy()
    bra = _target_amplitudes(spec, x)
    out = {}
    for k in range(len(gates) - 1, -1, -1):
        g = gates[k]
        _inverse_inplace(ket, n, g)
        pos = k - len(emb)
        if pos in positions:
            vals = []
            for shift in (math.pi / 2, -math.pi / 2):
                tmp = ket.copy()
                _apply_inplace(tmp, n, g.kind, g.targets, g.angle + shift)
                ov = np.vdot(bra, tmp)
                vals.append(ov.real * ov.real + ov.imag * ov.imag)
            out[pos] = (vals[0] - vals[1]) / 2
        _inverse_inplace(bra, n, g)
    return out


def gradient(spec: CostSpec, theta, x=None, method: str = "auto", h: float = 1e-5) -> np.ndarray:
    """Partial derivatives of the cost with respect to every parameter.

    ``method`` is ``"parameter_shift"``, ``"central_diff"`` or ``"auto"``
    (shift rule where every occurrence is a single-Pauli rotation with a
    linear slot, central differences elsewhere).
    """
    if method not in ("auto", "parameter_shift", "central_diff"):
        raise ValueError(f"unknown gradient method {method!r}")
    th = np.asarray(theta, dtype=np.float64).reshape(-1)
    if th.shape[0] != spec.n_params:
        raise ValueError(f"dimension mismatch: theta has length {th.shape[0]}, cost expects {spec.n_params}")
    if not np.all(np.isfinite(th)):
        raise ValueError("theta must be finite")
    xv = _check_x(spec, x)
    base = _bind_variational(spec, th)
    grad = np.zeros(th.shape[0])
    shifted: dict[int, list[tuple[int, float]]] = {}
    for mu in range(th.shape[0]):
        occ = _occurrences(spec, mu)
        if not occ:
            continue
        eligible = shift_eligible(spec, mu)
        if method == "parameter_shift" and not eligible:
            kinds = sorted({spec.variational.gates[p].kind.value for p, _ in occ})
            raise UnsupportedRuleError(f"parameter-shift does not apply to parameter {mu} (gates {kinds})")
        if method == "parameter_shift" or (method == "auto" and eligible):
            shifted[mu] = occ
        else:
            up, down = th.copy(), th.copy()
            up[mu] += h
            down[mu] -= h
            grad[mu] = (
                _evaluate(spec, _bind_variational(spec, up), xv) - _evaluate(spec, _bind_variational(spec, down), xv)
            ) / (2 * h)
    if shifted:
        diffs = _shift_differences(spec, base, xv, {pos for occ in shifted.values() for pos, _ in occ})
        for mu, occ in shifted.items():
            grad[mu] = math.fsum(scale * diffs[pos] for pos, scale in occ)
    return grad


# -- Monte-Carlo landscape statistics --------------------------------------------


def draw_parameters(seed: int, n_samples: int, dim: int) -> np.ndarray:
    """Uniform draws on [-pi, pi]^dim; row ``s`` comes from stream ``(seed, s)``."""
    out = np.empty((n_samples, dim))
    for s in range(n_samples):
        out[s] = uniform_angles(stream(seed, s), 1, dim)[0]
    return out


@dataclass
class BPReport:
    variances: np.ndarray
    standard_errors: np.ndarray
    mean_gradient: np.ndarray
    n_samples: int
    seed: int

    @property
    def max_variance(self) -> float:
        return float(self.variances.max()) if self.variances.size else 0.0

    @property
    def argmax_slot(self) -> int:
        return int(np.argmax(self.variances)) if self.variances.size else -1

    def to_dict(self) -> dict:
        return {
            "variances": self.variances.tolist(),
            "standard_errors": self.standard_errors.tolist(),
            "mean_gradient": self.mean_gradient.tolist(),
            "max_variance": self.max_variance,
            "argmax_slot": self.argmax_slot,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def bp_variance(
    spec: CostSpec, x=None, n_samples: int = 1000, seed: int = 0, method: str = "auto", threads: int = 1
) -> BPReport:
    """Per-parameter variance of the cost gradient over uniformly random parameters."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    thetas = draw_parameters(seed, n_samples, spec.n_params)
    grads = np.array(parallel_map(lambda s: gradient(spec, thetas[s], x, method), n_samples, threads))
    grads = grads.reshape(n_samples, spec.n_params)
    ests = [estimate(grads[:, mu]) for mu in range(spec.n_params)]
    return BPReport(
        variances=np.array([e.variance for e in ests]),
        standard_errors=np.array([e.se_variance for e in ests]),
        mean_gradient=np.array([e.mean for e in ests]),
        n_samples=n_samples,
        seed=seed,
    )


@dataclass
class TailCheck:
    delta: float
    empirical: float
    se: float
    chebyshev_bound: float

    @property
    def holds(self) -> bool:
        return self.empirical <= self.chebyshev_bound + 3 * self.se

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "empirical": self.empirical,
            "se": self.se,
            "chebyshev_bound": self.chebyshev_bound,
            "holds": self.holds,
        }


def tail_checks(values: np.ndarray, mean: float, variance: float, deltas: Sequence[float]) -> list[TailCheck]:
    out = []
    dev = np.abs(values - mean)
    n = values.shape[0]
    for d in deltas:
        if d <= 0:
            raise ValueError("delta must be positive")
        p = float(np.count_nonzero(dev >= d)) / n
        out.append(TailCheck(float(d), p, math.sqrt(p * (1 - p) / n), variance / (d * d)))
    return out


@dataclass
class CostConcentration:
    values: np.ndarray = field(repr=False)
    estimate: VarianceEstimate
    shifted_variance: float
    tails: list[TailCheck]

    @property
    def mean(self) -> float:
        return self.estimate.mean

    @property
    def variance(self) -> float:
        return self.estimate.variance

    def to_dict(self) -> dict:
        return {
            **self.estimate.to_dict(),
            "shifted_variance": self.shifted_variance,
            "tails": [t.to_dict() for t in self.tails],
        }


def cost_values(spec: CostSpec, x, thetas: np.ndarray, threads: int = 1) -> np.ndarray:
    return np.array(parallel_map(lambda s: cost(spec, thetas[s], x), thetas.shape[0], threads))


def cost_concentration(
    spec: CostSpec,
    x=None,
    n_samples: int = 1000,
    seed: int = 0,
    deltas: Sequence[float] = (0.1, 0.2),
    threads: int = 1,
    thetas: np.ndarray | None = None,
) -> CostConcentration:
    """Spread of the cost over uniformly random parameters, with Chebyshev tails.

    ``shifted_variance`` is the variance of ``mean - C(theta_A)``, computed
    separately to show the constant shift has no effect.
    """
    if thetas is None:
        if n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        thetas = draw_parameters(seed, n_samples, spec.n_params)
    vals = cost_values(spec, x, thetas, threads)
    est = estimate(vals)
    shifted = estimate(est.mean - vals).variance
    return CostConcentration(vals, est, shifted, tail_checks(vals, est.mean, est.variance, deltas))
