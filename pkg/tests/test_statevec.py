import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import oracle_run, random_state
from qkonc.statevec import (
    Constant,
    DickeState,
    Gate,
    GateKind,
    NormDriftError,
    StateVector,
    apply_gate,
    check_norm,
    fidelity,
    prob_all_zeros,
    run,
    run_symmetric,
    z_string_expectation,
)

S2 = 1 / math.sqrt(2)


def g(kind, *targets, angle=None):
    return Gate(GateKind(kind), targets, None if angle is None else Constant(angle))


# -- apply_gate examples -------------------------------------------------------


def test_hadamard_on_zero():
    out = apply_gate(StateVector.zeros(1), g("H", 0))
    np.testing.assert_allclose(out.amplitudes, [S2, S2], atol=1e-15)


def test_rx_pi_is_minus_i_x():
    out = apply_gate(StateVector.zeros(1), g("RX", 0, angle=math.pi))
    np.testing.assert_allclose(out.amplitudes, [0, -1j], atol=1e-15)


def test_cnot_builds_bell_pair():
    # (|00> + |10>)/sqrt2 in q1 q0 ordering: index 0 and index 1 (q0 set)
    psi = StateVector(2, np.array([S2, S2, 0, 0]))
    out = apply_gate(psi, g("CNOT", 0, 1))
    np.testing.assert_allclose(out.amplitudes, [S2, 0, 0, S2], atol=1e-15)


def test_apply_gate_leaves_input_untouched():
    psi = StateVector.zeros(2)
    apply_gate(psi, g("X", 1))
    assert psi.amplitudes[0] == 1


def test_angle_override_for_symbolic_slot():
    from qkonc.statevec import Theta

    gate = Gate(GateKind.RY, (0,), Theta(0))
    out = apply_gate(StateVector.zeros(1), gate, angle=math.pi)
    np.testing.assert_allclose(out.amplitudes, [0, 1], atol=1e-15)


@pytest.mark.parametrize("target", [-1, 2, 5])
def test_target_out_of_range(target):
    with pytest.raises(ValueError, match="out of range"):
        apply_gate(StateVector.zeros(2), g("H", target))


@pytest.mark.parametrize("angle", [math.nan, math.inf, -math.inf])
def test_non_finite_angle(angle):
    with pytest.raises(ValueError, match="non-finite"):
        apply_gate(StateVector.zeros(1), g("RZ", 0, angle=angle))


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate(GateKind.CNOT, (1, 1))
    with pytest.raises(ValueError):
        Gate(GateKind.RX, (0,))
    with pytest.raises(ValueError):
        Gate(GateKind.H, (0,), Constant(1.0))
    with pytest.raises(ValueError):
        Gate(GateKind.H, (0, 1))


def test_state_length_checked():
    with pytest.raises(ValueError, match="amplitudes"):
        StateVector(2, np.ones(3))


def test_norm_drift_fails_loudly():
    with pytest.raises(NormDriftError):
        check_norm(np.array([1.0, 1e-5]))
    with pytest.raises(NormDriftError):
        run(1, [], initial=StateVector(1, np.array([1.0, 0.1])))


# -- fidelity and all-zeros probability ----------------------------------------


def test_fidelity_examples():
    psi = StateVector(1, np.array([0.6, 0.8j]))
    assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-15)
    assert fidelity(StateVector.basis(2, 0), StateVector.basis(2, 1)) == 0.0
    plus = apply_gate(StateVector.zeros(1), g("H", 0))
    assert fidelity(StateVector.zeros(1), plus) == pytest.approx(0.5, abs=1e-15)


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        fidelity(StateVector.zeros(1), StateVector.zeros(2))


def test_fidelity_exactly_symmetric(rng):
    for n in range(1, 6):
        a = StateVector(n, random_state(rng, n))
        b = StateVector(n, random_state(rng, n))
        assert fidelity(a, b) == fidelity(b, a)


def test_prob_all_zeros_examples():
    assert prob_all_zeros(StateVector.zeros(4)) == 1.0
    hhh = run(3, [g("H", q) for q in range(3)])
    assert prob_all_zeros(hhh) == pytest.approx(0.125, abs=1e-15)
    half = run(1, [g("RX", 0, angle=math.pi / 2)])
    assert prob_all_zeros(half) == pytest.approx(0.5, abs=1e-15)


def test_prob_all_zeros_is_fidelity_with_zero(rng):
    psi = StateVector(3, random_state(rng, 3))
    assert prob_all_zeros(psi) == pytest.approx(fidelity(psi, StateVector.zeros(3)), abs=1e-15)


# -- oracle agreement ----------------------------------------------------------

ONE_Q = ["H", "X", "RX", "RY", "RZ"]
TWO_Q = ["RZZ", "CNOT", "CZ"]


def random_gates(rng, n, count):
    gates = []
    for _ in range(count):
        kinds = ONE_Q + (TWO_Q if n > 1 else []) + ["GlobalRX", "GlobalRZZ"]
        kind = kinds[rng.integers(len(kinds))]
        angle = float(rng.uniform(-math.pi, math.pi))
        if kind in TWO_Q:
            a, b = rng.choice(n, size=2, replace=False)
            targets = (int(a), int(b))
        elif kind.startswith("Global"):
            targets = ()
        else:
            targets = (int(rng.integers(n)),)
        param = Constant(angle) if kind in ("RX", "RY", "RZ", "RZZ", "GlobalRX", "GlobalRZZ") else None
        gates.append(Gate(GateKind(kind), targets, param))
    return gates


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_kernels_match_dense_oracle(rng, n):
    for _ in range(10):
        gates = random_gates(rng, n, 25)
        np.testing.assert_allclose(run(n, gates).amplitudes, oracle_run(n, gates), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1), count=st.integers(0, 60))
def test_unitarity_of_random_sequences(n, seed, count):
    gates = random_gates(np.random.default_rng(seed), n, count)
    psi = StateVector.zeros(n)
    for gate in gates:
        psi = apply_gate(psi, gate)
        assert abs(psi.norm() - 1.0) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 7), theta=st.floats(-10, 10, allow_nan=False))
def test_global_rx_equals_sequential_rx(n, theta):
    rng = np.random.default_rng(n)
    psi = StateVector(n, random_state(rng, n))
    a = apply_gate(psi, Gate(GateKind.GLOBAL_RX, (), Constant(theta)))
    b = psi
    for q in range(n):
        b = apply_gate(b, g("RX", q, angle=theta))
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_global_rzz_equals_pairwise_rzz_doubled(rng, n):
    theta = 0.731
    psi = StateVector(n, random_state(rng, n))
    a = apply_gate(psi, Gate(GateKind.GLOBAL_RZZ, (), Constant(theta)))
    b = psi
    for i in range(n):
        for j in range(i + 1, n):
            b = apply_gate(b, g("RZZ", i, j, angle=2 * theta))
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)


# -- zero-projector Pauli identity ---------------------------------------------


def zero_projector_by_pauli_sum(psi: StateVector) -> float:
    n = psi.n_qubits
    return sum(z_string_expectation(psi, mask) for mask in range(1 << n)) / (1 << n)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_zero_projector_pauli_identity(rng, n):
    for _ in range(20):
        psi = StateVector(n, random_state(rng, n))
        assert abs(prob_all_zeros(psi) - zero_projector_by_pauli_sum(psi)) <= 1e-10


def test_z_string_expectation_basis_states():
    psi = StateVector.basis(3, 0b101)
    assert z_string_expectation(psi, 0b001) == -1.0
    assert z_string_expectation(psi, 0b010) == 1.0
    assert z_string_expectation(psi, 0b101) == 1.0
    assert z_string_expectation(psi, 0) == 1.0


# -- symmetric-subspace fast path ----------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7])
def test_dicke_path_matches_dense(rng, n):
    gates = []
    for _ in range(8):
        kind = GateKind.GLOBAL_RX if rng.random() < 0.5 else GateKind.GLOBAL_RZZ
        gates.append(Gate(kind, (), Constant(float(rng.uniform(-4, 4)))))
    full = run(n, gates)
    sym = run_symmetric(n, gates)
    np.testing.assert_allclose(sym.to_full().amplitudes, full.amplitudes, atol=1e-12)
    assert prob_all_zeros(sym) == pytest.approx(prob_all_zeros(full), abs=1e-14)


def test_dicke_rejects_non_symmetric_gates():
    with pytest.raises(ValueError, match="symmetric subspace"):
        run_symmetric(2, [g("H", 0)])


def test_fidelity_refuses_mixed_representations():
    d = DickeState(2, np.array([1, 0, 0]))
    with pytest.raises(TypeError):
        fidelity(d, StateVector.zeros(2))
