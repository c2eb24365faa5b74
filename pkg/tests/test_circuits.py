import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import oracle_run
from qkonc.circuits import (
    AnsatzSpec,
    Circuit,
    Family,
    bind,
    build,
    build_encoder,
    build_hardware_efficient,
    build_havlicek,
    build_perm_invariant,
    build_product_rx,
    encode,
    identity_circuit,
    parse_family,
    prepare,
)
from qkonc.statevec import (
    Constant,
    DataComponent,
    DataExpr,
    Gate,
    GateKind,
    StateVector,
    Theta,
    fidelity,
    prob_all_zeros,
)


def kinds(circuit):
    return [g.kind.value for g in circuit.gates]


# -- Havlicek ------------------------------------------------------------------


def test_havlicek_n2_depth1_gate_list():
    c = build_havlicek(2, depth=1)
    assert kinds(c) == ["H", "H", "RZ", "RZ", "RZZ"]
    assert c.gates[2].param == DataComponent(0, 2.0)
    assert c.gates[3].param == DataComponent(1, 2.0)
    assert c.gates[4].param == DataExpr((0, 1), 2.0, math.pi)
    assert c.gates[4].targets == (0, 1)
    assert c.n_data_slots == 2 and c.n_theta_slots == 0


def test_havlicek_linear_depth2_pairs():
    c = build_havlicek(3, depth=2, entanglement="linear")
    rzz = [g.targets for g in c.gates if g.kind is GateKind.RZZ]
    assert rzz == [(0, 1), (1, 2)] * 2
    assert kinds(c).count("H") == 6


def test_havlicek_default_is_two_full_layers():
    c = build_havlicek(4)
    assert kinds(c).count("RZZ") == 2 * 6


def test_havlicek_bound_at_pi():
    gates = bind(build_havlicek(2, depth=1), x=[math.pi, math.pi])
    assert [g.angle for g in gates[2:4]] == [2 * math.pi, 2 * math.pi]
    assert gates[4].angle == 0.0


def test_havlicek_rzz_angle_at_zero_data():
    gates = bind(build_havlicek(2, depth=1), x=[0.0, 0.0])
    assert gates[4].angle == pytest.approx(2 * math.pi**2, rel=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_havlicek_zero_data_fixture(n):
    # H layer gives |+>^n; RZ(0) is trivial; each RZZ(2 pi^2) multiplies
    # basis state z by exp(-i pi^2 z_i z_j), z_k = +-1
    amps = np.empty(2**n, dtype=complex)
    for idx in range(2**n):
        z = [1 - 2 * ((idx >> q) & 1) for q in range(n)]
        phase = sum(z[i] * z[j] for i, j in itertools.combinations(range(n), 2))
        amps[idx] = np.exp(-1j * math.pi**2 * phase) / math.sqrt(2**n)
    out = prepare(build_havlicek(n, depth=1), x=np.zeros(n))
    np.testing.assert_allclose(out.amplitudes, amps, atol=1e-12)


def test_havlicek_rejects_zero_qubits():
    with pytest.raises(ValueError):
        build_havlicek(0)


# -- PermInvariant -------------------------------------------------------------


def test_perm_invariant_n2_depth1():
    c = build_perm_invariant(2, depth=1)
    assert kinds(c) == ["GlobalRX", "GlobalRZZ"]
    assert [g.param.index for g in c.gates] == [0, 1]


def test_perm_invariant_cycles_slots():
    c = build_perm_invariant(4, depth=4)
    assert [g.param.index for g in c.gates] == [0, 1, 2, 3, 0, 1, 2, 3]


def test_perm_invariant_depth_defaults_to_n():
    assert len(build_perm_invariant(5)) == 10


def test_perm_invariant_needs_two_qubits():
    with pytest.raises(ValueError):
        build_perm_invariant(1)


def permute_index(idx: int, perm) -> int:
    out = 0
    for q, p in enumerate(perm):
        out |= ((idx >> q) & 1) << p
    return out


@pytest.mark.parametrize("n", [3, 4])
def test_perm_invariant_commutes_with_qubit_permutations(rng, n):
    c = build_perm_invariant(n, depth=n)
    x = rng.uniform(-math.pi, math.pi, n)
    perms = list(itertools.permutations(range(n)))
    for b in range(2**n):
        ref = prob_all_zeros(prepare(c, x, initial=StateVector.basis(n, b)))
        for perm in perms[:: max(1, len(perms) // 6)]:
            pb = permute_index(b, perm)
            got = prob_all_zeros(prepare(c, x, initial=StateVector.basis(n, pb)))
            assert abs(got - ref) <= 1e-12


def test_perm_invariant_gram_invariant_under_global_relabeling(rng):
    n = 4
    c = build_perm_invariant(n)
    xs = rng.uniform(-math.pi, math.pi, (5, n))
    states = [prepare(c, x) for x in xs]
    perm = (2, 0, 3, 1)
    idx = np.array([permute_index(i, perm) for i in range(2**n)])
    moved = [StateVector(n, s.amplitudes[idx]) for s in states]
    K = np.array([[fidelity(a, b) for b in states] for a in states])
    Kp = np.array([[fidelity(a, b) for b in moved] for a in moved])
    np.testing.assert_allclose(K, Kp, atol=1e-12)


def test_symmetric_encoding_matches_dense(rng):
    c = build_perm_invariant(6)
    x = rng.uniform(-math.pi, math.pi, 6)
    np.testing.assert_allclose(encode(c, x).to_full().amplitudes, prepare(c, x).amplitudes, atol=1e-12)


# -- hardware-efficient --------------------------------------------------------


def test_hardware_efficient_n2_seed7():
    c = build_hardware_efficient(2, depth=1, seed=7)
    assert c.n_theta_slots == 2
    axes = np.random.default_rng(7).integers(0, 3, size=(1, 2))[0]
    expected = [("RX", "RY", "RZ")[a] for a in axes]
    assert kinds(c) == expected + ["CZ"]
    assert [g.param for g in c.gates[:2]] == [Theta(0), Theta(1)]


def test_hardware_efficient_deterministic():
    assert build_hardware_efficient(4, 3, seed=11) == build_hardware_efficient(4, 3, seed=11)


def test_hardware_efficient_seeds_differ():
    patterns = {tuple(kinds(build_hardware_efficient(4, 2, seed=s))) for s in range(10)}
    assert len(patterns) > 1


def test_hardware_efficient_layout():
    c = build_hardware_efficient(3, depth=2, seed=0)
    assert c.n_theta_slots == 6
    cz = [g.targets for g in c.gates if g.kind is GateKind.CZ]
    assert cz == [(0, 1), (1, 2)] * 2


# -- product RX and binding ----------------------------------------------------


def test_product_rx_bind():
    gates = bind(build_product_rx(1), x=[math.pi / 2])
    assert len(gates) == 1
    assert gates[0].kind is GateKind.RX and gates[0].angle == math.pi / 2


@pytest.mark.parametrize("x", [None, [], [0.1], [0.1, 0.2, 0.3]])
def test_bind_dimension_mismatch(x):
    with pytest.raises(ValueError, match="dimension mismatch"):
        bind(build_product_rx(2), x=x)


def test_bind_non_finite():
    with pytest.raises(ValueError, match="non-finite"):
        bind(build_product_rx(2), x=[0.0, math.nan])


def test_bind_theta_mismatch():
    with pytest.raises(ValueError, match="theta"):
        bind(build_hardware_efficient(2, 1), theta=[0.1])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-math.pi, math.pi), min_size=3, max_size=3))
def test_bind_is_pure(x):
    c = build_havlicek(3, depth=1)
    assert bind(c, x) == bind(c, x)
    assert all(isinstance(g.param, (Constant, type(None))) for g in bind(c, x))


def test_binding_matches_dense_oracle(rng):
    c = build_havlicek(3, depth=2)
    x = rng.uniform(-math.pi, math.pi, 3)
    np.testing.assert_allclose(prepare(c, x).amplitudes, oracle_run(3, bind(c, x)), atol=1e-12)


def test_circuit_slot_validation():
    with pytest.raises(ValueError, match="data slot"):
        Circuit(1, (Gate(GateKind.RX, (0,), DataComponent(1)),), n_data_slots=1)
    with pytest.raises(ValueError, match="theta slot"):
        Circuit(1, (Gate(GateKind.RX, (0,), Theta(0)),))
    with pytest.raises(ValueError, match="targets"):
        Circuit(1, (Gate(GateKind.H, (1,)),))


# -- adjoint, encoder form, serialization --------------------------------------


@pytest.mark.parametrize("family", list(Family))
def test_adjoint_inverts(rng, family):
    c = build_encoder(AnsatzSpec(family, 3, depth=2, seed=3))
    x = rng.uniform(-math.pi, math.pi, c.n_data_slots)
    back = prepare(c.adjoint(), x, initial=prepare(c, x))
    assert abs(back.amplitudes[0]) == pytest.approx(1.0, abs=1e-12)


def test_as_encoder_turns_theta_into_data():
    c = build_hardware_efficient(3, 2, seed=1)
    e = c.as_encoder()
    assert e.n_data_slots == 6 and e.n_theta_slots == 0
    theta = np.linspace(-1, 1, 6)
    np.testing.assert_array_equal(prepare(c, theta=theta).amplitudes, prepare(e, x=theta).amplitudes)


@pytest.mark.parametrize("family", list(Family))
def test_json_round_trip(family):
    c = build(AnsatzSpec(family, 3, depth=2, entanglement="linear", seed=5))
    again = Circuit.from_json(c.to_json())
    assert again == c
    assert again.spec == c.spec


def test_parse_family_aliases():
    assert parse_family("havlicek") is Family.HAVLICEK
    assert parse_family("perm") is Family.PERM_INVARIANT
    assert parse_family("hwe") is Family.HARDWARE_EFFICIENT
    assert parse_family("product") is Family.PRODUCT_RX
    with pytest.raises(ValueError):
        parse_family("qaoa")


def test_spec_validation():
    with pytest.raises(ValueError):
        AnsatzSpec(Family.HAVLICEK, 2, depth=0)
    with pytest.raises(ValueError):
        AnsatzSpec(Family.HAVLICEK, 2, entanglement="ring")


def test_identity_circuit_prepares_zero_state():
    c = identity_circuit(3, n_theta_slots=2)
    assert prob_all_zeros(prepare(c, theta=[0.4, 0.5])) == 1.0
