import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavitychip.optics import (CNOT, CNOT_PHASES, CONTROL_RAILS, TARGET_RAILS, CouplerElement, ModeNetwork,
                               PhaseShifter, TopologyError, bell_network, cnot_network, compile_network,
                               coupler_unitary, embed, hbt_network, is_unitary, post_selected_operator,
                               random_unitary, reverse_pass_unitary, sagnac_unitary)
from cavitychip.temporal import permanent_oracle

etas = st.floats(0.0, 1.0, allow_nan=False)
phases = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


def oracle_amplitude(U, a, b, i, j):
    # brute-force two-photon amplitude from the permanent of the 2x2 block
    M = U[np.ix_([i, j], [a, b])]
    return M[0, 0] * M[1, 1] + M[0, 1] * M[1, 0]


# -- couplers ---------------------------------------------------------------

def test_coupler_eta_zero_is_identity():
    assert np.allclose(coupler_unitary(CouplerElement(0, 1, 0.0)), np.eye(2), atol=1e-15)


def test_balanced_coupler_entries():
    M = coupler_unitary(CouplerElement(0, 1, 0.5))
    assert np.allclose(M, np.sqrt(0.5) * np.array([[1, 1j], [1j, 1]]), atol=1e-15)


def test_third_coupler_entries():
    M = coupler_unitary(CouplerElement(0, 1, 1 / 3))
    assert abs(M[0, 0] - 0.81650) < 1e-5 and abs(M[1, 1] - 0.81650) < 1e-5
    assert abs(M[0, 1] - 0.57735j) < 1e-5 and abs(M[1, 0] - 0.57735j) < 1e-5


@pytest.mark.parametrize("eta", [-0.1, 1.0001, np.nan])
def test_coupler_rejects_bad_eta(eta):
    with pytest.raises(ValueError):
        CouplerElement(0, 1, eta)


def test_coupler_rejects_same_mode():
    with pytest.raises(ValueError):
        CouplerElement(2, 2, 0.5)


@given(etas, phases)
def test_coupler_unitary_property(eta, phi):
    assert is_unitary(coupler_unitary(CouplerElement(0, 1, eta, phi)), 1e-12)


@given(phases)
def test_phase_shifter_is_diagonal_unitary(phase):
    M = PhaseShifter(0, phase).matrix()
    assert M.shape == (1, 1) and abs(abs(M[0, 0]) - 1) < 1e-12


# -- compilation ------------------------------------------------------------

def test_empty_network_is_identity():
    assert np.array_equal(compile_network(ModeNetwork(6)), np.eye(6))


def test_disjoint_couplers_commute():
    a, b = CouplerElement(0, 1, 0.3, 0.2), CouplerElement(2, 3, 0.7, -1.0)
    U1 = compile_network(ModeNetwork(4, (a, b)))
    U2 = compile_network(ModeNetwork(4, (b, a)))
    assert np.allclose(U1, U2, atol=1e-15)


def test_two_balanced_couplers_make_i_swap():
    U = compile_network(ModeNetwork(2, (CouplerElement(0, 1, 0.5), CouplerElement(0, 1, 0.5))))
    assert np.allclose(U, 1j * np.array([[0, 1], [1, 0]]), atol=1e-15)


def test_stage_order_is_application_order():
    a, p = CouplerElement(0, 1, 0.5), PhaseShifter(0, 0.7)
    U = compile_network(ModeNetwork(2, (a, p)))
    assert np.allclose(U, embed(p.matrix(), [0], 2) @ a.matrix(), atol=1e-15)


def test_stage_outside_network_rejected():
    with pytest.raises(ValueError):
        ModeNetwork(3, (CouplerElement(1, 3, 0.5),))


@st.composite
def networks(draw):
    m = draw(st.integers(2, 6))
    stages = []
    for _ in range(draw(st.integers(0, 12))):
        if draw(st.booleans()):
            a, b = draw(st.lists(st.integers(0, m - 1), min_size=2, max_size=2, unique=True))
            stages.append(CouplerElement(a, b, draw(etas), draw(phases)))
        else:
            stages.append(PhaseShifter(draw(st.integers(0, m - 1)), draw(phases)))
    return ModeNetwork(m, tuple(stages))


@given(networks())
def test_compiled_networks_are_unitary(net):
    assert is_unitary(compile_network(net), 1e-12)


# -- reverse pass -----------------------------------------------------------

def test_reverse_single_coupler_equals_forward():
    net = ModeNetwork(2, (CouplerElement(0, 1, 0.5),))
    assert np.allclose(reverse_pass_unitary(net, [0, 1]), compile_network(net), atol=1e-15)


def test_forward_then_reverse_routes_rail0_to_rail1():
    net = ModeNetwork(2, (CouplerElement(0, 1, 0.5),))
    R = reverse_pass_unitary(net, [0, 1]) @ compile_network(net)
    assert abs(abs(R[1, 0]) ** 2 - 1) < 1e-12
    assert np.allclose(R, 1j * np.array([[0, 1], [1, 0]]), atol=1e-15)


def test_empty_reverse_path_is_identity():
    assert np.array_equal(reverse_pass_unitary(ModeNetwork(4), [0, 1]), np.eye(2))


def test_reverse_pass_topology_error():
    net = ModeNetwork(3, (CouplerElement(0, 1, 0.5), CouplerElement(1, 2, 0.5)))
    with pytest.raises(TopologyError):
        reverse_pass_unitary(net, [0, 1])


@given(networks())
@settings(max_examples=50)
def test_palindromic_reverse_equals_forward(net):
    pal = ModeNetwork(net.mode_count, net.stages + tuple(reversed(net.stages)))
    modes = list(range(net.mode_count))
    assert np.allclose(reverse_pass_unitary(pal, modes), compile_network(pal), atol=1e-12)


# -- CNOT -------------------------------------------------------------------

def test_cnot_exact():
    op = post_selected_operator(cnot_network(), CONTROL_RAILS, TARGET_RAILS)
    assert np.max(np.abs(op.matrix - CNOT / 3)) < 1e-12
    assert np.allclose(op.success_probabilities(), 1 / 9, atol=1e-12)
    assert abs(abs(op.success_amplitude) ** 2 - 1 / 9) < 1e-12


def test_cnot_amplitudes_match_permanent_oracle():
    net = cnot_network()
    U = compile_network(net)
    ci = [net.index(x) for x in CONTROL_RAILS[0]]
    ti = [net.index(x) for x in TARGET_RAILS[0]]
    co = [net.output_index(x) for x in CONTROL_RAILS[1]]
    to = [net.output_index(x) for x in TARGET_RAILS[1]]
    # |00> -> |00>
    assert abs(abs(oracle_amplitude(U, ci[0], ti[0], co[0], to[0])) - 1 / 3) < 1e-12
    # |10> -> |11> and not |10>
    assert abs(abs(oracle_amplitude(U, ci[1], ti[0], co[1], to[1])) - 1 / 3) < 1e-12
    assert abs(oracle_amplitude(U, ci[1], ti[0], co[1], to[0])) < 1e-12
    # probabilities agree with the occupation-number oracle
    for c, t in itertools.product(range(2), repeat=2):
        n = [0] * 6
        n[ci[c]] += 1
        n[ti[t]] += 1
        for oc, ot in itertools.product(range(2), repeat=2):
            m = [0] * 6
            m[co[oc]] += 1
            m[to[ot]] += 1
            expected = (1 / 9) * (CNOT[2 * oc + ot, 2 * c + t] != 0)
            assert abs(permanent_oracle(U, n, m) - expected) < 1e-12


def test_cnot_phase_constants_are_quarter_waves():
    for _, phase in CNOT_PHASES.values():
        assert abs((phase / (np.pi / 2)) - round(phase / (np.pi / 2))) < 1e-15


def test_identity_network_operator():
    op = post_selected_operator(ModeNetwork(4), (0, 1), (2, 3))
    assert np.allclose(op.matrix, np.eye(4), atol=1e-15)
    assert abs(op.success_amplitude - 1) < 1e-15


def test_overlapping_rails_rejected():
    with pytest.raises(ValueError):
        post_selected_operator(ModeNetwork(4), (0, 1), (1, 2))


def _table_similarity(op):
    T = op.truth_table()
    return np.sum(np.sqrt(T * np.abs(CNOT.T) ** 2)) / np.sqrt(T.sum() * 4)


def test_perturbed_couplers_reduce_similarity():
    op = post_selected_operator(cnot_network(etas=(0.30, 0.30, 0.30)), CONTROL_RAILS, TARGET_RAILS)
    # independent evaluation from 2x2 permanents
    net = cnot_network(etas=(0.30, 0.30, 0.30))
    U = compile_network(net)
    ci = [net.index(x) for x in CONTROL_RAILS[0]]
    ti = [net.index(x) for x in TARGET_RAILS[0]]
    co = [net.output_index(x) for x in CONTROL_RAILS[1]]
    to = [net.output_index(x) for x in TARGET_RAILS[1]]
    P = np.zeros((4, 4))
    for c, t, oc, ot in itertools.product(range(2), repeat=4):
        P[2 * c + t, 2 * oc + ot] = abs(oracle_amplitude(U, ci[c], ti[t], co[oc], to[ot])) ** 2
    P /= P.sum(axis=1, keepdims=True)
    s_oracle = np.sum(np.sqrt(P * np.abs(CNOT.T) ** 2)) / 4
    s = _table_similarity(op)
    assert abs(s - s_oracle) < 1e-12
    assert s < 1.0


def test_vacuum_phase_after_last_coupler_leaves_operator():
    base = cnot_network()
    op0 = post_selected_operator(base, CONTROL_RAILS, TARGET_RAILS)
    # B' and E' carry only vacuum-ancilla output, untouched after the ancilla couplers
    extra = base.then(PhaseShifter(base.output_index("B'"), 1.234), PhaseShifter(base.output_index("E'"), -0.4))
    op1 = post_selected_operator(extra, CONTROL_RAILS, TARGET_RAILS)
    assert np.allclose(op0.matrix, op1.matrix, atol=1e-12)


# -- Bell and Sagnac --------------------------------------------------------

def test_bell_network_unitary():
    assert is_unitary(compile_network(bell_network()), 1e-12)


@pytest.mark.parametrize("element", ["beta", "delta"])
def test_sagnac_unitary_is_unitary(element):
    assert is_unitary(sagnac_unitary(bell_network(), element), 1e-12)


def test_beta_twice_is_identity_on_control():
    U_fwd = compile_network(bell_network())
    U_zz = sagnac_unitary(bell_network(), "beta")
    U_nobeta = compile_network(bell_network().without("beta"))
    assert np.allclose(U_zz, U_nobeta, atol=1e-12)
    assert not np.allclose(U_fwd, U_nobeta, atol=1e-6)


def test_hbt_splits_evenly():
    U = compile_network(hbt_network())
    assert np.allclose(np.abs(U[:, 2]) ** 2, 1 / 3, atol=1e-12)


def test_random_unitary_is_unitary():
    rng = np.random.default_rng(1)
    for n in range(1, 7):
        assert is_unitary(random_unitary(n, rng), 1e-12)
