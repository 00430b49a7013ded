import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavitychip.optics import CouplerElement, compile_network, ModeNetwork, random_unitary
from cavitychip.temporal import (PairSampler, coincidence_vs_tau, default_envelope, default_grid,
                                 detuning_for_overlap, hom_visibility, overlap, permanent_oracle,
                                 sample_single, two_photon_density)

BALANCED = compile_network(ModeNetwork(2, (CouplerElement(0, 1, 0.5),)))
THIRD = compile_network(ModeNetwork(2, (CouplerElement(0, 1, 1 / 3),)))


@pytest.fixture(scope="module")
def packet():
    return default_envelope(400.0)


def test_envelope_peak_and_norm(packet):
    assert packet.times[np.argmax(packet.intensity)] == 200.0
    assert abs(packet.norm() - 1) < 1e-9


def test_envelope_vanishes_outside_support():
    p = default_envelope(400.0, t0=-150.0)
    outside = (p.times < -150.0) | (p.times > 250.0)
    assert np.all(p.envelope[outside] == 0)


def test_envelope_rejects_nonpositive_support():
    with pytest.raises(ValueError):
        default_envelope(0.0)


def test_overlap_identical(packet):
    assert abs(overlap(packet, packet) - 1) < 1e-12


def test_overlap_disjoint(packet):
    assert abs(overlap(packet, default_envelope(400.0, t0=400.0))) < 1e-12


def test_overlap_orthogonal_polarization(packet):
    assert overlap(packet, packet.with_(polarization="V")) == 0


def test_overlap_half_offset_against_fine_quadrature():
    a, b = default_envelope(400.0), default_envelope(400.0, t0=200.0)
    fine = default_grid(dt=0.1)
    af, bf = default_envelope(400.0, times=fine), default_envelope(400.0, t0=200.0, times=fine)
    ref = np.trapezoid(np.conj(af.amplitude) * bf.amplitude, fine)
    assert abs(overlap(a, b) - ref) < 1e-4
    # closed form for half-sine packets offset by half their support
    assert abs(ref - 1 / np.pi) < 1e-6


def test_overlap_grid_mismatch(packet):
    with pytest.raises(ValueError):
        overlap(packet, default_envelope(400.0, times=default_grid(dt=0.5)))


@pytest.mark.parametrize("target", [0.99, 0.85, 0.5, 0.1])
def test_detuning_for_overlap(packet, target):
    d = detuning_for_overlap(target, packet)
    assert abs(abs(overlap(packet, packet.with_(detuning=d))) ** 2 - target) < 1e-9


# -- joint densities --------------------------------------------------------

def test_balanced_identical_packets_vanish_on_diagonal(packet):
    d = two_photon_density(BALANCED, (0, 1), (packet, packet))
    assert np.max(np.abs(np.diag(d.densities[(0, 1)]))) < 1e-12


def test_balanced_orthogonal_total_is_half(packet):
    d = two_photon_density(BALANCED, (0, 1), (packet, packet.with_(polarization="V")))
    assert abs(d.total((0, 1)) - 0.5) < 1e-6


def test_third_coupler_coincidence_is_one_ninth(packet):
    d = two_photon_density(THIRD, (0, 1), (packet, packet))
    assert abs(d.total((0, 1)) - 1 / 9) < 1e-8
    assert abs(d.total((0, 1)) - permanent_oracle(THIRD, (1, 1), (1, 1))) < 1e-8


def test_density_rejects_non_unitary(packet):
    with pytest.raises(ValueError):
        two_photon_density(2 * np.eye(2), (0, 1), (packet, packet))


def test_density_rejects_same_input(packet):
    with pytest.raises(ValueError):
        two_photon_density(np.eye(2), (0, 0), (packet, packet))


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
@settings(max_examples=25, deadline=None)
def test_exchange_antisymmetry_on_diagonal(seed, m):
    rng = np.random.default_rng(seed)
    U = random_unitary(m, rng)
    pk = default_envelope(400.0)
    d = two_photon_density(U, (0, 1), (pk, pk))
    xi4 = np.abs(pk.envelope[(pk.times >= d.times[0]) & (pk.times <= d.times[-1])]) ** 4
    for (i, j), P in d.densities.items():
        if i == j:
            continue
        amp = abs(U[i, 0] * U[j, 1] + U[i, 1] * U[j, 0]) ** 2
        assert np.max(np.abs(np.diag(P) - amp * xi4)) < 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_integrated_density_matches_permanent(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(4, 7))
    U = random_unitary(m, rng)
    k, l = (int(x) for x in sorted(rng.choice(m, 2, replace=False)))
    pk = default_envelope(400.0)
    d = two_photon_density(U, (k, l), (pk, pk))
    n = [0] * m
    n[k] = n[l] = 1
    for (i, j), tot in d.totals().items():
        occ = [0] * m
        occ[i] += 1
        occ[j] += 1
        assert abs(tot - permanent_oracle(U, n, occ)) < 1e-8
    assert abs(sum(d.totals().values()) - 1) < 1e-6


@given(st.integers(0, 2**32 - 1), st.booleans(), st.floats(0.0, 0.05))
@settings(max_examples=20, deadline=None)
def test_density_normalization(seed, orth, detuning):
    rng = np.random.default_rng(seed)
    U = random_unitary(4, rng)
    a = default_envelope(400.0)
    b = default_envelope(400.0, t0=float(rng.uniform(-300, 300)), detuning=detuning,
                         polarization="V" if orth else "H")
    d = two_photon_density(U, (1, 2), (a, b))
    assert abs(sum(d.totals().values()) - 1) < 1e-6
    assert all(np.all(P >= 0) for P in d.densities.values())


# -- coincidence curves and visibility --------------------------------------

def test_coincidence_curve_zero_at_zero_delay(packet):
    taus, C = coincidence_vs_tau(two_photon_density(BALANCED, (0, 1), (packet, packet)), (0, 1))
    assert C[taus == 0][0] < 1e-12


def test_orthogonal_coincidence_curve_symmetric(packet):
    d = two_photon_density(BALANCED, (0, 1), (packet, packet.with_(polarization="V")))
    taus, C = coincidence_vs_tau(d, (0, 1))
    assert np.allclose(C, C[::-1], atol=1e-12)
    assert abs(np.trapezoid(C, taus) - 0.5) < 1e-6


def test_detuned_curve_has_zero_crossings(packet):
    delta = 2 * np.pi / 100.0
    par = two_photon_density(BALANCED, (0, 1), (packet, packet.with_(detuning=delta)))
    orth = two_photon_density(BALANCED, (0, 1), (packet, packet.with_(polarization="V")))
    taus, cp = coincidence_vs_tau(par, (0, 1))
    _, co = coincidence_vs_tau(orth, (0, 1))
    inside = co > 1e-9
    assert np.allclose(cp[inside] / co[inside], 1 - np.cos(delta * taus[inside]), atol=1e-9)
    for n in (1, 2, 3):
        assert cp[taus == 100.0 * n][0] < 1e-12
    assert cp[taus == 50.0][0] > 1e-5


def test_visibility_examples(packet):
    taus, cp = coincidence_vs_tau(two_photon_density(BALANCED, (0, 1), (packet, packet)), (0, 1))
    _, co = coincidence_vs_tau(two_photon_density(BALANCED, (0, 1), (packet, packet.with_(polarization="V"))),
                               (0, 1))
    assert abs(hom_visibility(cp, co, taus) - 1) < 1e-9
    assert abs(hom_visibility(co, co, taus)) < 1e-12
    q = packet.with_(detuning=detuning_for_overlap(0.85, packet))
    _, c85 = coincidence_vs_tau(two_photon_density(BALANCED, (0, 1), (packet, q)), (0, 1))
    assert abs(hom_visibility(c85, co, taus) - 0.85) < 0.005
    with pytest.raises(ValueError):
        hom_visibility(cp, np.zeros_like(co), taus)


def test_visibility_monotone_in_overlap(packet):
    orth = two_photon_density(BALANCED, (0, 1), (packet, packet.with_(polarization="V"))).total((0, 1))
    vs = []
    for target in np.linspace(0.05, 1.0, 12):
        d = 0.0 if target == 1.0 else detuning_for_overlap(float(target), packet)
        par = two_photon_density(BALANCED, (0, 1), (packet, packet.with_(detuning=d))).total((0, 1))
        vs.append(hom_visibility(par, orth))
    assert np.all(np.diff(vs) >= -1e-12)


# -- permanent oracle -------------------------------------------------------

def test_oracle_hom():
    assert permanent_oracle(BALANCED, (1, 1), (1, 1)) < 1e-15
    assert abs(permanent_oracle(BALANCED, (1, 1), (2, 0)) - 0.5) < 1e-12
    assert abs(permanent_oracle(BALANCED, (1, 1), (0, 2)) - 0.5) < 1e-12


def test_oracle_third_coupler():
    assert abs(permanent_oracle(THIRD, (1, 1), (1, 1)) - 1 / 9) < 1e-12


def test_oracle_identity():
    assert abs(permanent_oracle(np.eye(4), (0, 1, 1, 0), (0, 1, 1, 0)) - 1) < 1e-15
    assert permanent_oracle(np.eye(4), (0, 1, 1, 0), (1, 1, 0, 0)) == 0


def test_oracle_rejects_three_photons():
    with pytest.raises(NotImplementedError):
        permanent_oracle(np.eye(3), (1, 1, 1), (1, 1, 1))


# -- sampling ---------------------------------------------------------------

def test_pair_sampler_reproduces_totals(packet):
    rng = np.random.default_rng(3)
    U = random_unitary(4, rng)
    d = two_photon_density(U, (0, 2), (packet, packet))
    i, j, t1, t2 = PairSampler(d).sample(200_000, np.random.default_rng(4))
    for pair, tot in d.totals().items():
        frac = np.mean((i == pair[0]) & (j == pair[1]))
        assert abs(frac - tot) < 5 * np.sqrt(tot * (1 - tot) / 200_000) + 1e-3
    assert t1.min() >= d.times[0] and t2.max() <= d.times[-1]


def test_sample_single_stays_in_support(packet):
    modes, t = sample_single(BALANCED, 0, packet, 10_000, np.random.default_rng(0))
    assert t.min() >= 0.0 and t.max() <= 400.0
    assert abs(np.mean(modes == 1) - 0.5) < 0.03
