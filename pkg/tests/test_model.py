"""Unit tests for model parameters, coupling weights, and the Hamiltonian."""

import math

import numpy as np
import pytest

from loopqed.hilbert import fock_state, make_space, state_index
from loopqed.model import (
    HamiltonianFactory,
    ModelParams,
    Polarization,
    build_hamiltonian,
    coupling_weights,
    default_params,
    excitation_operator,
    excitation_sector_indices,
)

TWO_PI = 2.0 * math.pi


def test_default_parameter_values():
    p = default_params()
    assert p.g == pytest.approx(TWO_PI * 50.0)
    assert p.omega_drive == pytest.approx(TWO_PI * 50.0)
    assert p.delta == pytest.approx(3.0 * TWO_PI * 50.0)
    # lam = g*Omega/delta; at the defaults that is 2*pi*50/3 rad/ms
    assert p.lam == pytest.approx(TWO_PI * 50.0 / 3.0)
    # one full population-return cycle: 2*pi/lam = 0.06 ms exactly
    assert p.flip_period == pytest.approx(0.06)
    assert p.shift_upper == pytest.approx(p.lam)
    assert p.shift_lower_per_photon == pytest.approx(p.lam)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(g=1.0, omega_drive=1.0, delta=0.0)
    with pytest.raises(ValueError):
        ModelParams(g=1.0, omega_drive=1.0, delta=-5.0)
    with pytest.raises(ValueError):
        ModelParams(g=-1.0, omega_drive=1.0, delta=1.0)


def test_dispersive_warning_flag():
    # the default delta = 3*Omega is below the 5x comfort margin on purpose
    assert default_params().dispersive_warning is True
    comfortable = ModelParams(g=TWO_PI * 50, omega_drive=TWO_PI * 50, delta=TWO_PI * 260)
    assert comfortable.dispersive_warning is False


def test_polarization_validation():
    Polarization(theta=0.0, phi=0.0)
    Polarization(theta=math.pi, phi=7.0)  # phi deliberately unreduced
    with pytest.raises(ValueError):
        Polarization(theta=-0.1, phi=0.0)
    with pytest.raises(ValueError):
        Polarization(theta=math.pi + 0.1, phi=0.0)


def test_coupling_weights_poles_and_equator():
    u_plus, u_minus = coupling_weights(0.0, 0.0)
    assert u_plus == pytest.approx(1.0)
    assert u_minus == pytest.approx(0.0)
    u_plus, u_minus = coupling_weights(math.pi, 1.3)
    assert abs(u_plus) == pytest.approx(0.0, abs=1e-15)
    assert abs(u_minus) == pytest.approx(1.0)
    u_plus, u_minus = coupling_weights(math.pi / 2, 0.0)
    assert u_plus == pytest.approx(1 / math.sqrt(2))
    assert u_minus == pytest.approx(1 / math.sqrt(2))


def test_coupling_weights_normalized_and_single_valued():
    rng = np.random.default_rng(7)
    for theta, phi in zip(rng.uniform(0, math.pi, 25), rng.uniform(0, 20, 25)):
        u_plus, u_minus = coupling_weights(theta, phi)
        assert abs(u_plus) ** 2 + abs(u_minus) ** 2 == pytest.approx(1.0)
        # a full azimuth turn returns the same weights exactly: the gauge is
        # single-valued on the sphere, so closed loops close the Hamiltonian
        v_plus, v_minus = coupling_weights(theta, phi + TWO_PI)
        assert v_plus == pytest.approx(u_plus, abs=1e-12)
        assert v_minus == pytest.approx(u_minus, abs=1e-12)


def test_hamiltonian_matrix_elements():
    space = make_space(2, 2)
    params = default_params()
    theta, phi = 0.9, 2.1
    h = build_hamiltonian(space, params, Polarization(theta, phi)).dense()
    u_plus, u_minus = coupling_weights(theta, phi)
    lam = params.lam
    # coupling block: <2,n-1,m| H |1,n,m> = lam * sqrt(n) * u_plus
    r = state_index(space, 2, 0, 0)
    assert h[r, state_index(space, 1, 1, 0)] == pytest.approx(lam * u_plus)
    assert h[r, state_index(space, 1, 0, 1)] == pytest.approx(lam * u_minus)
    r2 = state_index(space, 2, 1, 1)
    assert h[r2, state_index(space, 1, 2, 1)] == pytest.approx(
        lam * math.sqrt(2) * u_plus
    )
    # diagonal: upper level carries the drive light shift, lower level the
    # per-photon cavity shift
    assert h[r, r] == pytest.approx(params.shift_upper)
    i1 = state_index(space, 1, 2, 1)
    assert h[i1, i1] == pytest.approx(3 * params.shift_lower_per_photon)


def test_hamiltonian_hermitian_on_grid():
    space = make_space(3, 3)
    params = default_params()
    worst = 0.0
    for theta in np.linspace(0, math.pi, 7):
        for phi in np.linspace(0, TWO_PI, 7):
            h = build_hamiltonian(space, params, Polarization(theta, phi)).dense()
            worst = max(worst, float(np.max(np.abs(h - h.conj().T))))
    assert worst < 1e-12


def test_hamiltonian_commutes_with_excitation_number():
    space = make_space(3, 3)
    params = default_params()
    n_exc = excitation_operator(space).dense()
    rng = np.random.default_rng(3)
    for theta, phi in zip(rng.uniform(0, math.pi, 5), rng.uniform(0, TWO_PI, 5)):
        h = build_hamiltonian(space, params, Polarization(theta, phi)).dense()
        comm = h @ n_exc - n_exc @ h
        assert float(np.max(np.abs(comm))) < 1e-12


def test_factory_matches_builder():
    space = make_space(2, 1)
    params = default_params()
    factory = HamiltonianFactory(space, params)
    for theta, phi in [(0.0, 0.0), (1.1, 0.7), (math.pi, 4.0)]:
        np.testing.assert_allclose(
            factory.dense(theta, phi),
            build_hamiltonian(space, params, Polarization(theta, phi)).dense(),
            atol=1e-15,
        )


def test_single_excitation_spectrum_at_pole():
    # at theta = 0 the driven doublet splits to {0, 2*lam} around the dark
    # state left at lam (default parameters make both diagonal shifts lam)
    space = make_space(1, 1)
    params = default_params()
    h = build_hamiltonian(space, params, Polarization(0.0, 0.0)).dense()
    idx = excitation_sector_indices(space, 1)
    block = h[np.ix_(idx, idx)]
    vals = np.linalg.eigvalsh(block)
    lam = params.lam
    np.testing.assert_allclose(vals, [0.0, lam, 2 * lam], atol=1e-10)


def test_excitation_sector_indices():
    space = make_space(2, 2)
    idx = excitation_sector_indices(space, 1)
    expected = {
        state_index(space, 2, 0, 0),
        state_index(space, 1, 1, 0),
        state_index(space, 1, 0, 1),
    }
    assert set(idx) == expected
    # sectors partition the space
    everything = []
    for k in range(0, 2 + 2 + 1 + 1):
        everything.extend(excitation_sector_indices(space, k))
    assert sorted(everything) == list(range(space.dim))


def test_vacuum_is_sector_zero():
    space = make_space(2, 2)
    vac = fock_state(space, 1, 0, 0)
    n_exc = excitation_operator(space)
    from loopqed.hilbert import expectation

    assert expectation(n_exc, vac).real == pytest.approx(0.0)
    assert excitation_sector_indices(space, 0) == [state_index(space, 1, 0, 0)]
