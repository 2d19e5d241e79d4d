import math

import numpy as np
import pytest

from dqdcavity.errors import UndefinedPhaseError
from dqdcavity.hilbert import HilbertSpace, density_from_ket, ket
from dqdcavity.lindblad import steady_state
from dqdcavity.model import SystemParams, collapse_operators, jc_hamiltonian
from dqdcavity.readout import (
    PHASE_AMPLITUDE_FLOOR,
    calibrate_drive,
    dispersive_oracle,
    phase,
    phase_shift,
    photon_number,
    wrap_angle,
)

TWO_PI = 2.0 * math.pi


def make_params(**overrides):
    defaults = dict(
        omega0=TWO_PI * 6.2,
        kappa=TWO_PI * 0.001,
        gamma_l=0.02,
        gamma_phi=0.0,
        g=TWO_PI * 0.05,
        epsilon=0.0,
        tunnel_t=TWO_PI * 1.1,
        drive_freq=TWO_PI * 6.2,
        drive_amp=0.0,
    )
    defaults.update(overrides)
    return SystemParams(**defaults)


def coherent_density(alpha, space):
    """Truncated coherent state |alpha><alpha|."""
    n = np.arange(space.fock_levels)
    amps = np.exp(-0.5 * abs(alpha) ** 2) * alpha**n / np.sqrt(
        np.array([math.factorial(int(k)) for k in n], dtype=float)
    )
    psi = np.zeros(space.dim, dtype=complex)
    psi[space.fock_levels:] = amps  # qubit ground sector
    return density_from_ket(psi / np.linalg.norm(psi))


# ---------------------------------------------------------------------------
# wrap_angle

def test_wrap_angle_fixed_points():
    for x in (0.0, 1.0, -1.0, math.pi):
        assert wrap_angle(x) == pytest.approx(x)


def test_wrap_angle_wraps_multiples():
    assert wrap_angle(math.pi + 0.3) == pytest.approx(-math.pi + 0.3)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(7.0 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(2.0 * math.pi * 12 + 0.1) == pytest.approx(0.1)


def test_wrap_angle_range():
    for x in np.linspace(-50.0, 50.0, 997):
        w = wrap_angle(float(x))
        assert -math.pi < w <= math.pi


# ---------------------------------------------------------------------------
# phase and phase_shift

def test_phase_of_coherent_states():
    space = HilbertSpace(30)
    # phi = arg(i <a>): a real-positive field reads pi/2
    assert phase(coherent_density(1.5, space), space) == pytest.approx(math.pi / 2, abs=1e-9)
    # <a> = -i |alpha| reads 0
    assert phase(coherent_density(-1.5j, space), space) == pytest.approx(0.0, abs=1e-9)
    beta = 1.2 * np.exp(0.4j)
    assert phase(coherent_density(beta, space), space) == pytest.approx(
        math.pi / 2 + 0.4, abs=1e-9
    )


def test_phase_undefined_for_vacuum():
    space = HilbertSpace(4)
    with pytest.raises(UndefinedPhaseError):
        phase(density_from_ket(ket(space, 1, 0)), space)


def test_phase_undefined_for_fock_state():
    space = HilbertSpace(4)
    # Fock states carry photons but no field amplitude
    with pytest.raises(UndefinedPhaseError):
        phase(density_from_ket(ket(space, 1, 2)), space)


def test_phase_shift_relative_and_wrapped():
    space = HilbertSpace(25)
    rho = coherent_density(1.0 * np.exp(0.3j), space)
    phi = phase(rho, space)
    assert phase_shift(rho, phi, space) == pytest.approx(0.0, abs=1e-12)
    assert phase_shift(rho, phi - 0.25, space) == pytest.approx(0.25, abs=1e-9)
    assert phase_shift(rho, phi - math.pi - 0.1, space) == pytest.approx(
        -math.pi + 0.1, abs=1e-9
    )


def test_phase_amplitude_floor_exported():
    assert 0.0 < PHASE_AMPLITUDE_FLOOR < 1e-6


# ---------------------------------------------------------------------------
# dispersive oracle

def test_dispersive_oracle_zero_coupling():
    assert dispersive_oracle(0.0, 1.0, 2.0) == 0.0


def test_dispersive_oracle_quarter_turn():
    # 2 g^2 = kappa * delta gives exactly -pi/4
    kappa, delta = 0.02, 5.0
    g = math.sqrt(0.5 * kappa * delta)
    assert dispersive_oracle(g, kappa, delta) == pytest.approx(-math.pi / 4)


def test_dispersive_oracle_frozen_value():
    # g/2pi = 50 MHz, kappa/2pi = 3.1 MHz, delta/2pi = 2 GHz
    g = TWO_PI * 0.05
    kappa = TWO_PI * 0.0031
    delta = TWO_PI * 2.0
    # -atan(2 * 0.05^2 / (0.0031 * 2)) = -atan(0.80645...)
    assert dispersive_oracle(g, kappa, delta) == pytest.approx(-0.67866, abs=5e-5)


def test_dispersive_oracle_antisymmetric_in_detuning():
    g, kappa = 0.3, 0.02
    for delta in (0.5, 2.0, 11.0):
        assert dispersive_oracle(g, kappa, delta) == pytest.approx(
            -dispersive_oracle(g, kappa, -delta)
        )


def test_dispersive_oracle_magnitude_decreases_with_detuning():
    g, kappa = 0.3, 0.02
    mags = [abs(dispersive_oracle(g, kappa, d)) for d in (1.0, 2.0, 5.0, 20.0)]
    assert all(a > b for a, b in zip(mags, mags[1:]))


def test_dispersive_oracle_invalid_inputs():
    with pytest.raises(ValueError):
        dispersive_oracle(0.1, 0.02, 0.0)
    with pytest.raises(ValueError):
        dispersive_oracle(0.1, 0.0, 1.0)
    with pytest.raises(ValueError):
        dispersive_oracle(0.1, -0.02, 1.0)


# ---------------------------------------------------------------------------
# photon number

def test_photon_number_fock_and_vacuum():
    space = HilbertSpace(5)
    assert photon_number(density_from_ket(ket(space, 1, 0)), space) == pytest.approx(0.0)
    assert photon_number(density_from_ket(ket(space, 0, 3)), space) == pytest.approx(3.0)


def test_photon_number_coherent_state():
    space = HilbertSpace(30)
    assert photon_number(coherent_density(1.4, space), space) == pytest.approx(
        1.4**2, rel=1e-6
    )


# ---------------------------------------------------------------------------
# calibrate_drive

def test_calibrate_drive_decoupled_matches_inversion():
    space = HilbertSpace(24)
    p = make_params(g=0.0, gamma_l=0.0)
    xi = calibrate_drive(3.8, p, space)
    # bare resonant cavity: n = (2 xi / kappa)^2
    assert xi == pytest.approx(0.5 * p.kappa * math.sqrt(3.8), rel=1e-2)
    assert xi / TWO_PI == pytest.approx(0.975e-3, rel=1e-2)


def test_calibrate_drive_postcondition():
    space = HilbertSpace(16)
    p = make_params()
    target = 2.0
    xi = calibrate_drive(target, p, space)
    trial = SystemParams(**{**p.__dict__, "drive_amp": xi})
    rho = steady_state(
        jc_hamiltonian(trial, space), collapse_operators(trial, space), space
    )
    assert photon_number(rho, space) == pytest.approx(target, rel=1e-2)


def test_calibrate_drive_rejects_bad_target():
    space = HilbertSpace(8)
    with pytest.raises(ValueError):
        calibrate_drive(0.0, make_params(), space)
    with pytest.raises(ValueError):
        calibrate_drive(-1.0, make_params(), space)
