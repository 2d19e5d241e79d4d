"""Physical model: parameters, Hamiltonians, dissipators and pulse schedules.

Units: hbar = 1, all frequencies and rates in rad/ns (angular) or 1/ns
(plain rates), time in ns.  Quantities quoted as "x/2pi = v GHz" convert as
x = 2*pi*v rad/ns; bare rates quoted in MHz convert as v/1000 per ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import HilbertSpace, annihilation, qubit_operator, tensor

__all__ = [
    "SystemParams",
    "DerivedQuantities",
    "PulseSequence",
    "qubit_splitting",
    "derived",
    "jc_hamiltonian",
    "charge_basis_hamiltonian",
    "rotating_frame_hamiltonian",
    "frame_boundary_rotation",
    "collapse_operators",
    "eigenbasis_collapse_operators",
    "charge_eigenvectors",
]


@dataclass(frozen=True)
class SystemParams:
    """All physical rates/frequencies of the coupled system plus drive settings.

    omega0, g, epsilon, tunnel_t, drive_freq, drive_amp are angular (rad/ns);
    kappa is angular (rad/ns); gamma_l and gamma_phi are plain rates (1/ns),
    so T1 = 1/gamma_l.
    """

    omega0: float
    kappa: float
    gamma_l: float
    gamma_phi: float
    g: float
    epsilon: float
    tunnel_t: float
    drive_freq: float
    drive_amp: float

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError("omega0 must be > 0")
        for name in ("kappa", "gamma_l", "gamma_phi", "g", "tunnel_t", "drive_amp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class DerivedQuantities:
    Omega: float      # qubit splitting sqrt(eps^2 + 4 t^2), rad/ns
    Delta: float      # qubit-resonator detuning Omega - omega0, rad/ns
    Delta_d: float    # drive-resonator detuning omega0 - drive_freq, rad/ns
    T1: float         # qubit relaxation time 1/gamma_l, ns


@dataclass(frozen=True)
class PulseSequence:
    """Piecewise-constant detuning schedule: a single rectangular pulse."""

    baseline_epsilon: float
    pulse_start: float
    pulse_length: float
    pulse_epsilon: float = 0.0

    def __post_init__(self):
        if self.pulse_start < 0 or self.pulse_length < 0:
            raise ValueError("pulse_start and pulse_length must be >= 0")

    def epsilon_at(self, time: float) -> float:
        """Detuning at the given time; the pulse interval is left-closed."""
        if self.pulse_start <= time < self.pulse_start + self.pulse_length:
            return self.pulse_epsilon
        return self.baseline_epsilon


def qubit_splitting(epsilon: float, tunnel_t: float) -> float:
    """Qubit eigenenergy gap sqrt(epsilon^2 + 4 t^2)."""
    return math.hypot(epsilon, 2.0 * tunnel_t)


def derived(params: SystemParams) -> DerivedQuantities:
    omega = qubit_splitting(params.epsilon, params.tunnel_t)
    t1 = math.inf if params.gamma_l == 0 else 1.0 / params.gamma_l
    return DerivedQuantities(
        Omega=omega,
        Delta=omega - params.omega0,
        Delta_d=params.omega0 - params.drive_freq,
        T1=t1,
    )


def jc_hamiltonian(
    params: SystemParams,
    space: HilbertSpace,
    dipole_coupling: bool = False,
) -> np.ndarray:
    """Jaynes-Cummings Hamiltonian in the frame rotating at the drive frequency.

    H = (Omega - w_d)/2 sigma_z + (w0 - w_d) a+a + g (s+ a + s- a+) + xi (a + a+)

    With dipole_coupling=True the coupling is rescaled by the qubit mixing
    angle factor 2t/Omega (off by default).
    """
    omega = qubit_splitting(params.epsilon, params.tunnel_t)
    g = params.g
    if dipole_coupling and omega > 0:
        g = g * (2.0 * params.tunnel_t / omega)
    a = annihilation(space)
    ad = a.conj().T
    sz = qubit_operator("sigma_z", space)
    sp = qubit_operator("sigma_plus", space)
    sm = qubit_operator("sigma_minus", space)
    h = (
        0.5 * (omega - params.drive_freq) * sz
        + (params.omega0 - params.drive_freq) * (ad @ a)
        + g * (sp @ a + sm @ ad)
        + params.drive_amp * (a + ad)
    )
    return 0.5 * (h + h.conj().T)


def _charge_mixing_angle(epsilon: float, tunnel_t: float) -> float:
    """Mixing angle theta with cos(theta) = eps/Omega, sin(theta) = 2t/Omega."""
    return math.atan2(2.0 * tunnel_t, epsilon)


def charge_eigenvectors(epsilon: float, tunnel_t: float) -> tuple[np.ndarray, np.ndarray]:
    """(ground, excited) eigenvectors of (eps/2) tau_z + t tau_x in (|L>, |R>).

    For eps -> +inf the ground state tends to |R>, the excited state to |L>.
    The sign convention is fixed so pulse segments compose deterministically.
    """
    theta = _charge_mixing_angle(epsilon, tunnel_t)
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    ground = np.array([-s, c], dtype=complex)
    excited = np.array([c, s], dtype=complex)
    return ground, excited


def charge_basis_hamiltonian(
    params: SystemParams,
    epsilon_now: float,
    space: HilbertSpace,
    coupling: str = "rwa",
) -> np.ndarray:
    """Charge-basis Hamiltonian for pulsed operation, resonator frame at w_d.

    The qubit part (eps/2) tau_z + t tau_x is kept in the fixed (|L>, |R>)
    basis so a nonadiabatic epsilon jump is just a change of matrix, never of
    basis.  The qubit-resonator coupling derives from the capacitive term
    g tau_z (a + a+):

    - coupling="rwa" (default): only the part of tau_z that is transverse in
      the instantaneous qubit eigenbasis survives the rotating-wave average,
      giving -g (2t/Omega) (s+ a + s- a+) expressed back in the charge basis.
      The longitudinal component rotates at +-w_d in this frame and averages
      out; keeping it static would spuriously displace the cavity by
      ~ 2 g / kappa (hundreds of photons at the parameters of interest).
    - coupling="static": the bare g tau_z (a + a+) kept verbatim, for
      comparison only.
    """
    n = space.fock_levels
    a_sub = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    tau_z = np.diag([1.0, -1.0]).astype(complex)
    tau_x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    eye_n = np.eye(n, dtype=complex)

    h_q = 0.5 * epsilon_now * tau_z + params.tunnel_t * tau_x
    h = tensor(h_q, eye_n, space)
    h += (params.omega0 - params.drive_freq) * tensor(eye2, a_sub.conj().T @ a_sub, space)
    h += params.drive_amp * tensor(eye2, a_sub + a_sub.conj().T, space)

    if coupling == "rwa":
        omega = qubit_splitting(epsilon_now, params.tunnel_t)
        theta = _charge_mixing_angle(epsilon_now, params.tunnel_t)
        ground, excited = charge_eigenvectors(epsilon_now, params.tunnel_t)
        raise_q = np.outer(excited, ground.conj())
        # transverse component of tau_z in the eigenbasis is -sin(theta) sigma_x
        coup = -params.g * math.sin(theta)
        h += coup * (
            tensor(raise_q, a_sub, space) + tensor(raise_q.conj().T, a_sub.conj().T, space)
        )
    elif coupling == "static":
        h += params.g * tensor(tau_z, a_sub + a_sub.conj().T, space)
    else:
        raise ValueError(f"unknown coupling scheme {coupling!r}")
    return 0.5 * (h + h.conj().T)


def rotating_frame_hamiltonian(
    params: SystemParams,
    epsilon_now: float,
    space: HilbertSpace,
) -> np.ndarray:
    """Segment generator for pulsed runs, in charge-basis representation.

    Frame rotating at the drive frequency for the resonator *and* along the
    instantaneous qubit eigenaxis:

        H = (Omega - w_d)/2 sz_eig + (w0 - w_d) a+a
            - g sin(theta) (s+_eig a + s-_eig a+) + xi (a + a+)

    where sin(theta) = 2t/Omega is the transverse weight of the capacitive
    tau_z coupling in the eigenbasis (its longitudinal part is non-secular in
    this frame and averages out).  The matrices stay in the fixed (|L>, |R>)
    charge basis so segments with different detunings compose directly; the
    residual frame mismatch at a segment boundary is the unitary returned by
    frame_boundary_rotation.
    """
    n = space.fock_levels
    a_sub = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    eye2 = np.eye(2, dtype=complex)

    omega = qubit_splitting(epsilon_now, params.tunnel_t)
    theta = _charge_mixing_angle(epsilon_now, params.tunnel_t)
    ground, excited = charge_eigenvectors(epsilon_now, params.tunnel_t)
    sz_eig = np.outer(excited, excited.conj()) - np.outer(ground, ground.conj())
    raise_q = np.outer(excited, ground.conj())

    h = 0.5 * (omega - params.drive_freq) * tensor(sz_eig, np.eye(n, dtype=complex), space)
    h += (params.omega0 - params.drive_freq) * tensor(eye2, a_sub.conj().T @ a_sub, space)
    h += params.drive_amp * tensor(eye2, a_sub + a_sub.conj().T, space)
    coup = -params.g * math.sin(theta)
    h += coup * (
        tensor(raise_q, a_sub, space) + tensor(raise_q.conj().T, a_sub.conj().T, space)
    )
    return 0.5 * (h + h.conj().T)


def frame_boundary_rotation(
    params: SystemParams,
    epsilon_from: float,
    epsilon_to: float,
    elapsed: float,
    space: HilbertSpace,
) -> np.ndarray:
    """Unitary matching two corotating frames at a detuning jump.

    A state evolved for `elapsed` ns in the frame along the eigenaxis of
    epsilon_from transforms into the frame of epsilon_to by

        R = exp(+i w_d T sz_to / 2) exp(-i w_d T sz_from / 2)

    (the resonator parts of the two frame generators cancel).  R is the
    identity when the axes coincide or when the drive-phase angle w_d T is a
    multiple of 2 pi.
    """
    n = space.fock_levels
    eye_n = np.eye(n, dtype=complex)

    def sz_at(eps: float) -> np.ndarray:
        ground, excited = charge_eigenvectors(eps, params.tunnel_t)
        return np.outer(excited, excited.conj()) - np.outer(ground, ground.conj())

    half_angle = 0.5 * params.drive_freq * elapsed
    eye2 = np.eye(2, dtype=complex)

    def rot(sz: np.ndarray, sign: float) -> np.ndarray:
        return math.cos(half_angle) * eye2 + 1j * sign * math.sin(half_angle) * sz

    r = rot(sz_at(epsilon_to), +1.0) @ rot(sz_at(epsilon_from), -1.0)
    return tensor(r, eye_n, space)


def collapse_operators(params: SystemParams, space: HilbertSpace) -> list[np.ndarray]:
    """Lindblad jump operators for photon loss, relaxation and pure dephasing.

    [sqrt(kappa) a, sqrt(gamma_l) sigma-, sqrt(gamma_phi/2) sigma_z];
    zero-rate channels are omitted.
    """
    ops = []
    if params.kappa > 0:
        ops.append(math.sqrt(params.kappa) * annihilation(space))
    if params.gamma_l > 0:
        ops.append(math.sqrt(params.gamma_l) * qubit_operator("sigma_minus", space))
    if params.gamma_phi > 0:
        ops.append(math.sqrt(params.gamma_phi / 2.0) * qubit_operator("sigma_z", space))
    return ops


def eigenbasis_collapse_operators(
    params: SystemParams,
    epsilon_now: float,
    space: HilbertSpace,
) -> list[np.ndarray]:
    """Collapse operators with the qubit channels in the instantaneous eigenbasis.

    For charge-basis (pulsed) runs the relaxation and dephasing axes follow
    the qubit eigenbasis at the current detuning; in the fixed (up, down)
    eigenbasis representation this reduces to collapse_operators.  Applying
    sigma_z dephasing along the charge axis instead would pump the qubit at
    rate ~ gamma_phi sin^2(theta) at a tilted idle point, polluting the
    pre-pulse state.
    """
    n = space.fock_levels
    eye_n = np.eye(n, dtype=complex)
    ground, excited = charge_eigenvectors(epsilon_now, params.tunnel_t)
    ops = []
    if params.kappa > 0:
        ops.append(math.sqrt(params.kappa) * annihilation(space))
    if params.gamma_l > 0:
        lower = np.outer(ground, excited.conj())
        ops.append(math.sqrt(params.gamma_l) * tensor(lower, eye_n, space))
    if params.gamma_phi > 0:
        sz = np.outer(excited, excited.conj()) - np.outer(ground, ground.conj())
        ops.append(math.sqrt(params.gamma_phi / 2.0) * tensor(sz, eye_n, space))
    return ops
