"""Microwave observables: phase, phase shift, photon number, drive calibration.

The phase observable is phi = arg(i <a>), principal value in (-pi, pi].
Externally phases are reported in degrees; everything here is radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import CalibrationError, UndefinedPhaseError
from .hilbert import HilbertSpace, annihilation, expectation, number_operator
from .lindblad import steady_state
from .model import SystemParams, collapse_operators, jc_hamiltonian

__all__ = [
    "PhaseSample",
    "wrap_angle",
    "phase",
    "phase_shift",
    "dispersive_oracle",
    "photon_number",
    "calibrate_drive",
]

#: |<a>| below this is considered phaseless.
PHASE_AMPLITUDE_FLOOR = 1e-12


@dataclass(frozen=True)
class PhaseSample:
    time: float              # ns
    phi: float               # radians, in (-pi, pi]
    photon_number: float


def wrap_angle(x: float) -> float:
    """Wrap an angle into the principal interval (-pi, pi]."""
    w = math.remainder(x, 2.0 * math.pi)
    if w <= -math.pi:
        w = math.pi
    return w


def phase(rho: np.ndarray, space: HilbertSpace) -> float:
    """arg(i <a>) of the cavity field."""
    a_exp = expectation(annihilation(space), rho)
    if abs(a_exp) <= PHASE_AMPLITUDE_FLOOR:
        raise UndefinedPhaseError(
            f"|<a>| = {abs(a_exp):.3e} is too small to define a phase"
        )
    return float(np.angle(1j * a_exp))


def phase_shift(rho: np.ndarray, baseline_phi: float, space: HilbertSpace) -> float:
    """Phase relative to a baseline, wrapped into (-pi, pi]."""
    return wrap_angle(phase(rho, space) - baseline_phi)


def dispersive_oracle(g: float, kappa: float, delta: float) -> float:
    """Analytic dispersive phase shift -arctan(2 g^2 / (kappa delta)).

    delta is the probe-minus-qubit detuning (positive when the qubit sits
    below the resonator), the convention under which the ground-state
    response of the full model matches this formula including its sign.
    """
    if delta == 0:
        raise ValueError("dispersive formula is invalid at zero detuning")
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    return -math.atan(2.0 * g * g / (kappa * delta))


def photon_number(rho: np.ndarray, space: HilbertSpace) -> float:
    """Re Tr(a+ a rho)."""
    return float(expectation(number_operator(space), rho).real)


def calibrate_drive(
    target_n: float,
    params: SystemParams,
    space: HilbertSpace,
    build: Callable[[SystemParams], np.ndarray] | None = None,
    collapse_build: Callable[[SystemParams], list[np.ndarray]] | None = None,
    rel_tol: float = 5e-3,
    max_iter: int = 40,
) -> float:
    """Drive amplitude xi whose full-system steady state has the target photon number.

    Fixed-point iteration xi <- xi sqrt(target / n(xi)), seeded with the
    bare-cavity inversion xi0 = (kappa/2) sqrt(target_n); n(xi) is computed
    from the steady state of the Hamiltonian returned by build (default: the
    Jaynes-Cummings model at the parameters' own working point).
    """
    if target_n <= 0:
        raise ValueError("target_n must be > 0")
    if params.kappa <= 0:
        raise ValueError("calibration requires kappa > 0")
    if build is None:
        build = lambda p: jc_hamiltonian(p, space)
    if collapse_build is None:
        collapse_build = lambda p: collapse_operators(p, space)

    xi = 0.5 * params.kappa * math.sqrt(target_n)
    for _ in range(max_iter):
        trial = replace(params, drive_amp=xi)
        rho = steady_state(build(trial), collapse_build(trial), space)
        n = photon_number(rho, space)
        if n <= 0:
            raise CalibrationError(f"steady photon number {n:.3e} <= 0 at xi={xi:g}")
        if abs(n - target_n) <= rel_tol * target_n:
            return xi
        xi = xi * math.sqrt(target_n / n)
    raise CalibrationError(
        f"calibration did not reach n={target_n:g} within {max_iter} iterations"
    )
