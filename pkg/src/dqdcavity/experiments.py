"""Grid experiments: spectroscopy map, pulsed-Rabi map, periodicity analysis.

Every grid point is a pure function of its own parameters; maps are filled
by index so results are identical for any degree of parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
import scipy.optimize

from . import __version__
from .errors import AnalysisError, SimulationError, TruncationError
from .hilbert import HilbertSpace, default_fock_levels, top_fock_population
from .lindblad import liouvillian, propagator, steady_state, unvec, vec
from .model import (
    SystemParams,
    collapse_operators,
    eigenbasis_collapse_operators,
    frame_boundary_rotation,
    jc_hamiltonian,
    rotating_frame_hamiltonian,
)
from .readout import calibrate_drive, phase, photon_number, wrap_angle

__all__ = [
    "SweepSpec",
    "PulseSpec",
    "PhaseMap",
    "RabiFit",
    "phase_map",
    "pulse_phase_map",
    "fit_rabi_row",
    "periodicity_deviation",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SweepSpec:
    """Spectroscopy grid: qubit detuning vs tunnel splitting, both in GHz (x/h)."""

    eps_axis: tuple[float, float, int]       # eps/h in GHz: (min, max, points)
    tt_axis: tuple[float, float, int]        # 2t/h in GHz: (min, max, points)
    params: SystemParams
    probe_photon_number: float = 0.1
    fock_levels: int | None = None

    def __post_init__(self):
        for name, axis in (("eps_axis", self.eps_axis), ("tt_axis", self.tt_axis)):
            if axis[2] < 2 or not axis[0] < axis[1]:
                raise ValueError(f"{name} must satisfy min < max and points >= 2")


@dataclass(frozen=True)
class PulseSpec:
    """Pulsed-Rabi grid: measurement time (us) vs pulse length (ns)."""

    tp_axis: tuple[float, float, int]        # pulse length in ns
    t_axis: tuple[float, float, int]         # measurement time in us
    idle_epsilon: float                      # rad/ns
    tunnel_t: float                          # rad/ns
    target_n: float
    params: SystemParams
    pulse_epsilon: float = 0.0               # rad/ns, the degeneracy point
    fock_levels: int | None = None

    def __post_init__(self):
        for name, axis in (("tp_axis", self.tp_axis), ("t_axis", self.t_axis)):
            if axis[2] < 2 or not axis[0] < axis[1]:
                raise ValueError(f"{name} must satisfy min < max and points >= 2")
        if self.target_n <= 0:
            raise ValueError("target_n must be > 0")


@dataclass
class PhaseMap:
    """Rectangular grid of phase shifts (degrees) with axis metadata."""

    x: np.ndarray
    y: np.ndarray
    x_label: str
    y_label: str
    values: np.ndarray            # degrees, shape (len(y), len(x))
    photon_number: np.ndarray     # same shape
    top_fock_pop: np.ndarray      # same shape
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        expected = (len(self.y), len(self.x))
        for name in ("values", "photon_number", "top_fock_pop"):
            if getattr(self, name).shape != expected:
                raise ValueError(f"{name} grid shape does not match axes")


def _axis(spec_axis: tuple[float, float, int]) -> np.ndarray:
    lo, hi, pts = spec_axis
    return np.linspace(lo, hi, int(pts))


def _sweep_point(
    base: SystemParams,
    fock_levels: int,
    baseline_phi: float,
    eps_ghz: float,
    tt_ghz: float,
) -> tuple[float, float, float]:
    """One spectroscopy point: (dphi_deg, photon_number, top_fock_pop)."""
    space = HilbertSpace(fock_levels)
    p = replace(base, epsilon=TWO_PI * eps_ghz, tunnel_t=TWO_PI * tt_ghz / 2.0)
    rho = steady_state(jc_hamiltonian(p, space), collapse_operators(p, space), space)
    dphi = wrap_angle(phase(rho, space) - baseline_phi)
    return (
        math.degrees(dphi),
        photon_number(rho, space),
        top_fock_population(rho, space),
    )


def _sweep_point_star(args):
    return _sweep_point(*args)


def phase_map(
    spec: SweepSpec,
    lenient: bool = False,
    max_workers: int | None = None,
) -> PhaseMap:
    """Steady-state phase shift over the (eps, 2t) grid.

    The probe is a weak coherent drive at the bare resonator frequency with
    bare-cavity photon number spec.probe_photon_number; the phase baseline is
    the same drive with the qubit decoupled (g = 0).
    """
    fock = spec.fock_levels or default_fock_levels(spec.probe_photon_number)
    space = HilbertSpace(fock)
    xi = 0.5 * spec.params.kappa * math.sqrt(spec.probe_photon_number)
    base = replace(spec.params, drive_amp=xi, drive_freq=spec.params.omega0)

    bare = replace(base, g=0.0)
    rho_bare = steady_state(jc_hamiltonian(bare, space), collapse_operators(bare, space), space)
    baseline_phi = phase(rho_bare, space)

    eps_vals = _axis(spec.eps_axis)
    tt_vals = _axis(spec.tt_axis)
    values = np.empty((len(tt_vals), len(eps_vals)))
    nbar = np.empty_like(values)
    top_pop = np.empty_like(values)

    tasks = [
        (base, fock, baseline_phi, eps_vals[ix], tt_vals[iy])
        for iy in range(len(tt_vals))
        for ix in range(len(eps_vals))
    ]

    def fill(index: int, result, error: Exception | None):
        iy, ix = divmod(index, len(eps_vals))
        if error is not None:
            if not lenient:
                raise error
            values[iy, ix] = math.nan
            nbar[iy, ix] = math.nan
            top_pop[iy, ix] = math.nan
        else:
            values[iy, ix], nbar[iy, ix], top_pop[iy, ix] = result

    if max_workers is not None and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            chunk = max(1, len(tasks) // (8 * max_workers))
            if lenient:
                futures = [pool.submit(_sweep_point, *t) for t in tasks]
                for i, fut in enumerate(futures):
                    try:
                        fill(i, fut.result(), None)
                    except SimulationError as exc:
                        fill(i, None, exc)
            else:
                for i, result in enumerate(pool.map(_sweep_point_star, tasks, chunksize=chunk)):
                    fill(i, result, None)
    else:
        for i, task in enumerate(tasks):
            try:
                fill(i, _sweep_point(*task), None)
            except SimulationError as exc:
                fill(i, None, exc)

    return PhaseMap(
        x=eps_vals,
        y=tt_vals,
        x_label="eps_over_h_ghz",
        y_label="two_t_over_h_ghz",
        values=values,
        photon_number=nbar,
        top_fock_pop=top_pop,
        metadata={
            "kind": "sweep",
            "baseline_phi_rad": baseline_phi,
            "probe_drive_amp_rad_per_ns": xi,
            "fock_levels": fock,
            "params": base,
            "code_version": __version__,
        },
    )


def _uniform_step(axis: np.ndarray, name: str) -> float:
    steps = np.diff(axis)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
        raise ValueError(f"{name} must be uniformly spaced for the propagator fast path")
    return float(steps[0])


def pulse_phase_map(spec: PulseSpec, lenient: bool = False) -> PhaseMap:
    """Phase shift after a nonadiabatic rectangular detuning pulse.

    The drive is calibrated so the pre-pulse steady state holds target_n
    photons.  Each pulse segment has a time-independent generator (the pulse
    is an ideal rectangle), so both the pulse and the post-pulse evolution
    advance by precomputed superoperator exponentials; measurement time t is
    counted from the end of the pulse.
    """
    fock = spec.fock_levels or default_fock_levels(spec.target_n)
    space = HilbertSpace(fock)
    base = replace(
        spec.params,
        epsilon=spec.idle_epsilon,
        tunnel_t=spec.tunnel_t,
        drive_freq=spec.params.omega0,
    )

    def build_idle(p: SystemParams) -> np.ndarray:
        return rotating_frame_hamiltonian(p, spec.idle_epsilon, space)

    def collapse_idle(p: SystemParams) -> list[np.ndarray]:
        return eigenbasis_collapse_operators(p, spec.idle_epsilon, space)

    xi = calibrate_drive(
        spec.target_n, base, space, build=build_idle, collapse_build=collapse_idle
    )
    params = replace(base, drive_amp=xi)

    h_idle = build_idle(params)
    c_ops = collapse_idle(params)
    rho0 = steady_state(h_idle, c_ops, space)
    phi_pre = phase(rho0, space)
    achieved_n = photon_number(rho0, space)

    tp_vals = _axis(spec.tp_axis)           # ns
    t_vals = _axis(spec.t_axis)             # us
    t_ns = t_vals * 1000.0

    l_idle = liouvillian(h_idle, c_ops)
    h_pulse = rotating_frame_hamiltonian(params, spec.pulse_epsilon, space)
    c_ops_pulse = eigenbasis_collapse_operators(params, spec.pulse_epsilon, space)
    l_pulse = liouvillian(h_pulse, c_ops_pulse)

    dtp = _uniform_step(tp_vals, "tp_axis")
    dt = _uniform_step(t_ns, "t_axis")
    prop_pulse = propagator(l_pulse, dtp)
    prop_meas = propagator(l_idle, dt)
    prop_first = prop_meas if abs(t_ns[0] - dt) <= 1e-9 * dt else propagator(l_idle, t_ns[0])
    if abs(t_ns[0]) <= 1e-12:
        prop_first = None

    values = np.empty((len(tp_vals), len(t_vals)))
    nbar = np.empty_like(values)
    top_pop = np.empty_like(values)

    v_pulse = vec(rho0)
    if abs(tp_vals[0]) > 1e-12:
        v_pulse = propagator(l_pulse, float(tp_vals[0])) @ v_pulse

    for iy in range(len(tp_vals)):
        if iy > 0:
            v_pulse = prop_pulse @ v_pulse
        # re-express the state in the idle-point corotating frame before the
        # post-pulse segment; identity at tp = 0
        rot = frame_boundary_rotation(
            params, spec.pulse_epsilon, spec.idle_epsilon, float(tp_vals[iy]), space
        )
        rho_boundary = rot @ unvec(v_pulse) @ rot.conj().T
        w = vec(rho_boundary)
        if prop_first is not None:
            w = prop_first @ w
        for ix in range(len(t_vals)):
            if ix > 0:
                w = prop_meas @ w
            rho = unvec(w)
            rho = 0.5 * (rho + rho.conj().T)
            tr = np.trace(rho).real
            rho = rho / tr
            pop = top_fock_population(rho, space)
            if pop > 1e-4 and not lenient:
                raise TruncationError(
                    f"top Fock population {pop:.3e} at tp={tp_vals[iy]:g} ns, t={t_vals[ix]:g} us"
                )
            values[iy, ix] = math.degrees(wrap_angle(phase(rho, space) - phi_pre))
            nbar[iy, ix] = photon_number(rho, space)
            top_pop[iy, ix] = pop

    return PhaseMap(
        x=t_vals,
        y=tp_vals,
        x_label="t_us",
        y_label="tp_ns",
        values=values,
        photon_number=nbar,
        top_fock_pop=top_pop,
        metadata={
            "kind": "pulse",
            "target_photon_number": spec.target_n,
            "achieved_photon_number": achieved_n,
            "calibrated_drive_amp_rad_per_ns": xi,
            "pre_pulse_phase_rad": phi_pre,
            "fock_levels": fock,
            "params": params,
            "code_version": __version__,
        },
    )


@dataclass(frozen=True)
class RabiFit:
    """Least-squares fit of A cos(2 pi x / T + theta) + c to one map row."""

    period: float
    amplitude: float
    phase: float
    offset: float
    rms_residual: float

    @property
    def relative_deviation(self) -> float:
        return self.rms_residual / abs(self.amplitude)


def fit_rabi_row(x: np.ndarray, row: np.ndarray) -> RabiFit:
    """Fit a single cosine to a row; raises AnalysisError on degenerate rows."""
    x = np.asarray(x, dtype=float)
    row = np.asarray(row, dtype=float)
    if x.size < 5:
        raise AnalysisError("too few points for a cosine fit")
    span = float(np.max(row) - np.min(row))
    if span < 1e-12:
        raise AnalysisError("row is constant; oscillation amplitude undefined")

    detrended = row - np.mean(row)
    dx = float(np.mean(np.diff(x)))
    spectrum = np.fft.rfft(detrended)
    freqs = np.fft.rfftfreq(x.size, d=dx)
    k = int(np.argmax(np.abs(spectrum[1:])) + 1)
    period0 = 1.0 / freqs[k]
    amp0 = 2.0 * np.abs(spectrum[k]) / x.size
    phase0 = float(np.angle(spectrum[k]) - TWO_PI * x[0] / period0)

    def residuals(p):
        amp, period, theta, offset = p
        return amp * np.cos(TWO_PI * x / period + theta) + offset - row

    # The period is confined to the band around the dominant non-DC spectral
    # peak; otherwise a slow secular trend in the row can capture the fit with
    # an absurdly long "period".
    lo = np.array([-np.inf, period0 / 1.6, -np.inf, -np.inf])
    hi = np.array([np.inf, period0 * 1.6, np.inf, np.inf])
    result = scipy.optimize.least_squares(
        residuals,
        x0=[amp0, period0, phase0, float(np.mean(row))],
        bounds=(lo, hi),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=20000,
    )
    if not result.success:
        raise AnalysisError(f"cosine fit did not converge: {result.message}")
    amp, period, theta, offset = result.x
    if abs(amp) < 1e-9 * span:
        raise AnalysisError("fitted amplitude is zero; relative deviation undefined")
    rms = float(np.sqrt(np.mean(result.fun**2)))
    return RabiFit(
        period=abs(float(period)),
        amplitude=abs(float(amp)),
        phase=float(theta),
        offset=float(offset),
        rms_residual=rms,
    )


def periodicity_deviation(pmap: PhaseMap) -> float:
    """RMS deviation from a single-cosine fit of the earliest-time row.

    The pulsed map stores pulse length on the y axis and measurement time on
    the x axis; the "row" analysed here is the phase shift versus pulse
    length at the earliest measurement time.
    """
    column = pmap.values[:, 0]
    fit = fit_rabi_row(pmap.y, column)
    return fit.relative_deviation
