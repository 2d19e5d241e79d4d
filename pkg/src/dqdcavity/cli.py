"""Command-line interface: run experiments from JSON configs, emit CSV + metadata.

Config keys carry their units in the name (omega0_over_2pi_ghz, gamma_l_per_us,
...) so the angular-vs-plain-rate ambiguity never crosses the file boundary.
Exit codes: 0 success, 1 config error, 2 numerical failure, 3 acceptance
failure (check-dispersive / selftest).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .errors import ConfigError, SimulationError
from .experiments import PhaseMap, PulseSpec, SweepSpec, phase_map, pulse_phase_map
from .hilbert import HilbertSpace, default_fock_levels, density_from_ket, ket, top_fock_population
from .lindblad import evolve, steady_state
from .model import SystemParams, collapse_operators, jc_hamiltonian, qubit_splitting
from .readout import calibrate_drive, dispersive_oracle, phase, photon_number, wrap_angle

__all__ = ["main"]

TWO_PI = 2.0 * math.pi

_CSV_SWEEP_HEADER = "eps_over_h_ghz,two_t_over_h_ghz,dphi_deg,photon_number,top_fock_pop"
_CSV_PULSE_HEADER = "t_us,tp_ns,dphi_deg,photon_number,top_fock_pop"


# ---------------------------------------------------------------------------
# config handling

def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path!r} must contain a JSON object")
    # a metadata sidecar is itself a valid config: unwrap the resolved copy
    if "resolved_config" in cfg:
        cfg = cfg["resolved_config"]
        if not isinstance(cfg, dict):
            raise ConfigError("key 'resolved_config' must hold a JSON object")
    return cfg


def _resolve(cfg: dict, required: tuple[str, ...], defaults: dict) -> dict:
    allowed = set(required) | set(defaults)
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r}")
    for key in required:
        if key not in cfg:
            raise ConfigError(f"missing required key {key!r}")
    resolved = dict(defaults)
    resolved.update(cfg)
    if resolved.get("deterministic", True) is not True:
        raise ConfigError("key 'deterministic' only asserts determinism; it cannot be false")
    return resolved


def _number(cfg: dict, key: str, minimum: float | None = None) -> float:
    value = cfg[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"key {key!r} must be a number")
    if minimum is not None and value < minimum:
        raise ConfigError(f"key {key!r} must be >= {minimum:g}")
    return float(value)


def _axis_triplet(cfg: dict, key: str) -> tuple[float, float, int]:
    value = cfg[key]
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise ConfigError(f"key {key!r} must be [min, max, points]")
    lo, hi, pts = float(value[0]), float(value[1]), int(value[2])
    if pts < 2 or not lo < hi:
        raise ConfigError(f"key {key!r} must satisfy min < max and points >= 2")
    return (lo, hi, pts)


def _fock_levels(cfg: dict) -> int | None:
    value = cfg.get("fock_levels")
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool) or value < 2:
        raise ConfigError("key 'fock_levels' must be an integer >= 2")
    return value


def _base_params(cfg: dict) -> SystemParams:
    omega0 = TWO_PI * _number(cfg, "omega0_over_2pi_ghz", minimum=1e-9)
    try:
        return SystemParams(
            omega0=omega0,
            kappa=TWO_PI * _number(cfg, "kappa_over_2pi_mhz", minimum=0.0) / 1000.0,
            gamma_l=_number(cfg, "gamma_l_per_us", minimum=0.0) / 1000.0,
            gamma_phi=_number(cfg, "gamma_phi_per_us", minimum=0.0) / 1000.0,
            g=TWO_PI * _number(cfg, "g_over_2pi_mhz", minimum=0.0) / 1000.0,
            epsilon=0.0,
            tunnel_t=0.0,
            drive_freq=omega0,
            drive_amp=0.0,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# output helpers

def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _write_map_csv(path: str, pmap: PhaseMap, header: str) -> None:
    """Flatten the map row-major (y outer, x inner); each row is (x, y, ...)."""
    lines = [header]
    for iy in range(len(pmap.y)):
        for ix in range(len(pmap.x)):
            lines.append(
                ",".join(
                    _fmt(v)
                    for v in (
                        pmap.x[ix],
                        pmap.y[iy],
                        pmap.values[iy, ix],
                        pmap.photon_number[iy, ix],
                        pmap.top_fock_pop[iy, ix],
                    )
                )
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_meta(
    csv_path: str,
    subcommand: str,
    resolved: dict,
    wall_clock: float,
    diagnostics: dict,
) -> None:
    base, _ = os.path.splitext(csv_path)
    record = {
        "subcommand": subcommand,
        "code_version": __version__,
        "wall_clock_seconds": wall_clock,
        "resolved_config": resolved,
        "diagnostics": diagnostics,
    }
    with open(base + ".meta", "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands

_PHYS_REQUIRED = ("omega0_over_2pi_ghz", "kappa_over_2pi_mhz", "g_over_2pi_mhz")
_PHYS_DEFAULTS = {
    "gamma_l_per_us": 0.0,
    "gamma_phi_per_us": 0.0,
    "fock_levels": None,
    "deterministic": True,
    "lenient": False,
}


def _cmd_sweep(cfg: dict, out_dir: str, lenient: bool, threads: int) -> int:
    resolved = _resolve(
        cfg,
        _PHYS_REQUIRED + ("eps_over_h_ghz", "two_t_over_h_ghz"),
        {**_PHYS_DEFAULTS, "probe_photon_number": 0.1},
    )
    params = _base_params(resolved)
    spec = SweepSpec(
        eps_axis=_axis_triplet(resolved, "eps_over_h_ghz"),
        tt_axis=_axis_triplet(resolved, "two_t_over_h_ghz"),
        params=params,
        probe_photon_number=_number(resolved, "probe_photon_number", minimum=1e-12),
        fock_levels=_fock_levels(resolved),
    )
    lenient = lenient or bool(resolved["lenient"])
    resolved["lenient"] = lenient
    start = time.monotonic()
    pmap = phase_map(spec, lenient=lenient, max_workers=threads)
    wall = time.monotonic() - start
    csv_path = os.path.join(out_dir, "sweep.csv")
    _write_map_csv(csv_path, pmap, _CSV_SWEEP_HEADER)
    _write_meta(
        csv_path,
        "sweep",
        resolved,
        wall,
        {
            "fock_levels": pmap.metadata["fock_levels"],
            "baseline_phi_rad": pmap.metadata["baseline_phi_rad"],
            "max_top_fock_pop": float(np.nanmax(pmap.top_fock_pop)),
            "grid_points": int(pmap.values.size),
        },
    )
    print(f"sweep: wrote {csv_path} ({pmap.values.size} points, {wall:.1f} s)")
    return 0


def _cmd_pulse(cfg: dict, out_dir: str, lenient: bool, threads: int) -> int:
    resolved = _resolve(
        cfg,
        _PHYS_REQUIRED + ("two_t_over_h_ghz", "tp_ns", "t_us", "target_photon_number"),
        {**_PHYS_DEFAULTS, "idle_eps_over_h_ghz": 10.0, "pulse_eps_over_h_ghz": 0.0},
    )
    params = _base_params(resolved)
    targets = resolved["target_photon_number"]
    if isinstance(targets, (int, float)) and not isinstance(targets, bool):
        targets = [float(targets)]
    elif isinstance(targets, list) and targets and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in targets
    ):
        targets = [float(v) for v in targets]
    else:
        raise ConfigError("key 'target_photon_number' must be a number or list of numbers")
    if any(t <= 0 for t in targets):
        raise ConfigError("key 'target_photon_number' entries must be > 0")

    lenient = lenient or bool(resolved["lenient"])
    resolved["lenient"] = lenient
    for target in targets:
        spec = PulseSpec(
            tp_axis=_axis_triplet(resolved, "tp_ns"),
            t_axis=_axis_triplet(resolved, "t_us"),
            idle_epsilon=TWO_PI * _number(resolved, "idle_eps_over_h_ghz"),
            tunnel_t=TWO_PI * _number(resolved, "two_t_over_h_ghz", minimum=0.0) / 2.0,
            target_n=target,
            params=params,
            pulse_epsilon=TWO_PI * _number(resolved, "pulse_eps_over_h_ghz"),
            fock_levels=_fock_levels(resolved),
        )
        start = time.monotonic()
        pmap = pulse_phase_map(spec, lenient=lenient)
        wall = time.monotonic() - start
        csv_path = os.path.join(out_dir, f"pulse_n{target:g}.csv")
        _write_map_csv(csv_path, pmap, _CSV_PULSE_HEADER)
        _write_meta(
            csv_path,
            "pulse",
            {**resolved, "target_photon_number": target},
            wall,
            {
                "fock_levels": pmap.metadata["fock_levels"],
                "drive_amp_rad_per_ns": pmap.metadata["calibrated_drive_amp_rad_per_ns"],
                "achieved_photon_number": pmap.metadata["achieved_photon_number"],
                "max_top_fock_pop": float(np.nanmax(pmap.top_fock_pop)),
                "grid_points": int(pmap.values.size),
            },
        )
        print(f"pulse: wrote {csv_path} ({pmap.values.size} points, {wall:.1f} s)")
    return 0


def _cmd_steady(cfg: dict, out_dir: str) -> int:
    resolved = _resolve(
        cfg,
        _PHYS_REQUIRED + ("eps_over_h_ghz", "two_t_over_h_ghz"),
        {**_PHYS_DEFAULTS, "probe_photon_number": 0.1},
    )
    base = _base_params(resolved)
    probe_n = _number(resolved, "probe_photon_number", minimum=1e-12)
    fock = _fock_levels(resolved) or default_fock_levels(probe_n)
    space = HilbertSpace(fock)
    xi = 0.5 * base.kappa * math.sqrt(probe_n)
    params = replace(
        base,
        epsilon=TWO_PI * _number(resolved, "eps_over_h_ghz"),
        tunnel_t=TWO_PI * _number(resolved, "two_t_over_h_ghz", minimum=0.0) / 2.0,
        drive_amp=xi,
    )

    start = time.monotonic()
    bare = replace(params, g=0.0)
    rho_bare = steady_state(jc_hamiltonian(bare, space), collapse_operators(bare, space), space)
    rho = steady_state(jc_hamiltonian(params, space), collapse_operators(params, space), space)
    dphi = wrap_angle(phase(rho, space) - phase(rho_bare, space))
    wall = time.monotonic() - start

    record = {
        "dphi_deg": math.degrees(dphi),
        "photon_number": photon_number(rho, space),
        "top_fock_pop": top_fock_population(rho, space),
        "qubit_splitting_over_2pi_ghz": qubit_splitting(params.epsilon, params.tunnel_t) / TWO_PI,
        "probe_drive_amp_rad_per_ns": xi,
        "fock_levels": fock,
    }
    json_path = os.path.join(out_dir, "steady.json")
    with open(json_path, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    _write_meta(json_path, "steady", resolved, wall, {"fock_levels": fock})
    print(f"steady: dphi = {record['dphi_deg']:.6f} deg, n = {record['photon_number']:.6f}")
    print(f"steady: wrote {json_path}")
    return 0


def _cmd_check_dispersive(cfg: dict, out_dir: str) -> int:
    resolved = _resolve(
        cfg,
        (),
        {
            "omega0_over_2pi_ghz": 6.2,
            "kappa_over_2pi_mhz": 3.1,
            "g_over_2pi_mhz": 50.0,
            "gamma_l_per_us": 0.0,
            "gamma_phi_per_us": 0.0,
            "probe_photon_number": 0.1,
            "delta_over_g": [10.0, 20.0, 50.0, 100.0],
            "rel_tol": 0.05,
            "fock_levels": None,
            "deterministic": True,
            "lenient": False,
        },
    )
    base = _base_params(resolved)
    ratios = resolved["delta_over_g"]
    if not isinstance(ratios, list) or not ratios:
        raise ConfigError("key 'delta_over_g' must be a non-empty list of numbers")
    rel_tol = _number(resolved, "rel_tol", minimum=1e-12)
    probe_n = _number(resolved, "probe_photon_number", minimum=1e-12)
    fock = _fock_levels(resolved) or default_fock_levels(probe_n)
    space = HilbertSpace(fock)
    xi = 0.5 * base.kappa * math.sqrt(probe_n)

    start = time.monotonic()
    bare = replace(base, g=0.0, drive_amp=xi)
    rho_bare = steady_state(jc_hamiltonian(bare, space), collapse_operators(bare, space), space)
    baseline_phi = phase(rho_bare, space)

    lines = ["delta_over_g,dphi_sim_deg,dphi_oracle_deg,rel_err,status"]
    all_ok = True
    for ratio in ratios:
        ratio = float(ratio)
        # qubit below the resonator: Omega = omega0 - ratio * g, at eps = 0
        omega = base.omega0 - ratio * base.g
        if omega <= 0:
            raise ConfigError(f"delta_over_g = {ratio:g} puts the qubit splitting below zero")
        params = replace(base, epsilon=0.0, tunnel_t=omega / 2.0, drive_amp=xi)
        rho = steady_state(jc_hamiltonian(params, space), collapse_operators(params, space), space)
        sim = wrap_angle(phase(rho, space) - baseline_phi)
        oracle = dispersive_oracle(base.g, base.kappa, ratio * base.g)
        rel = abs(sim - oracle) / abs(oracle)
        ok = rel <= rel_tol
        all_ok = all_ok and ok
        lines.append(
            ",".join(
                [
                    _fmt(ratio),
                    _fmt(math.degrees(sim)),
                    _fmt(math.degrees(oracle)),
                    _fmt(rel),
                    "pass" if ok else "fail",
                ]
            )
        )
        print(f"check-dispersive: delta/g = {ratio:6.1f}  rel err = {rel:.4%}  "
              f"{'pass' if ok else 'FAIL'}")
    wall = time.monotonic() - start

    csv_path = os.path.join(out_dir, "check_dispersive.csv")
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_meta(csv_path, "check-dispersive", resolved, wall, {"fock_levels": fock})
    print(f"check-dispersive: wrote {csv_path}")
    return 0 if all_ok else 3


def _selftest_checks() -> list[tuple[str, float, float, bool]]:
    """Run the analytic-oracle invariants; (name, measured, tolerance, ok) rows."""
    checks: list[tuple[str, float, float, bool]] = []
    space = HilbertSpace(8)

    # 1-2. resonant undamped vacuum Rabi oscillation + state sanity
    g = TWO_PI * 0.05
    omega0 = TWO_PI * 6.2
    params = SystemParams(
        omega0=omega0, kappa=0.0, gamma_l=0.0, gamma_phi=0.0, g=g,
        epsilon=0.0, tunnel_t=omega0 / 2.0, drive_freq=0.0, drive_amp=0.0,
    )
    h = jc_hamiltonian(params, space)
    rho0 = density_from_ket(ket(space, 0, 0))  # excited qubit, empty cavity
    period = math.pi / g
    times = np.linspace(0.0, 4.0 * period, 257)
    traj = evolve(rho0, lambda _t: h, [], (0.0, times[-1]), sample_times=times, space=space)

    drift = 0.0
    min_eig = 1.0
    p_up = np.empty(times.size)
    excited = np.arange(space.fock_levels)
    for i, state in enumerate(traj.states):
        drift = max(drift, abs(np.trace(state).real - 1.0))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(state).min()))
        p_up[i] = float(np.sum(np.diag(state).real[excited]))

    import scipy.optimize

    def resid(p):
        return p[0] * np.cos(p[1] * times) + p[2] - p_up

    fit = scipy.optimize.least_squares(resid, x0=[0.5, 2.0 * g, 0.5], xtol=1e-15, ftol=1e-15)
    freq_ghz = abs(fit.x[1]) / TWO_PI
    rel = abs(freq_ghz - 2.0 * g / TWO_PI) / (2.0 * g / TWO_PI)
    checks.append(("vacuum Rabi frequency vs 2g (relative)", rel, 1e-6, rel < 1e-6))

    # 3. damped driven trajectory: trace drift and positivity
    space_d = HilbertSpace(16)
    damped = replace(params, kappa=TWO_PI * 0.003, gamma_l=0.05, gamma_phi=0.1,
                     tunnel_t=TWO_PI * 2.0, drive_freq=omega0, drive_amp=0.01)
    hd = jc_hamiltonian(damped, space_d)
    cd = collapse_operators(damped, space_d)
    rho0_d = density_from_ket(ket(space_d, 0, 0))
    traj2 = evolve(rho0_d, lambda _t: hd, cd, (0.0, 200.0),
                   sample_times=np.linspace(0.0, 200.0, 41), space=space_d)
    for state in traj2.states:
        drift = max(drift, abs(np.trace(state).real - 1.0))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(state).min()))
    checks.append(("max trace drift over trajectories", drift, 1e-8, drift < 1e-8))
    checks.append(("min eigenvalue over trajectories", min_eig, -1e-8, min_eig > -1e-8))

    # 4. steady_state vs long-time evolve
    rho_ss = steady_state(hd, cd, space_d)
    slowest = min(damped.kappa, damped.gamma_l)
    traj3 = evolve(rho0_d, lambda _t: hd, cd, (0.0, 30.0 / slowest), space=space_d,
                   rtol=1e-9, atol=1e-11)
    diff = float(np.max(np.abs(traj3.states[-1] - rho_ss)))
    checks.append(("steady state vs long-time evolve (entrywise)", diff, 1e-6, diff < 1e-6))

    # 5. driven bare cavity amplitude vs -i xi / (kappa/2 + i Delta_d)
    from .hilbert import annihilation, expectation

    bare = SystemParams(omega0=omega0, kappa=TWO_PI * 0.003, gamma_l=0.0, gamma_phi=0.0,
                        g=0.0, epsilon=TWO_PI * 10.0, tunnel_t=0.0,
                        drive_freq=omega0 - 0.01, drive_amp=0.002)
    rho_b = steady_state(jc_hamiltonian(bare, space), collapse_operators(bare, space), space)
    a_sim = expectation(annihilation(space), rho_b)
    delta_d = bare.omega0 - bare.drive_freq
    a_ref = -1j * bare.drive_amp / (0.5 * bare.kappa + 1j * delta_d)
    err = abs(a_sim - a_ref)
    checks.append(("driven bare cavity <a> vs analytic", err, 1e-8, err < 1e-8))

    # 6. drive calibration accuracy
    cal = replace(damped, gamma_phi=0.0)
    target = 2.0
    xi = calibrate_drive(target, cal, space_d)
    rho_c = steady_state(
        jc_hamiltonian(replace(cal, drive_amp=xi), space_d),
        collapse_operators(replace(cal, drive_amp=xi), space_d),
        space_d,
    )
    rel_n = abs(photon_number(rho_c, space_d) - target) / target
    checks.append(("calibrated photon number (relative)", rel_n, 1e-2, rel_n < 1e-2))
    return checks


def _cmd_selftest(cfg: dict, out_dir: str) -> int:
    _resolve(cfg, (), {"deterministic": True})
    start = time.monotonic()
    checks = _selftest_checks()
    wall = time.monotonic() - start
    lines = ["check,measured,tolerance,status"]
    all_ok = True
    for name, measured, tol, ok in checks:
        all_ok = all_ok and ok
        lines.append(f"{name},{_fmt(measured)},{_fmt(tol)},{'pass' if ok else 'fail'}")
        print(f"selftest: {name}: {measured:.3e} (tol {tol:g}) {'pass' if ok else 'FAIL'}")
    csv_path = os.path.join(out_dir, "selftest.csv")
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_meta(csv_path, "selftest", {"deterministic": True}, wall, {})
    print(f"selftest: wrote {csv_path}")
    return 0 if all_ok else 3


# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dqdcavity",
        description="Charge-qubit/resonator phase-shift readout simulations.",
    )
    parser.add_argument("subcommand",
                        choices=["sweep", "pulse", "steady", "check-dispersive", "selftest"])
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--lenient", action="store_true",
                        help="record per-point failures as NaN instead of aborting")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker processes for grid sweeps (default: CPU count)")
    args = parser.parse_args(argv)

    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1

    try:
        cfg = _load_config(args.config)
        if args.subcommand in ("sweep", "pulse", "steady") and args.config is None:
            raise ConfigError(f"subcommand {args.subcommand!r} requires --config")
        os.makedirs(args.out, exist_ok=True)
        if args.subcommand == "sweep":
            return _cmd_sweep(cfg, args.out, args.lenient, threads)
        if args.subcommand == "pulse":
            return _cmd_pulse(cfg, args.out, args.lenient, threads)
        if args.subcommand == "steady":
            return _cmd_steady(cfg, args.out)
        if args.subcommand == "check-dispersive":
            return _cmd_check_dispersive(cfg, args.out)
        return _cmd_selftest(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
