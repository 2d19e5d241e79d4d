"""Master-equation evolution, Liouvillian construction and steady states.

The generator is the standard Lindblad form
    drho/dt = -i [H, rho] + sum_L ( L rho L+ - 1/2 {L+L, rho} ).
Vectorization is column-stacking: vec(A rho B) = (B^T kron A) vec(rho).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    IntegrationError,
    TruncationError,
)
from .hilbert import TRUNCATION_LIMIT, HilbertSpace, top_fock_population

__all__ = [
    "Trajectory",
    "lindblad_rhs",
    "evolve",
    "liouvillian",
    "steady_state",
    "propagator",
    "vec",
    "unvec",
]


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(d, d, order="F")


@dataclass
class Trajectory:
    """Sampled states of one integration run plus step diagnostics."""

    times: np.ndarray
    states: list[np.ndarray]
    accepted_steps: int
    rejected_steps: int
    max_top_fock_population: float


def lindblad_rhs(
    rho: np.ndarray,
    hamiltonian: np.ndarray,
    collapse: Sequence[np.ndarray],
) -> np.ndarray:
    """Right-hand side of the master equation, d(rho)/dt in 1/ns."""
    rho = np.asarray(rho)
    hamiltonian = np.asarray(hamiltonian)
    if rho.shape != hamiltonian.shape:
        raise DimensionMismatchError(
            f"state shape {rho.shape} does not match Hamiltonian shape {hamiltonian.shape}"
        )
    out = -1j * (hamiltonian @ rho - rho @ hamiltonian)
    for c in collapse:
        cd = c.conj().T
        cdc = cd @ c
        out += c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)
    return out


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def evolve(
    rho0: np.ndarray,
    hamiltonian_at: Callable[[float], np.ndarray],
    collapse: Sequence[np.ndarray],
    t_span: tuple[float, float],
    sample_times: Sequence[float] | None = None,
    space: HilbertSpace | None = None,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> Trajectory:
    """Adaptive RK45 integration of the master equation.

    Samples are taken exactly at sample_times (default: the endpoints).
    The Hermitian part is enforced after every accepted step; the sampled
    trace is renormalized only while its drift stays below 1e-8, and drift
    beyond 1e-6 aborts the run.  If a space is given, sampled states with
    top-Fock population above TRUNCATION_LIMIT raise TruncationError.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ValueError("t_span must be increasing")
    if sample_times is None:
        sample_times = [t0, t1] if t1 > t0 else [t0]
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.size == 0:
        raise ValueError("sample_times must not be empty")
    if np.any(np.diff(sample_times) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    if sample_times[0] < t0 - 1e-12 or sample_times[-1] > t1 + 1e-12:
        raise ValueError("sample_times must lie within t_span")

    # cache collapse products
    collapse = [np.asarray(c) for c in collapse]
    c_dag = [c.conj().T for c in collapse]
    c_dag_c = [cd @ c for c, cd in zip(collapse, c_dag)]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        h = hamiltonian_at(t)
        out = -1j * (h @ y - y @ h)
        for c, cd, cdc in zip(collapse, c_dag, c_dag_c):
            out += c @ y @ cd - 0.5 * (cdc @ y + y @ cdc)
        return out

    y = 0.5 * (np.asarray(rho0, dtype=complex) + np.asarray(rho0, dtype=complex).conj().T)
    t = t0
    accepted = 0
    rejected = 0
    max_top = top_fock_population(y, space) if space is not None else 0.0

    states: list[np.ndarray] = []
    out_times: list[float] = []
    sample_iter = iter(sample_times)
    next_sample = next(sample_iter)

    def take_sample(state: np.ndarray, when: float):
        nonlocal max_top
        tr = np.trace(state).real
        drift = abs(tr - 1.0)
        if drift > 1e-6:
            raise IntegrationError(f"trace drift {drift:.3e} > 1e-6 at t={when:g}")
        if drift < 1e-8 and tr != 0.0:
            state = state / tr
        if space is not None:
            pop = top_fock_population(state, space)
            max_top = max(max_top, pop)
            if pop > TRUNCATION_LIMIT:
                raise TruncationError(
                    f"top Fock level population {pop:.3e} > {TRUNCATION_LIMIT:g} at t={when:g}"
                )
        out_times.append(when)
        states.append(state.copy())

    while next_sample <= t + 1e-14:
        take_sample(y, next_sample)
        try:
            next_sample = next(sample_iter)
        except StopIteration:
            return Trajectory(np.array(out_times), states, accepted, rejected, max_top)

    # initial step size from the RHS magnitude
    f0 = rhs(t, y)
    scale = atol + rtol * max(1.0, float(np.max(np.abs(y))))
    norm_f = float(np.max(np.abs(f0))) / scale
    h = min(t1 - t, 0.1 / norm_f if norm_f > 0 else t1 - t)
    h = max(h, 1e-12)

    k = [None] * 7
    while True:
        target = min(next_sample, t1)
        if h > target - t:
            h = target - t
        if h <= 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t:g}")

        k[0] = rhs(t, y)
        for i in range(1, 7):
            yi = y + h * sum(aij * k[j] for j, aij in enumerate(_DP_A[i]))
            k[i] = rhs(t + _DP_C[i] * h, yi)
        y5 = y + h * sum(b * k[i] for i, b in enumerate(_DP_B5) if b != 0.0)
        err = h * sum((b5 - b4) * k[i] for i, (b5, b4) in enumerate(zip(_DP_B5, _DP_B4)))

        tol_scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err_norm = float(np.sqrt(np.mean(np.abs(err / tol_scale) ** 2)))

        if err_norm <= 1.0:
            t = t + h
            y = 0.5 * (y5 + y5.conj().T)
            accepted += 1
            while next_sample <= t + 1e-14:
                take_sample(y, next_sample)
                try:
                    next_sample = next(sample_iter)
                except StopIteration:
                    return Trajectory(np.array(out_times), states, accepted, rejected, max_top)
        else:
            rejected += 1

        factor = 0.9 * err_norm ** -0.2 if err_norm > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))


def liouvillian(
    hamiltonian: np.ndarray,
    collapse: Sequence[np.ndarray],
) -> sp.csr_matrix:
    """Sparse vectorized generator: L vec(rho) = vec(lindblad_rhs(rho))."""
    h = sp.csr_matrix(np.asarray(hamiltonian, dtype=complex))
    d = h.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    lsup = -1j * (sp.kron(eye, h, format="csr") - sp.kron(h.T, eye, format="csr"))
    for c in collapse:
        cs = sp.csr_matrix(np.asarray(c, dtype=complex))
        cdc = (cs.conj().T @ cs).tocsr()
        lsup = lsup + sp.kron(cs.conj(), cs, format="csr")
        lsup = lsup - 0.5 * sp.kron(eye, cdc, format="csr")
        lsup = lsup - 0.5 * sp.kron(cdc.T, eye, format="csr")
    return lsup.tocsr()


def steady_state(
    hamiltonian: np.ndarray,
    collapse: Sequence[np.ndarray],
    space: HilbertSpace | None = None,
    residual_tol: float = 1e-10,
) -> np.ndarray:
    """Unique driven steady state: solve L vec(rho) = 0 with Tr(rho) = 1.

    One row of L is replaced by the vectorized trace functional; the system
    is solved by sparse LU with one step of iterative refinement.  Falls back
    to long-time integration if the factorization fails.
    """
    if not collapse:
        raise ConvergenceError("steady state requires at least one collapse operator")
    hamiltonian = np.asarray(hamiltonian, dtype=complex)
    d = hamiltonian.shape[0]
    lsup = liouvillian(hamiltonian, collapse)

    trace_row = np.zeros(d * d, dtype=complex)
    trace_row[:: d + 1] = 1.0

    lmod = lsup.tolil(copy=True)
    lmod[0, :] = trace_row
    lmod = lmod.tocsc()
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0

    try:
        lu = spla.splu(lmod)
        x = lu.solve(b)
        x = x + lu.solve(b - lmod @ x)
    except RuntimeError as exc:  # singular factorization
        rho = _steady_state_by_integration(hamiltonian, collapse, space)
        x = vec(rho)
        if np.linalg.norm(lsup @ x) > 1e-8:
            raise ConvergenceError(f"steady-state fallback did not converge: {exc}") from exc
        return rho

    rho = unvec(x)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(lsup @ vec(rho)))
    if not np.isfinite(residual) or residual > residual_tol * max(1.0, float(np.abs(lsup).max())):
        raise ConvergenceError(f"steady-state residual {residual:.3e} too large")
    if space is not None:
        pop = top_fock_population(rho, space)
        if pop > TRUNCATION_LIMIT:
            raise TruncationError(
                f"steady-state top Fock level population {pop:.3e} > {TRUNCATION_LIMIT:g}"
            )
    return rho


def _steady_state_by_integration(hamiltonian, collapse, space):
    d = hamiltonian.shape[0]
    rho0 = np.eye(d, dtype=complex) / d
    rates = [float(np.max(np.abs(c)) ** 2) for c in collapse]
    slowest = min(r for r in rates if r > 0)
    horizon = 20.0 / slowest
    traj = evolve(rho0, lambda _t: hamiltonian, collapse, (0.0, horizon), space=space)
    return traj.states[-1]


def propagator(lsup, dt: float) -> np.ndarray:
    """Dense superoperator exp(L dt) by scaling-and-squaring."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    mat = lsup.toarray() if sp.issparse(lsup) else np.asarray(lsup)
    prop = scipy.linalg.expm(mat * dt)
    if not np.all(np.isfinite(prop)):
        raise ConvergenceError("matrix exponential did not converge (non-finite entries)")
    return prop
