"""Operators on the truncated qubit (x) resonator Hilbert space.

Basis ordering is qubit-major: index i = q*N + n with q in {0, 1} the qubit
index and n the Fock index.  Qubit index 0 is the upper level, so
sigma_z = diag(+1, -1).  All functions here are pure and return fresh arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidStateError

__all__ = [
    "HilbertSpace",
    "default_fock_levels",
    "annihilation",
    "creation",
    "number_operator",
    "qubit_operator",
    "tensor",
    "identity",
    "expectation",
    "top_fock_population",
    "ket",
    "density_from_ket",
    "validate_density_matrix",
]

#: Population of the highest Fock level above which results are rejected.
TRUNCATION_LIMIT = 1e-4

_QUBIT_KINDS = ("sigma_z", "sigma_plus", "sigma_minus", "identity")


@dataclass(frozen=True)
class HilbertSpace:
    """Truncated qubit (x) resonator space descriptor."""

    fock_levels: int
    qubit_levels: int = 2

    def __post_init__(self):
        if self.qubit_levels != 2:
            raise ValueError("only two-level qubits are supported")
        if self.fock_levels < 2:
            raise ValueError("fock_levels must be >= 2")

    @property
    def dim(self) -> int:
        return self.qubit_levels * self.fock_levels


def default_fock_levels(n_target: float) -> int:
    """Fock truncation sized for a coherent-like occupation of n_target."""
    return max(10, math.ceil(4.0 * n_target + 8.0))


def _check_square(m: np.ndarray, dim: int, name: str):
    if m.shape != (dim, dim):
        raise DimensionMismatchError(
            f"{name} has shape {m.shape}, expected ({dim}, {dim})"
        )


def annihilation(space: HilbertSpace) -> np.ndarray:
    """Photon annihilation operator, embedded as identity (x) a."""
    n = space.fock_levels
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    return np.kron(np.eye(2, dtype=complex), a)


def creation(space: HilbertSpace) -> np.ndarray:
    return annihilation(space).conj().T


def number_operator(space: HilbertSpace) -> np.ndarray:
    a = annihilation(space)
    return a.conj().T @ a


def qubit_operator(kind: str, space: HilbertSpace) -> np.ndarray:
    """Qubit operator embedded as (2x2) (x) identity on the resonator."""
    if kind == "sigma_z":
        q = np.diag([1.0, -1.0]).astype(complex)
    elif kind == "sigma_plus":
        q = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    elif kind == "sigma_minus":
        q = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
    elif kind == "identity":
        q = np.eye(2, dtype=complex)
    else:
        raise ValueError(f"unknown qubit operator kind {kind!r}, expected one of {_QUBIT_KINDS}")
    return np.kron(q, np.eye(space.fock_levels, dtype=complex))


def tensor(qubit_part: np.ndarray, resonator_part: np.ndarray, space: HilbertSpace) -> np.ndarray:
    """Kronecker product with the fixed qubit-major ordering."""
    qubit_part = np.asarray(qubit_part, dtype=complex)
    resonator_part = np.asarray(resonator_part, dtype=complex)
    _check_square(qubit_part, 2, "qubit_part")
    _check_square(resonator_part, space.fock_levels, "resonator_part")
    return np.kron(qubit_part, resonator_part)


def identity(space: HilbertSpace) -> np.ndarray:
    return np.eye(space.dim, dtype=complex)


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    """Tr(op . rho)."""
    op = np.asarray(op)
    rho = np.asarray(rho)
    if op.shape != rho.shape:
        raise DimensionMismatchError(
            f"operator shape {op.shape} does not match state shape {rho.shape}"
        )
    return complex(np.einsum("ij,ji->", op, rho))


def top_fock_population(rho: np.ndarray, space: HilbertSpace) -> float:
    """Total population of the highest retained Fock level."""
    n = space.fock_levels
    return float(sum(rho[q * n + n - 1, q * n + n - 1].real for q in range(space.qubit_levels)))


def ket(space: HilbertSpace, qubit_index: int, fock_index: int) -> np.ndarray:
    """Product basis state |qubit_index> (x) |fock_index> as a column vector."""
    if not 0 <= qubit_index < space.qubit_levels:
        raise ValueError(f"qubit index {qubit_index} out of range")
    if not 0 <= fock_index < space.fock_levels:
        raise ValueError(f"fock index {fock_index} out of range")
    v = np.zeros(space.dim, dtype=complex)
    v[qubit_index * space.fock_levels + fock_index] = 1.0
    return v


def density_from_ket(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    psi = psi / norm
    return np.outer(psi, psi.conj())


def validate_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-10,
    trace_tol: float = 1e-8,
    psd_tol: float = 1e-8,
) -> None:
    """Raise InvalidStateError unless rho is a physical state within tolerances."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm >= herm_tol:
        raise InvalidStateError(f"hermiticity violation {herm:.3e} >= {herm_tol:.1e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) >= trace_tol:
        raise InvalidStateError(f"trace deviates from 1 by {abs(tr - 1.0):.3e}")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals[0] < -psd_tol:
        raise InvalidStateError(f"minimum eigenvalue {evals[0]:.3e} < -{psd_tol:.1e}")
