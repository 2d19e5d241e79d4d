import numpy as np
import pytest

from dqdcavity.errors import DimensionMismatchError, InvalidStateError
from dqdcavity.hilbert import (
    HilbertSpace,
    annihilation,
    creation,
    default_fock_levels,
    density_from_ket,
    expectation,
    ket,
    number_operator,
    qubit_operator,
    tensor,
    top_fock_population,
    validate_density_matrix,
)


def test_space_dimensions():
    space = HilbertSpace(5)
    assert space.qubit_levels == 2
    assert space.dim == 10


def test_space_rejects_too_few_fock_levels():
    with pytest.raises(ValueError):
        HilbertSpace(1)


def test_default_fock_levels():
    assert default_fock_levels(0.1) == 10
    assert default_fock_levels(3.8) == int(np.ceil(4 * 3.8 + 8))


def test_annihilation_submatrix_entries():
    space = HilbertSpace(3)
    a = annihilation(space)
    # resonator-only sub-block of the qubit-ground sector
    sub = a[:3, :3]
    expected = np.zeros((3, 3))
    expected[0, 1] = 1.0
    expected[1, 2] = np.sqrt(2.0)
    assert np.allclose(sub, expected)


def test_annihilation_nilpotent_at_two_levels():
    space = HilbertSpace(2)
    a = annihilation(space)
    assert np.allclose(a @ a, 0.0)


def test_number_operator_diagonal():
    space = HilbertSpace(10)
    n = number_operator(space)
    # qubit-major ordering: the Fock ladder repeats for each qubit level
    assert np.allclose(np.diag(n), np.tile(np.arange(10.0), 2))


def test_commutator_on_truncated_subblock():
    space = HilbertSpace(6)
    a = annihilation(space)
    ad = creation(space)
    comm = a @ ad - ad @ a
    sub = comm[:5, :5]  # lowest N-1 Fock levels of the qubit-ground sector
    assert np.allclose(sub, np.eye(5), atol=1e-12)


def test_qubit_operators():
    space = HilbertSpace(2)
    sz = qubit_operator("sigma_z", space)
    sp = qubit_operator("sigma_plus", space)
    sm = qubit_operator("sigma_minus", space)
    assert np.allclose(np.diag(sz), [1, 1, -1, -1])
    assert np.allclose(sp @ sm, np.diag([1.0, 1.0, 0.0, 0.0]))
    assert np.allclose(sp @ sm - sm @ sp, sz)


def test_qubit_operator_unknown_kind():
    with pytest.raises(ValueError):
        qubit_operator("sigma_y", HilbertSpace(2))


def test_tensor_identity():
    space = HilbertSpace(4)
    out = tensor(np.eye(2), np.eye(4), space)
    assert np.allclose(out, np.eye(8))


def test_tensor_sigma_z_number():
    space = HilbertSpace(2)
    sz = np.diag([1.0, -1.0])
    n = np.diag([0.0, 1.0])
    assert np.allclose(np.diag(tensor(sz, n, space)), [0.0, 1.0, 0.0, -1.0])


def test_tensor_bilinear_and_multiplicative():
    rng = np.random.default_rng(7)
    space = HilbertSpace(3)
    a, c = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
    b, d = rng.normal(size=(2, 3, 3)) + 1j * rng.normal(size=(2, 3, 3))
    assert np.allclose(tensor(2.0 * a, b, space), 2.0 * tensor(a, b, space))
    assert np.allclose(
        tensor(a, b, space) @ tensor(c, d, space),
        tensor(a @ c, b @ d, space),
        atol=1e-12,
    )


def test_tensor_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        tensor(np.eye(3), np.eye(4), HilbertSpace(4))


def test_expectation_basics():
    space = HilbertSpace(4)
    rho = density_from_ket(ket(space, 1, 0))  # qubit ground, vacuum
    assert expectation(np.eye(space.dim), rho) == pytest.approx(1.0)
    assert expectation(qubit_operator("sigma_z", space), rho).real == pytest.approx(-1.0)
    assert expectation(number_operator(space), rho).real == pytest.approx(0.0)


def test_expectation_hermitian_is_real():
    rng = np.random.default_rng(3)
    space = HilbertSpace(3)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = m @ m.conj().T
    rho = rho / np.trace(rho).real
    h = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = 0.5 * (h + h.conj().T)
    assert abs(expectation(h, rho).imag) < 1e-10


def test_expectation_space_mismatch():
    with pytest.raises(DimensionMismatchError):
        expectation(np.eye(4), np.eye(6) / 6.0)


def test_top_fock_population():
    space = HilbertSpace(5)
    rho = density_from_ket(ket(space, 0, 4))
    assert top_fock_population(rho, space) == pytest.approx(1.0)
    rho0 = density_from_ket(ket(space, 0, 0))
    assert top_fock_population(rho0, space) == pytest.approx(0.0)


def test_validate_density_matrix_accepts_valid():
    space = HilbertSpace(3)
    validate_density_matrix(density_from_ket(ket(space, 0, 1)))


def test_validate_density_matrix_rejects_bad_trace():
    space = HilbertSpace(3)
    with pytest.raises(InvalidStateError):
        validate_density_matrix(2.0 * density_from_ket(ket(space, 0, 0)))


def test_validate_density_matrix_rejects_non_hermitian():
    rho = np.eye(4, dtype=complex) / 4.0
    rho[0, 1] = 0.5
    with pytest.raises(InvalidStateError):
        validate_density_matrix(rho)
