"""Built-in qubit gates and observables.

Rotation convention: ``RX(t) = exp(-i t X / 2)`` (likewise RY, RZ) and
``Rot(a, b, c) = RZ(c) RY(b) RZ(a)``. Wire 0 is the most significant bit of
a computational basis index.
"""
from __future__ import annotations

import numpy as np

from ..exceptions import InvalidParameter
from ..ir import GradMethod, ObservableDef, OperationDef, ParamDomain

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _const(m):
    return lambda: m


def rx_matrix(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry_matrix(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta):
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


def rot_matrix(a, b, c):
    return rz_matrix(c) @ ry_matrix(b) @ rz_matrix(a)


def phase_shift_matrix(phi):
    return np.array([[1, 0], [0, np.exp(1j * phi)]])


_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


def _rot_decomposition(a, b, c, wires):
    return [RZ(a, wires=wires), RY(b, wires=wires), RZ(c, wires=wires)]


def _basis_state_decomposition(n, wires):
    n = np.asarray(n)
    return [PauliX(wires=w) for w, bit in zip(wires, n) if bit == 1]


def _check_bits(n, num_wires):
    n = np.asarray(n)
    if n.shape != (num_wires,) or not np.all((n == 0) | (n == 1)):
        raise InvalidParameter(f"BasisState expects {num_wires} bits in {{0, 1}}, got {n!r}")


def _basis_state_validated(n, wires):
    _check_bits(n, len(wires))
    return _basis_state_decomposition(n, wires)


def _qubit_unitary_matrix(U, num_wires):
    U = np.asarray(U, dtype=complex)
    dim = 2**num_wires
    if U.shape != (dim, dim):
        raise InvalidParameter(f"QubitUnitary on {num_wires} wire(s) needs a {dim}x{dim} matrix")
    if not np.allclose(U.conj().T @ U, np.eye(dim), atol=1e-8):
        raise InvalidParameter("QubitUnitary matrix is not unitary")
    return U


# observables ----------------------------------------------------------------

_PM = np.array([1.0, -1.0])


def _pauli(name, matrix, diag):
    return ObservableDef(
        name, 1,
        eigvals_fn=lambda num_wires: _PM,
        matrix_fn=lambda num_wires: matrix,
        diagonalizing_fn=diag,
    )


def _hermitian_checked(A, num_wires):
    A = np.asarray(A, dtype=complex)
    dim = 2**num_wires
    if A.shape != (dim, dim):
        raise InvalidParameter(f"Hermitian on {num_wires} wire(s) needs a {dim}x{dim} matrix")
    if not np.allclose(A, A.conj().T, atol=1e-10):
        raise InvalidParameter("observable matrix is not Hermitian")
    return A


def _hermitian_eigvals(A, num_wires):
    return np.linalg.eigvalsh(_hermitian_checked(A, num_wires))


def _hermitian_diag(A, wires):
    _, vecs = np.linalg.eigh(_hermitian_checked(A, len(wires)))
    return [QubitUnitary(vecs.conj().T, wires=wires)]


_obs_x = _pauli("PauliX", _X, lambda wires: [Hadamard(wires=wires)])
_obs_y = _pauli(
    "PauliY", _Y,
    lambda wires: [PauliZ(wires=wires), S(wires=wires), Hadamard(wires=wires)],
)
_obs_z = _pauli("PauliZ", _Z, lambda wires: [])
_obs_h = _pauli("Hadamard", _H, lambda wires: [RY(-np.pi / 4, wires=wires)])
Identity = ObservableDef(
    "Identity", 1,
    eigvals_fn=lambda num_wires: np.ones(2),
    matrix_fn=lambda num_wires: _I2,
    diagonalizing_fn=lambda wires: [],
)
Hermitian = ObservableDef(
    "Hermitian", None, num_params=1, par_domain=ParamDomain.ARRAY,
    eigvals_fn=_hermitian_eigvals,
    matrix_fn=_hermitian_checked,
    diagonalizing_fn=_hermitian_diag,
)


# gates -------------------------------------------------------------------------

Hadamard = OperationDef("Hadamard", 0, 1, matrix_fn=_const(_H), observable=_obs_h)
PauliX = OperationDef("PauliX", 0, 1, matrix_fn=_const(_X), observable=_obs_x)
PauliY = OperationDef("PauliY", 0, 1, matrix_fn=_const(_Y), observable=_obs_y)
PauliZ = OperationDef("PauliZ", 0, 1, matrix_fn=_const(_Z), observable=_obs_z)
S = OperationDef("S", 0, 1, matrix_fn=_const(np.diag([1, 1j])))
T = OperationDef("T", 0, 1, matrix_fn=_const(np.diag([1, np.exp(0.25j * np.pi)])))
CNOT = OperationDef("CNOT", 0, 2, matrix_fn=_const(_CNOT))
CZ = OperationDef("CZ", 0, 2, matrix_fn=_const(_CZ))
RX = OperationDef("RX", 1, 1, matrix_fn=rx_matrix)
RY = OperationDef("RY", 1, 1, matrix_fn=ry_matrix)
RZ = OperationDef("RZ", 1, 1, matrix_fn=rz_matrix)
Rot = OperationDef("Rot", 3, 1, matrix_fn=rot_matrix, decomposition_fn=_rot_decomposition)
PhaseShift = OperationDef("PhaseShift", 1, 1, matrix_fn=phase_shift_matrix)
BasisState = OperationDef(
    "BasisState", 1, None, par_domain=ParamDomain.ARRAY, grad_method=GradMethod.NONE,
    decomposition_fn=_basis_state_validated,
)
QubitUnitary = OperationDef(
    "QubitUnitary", 1, None, par_domain=ParamDomain.ARRAY, grad_method=GradMethod.FINITE_DIFF,
    matrix_fn=_qubit_unitary_matrix,
)

QUBIT_OPERATIONS = {
    op.name: op
    for op in (Hadamard, PauliX, PauliY, PauliZ, S, T, CNOT, CZ, RX, RY, RZ, Rot,
               PhaseShift, BasisState, QubitUnitary)
}

QUBIT_OBSERVABLES = {
    o.name: o for o in (_obs_x, _obs_y, _obs_z, _obs_h, Identity, Hermitian)
}
