"""Dense statevector simulator, ``default.qubit``.

Gates are applied by contracting their ``2^k x 2^k`` matrix with the ``k``
affected axes of the ``(2,) * n`` state tensor; no full ``2^n`` operator is
ever built.
"""
from __future__ import annotations

from types import MappingProxyType
from typing import Sequence

import numpy as np

from ..exceptions import DeviceError, NoMatrixAvailable, WireOutOfRange
from ..ir import GateApplication, decompose, gate_matrix
from ..ops.qubit import QUBIT_OBSERVABLES, QUBIT_OPERATIONS
from .base import QubitDevice


def zero_state(num_wires: int) -> np.ndarray:
    state = np.zeros((2,) * num_wires, dtype=complex)
    state[(0,) * num_wires] = 1.0
    return state


def apply_matrix(state: np.ndarray, U: np.ndarray, wires: Sequence[int]) -> np.ndarray:
    """Apply ``U`` to ``wires`` of a state tensor of shape ``(2,) * n``."""
    k = len(wires)
    if k == 1:
        # single-qubit fast path: one broadcast matmul over the (left, 2, right) view
        w = wires[0]
        view = state.reshape(2**w, 2, -1)
        return np.matmul(U, view).reshape(state.shape)
    U = np.reshape(U, (2,) * (2 * k))
    n = state.ndim
    src = list(range(n))
    dst = list(src)
    for i, w in enumerate(wires):
        dst[w] = n + i
    return np.einsum(U, [n + i for i in range(k)] + [wires[i] for i in range(k)], state, src, dst)


def apply_gate(state: np.ndarray, g: GateApplication) -> np.ndarray:
    """Apply one gate, falling back to its decomposition when it has no matrix."""
    if g.op.matrix_fn is None:
        try:
            parts = decompose(g)
        except Exception as exc:
            raise NoMatrixAvailable(f"{g.name} has neither a matrix nor a decomposition") from exc
        for sub in parts:
            state = apply_gate(state, sub)
        return state
    return apply_matrix(state, gate_matrix(g), g.wires)


def marginal_probability(state: np.ndarray, wires: Sequence[int]) -> np.ndarray:
    """Probabilities of the basis states of ``wires`` (in the given order)."""
    n = state.ndim
    wires = list(wires)
    for w in wires:
        if not 0 <= w < n:
            raise WireOutOfRange(f"wire {w} outside a {n}-wire state")
    if len(set(wires)) != len(wires):
        raise WireOutOfRange(f"repeated wires {wires}")
    probs = np.abs(state) ** 2
    rest = tuple(i for i in range(n) if i not in wires)
    probs = probs.sum(axis=rest) if rest else probs
    # remaining axes are in increasing wire order; permute to the requested order
    kept = sorted(wires)
    probs = np.transpose(probs, [kept.index(w) for w in wires])
    return probs.reshape(-1)


def expval_exact(state: np.ndarray, obs) -> float:
    """<psi|B|psi> by rotating into the eigenbasis of ``obs``."""
    for g in obs.diagonalizing_gates():
        state = apply_gate(state, g)
    return float(marginal_probability(state, obs.wires) @ obs.eigvals)


class DefaultQubit(QubitDevice):
    name = "Default qubit statevector simulator"
    short_name = "default.qubit"
    version = "0.1.0"
    author = "qhybrid"
    operations = frozenset(QUBIT_OPERATIONS)
    observables = frozenset(QUBIT_OBSERVABLES)
    capabilities = MappingProxyType({"model": "qubit", "provides_jacobian": False})

    def __init__(self, wires, shots=0, seed=None):
        super().__init__(wires, shots, seed)
        self.reset()

    def reset(self):
        self._state = zero_state(self.num_wires)

    @property
    def state(self) -> np.ndarray:
        return self._state.reshape(-1)

    def apply(self, operations, rotations=()):
        for i, g in enumerate(operations):
            if g.name == "BasisState" and i > 0:
                raise DeviceError("BasisState must be the first operation of a circuit")
            self._state = apply_gate(self._state, g)
        for g in rotations:
            self._state = apply_gate(self._state, g)

    def probability(self, wires):
        return marginal_probability(self._state, wires)
