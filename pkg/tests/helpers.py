"""Shared test devices and circuits."""
from __future__ import annotations

from types import MappingProxyType

import numpy as np

import qhybrid as qh
from qhybrid.devices import DefaultQubit, QubitDevice
from qhybrid.devices.default_qubit import apply_gate, marginal_probability, zero_state
from qhybrid.ops.qubit import QUBIT_OBSERVABLES, QUBIT_OPERATIONS


class CountingQubit(DefaultQubit):
    """default.qubit that keeps every executed tape."""

    short_name = "test.counting"

    def __init__(self, wires, shots=0, seed=None):
        super().__init__(wires, shots, seed)
        self.executed = []

    def execute(self, tape):
        self.executed.append(tape)
        return super().execute(tape)


class PipelineLogger(QubitDevice):
    """Minimal statevector device that logs each pipeline stage it goes through."""

    name = "Pipeline logger"
    short_name = "test.logger"
    operations = frozenset(QUBIT_OPERATIONS)
    observables = frozenset(QUBIT_OBSERVABLES)

    def __init__(self, wires, shots=0, seed=None):
        super().__init__(wires, shots, seed)
        self.log = []
        self._state = zero_state(wires)

    def check_validity(self, tape):
        self.log.append("check_validity")
        super().check_validity(tape)

    def reset(self):
        self.log.append("reset")
        self._state = zero_state(self.num_wires)

    def apply(self, operations, rotations=()):
        self.log.append(("apply", [g.name for g in operations], [g.name for g in rotations]))
        for g in list(operations) + list(rotations):
            self._state = apply_gate(self._state, g)

    def generate_samples(self):
        self.log.append("generate_samples")
        return super().generate_samples()

    def statistics(self, measurements):
        self.log.append("statistics")
        return super().statistics(measurements)

    def probability(self, wires):
        return marginal_probability(self._state, wires)


class ShiftRuleJacobianDevice(DefaultQubit):
    """Advertises native Jacobians, computed internally with the shift rule."""

    short_name = "test.native"
    capabilities = MappingProxyType({"model": "qubit", "provides_jacobian": True})

    def __init__(self, wires, shots=0, seed=None):
        super().__init__(wires, shots, seed)
        self.jacobian_calls = 0

    def jacobian(self, tape):
        self.jacobian_calls += 1
        slots = tape.trainable_slots()
        cols = []
        for i, j, v in slots:
            plus = tape.with_values({(i, j): v.val + np.pi / 2})
            minus = tape.with_values({(i, j): v.val - np.pi / 2})
            cols.append(0.5 * (DefaultQubit.execute(self, plus) - DefaultQubit.execute(self, minus)))
        return np.stack(cols, axis=1)


def make_circuit1(dev, **kw):
    @qh.qnode(dev, **kw)
    def circuit1(phi1, phi2):
        qh.RX(phi1, wires=0)
        qh.RY(phi2, wires=0)
        return qh.expval(qh.PauliZ(0))

    return circuit1


def make_circuit2(dev, **kw):
    @qh.qnode(dev, **kw)
    def circuit2(params):
        qh.RX(params[0], wires=0)
        qh.RY(params[1], wires=1)
        qh.CNOT(wires=[0, 1])
        return qh.expval(qh.PauliZ(0)), qh.expval(qh.PauliZ(1))

    return circuit2


def fd_gradient(f, x, h=1e-6):
    """Centered differences of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h / 2
        g.flat[i] = (f(x + e) - f(x - e)) / h
    return g
