"""Quantum nodes: quantum functions bound to a device.

A quantum function takes positional inputs (differentiable) and keyword
inputs (constants), applies gates and returns one or more measurements.
Calling a :class:`QNode` builds a tape, executes it and, when any
positional input is a :class:`~qhybrid.autodiff.DiffValue`, records one
node on the autodiff tape whose backward rule multiplies the incoming
adjoint by the circuit Jacobian.
"""
from __future__ import annotations

import numbers
from typing import Callable, Optional

import numpy as np

from .autodiff import DiffValue, value_of
from .exceptions import QuantumFunctionError
from .gradients import DiffMethod, qnode_jacobian, tape_jacobian
from .ir import Measurement, QuantumTape, Variable, build_tape, recording


def _flatten_inputs(args) -> tuple[list, list[float]]:
    """Replace numeric leaves by variables, depth first; returns (structure, flat values)."""
    flat: list[float] = []

    def sub(x):
        if isinstance(x, DiffValue):
            x = x.value
        if isinstance(x, (list, tuple)):
            return type(x)(sub(v) for v in x)
        if isinstance(x, (numbers.Real, np.number)) and not isinstance(x, bool):
            flat.append(float(x))
            return Variable(len(flat) - 1, float(x))
        arr = np.asarray(x)
        if arr.dtype.kind not in "biuf":
            raise QuantumFunctionError(f"positional inputs must be numeric, got {type(x).__name__}")
        out = np.empty(arr.shape, dtype=object)
        for pos, v in np.ndenumerate(arr):
            flat.append(float(v))
            out[pos] = Variable(len(flat) - 1, float(v))
        return out

    return [sub(a) for a in args], flat


def _diff_leaves(args):
    """``(DiffValue, first flat index)`` for every tracked input, in flattening order."""
    found = []
    pos = 0

    def walk(x):
        nonlocal pos
        if isinstance(x, (list, tuple)):
            for v in x:
                walk(v)
            return
        n = int(np.size(value_of(x)))
        if isinstance(x, DiffValue):
            found.append((x, pos))
        pos += n

    for a in args:
        walk(a)
    return found


class QNode:
    """A quantum function executed on a device.

    Parameters
    ----------
    func
        quantum function; must return a measurement or a sequence of them
    device
        device instance the circuit runs on
    diff_method
        ``"best"`` (default), ``"analytic"``, ``"forward"``, ``"centered"`` or ``"device"``
    fd_delta
        finite-difference step; defaults depend on whether the device samples
    """

    def __init__(self, func: Callable, device, diff_method="best", fd_delta: Optional[float] = None):
        self.func = func
        self.device = device
        self.diff_method = DiffMethod.coerce(diff_method)
        self.fd_delta = fd_delta
        self.__name__ = getattr(func, "__name__", "qnode")
        self.__doc__ = getattr(func, "__doc__", None)

    def construct(self, args, kwargs) -> tuple[QuantumTape, int]:
        """Build the tape for the given inputs; returns it with the flat input count."""
        structured, flat = _flatten_inputs(args)
        with recording() as rec:
            ret = self.func(*structured, **kwargs)
        rec.check_complete()
        meas = ret if isinstance(ret, (list, tuple)) else (ret,)
        for m in meas:
            if not isinstance(m, Measurement):
                raise QuantumFunctionError(
                    f"{self.__name__} must return measurements, got {type(m).__name__}"
                )
        if list(meas) != rec.measurements:
            raise QuantumFunctionError(
                f"{self.__name__} must return every measurement it makes, in order"
            )
        tape = build_tape(rec.operations, meas, self.device.num_wires)
        self._returns_sequence = isinstance(ret, (list, tuple))
        return tape, len(flat)

    def evaluate(self, args, kwargs=None):
        """Execute without touching the autodiff tape; returns ``(output, tape, n_inputs)``."""
        kwargs = kwargs or {}
        tape, n = self.construct(value_of(tuple(args)), kwargs)
        raw = self.device.execute(tape)
        return self._shape_output(raw, tape), raw, tape, n

    def _shape_output(self, raw, tape):
        if len(tape.measurements) == 1 and not self._returns_sequence:
            r = raw[0]
            return float(r) if np.ndim(r) == 0 else np.asarray(r)
        if raw.dtype == object:
            return raw
        return np.asarray(raw, dtype=float)

    def record(self, args, kwargs, out, raw, tape, n):
        """Attach an evaluated result to the autodiff tape of its tracked inputs."""
        leaves = _diff_leaves(args)
        if not leaves:
            return out
        difftape = leaves[0][0].tape
        cache = {}
        trainable = set()
        for v, start in leaves:
            trainable.update(range(start, start + int(np.size(v.value))))

        def vjp(g):
            if "J" not in cache:
                cache["J"] = tape_jacobian(
                    self.device, tape, n, self.diff_method, forward=raw,
                    delta=self.fd_delta, trainable=trainable,
                ).matrix
            gJ = np.ravel(np.asarray(g, dtype=float)) @ cache["J"]
            grads = []
            for v, start in leaves:
                size = int(np.size(v.value))
                chunk = gJ[start:start + size]
                grads.append(chunk.reshape(np.shape(v.value)) if np.ndim(v.value) else float(chunk[0]))
            return grads

        return difftape.record(out, [v for v, _ in leaves], vjp)

    def __call__(self, *args, **kwargs):
        out, raw, tape, n = self.evaluate(args, kwargs)
        return self.record(args, kwargs, out, raw, tape, n)

    def jacobian(self, *args, method=None, **kwargs) -> np.ndarray:
        """Jacobian matrix (measurements x flat positional inputs)."""
        return qnode_jacobian(self, value_of(tuple(args)), method, kwargs).matrix

    def draw(self, *args, **kwargs) -> str:
        tape, _ = self.construct(value_of(tuple(args)), kwargs)
        lines = [repr(g) for g in tape.operations]
        lines += [repr(m) for m in tape.measurements]
        return "\n".join(lines)

    def __repr__(self):
        return f"<QNode {self.__name__} on {self.device.short_name}>"


def qnode(device, diff_method="best", fd_delta: Optional[float] = None):
    """Decorator turning a quantum function into a :class:`QNode`."""

    def wrap(func):
        return QNode(func, device, diff_method=diff_method, fd_delta=fd_delta)

    return wrap

