"""Derivatives of quantum circuits.

Three interchangeable routes are provided: the parameter-shift rule
(exact, two shifted executions per gate parameter for the default recipe),
forward / centered finite differences, and Jacobians supplied natively by a
device. :func:`tape_jacobian` assembles the derivative of every measurement
with respect to every flat circuit input.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import (
    GradientError,
    JacobianUnsupported,
    NonDifferentiableMeasurement,
    NotAnalyticallyDifferentiable,
)
from .ir import DEFAULT_RECIPE, GradMethod, MeasurementKind, ParamDomain, QuantumTape

#: finite-difference steps for exact simulators and for sampled devices
DEFAULT_DELTA = 1e-7
DEFAULT_SHOTS_DELTA = 0.1


class DiffMethod(enum.Enum):
    ANALYTIC = "analytic"
    FORWARD_FD = "forward"
    CENTERED_FD = "centered"
    DEVICE = "device"
    BEST = "best"

    @classmethod
    def coerce(cls, value) -> "DiffMethod":
        if isinstance(value, cls):
            return value
        aliases = {"parameter-shift": "analytic", "finite-diff": "centered", "fd": "centered"}
        return cls(aliases.get(value, value))


@dataclass(frozen=True)
class FDConfig:
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"finite-difference step must be positive, got {self.delta}")


@dataclass
class Jacobian:
    """``matrix[i, k]`` is d(output i)/d(flat input k)."""

    matrix: np.ndarray
    method_per_param: list

    @property
    def shape(self):
        return self.matrix.shape


def param_shift_partial(evaluate: Callable, params, index: int, recipe=None) -> np.ndarray:
    """sum_k c_k * evaluate(params with params[index] -> a_k * params[index] + s_k)."""
    params = np.asarray(params, dtype=float)
    recipe = DEFAULT_RECIPE if recipe is None else recipe
    total = 0.0
    for c, a, s in recipe:
        shifted = params.copy()
        shifted[index] = a * params[index] + s
        total = total + c * np.asarray(evaluate(shifted), dtype=float)
    return np.asarray(total, dtype=float)


def finite_diff_partial(evaluate: Callable, params, index: int, cfg: FDConfig = FDConfig(),
                        mode: str = "centered", f0=None) -> np.ndarray:
    """Forward ``(f(mu + d) - f(mu)) / d`` or centered ``(f(mu + d/2) - f(mu - d/2)) / d``.

    ``f0`` lets a caller reuse an unshifted evaluation in forward mode.
    """
    params = np.asarray(params, dtype=float)
    d = cfg.delta

    def at(shift):
        p = params.copy()
        p[index] += shift
        return np.asarray(evaluate(p), dtype=float)

    if mode == "forward":
        base = at(0.0) if f0 is None else np.asarray(f0, dtype=float)
        return (at(d) - base) / d
    if mode == "centered":
        return (at(d / 2) - at(-d / 2)) / d
    raise ValueError(f"unknown finite-difference mode {mode!r}")


def device_jacobian(dev, tape: QuantumTape) -> np.ndarray:
    """Native Jacobian w.r.t. the tape's trainable gate parameters, in slot order."""
    if not dev.capabilities.get("provides_jacobian", False):
        raise JacobianUnsupported(f"{dev.short_name} does not provide Jacobians")
    jac = np.asarray(dev.jacobian(tape), dtype=float)
    expected = (len(tape.measurements), len(tape.trainable_slots()))
    if jac.shape != expected:
        raise GradientError(f"device Jacobian has shape {jac.shape}, expected {expected}")
    return jac


def _analytic_allowed(tape: QuantumTape, op_index: int) -> bool:
    op = tape.operations[op_index].op
    if op.grad_method is not GradMethod.ANALYTIC or op.par_domain is not ParamDomain.REAL:
        return False
    if any(m.kind is not MeasurementKind.EXPECTATION for m in tape.measurements):
        # shifted variances are not variances of shifted circuits
        return False
    if op.model == "cv":
        # CV recipes are exact for expectations linear in the quadratures
        return all(m.obs.heisenberg_rep()[0] == 1 for m in tape.measurements)
    return True


def tape_jacobian(dev, tape: QuantumTape, num_inputs: int, method=DiffMethod.BEST,
                  forward=None, delta: Optional[float] = None, trainable=None) -> Jacobian:
    """Jacobian of ``dev.execute(tape)`` w.r.t. the ``num_inputs`` flat inputs.

    A flat input feeding several gate parameters gets the sum of the
    per-occurrence partials, each scaled by the variable's multiplier.
    ``forward`` is a previously computed unshifted result, reused by forward
    differences. No unshifted execution happens here. ``trainable``
    restricts the work to a subset of inputs; other columns stay zero.
    """
    method = DiffMethod.coerce(method)
    for m in tape.measurements:
        if m.kind is MeasurementKind.SAMPLE:
            raise NonDifferentiableMeasurement("samples cannot be differentiated")

    slots = tape.trainable_slots()
    n_out = len(tape.measurements)
    J = np.zeros((n_out, num_inputs))
    methods: list = [None] * num_inputs

    by_input = defaultdict(list)
    for k, (_, _, v) in enumerate(slots):
        by_input[v.idx].append(k)
    array_inputs = tape.array_variables()
    if trainable is not None:
        array_inputs &= set(trainable)
    if array_inputs:
        raise GradientError(
            f"inputs {sorted(array_inputs)} feed array-valued gate parameters, "
            "which are not differentiable; pass them as keyword arguments"
        )

    if method is DiffMethod.DEVICE:
        try:
            dj = device_jacobian(dev, tape)
        except JacobianUnsupported:
            method = DiffMethod.BEST
        else:
            for k, (_, _, v) in enumerate(slots):
                J[:, v.idx] += v.mult * dj[:, k]
                methods[v.idx] = DiffMethod.DEVICE
            return Jacobian(J, methods)

    slot_values = np.array([v.val for _, _, v in slots])

    def run_slots(values):
        # only shifted slots differ from the recorded values
        updates = {
            (i, j): float(x)
            for (i, j, _), x, x0 in zip(slots, values, slot_values) if x != x0
        }
        return dev.execute(tape.with_values(updates))

    inputs = np.zeros(num_inputs)
    for _, _, v in slots:
        inputs[v.idx] = v.base

    def run_inputs(values):
        return dev.execute(tape.bind_inputs(values))

    if delta is None:
        delta = DEFAULT_DELTA if dev.analytic else DEFAULT_SHOTS_DELTA
    cfg = FDConfig(delta)

    for idx in range(num_inputs):
        occ = by_input.get(idx)
        if not occ or (trainable is not None and idx not in trainable):
            continue  # the circuit does not depend on this input
        ops_ok = [slots[k][0] for k in occ]
        for k in occ:
            if tape.operations[slots[k][0]].op.grad_method is GradMethod.NONE:
                raise GradientError(f"{tape.operations[slots[k][0]].name} is not differentiable")
        analytic_ok = all(_analytic_allowed(tape, i) for i in ops_ok)
        m = method
        if m is DiffMethod.BEST:
            m = DiffMethod.ANALYTIC if analytic_ok else DiffMethod.CENTERED_FD
        if m is DiffMethod.ANALYTIC:
            if not analytic_ok:
                raise NotAnalyticallyDifferentiable(
                    f"input {idx} cannot be differentiated with the shift rule"
                )
            col = 0.0
            for k in occ:
                i, j, v = slots[k]
                recipe = tape.operations[i].op.recipe(j)
                col = col + v.mult * param_shift_partial(run_slots, slot_values, k, recipe)
            J[:, idx] = col
        else:
            mode = "forward" if m is DiffMethod.FORWARD_FD else "centered"
            J[:, idx] = finite_diff_partial(run_inputs, inputs, idx, cfg, mode, f0=forward)
        methods[idx] = m
    return Jacobian(J, methods)


def qnode_jacobian(qnode, params: Sequence, method=None, kwargs=None) -> Jacobian:
    """Jacobian of a QNode at positional ``params`` (one forward pass plus shifts).

    Columns follow the depth-first flattening of the positional arguments;
    keyword arguments are never differentiated.
    """
    kwargs = kwargs or {}
    method = qnode.diff_method if method is None else method
    tape, num_inputs = qnode.construct(tuple(params), kwargs)
    forward = qnode.device.execute(tape)
    return tape_jacobian(qnode.device, tape, num_inputs, method, forward=forward, delta=qnode.fd_delta)
