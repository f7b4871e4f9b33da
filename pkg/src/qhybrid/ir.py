"""Circuit intermediate representation.

Quantum functions are written by calling operation and observable
definitions, e.g. ``RX(0.3, wires=0)`` or ``expval(PauliZ(0) @ PauliY(1))``.
Inside :func:`recording` every constructed gate and measurement is appended
to the active recorder; outside of it the constructors simply return
immutable :class:`GateApplication` / :class:`Measurement` values.

Trainable inputs reach a circuit as :class:`Variable` placeholders. A gate
parameter holding a variable remembers which flat input it came from, which
is what the gradient code uses to locate the gates it has to shift.
"""
from __future__ import annotations

import enum
import numbers
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .exceptions import (
    ArityMismatch,
    InvalidParameter,
    NoDecompositionAvailable,
    NoMatrixAvailable,
    OverlappingMeasurementWires,
    OverlappingWires,
    QuantumFunctionError,
    WireOutOfRange,
)


class Variable:
    """Placeholder for one flat positional input of a quantum node.

    Only affine scalar arithmetic is allowed (``2 * x``, ``-x``, ``x + 1``);
    anything else is classical processing and belongs outside the circuit.
    """

    __slots__ = ("idx", "base", "mult", "offset")
    # make numpy defer binary operators to us and refuse ufuncs
    __array_ufunc__ = None

    def __init__(self, idx: int, base: float, mult: float = 1.0, offset: float = 0.0):
        self.idx = idx
        self.base = float(base)
        self.mult = float(mult)
        self.offset = float(offset)

    @property
    def val(self) -> float:
        return self.mult * self.base + self.offset

    def bind(self, base: float) -> float:
        return self.mult * base + self.offset

    def _affine(self, mult, offset):
        return Variable(self.idx, self.base, mult, offset)

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return self._affine(self.mult * other, self.offset * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, numbers.Real):
            return self._affine(self.mult / other, self.offset / other)
        return NotImplemented

    def __neg__(self):
        return self._affine(-self.mult, -self.offset)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, numbers.Real):
            return self._affine(self.mult, self.offset + other)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, numbers.Real):
            return self._affine(self.mult, self.offset - other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, numbers.Real):
            return self._affine(-self.mult, other - self.offset)
        return NotImplemented

    def __float__(self):
        raise QuantumFunctionError(
            "circuit inputs cannot be converted to float inside a quantum function; "
            "do classical processing outside the circuit"
        )

    def __repr__(self):
        return f"Variable(idx={self.idx}, val={self.val:.6g})"


def resolve(value):
    """Replace any variables in ``value`` by their numeric values."""
    if isinstance(value, Variable):
        return value.val
    if isinstance(value, np.ndarray) and value.dtype == object:
        return np.vectorize(resolve, otypes=[float])(value) if value.size else value.astype(float)
    return value


def contains_variable(value) -> bool:
    if isinstance(value, Variable):
        return True
    if isinstance(value, np.ndarray) and value.dtype == object:
        return any(isinstance(v, Variable) for v in value.flat)
    return False


# recording -------------------------------------------------------------------

class Recorder:
    def __init__(self):
        self.operations: list[GateApplication] = []
        self.measurements: list[Measurement] = []
        # gates built after a measurement that may still turn into observables
        self.pending: list[GateApplication] = []

    def add_operation(self, g):
        if self.measurements:
            if g.op.observable is not None:
                self.pending.append(g)
                return
            raise QuantumFunctionError(
                f"gate {g.name} applied after a measurement; measurements must come last"
            )
        self.operations.append(g)

    def discard_operation(self, g):
        for ops in (self.pending, self.operations):
            for i in range(len(ops) - 1, -1, -1):
                if ops[i] is g:
                    del ops[i]
                    return

    def check_complete(self):
        if self.pending:
            raise QuantumFunctionError(
                f"gate {self.pending[0].name} applied after a measurement; measurements must come last"
            )

    def add_measurement(self, m):
        self.measurements.append(m)


_state = threading.local()


def _stack():
    if not hasattr(_state, "stack"):
        _state.stack = []
    return _state.stack


def active_recorder() -> Optional[Recorder]:
    stack = _stack()
    return stack[-1] if stack else None


@contextmanager
def recording():
    """Record every gate and measurement constructed within the block."""
    rec = Recorder()
    _stack().append(rec)
    try:
        yield rec
    finally:
        _stack().pop()


@contextmanager
def paused():
    """Construct gates without recording them (decompositions, rotations)."""
    _stack().append(None)
    try:
        yield
    finally:
        _stack().pop()


# definitions -------------------------------------------------------------------

class ParamDomain(enum.Enum):
    NATURAL = "N"
    REAL = "R"
    ARRAY = "A"
    NONE = None


class GradMethod(enum.Enum):
    ANALYTIC = "A"
    FINITE_DIFF = "F"
    NONE = None


#: (coefficient, multiplier, shift) triples; the term contributes c * f(a * mu + s)
RecipeTerm = tuple[float, float, float]
DEFAULT_RECIPE: tuple[RecipeTerm, ...] = ((0.5, 1.0, np.pi / 2), (-0.5, 1.0, -np.pi / 2))


def two_term_recipe(c: float, s: float) -> tuple[RecipeTerm, ...]:
    """The symmetric recipe c * (f(mu + s) - f(mu - s))."""
    return ((c, 1.0, s), (-c, 1.0, -s))


def _wires_tuple(wires) -> tuple[int, ...]:
    if isinstance(wires, (numbers.Integral, np.integer)):
        wires = (wires,)
    out = tuple(int(w) for w in wires)
    for w in out:
        if w < 0:
            raise WireOutOfRange(f"wire {w} is negative")
    return out


def _check_param(name, domain, p):
    if domain is ParamDomain.REAL:
        if isinstance(p, Variable):
            return p
        if not isinstance(p, (numbers.Real, np.floating, np.integer)):
            raise InvalidParameter(f"{name} expects a real parameter, got {type(p).__name__}")
        return float(p)
    if domain is ParamDomain.NATURAL:
        v = resolve(p)
        if not isinstance(v, numbers.Real) or v < 0 or float(v) != int(v):
            raise InvalidParameter(f"{name} expects a non-negative integer, got {v!r}")
        return float(v)
    if domain is ParamDomain.ARRAY:
        return p if isinstance(p, np.ndarray) else np.asarray(p)
    raise InvalidParameter(f"{name} takes no parameters")


@dataclass(frozen=True, eq=False)
class OperationDef:
    """Metadata and representations for one kind of gate.

    ``num_wires=None`` means the gate acts on any number of wires.
    ``grad_recipe`` holds one entry per parameter; an entry of ``None`` (or
    a missing recipe) means the default two-term shift applies.
    """

    name: str
    num_params: int
    num_wires: Optional[int]
    par_domain: ParamDomain = ParamDomain.REAL
    grad_method: GradMethod = GradMethod.ANALYTIC
    grad_recipe: Optional[tuple] = None
    matrix_fn: Optional[Callable[..., np.ndarray]] = None
    decomposition_fn: Optional[Callable[..., list]] = None
    heisenberg_fn: Optional[Callable[..., np.ndarray]] = None
    model: str = "qubit"
    observable: Optional["ObservableDef"] = None

    def __post_init__(self):
        if self.num_params == 0 and self.par_domain is not ParamDomain.NONE:
            object.__setattr__(self, "par_domain", ParamDomain.NONE)
        if self.num_params == 0:
            object.__setattr__(self, "grad_method", GradMethod.NONE)
        if self.grad_recipe is not None:
            if len(self.grad_recipe) != self.num_params:
                raise ValueError(f"{self.name}: one recipe entry per parameter required")
            for entry in self.grad_recipe:
                for term in entry or ():
                    if term[1] == 0:
                        raise ValueError(f"{self.name}: recipe multiplier must be non-zero")

    def recipe(self, slot: int) -> tuple[RecipeTerm, ...]:
        if self.grad_recipe is None or self.grad_recipe[slot] is None:
            return DEFAULT_RECIPE
        return tuple(self.grad_recipe[slot])

    def __call__(self, *params, wires=None) -> "GateApplication":
        if wires is None:
            if len(params) != self.num_params + 1:
                raise TypeError(f"{self.name} requires wires")
            *params, wires = params
        g = GateApplication(self, tuple(params), _wires_tuple(wires))
        rec = active_recorder()
        if rec is not None:
            rec.add_operation(g)
        return g

    def __repr__(self):
        return f"<OperationDef {self.name}>"


@dataclass(frozen=True, eq=False)
class GateApplication:
    op: OperationDef
    params: tuple
    wires: tuple[int, ...]

    def __post_init__(self):
        op = self.op
        if len(self.params) != op.num_params:
            raise ArityMismatch(
                f"{op.name} takes {op.num_params} parameter(s), got {len(self.params)}"
            )
        wires = _wires_tuple(self.wires)
        if op.num_wires is not None and len(wires) != op.num_wires:
            raise ArityMismatch(f"{op.name} acts on {op.num_wires} wire(s), got {len(wires)}")
        if not wires:
            raise ArityMismatch(f"{op.name} needs at least one wire")
        if len(set(wires)) != len(wires):
            raise OverlappingWires(f"{op.name} applied to repeated wires {wires}")
        params = tuple(_check_param(op.name, op.par_domain, p) for p in self.params)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "wires", wires)

    @property
    def name(self) -> str:
        return self.op.name

    @property
    def parameters(self) -> tuple:
        """Numeric parameter values with variables resolved."""
        return tuple(resolve(p) for p in self.params)

    def as_observable(self) -> "Observable":
        """Reinterpret a gate such as ``PauliZ(0)`` as the matching observable."""
        if self.op.observable is None:
            raise QuantumFunctionError(f"{self.name} cannot be used as an observable")
        rec = active_recorder()
        if rec is not None:
            rec.discard_operation(self)
        return self.op.observable(*self.params, wires=self.wires)

    def __matmul__(self, other):
        return tensor_observable([_as_observable(self), _as_observable(other)])

    def with_param(self, slot: int, value) -> "GateApplication":
        params = list(self.params)
        params[slot] = value
        return self._trusted(tuple(params))

    def _trusted(self, params) -> "GateApplication":
        # copy with already validated parameters, skipping __post_init__
        g = object.__new__(GateApplication)
        object.__setattr__(g, "op", self.op)
        object.__setattr__(g, "params", params)
        object.__setattr__(g, "wires", self.wires)
        return g

    def __repr__(self):
        ps = ", ".join(f"{p:.4g}" if isinstance(p, float) else repr(p) for p in self.parameters)
        return f"{self.name}({ps}{', ' if ps else ''}wires={list(self.wires)})"


@dataclass(frozen=True, eq=False)
class ObservableDef:
    """Metadata for one kind of observable.

    Qubit observables supply ``eigvals_fn`` and ``diagonalizing_fn`` (and
    usually ``matrix_fn``); CV observables supply ``heisenberg_fn`` returning
    ``(order, rep)`` on the local basis ``(I, x_0, p_0, ...)``.
    """

    name: str
    num_wires: Optional[int]
    num_params: int = 0
    par_domain: ParamDomain = ParamDomain.NONE
    eigvals_fn: Optional[Callable[..., np.ndarray]] = None
    diagonalizing_fn: Optional[Callable[..., list]] = None
    matrix_fn: Optional[Callable[..., np.ndarray]] = None
    heisenberg_fn: Optional[Callable[..., tuple]] = None
    model: str = "qubit"

    def __call__(self, *params, wires=None) -> "Observable":
        if wires is None:
            if not params:
                raise TypeError(f"{self.name} requires wires")
            *params, wires = params
        return Observable(self, tuple(params), _wires_tuple(wires))

    def __repr__(self):
        return f"<ObservableDef {self.name}>"


@dataclass(frozen=True, eq=False)
class Observable:
    """An observable bound to wires."""

    obs: ObservableDef
    params: tuple
    wires: tuple[int, ...]

    def __post_init__(self):
        d = self.obs
        if len(self.params) != d.num_params:
            raise ArityMismatch(f"{d.name} takes {d.num_params} parameter(s)")
        if d.num_wires is not None and len(self.wires) != d.num_wires:
            raise ArityMismatch(f"{d.name} acts on {d.num_wires} wire(s), got {len(self.wires)}")
        if len(set(self.wires)) != len(self.wires):
            raise OverlappingWires(f"{d.name} on repeated wires {self.wires}")
        params = tuple(_check_param(d.name, d.par_domain, p) for p in self.params)
        object.__setattr__(self, "params", params)

    @property
    def name(self) -> str:
        return self.obs.name

    @property
    def names(self) -> tuple[str, ...]:
        return (self.obs.name,)

    @property
    def parts(self) -> tuple["Observable", ...]:
        return (self,)

    @property
    def model(self) -> str:
        return self.obs.model

    @property
    def parameters(self) -> tuple:
        return tuple(resolve(p) for p in self.params)

    @property
    def eigvals(self) -> np.ndarray:
        if self.obs.eigvals_fn is None:
            raise NoMatrixAvailable(f"{self.name} has no eigenvalue representation")
        return np.asarray(self.obs.eigvals_fn(*self.parameters, num_wires=len(self.wires)), float)

    @property
    def matrix(self) -> np.ndarray:
        if self.obs.matrix_fn is None:
            raise NoMatrixAvailable(f"{self.name} has no matrix representation")
        return np.asarray(self.obs.matrix_fn(*self.parameters, num_wires=len(self.wires)), complex)

    def diagonalizing_gates(self) -> list[GateApplication]:
        if self.obs.diagonalizing_fn is None:
            return []
        with paused():
            return list(self.obs.diagonalizing_fn(*self.parameters, wires=self.wires))

    def heisenberg_rep(self) -> tuple[int, np.ndarray]:
        if self.obs.heisenberg_fn is None:
            raise NoMatrixAvailable(f"{self.name} has no quadrature representation")
        order, rep = self.obs.heisenberg_fn(*self.parameters)
        return order, np.asarray(rep, float)

    def __matmul__(self, other):
        return tensor_observable([self, _as_observable(other)])

    def __rmatmul__(self, other):
        return tensor_observable([_as_observable(other), self])

    def __repr__(self):
        return f"{self.name}(wires={list(self.wires)})"


@dataclass(frozen=True, eq=False)
class TensorObservable(Observable):
    """Tensor product of observables acting on disjoint wires."""

    components: tuple = field(default=())

    def __post_init__(self):
        pass

    @property
    def name(self) -> str:
        return "Tensor"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.components)

    @property
    def parts(self):
        return self.components

    @property
    def model(self) -> str:
        return self.components[0].model

    @property
    def parameters(self):
        return ()

    @property
    def eigvals(self) -> np.ndarray:
        return reduce(np.kron, [p.eigvals for p in self.components])

    @property
    def matrix(self) -> np.ndarray:
        return reduce(np.kron, [p.matrix for p in self.components])

    def diagonalizing_gates(self):
        gates = []
        for p in self.components:
            gates.extend(p.diagonalizing_gates())
        return gates

    def heisenberg_rep(self):
        raise NoMatrixAvailable("tensor observables have no quadrature representation")

    def __repr__(self):
        return " @ ".join(repr(p) for p in self.components)


def _as_observable(x) -> Observable:
    if isinstance(x, Observable):
        return x
    if isinstance(x, GateApplication):
        return x.as_observable()
    raise QuantumFunctionError(f"not an observable: {x!r}")


def tensor_observable(parts: Sequence[Observable]) -> TensorObservable:
    """Combine observables on pairwise disjoint wires into one tensor observable.

    Eigenvalues are the Kronecker product of the component eigenvalues, in
    component order; the diagonalizing gates are concatenated.
    """
    flat: list[Observable] = []
    for p in parts:
        flat.extend(_as_observable(p).parts)
    wires: list[int] = []
    for p in flat:
        if set(p.wires) & set(wires):
            raise OverlappingWires(f"tensor factors overlap on wires {sorted(set(p.wires) & set(wires))}")
        wires.extend(p.wires)
    if any(p.model != "qubit" for p in flat):
        raise InvalidParameter("tensor products are only defined for qubit observables")
    return TensorObservable(obs=flat[0].obs, params=(), wires=tuple(wires), components=tuple(flat))


# measurements -------------------------------------------------------------------

class MeasurementKind(enum.Enum):
    EXPECTATION = "expval"
    VARIANCE = "var"
    SAMPLE = "sample"


@dataclass(frozen=True, eq=False)
class Measurement:
    kind: MeasurementKind
    obs: Observable

    @property
    def wires(self):
        return self.obs.wires

    @property
    def differentiable(self) -> bool:
        return self.kind is not MeasurementKind.SAMPLE

    def __repr__(self):
        return f"{self.kind.value}({self.obs!r})"


def _measure(kind, obs):
    if isinstance(obs, GateApplication):
        obs = obs.as_observable()
    if not isinstance(obs, Observable):
        raise QuantumFunctionError(f"{kind.value}() expects an observable, got {obs!r}")
    m = Measurement(kind, obs)
    rec = active_recorder()
    if rec is not None:
        rec.add_measurement(m)
    return m


def expval(obs: Observable) -> Measurement:
    return _measure(MeasurementKind.EXPECTATION, obs)


def var(obs: Observable) -> Measurement:
    return _measure(MeasurementKind.VARIANCE, obs)


def sample(obs: Observable) -> Measurement:
    return _measure(MeasurementKind.SAMPLE, obs)


# tapes -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuantumTape:
    """Validated circuit: gate applications followed by terminal measurements."""

    operations: tuple[GateApplication, ...]
    measurements: tuple[Measurement, ...]
    num_wires: int

    @property
    def observables(self) -> tuple[Observable, ...]:
        return tuple(m.obs for m in self.measurements)

    @property
    def is_sampled(self) -> bool:
        return any(m.kind is MeasurementKind.SAMPLE for m in self.measurements)

    @property
    def diagonalizing_gates(self) -> list[GateApplication]:
        gates = []
        for m in self.measurements:
            gates.extend(m.obs.diagonalizing_gates())
        return gates

    def trainable_slots(self) -> list[tuple[int, int, Variable]]:
        """``(op_index, param_slot, variable)`` for every scalar variable parameter."""
        out = []
        for i, g in enumerate(self.operations):
            for j, p in enumerate(g.params):
                if isinstance(p, Variable):
                    out.append((i, j, p))
        return out

    def array_variables(self) -> set[int]:
        """Flat input indices that only enter through array-valued parameters."""
        found = set()
        for g in self.operations:
            for p in g.params:
                if isinstance(p, np.ndarray) and p.dtype == object:
                    found.update(v.idx for v in p.flat if isinstance(v, Variable))
        return found

    def with_values(self, updates: dict[tuple[int, int], Any]) -> "QuantumTape":
        """Copy with selected ``(op_index, slot)`` parameters replaced."""
        ops = list(self.operations)
        for (i, j), v in updates.items():
            if ops[i].op.par_domain is ParamDomain.REAL:
                v = float(v)
            ops[i] = ops[i].with_param(j, v)
        return replace(self, operations=tuple(ops))

    def bind_inputs(self, values) -> "QuantumTape":
        """Concrete copy with every variable evaluated at the flat inputs ``values``."""

        def bound(p):
            if isinstance(p, Variable):
                return p.bind(values[p.idx])
            if isinstance(p, np.ndarray) and p.dtype == object:
                return np.vectorize(bound, otypes=[float])(p)
            return p

        ops = tuple(replace(g, params=tuple(bound(p) for p in g.params)) for g in self.operations)
        return replace(self, operations=ops)


def build_tape(ops: Sequence[GateApplication], meas: Sequence[Measurement], num_wires: int) -> QuantumTape:
    """Validate and freeze a circuit.

    Raises
    ------
    OverlappingMeasurementWires
        if two measurements share a wire
    WireOutOfRange
        if any gate or observable wire is ``>= num_wires``
    ArityMismatch
        if a gate's parameter or wire count disagrees with its definition
    """
    if num_wires < 1:
        raise WireOutOfRange("a tape needs at least one wire")
    if not meas:
        raise QuantumFunctionError("a circuit must end in at least one measurement")
    for g in ops:
        if not isinstance(g, GateApplication):
            raise QuantumFunctionError(f"not a gate application: {g!r}")
        if len(g.params) != g.op.num_params:
            raise ArityMismatch(f"{g.name}: wrong number of parameters")
        if g.op.num_wires is not None and len(g.wires) != g.op.num_wires:
            raise ArityMismatch(f"{g.name}: wrong number of wires")
        for w in g.wires:
            if w >= num_wires:
                raise WireOutOfRange(f"{g.name} acts on wire {w}, circuit has {num_wires}")
    seen: set[int] = set()
    for m in meas:
        if not isinstance(m, Measurement):
            raise QuantumFunctionError(f"quantum functions must return measurements, got {m!r}")
        for w in m.wires:
            if w >= num_wires:
                raise WireOutOfRange(f"{m!r} measures wire {w}, circuit has {num_wires}")
        if seen & set(m.wires):
            raise OverlappingMeasurementWires(
                f"measurements overlap on wires {sorted(seen & set(m.wires))}"
            )
        seen.update(m.wires)
    return QuantumTape(tuple(ops), tuple(meas), int(num_wires))


# representations -------------------------------------------------------------------

def gate_matrix(g: GateApplication) -> np.ndarray:
    if g.op.matrix_fn is None:
        raise NoMatrixAvailable(f"{g.name} has no matrix representation")
    if g.op.num_wires is None:
        return np.asarray(g.op.matrix_fn(*g.parameters, num_wires=len(g.wires)), complex)
    return np.asarray(g.op.matrix_fn(*g.parameters), complex)


def decompose(g: GateApplication) -> list[GateApplication]:
    if g.op.decomposition_fn is None:
        raise NoDecompositionAvailable(f"{g.name} has no decomposition")
    with paused():
        return list(g.op.decomposition_fn(*g.parameters, wires=g.wires))


def diagonalizing_gates(m: Measurement) -> list[GateApplication]:
    return m.obs.diagonalizing_gates()
