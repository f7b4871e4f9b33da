"""Minimal reverse-mode automatic differentiation.

A :class:`DiffTape` records nodes in creation order, which is a topological
order of the computation DAG. Each node stores its value, the tape indices
of its parents and a vector-Jacobian product rule. Quantum nodes enter the
tape like any other primitive; their rule multiplies the incoming adjoint by
the circuit Jacobian, computed lazily and at most once per node.

The primitives accept plain numbers and arrays too, so cost functions can
be written once and evaluated with or without a tape. ``numpy`` ufuncs such
as ``np.sin`` dispatch to the primitives when given a :class:`DiffValue`.
"""
from __future__ import annotations

import numbers
from typing import Callable, Sequence

import numpy as np

from .exceptions import NonScalarCost, ShapeMismatch


class DiffTape:
    def __init__(self):
        self.values: list = []
        self.parents: list[tuple[int, ...]] = []
        self.vjps: list = []

    def __len__(self):
        return len(self.values)

    def record(self, value, parents: Sequence["DiffValue"] = (), vjp=None) -> "DiffValue":
        for p in parents:
            if p.tape is not self:
                raise ValueError("cannot combine values recorded on different tapes")
        self.values.append(value)
        self.parents.append(tuple(p.index for p in parents))
        self.vjps.append(vjp)
        return DiffValue(value, self, len(self.values) - 1)

    def leaf(self, value) -> "DiffValue":
        return self.record(np.asarray(value, dtype=float) if not _is_scalar(value) else float(value))


def _is_scalar(x) -> bool:
    return isinstance(x, numbers.Real) or (isinstance(x, np.ndarray) and x.ndim == 0)


class DiffValue:
    """A value recorded on a :class:`DiffTape`."""

    __slots__ = ("value", "tape", "index")
    __array_priority__ = 1000

    def __init__(self, value, tape: DiffTape, index: int):
        self.value = value
        self.tape = tape
        self.index = index

    @property
    def shape(self):
        return np.shape(self.value)

    @property
    def ndim(self):
        return np.ndim(self.value)

    @property
    def size(self):
        return np.size(self.value)

    def __len__(self):
        return len(self.value)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, key):
        return getitem(self, key)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return dot(self, other)

    def __rmatmul__(self, other):
        return dot(other, self)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        fn = _UFUNCS.get(ufunc)
        if method != "__call__" or fn is None or kwargs:
            return NotImplemented
        return fn(*inputs)

    def __array_function__(self, func, types, args, kwargs):
        fn = _ARRAY_FUNCTIONS.get(func)
        if fn is None:
            return NotImplemented
        return fn(*args, **kwargs)

    def __repr__(self):
        return f"DiffValue({self.value!r})"


def value_of(x):
    """Strip tape tracking, recursively through lists and tuples."""
    if isinstance(x, DiffValue):
        return x.value
    if isinstance(x, (list, tuple)):
        return type(x)(value_of(v) for v in x)
    return x


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, DiffValue):
            return x.tape
    return None


def _unbroadcast(g, shape):
    g = np.asarray(g, dtype=float)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape) if shape else float(g)


def _primitive(forward, vjp_rules):
    """Build a primitive from ``forward(*values)`` and per-argument VJP rules.

    ``vjp_rules[i](g, out, *values)`` returns the adjoint contribution to
    argument ``i``.
    """

    def op(*args):
        values = [value_of(a) for a in args]
        out = forward(*values)
        tape = _tape_of(*args)
        if tape is None:
            return out
        traced = [(i, a) for i, a in enumerate(args) if isinstance(a, DiffValue)]

        def vjp(g):
            return [vjp_rules[i](g, out, *values) for i, _ in traced]

        return tape.record(out, [a for _, a in traced], vjp)

    return op


def _check_broadcast(a, b):
    try:
        np.broadcast_shapes(np.shape(a), np.shape(b))
    except ValueError:
        raise ShapeMismatch(f"operands with shapes {np.shape(a)} and {np.shape(b)} do not broadcast") from None


def _binary(forward, rule_a, rule_b):
    def fwd(a, b):
        _check_broadcast(a, b)
        return forward(a, b)

    return _primitive(
        fwd,
        [
            lambda g, out, a, b: _unbroadcast(rule_a(g, out, a, b), np.shape(a)),
            lambda g, out, a, b: _unbroadcast(rule_b(g, out, a, b), np.shape(b)),
        ],
    )


add = _binary(np.add, lambda g, o, a, b: g, lambda g, o, a, b: g)
sub = _binary(np.subtract, lambda g, o, a, b: g, lambda g, o, a, b: -np.asarray(g))
mul = _binary(np.multiply, lambda g, o, a, b: g * b, lambda g, o, a, b: g * a)
div = _binary(
    np.true_divide,
    lambda g, o, a, b: g / np.asarray(b, dtype=float),
    lambda g, o, a, b: -g * a / np.asarray(b, dtype=float) ** 2,
)
neg = _primitive(np.negative, [lambda g, o, a: -np.asarray(g)])
sin = _primitive(np.sin, [lambda g, o, a: g * np.cos(a)])
cos = _primitive(np.cos, [lambda g, o, a: -g * np.sin(a)])
exp = _primitive(np.exp, [lambda g, o, a: g * o])
tanh = _primitive(np.tanh, [lambda g, o, a: g * (1 - o**2)])
square = _primitive(np.square, [lambda g, o, a: 2 * g * a])


def power(a, exponent):
    if isinstance(exponent, DiffValue):
        raise TypeError("only constant exponents are supported")
    return _primitive(
        lambda x: np.power(x, exponent),
        [lambda g, o, x: g * exponent * np.power(x, exponent - 1)],
    )(a)


def _dot_forward(a, b):
    if np.ndim(a) > 2 or np.ndim(b) > 2:
        raise ShapeMismatch("dot supports at most 2-d operands")
    try:
        return np.dot(a, b)
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None


def _dot_vjp_a(g, out, a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.ndim == 0 or b.ndim == 0:
        return np.sum(g * b) if a.ndim == 0 else g * b
    if b.ndim == 1:
        return np.multiply.outer(g, b) if a.ndim == 2 else g * b
    return np.dot(g, b.T) if a.ndim == 2 else np.dot(b, g)


def _dot_vjp_b(g, out, a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.ndim == 0 or b.ndim == 0:
        return np.sum(g * a) if b.ndim == 0 else g * a
    if a.ndim == 1:
        return np.multiply.outer(a, g) if b.ndim == 2 else g * a
    return np.dot(a.T, g) if b.ndim == 1 else np.dot(a.T, g)


dot = _primitive(_dot_forward, [_dot_vjp_a, _dot_vjp_b])


def sum(x, axis=None):  # noqa: A001 - mirrors numpy
    def vjp(g, out, a):
        a = np.asarray(a)
        if axis is not None:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, a.shape).astype(float)

    return _primitive(lambda a: np.sum(a, axis=axis), [vjp])(x)


def mean(x, axis=None):
    def vjp(g, out, a):
        a = np.asarray(a)
        n = a.size if axis is None else a.shape[axis]
        if axis is not None:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(np.asarray(g) / n, a.shape).astype(float)

    return _primitive(lambda a: np.mean(a, axis=axis), [vjp])(x)


def getitem(x, key):
    def vjp(g, out, a):
        z = np.zeros(np.shape(a))
        np.add.at(z, key, g)
        return z

    return _primitive(lambda a: np.asarray(a)[key], [vjp])(x)


def stack(items: Sequence, axis: int = 0):
    items = list(items)
    values = [value_of(v) for v in items]
    out = np.stack([np.asarray(v, dtype=float) for v in values], axis=axis)
    tape = _tape_of(*items)
    if tape is None:
        return out
    traced = [i for i, v in enumerate(items) if isinstance(v, DiffValue)]

    def vjp(g):
        parts = np.moveaxis(np.asarray(g), axis, 0)
        return [parts[i] if parts[i].ndim else float(parts[i]) for i in traced]

    return tape.record(out, [items[i] for i in traced], vjp)


def reshape(x, shape):
    return _primitive(
        lambda a: np.reshape(a, shape), [lambda g, o, a: np.reshape(g, np.shape(a))]
    )(x)


PRIMITIVES: dict[str, Callable] = {
    "add": add, "sub": sub, "mul": mul, "div": div, "neg": neg,
    "sin": sin, "cos": cos, "exp": exp, "tanh": tanh, "square": square, "power": power,
    "dot": dot, "sum": sum, "mean": mean,
}

_UFUNCS = {
    np.add: add, np.subtract: sub, np.multiply: mul, np.true_divide: div, np.negative: neg,
    np.sin: sin, np.cos: cos, np.exp: exp, np.tanh: tanh, np.square: square,
    np.power: power, np.matmul: dot,
}
_ARRAY_FUNCTIONS = {
    np.sum: sum, np.mean: mean, np.dot: dot, np.stack: stack, np.reshape: reshape,
}


# backward -------------------------------------------------------------------

def backward(tape: DiffTape, output: DiffValue, seed=1.0) -> dict[int, np.ndarray]:
    """Single reverse sweep from ``output``; returns adjoints by tape index."""
    adj: dict[int, object] = {output.index: np.asarray(seed, dtype=float) if not _is_scalar(seed) else float(seed)}
    for i in range(output.index, -1, -1):
        g = adj.get(i)
        if g is None or tape.vjps[i] is None:
            continue
        for p, gp in zip(tape.parents[i], tape.vjps[i](g)):
            adj[p] = gp if p not in adj else adj[p] + gp
    return adj


def _wrap(tape: DiffTape, x):
    """Turn every numeric leaf of a nested positional argument into a tape leaf."""
    if isinstance(x, (list, tuple)):
        return type(x)(_wrap(tape, v) for v in x)
    if isinstance(x, DiffValue):
        raise TypeError("nested differentiation is not supported")
    return tape.leaf(x)


def _collect(adj, wrapped):
    if isinstance(wrapped, (list, tuple)):
        return type(wrapped)(_collect(adj, v) for v in wrapped)
    g = adj.get(wrapped.index)
    if g is None:
        return np.zeros(wrapped.shape) if wrapped.shape else 0.0
    return np.asarray(g, dtype=float) if wrapped.shape else float(g)


def _argnums(args, argnum):
    if argnum is None:
        return tuple(range(len(args)))
    return (argnum,) if isinstance(argnum, int) else tuple(argnum)


def _trace(fn, args, kwargs, argnum):
    tape = DiffTape()
    nums = _argnums(args, argnum)
    args = list(args)
    wrapped = {}
    for i in nums:
        wrapped[i] = _wrap(tape, args[i])
        args[i] = wrapped[i]
    out = fn(*args, **kwargs)
    return tape, out, wrapped, nums


def _package(results, nums, argnum):
    if argnum is None and len(nums) == 1:
        return results[0]
    if isinstance(argnum, int):
        return results[0]
    return tuple(results)


def value_and_grad(fn: Callable, argnum=None) -> Callable:
    """Like :func:`grad` but also returns the cost value."""

    def wrapper(*args, **kwargs):
        tape, out, wrapped, nums = _trace(fn, args, kwargs, argnum)
        if not isinstance(out, DiffValue):
            if np.ndim(out) != 0:
                raise NonScalarCost(f"grad needs a scalar cost, got shape {np.shape(out)}")
            results = [_collect({}, wrapped[i]) for i in nums]
            return float(out), _package(results, nums, argnum)
        if out.shape != ():
            raise NonScalarCost(f"grad needs a scalar cost, got shape {out.shape}")
        adj = backward(tape, out)
        results = [_collect(adj, wrapped[i]) for i in nums]
        return float(out.value), _package(results, nums, argnum)

    return wrapper


def grad(fn: Callable, argnum=None) -> Callable:
    """Gradient of a scalar-valued function w.r.t. its positional arguments.

    The gradient has the structure of the differentiated argument(s); with
    several positional arguments a tuple is returned. Keyword arguments are
    passed through untouched and never differentiated.
    """
    vg = value_and_grad(fn, argnum)

    def wrapper(*args, **kwargs):
        return vg(*args, **kwargs)[1]

    return wrapper


def jacobian(fn: Callable, argnum=None) -> Callable:
    """Jacobian of an array-valued function: ``out.shape + arg.shape`` per argument.

    One reverse sweep per output element; quantum nodes cache their circuit
    Jacobian, so it is computed once regardless of the output size.
    """

    def wrapper(*args, **kwargs):
        tape, out, wrapped, nums = _trace(fn, args, kwargs, argnum)
        out_shape = np.shape(value_of(out))
        results = []
        for i in nums:
            shape = np.shape(value_of(_strip(wrapped[i])))
            results.append(np.zeros(out_shape + shape))
        if isinstance(out, DiffValue):
            for k in np.ndindex(*out_shape):
                seed = np.zeros(out_shape)
                seed[k] = 1.0
                adj = backward(tape, out, seed if out_shape else 1.0)
                for r, i in zip(results, nums):
                    r[k] = np.asarray(_flat_grad(adj, wrapped[i])).reshape(r[k].shape)
        return _package(results, nums, argnum)

    return wrapper


def _strip(wrapped):
    if isinstance(wrapped, (list, tuple)):
        return np.concatenate([np.ravel(value_of(_strip(w))) for w in wrapped]) if wrapped else np.zeros(0)
    return wrapped.value


def _flat_grad(adj, wrapped):
    g = _collect(adj, wrapped)
    return flatten_values(g)


def flatten_values(x) -> np.ndarray:
    """Depth-first concatenation of all numeric leaves as a 1-d array."""
    if isinstance(x, (list, tuple)):
        parts = [flatten_values(v) for v in x]
        return np.concatenate(parts) if parts else np.zeros(0)
    return np.ravel(np.asarray(value_of(x), dtype=float))


def unflatten_values(flat, like):
    """Inverse of :func:`flatten_values` using ``like`` as the structure template."""
    flat = np.asarray(flat, dtype=float)
    pos = 0

    def build(t):
        nonlocal pos
        if isinstance(t, (list, tuple)):
            return type(t)(build(v) for v in t)
        shape = np.shape(value_of(t))
        n = int(np.prod(shape)) if shape else 1
        chunk = flat[pos:pos + n]
        pos += n
        return chunk.reshape(shape) if shape else float(chunk[0])

    out = build(like)
    if pos != flat.size:
        raise ShapeMismatch(f"flat vector of length {flat.size} does not match structure of size {pos}")
    return out
