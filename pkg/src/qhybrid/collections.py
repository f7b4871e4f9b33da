"""QNode collections, lazy combinators and VQE cost functions.

A :class:`QNodeCollection` evaluates independent QNodes as one vector
function. :func:`dot`, :func:`sum` and :func:`apply` compose collections
into new callables without running anything; quantum evaluation happens
only when the composed function is called.
"""
from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import autodiff as ad
from .exceptions import LengthMismatch, ParseError, UnsupportedObservable
from .ir import Observable, tensor_observable
from .ops.qubit import Identity, PauliX, PauliY, PauliZ
from .qnode import QNode


class QNodeCollection:
    """Ordered group of QNodes whose inputs do not depend on each other."""

    def __init__(self, qnodes: Sequence[QNode] = ()):
        self.qnodes = list(qnodes)

    def __len__(self):
        return len(self.qnodes)

    def __iter__(self):
        return iter(self.qnodes)

    def __getitem__(self, i):
        return self.qnodes[i]

    def append(self, q: QNode):
        self.qnodes.append(q)

    @property
    def devices(self):
        return [q.device for q in self.qnodes]

    def evaluate(self, args, kwargs, parallel: bool = False):
        if not self.qnodes:
            return []
        if parallel:
            # devices run in worker threads; the autodiff tape is only touched here
            with ThreadPoolExecutor(max_workers=len(self.qnodes)) as pool:
                futures = [pool.submit(q.evaluate, args, kwargs) for q in self.qnodes]
                evaluated = [f.result() for f in futures]
        else:
            evaluated = [q.evaluate(args, kwargs) for q in self.qnodes]
        return [q.record(args, kwargs, *e) for q, e in zip(self.qnodes, evaluated)]

    def __call__(self, *args, parallel: bool = False, **kwargs):
        results = self.evaluate(args, kwargs, parallel)
        if not results:
            return np.zeros(0)
        return ad.stack(results)


def map(ansatz: Callable, observables: Sequence, device, measure: str = "expval",
        diff_method="best", **qnode_kwargs) -> QNodeCollection:
    """One QNode per observable: ``ansatz(params, wires=...)`` then a measurement.

    ``device`` is a single device (cloned once per QNode, so no two QNodes
    share mutable state) or a list with one device per observable.
    """
    from . import ir

    observables = list(observables)
    if isinstance(device, (list, tuple)):
        devices = list(device)
        if len(devices) != len(observables):
            raise LengthMismatch(f"{len(observables)} observables but {len(devices)} devices")
    else:
        devices = [device.clone() for _ in observables]
    measure_fn = {"expval": ir.expval, "var": ir.var, "sample": ir.sample}[measure]

    qnodes = []
    for obs, dev in zip(observables, devices):
        wires = list(range(dev.num_wires))

        def circuit(*params, _obs=obs, _wires=wires, **kwargs):
            ansatz(*params, wires=_wires, **kwargs)
            return measure_fn(_rebuild(_obs))

        circuit.__name__ = f"{getattr(ansatz, '__name__', 'ansatz')}_{len(qnodes)}"
        qnodes.append(QNode(circuit, dev, diff_method=diff_method, **qnode_kwargs))
    return QNodeCollection(qnodes)


def _rebuild(obs):
    """Fresh observable instance; gates given as observables are converted outside recording."""
    from .ir import GateApplication

    if isinstance(obs, GateApplication):
        return obs.op.observable(*obs.params, wires=obs.wires)
    return obs


class _Composed:
    """A lazily evaluated function of a collection with a known output length."""

    def __init__(self, fn: Callable, length, source):
        self.fn = fn
        self.length = length
        self.source = source

    def __len__(self):
        return self.length

    def __call__(self, *args, **kwargs):
        return self.fn(*args, **kwargs)

    @property
    def qnodes(self):
        return self.source.qnodes


def _length(x) -> int:
    if isinstance(x, (QNodeCollection, _Composed)):
        return len(x)
    raise TypeError(f"expected a QNode collection, got {type(x).__name__}")


def _resolve_fn(fn: Union[str, Callable]) -> Callable:
    if isinstance(fn, str):
        try:
            return ad.PRIMITIVES[fn]
        except KeyError:
            raise ValueError(f"no autodiff primitive named {fn!r}") from None
    return fn


def apply(fn: Union[str, Callable], x) -> _Composed:
    """``params -> fn(x(params))``; ``fn`` is a callable or an autodiff primitive name."""
    fn = _resolve_fn(fn)
    return _Composed(lambda *a, **k: fn(x(*a, **k)), _length(x), x)


def dot(coeffs, x) -> _Composed:
    """``params -> sum_i coeffs[i] * x(params)[i]``; lengths are checked immediately."""
    if isinstance(coeffs, (QNodeCollection, _Composed)):
        coeffs, x = x, coeffs
    coeffs = np.asarray(coeffs, dtype=float)
    n = _length(x)
    if coeffs.ndim != 1 or len(coeffs) != n:
        raise LengthMismatch(f"{np.size(coeffs)} coefficients for {n} QNodes")
    if n == 0:
        return _Composed(lambda *a, **k: 0.0, 1, x)
    return _Composed(lambda *a, **k: ad.dot(coeffs, x(*a, **k)), 1, x)


def sum(x) -> _Composed:  # noqa: A001 - mirrors the combinator name
    n = _length(x)
    if n == 0:
        return _Composed(lambda *a, **k: 0.0, 1, x)
    return _Composed(lambda *a, **k: ad.sum(x(*a, **k)), 1, x)


# Hamiltonians -------------------------------------------------------------------

_PAULI = {"X": PauliX, "Y": PauliY, "Z": PauliZ}
_FACTOR = re.compile(r"^([XYZ])(\d+)$")


@dataclass
class Hamiltonian:
    """``sum_i coeffs[i] * terms[i]`` with each term a Pauli word.

    A word is a tuple of ``(letter, wire)`` pairs; the empty word is the
    identity.
    """

    coeffs: np.ndarray
    terms: list = field(default_factory=list)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        self.terms = [tuple((str(p), int(w)) for p, w in t) for t in self.terms]
        if len(self.coeffs) != len(self.terms):
            raise LengthMismatch(f"{len(self.coeffs)} coefficients for {len(self.terms)} terms")
        for t in self.terms:
            wires = [w for _, w in t]
            if len(set(wires)) != len(wires):
                raise ParseError(f"Pauli word {t} repeats a wire")
            for p, _ in t:
                if p not in _PAULI:
                    raise ParseError(f"unknown Pauli factor {p!r}")

    @property
    def num_wires(self) -> int:
        wires = [w for t in self.terms for _, w in t]
        return max(wires) + 1 if wires else 1

    @property
    def ops(self) -> list[Observable]:
        return [word_observable(t) for t in self.terms]

    def matrix(self, num_wires=None) -> np.ndarray:
        """Dense matrix (wire 0 most significant); for small oracles only."""
        n = self.num_wires if num_wires is None else num_wires
        mats = {"X": np.array([[0, 1], [1, 0]], complex), "Y": np.array([[0, -1j], [1j, 0]]),
                "Z": np.diag([1.0 + 0j, -1.0])}
        H = np.zeros((2**n, 2**n), dtype=complex)
        for c, t in zip(self.coeffs, self.terms):
            factors = [np.eye(2, dtype=complex)] * n
            for p, w in t:
                factors[w] = mats[p]
            M = factors[0]
            for f in factors[1:]:
                M = np.kron(M, f)
            H += c * M
        return H

    def ground_energy(self, num_wires=None) -> float:
        return float(np.linalg.eigvalsh(self.matrix(num_wires))[0])

    def __repr__(self):
        words = [" ".join(f"{p}{w}" for p, w in t) or "I" for t in self.terms]
        return "Hamiltonian(" + ", ".join(f"{c:+.6g} {w}" for c, w in zip(self.coeffs, words)) + ")"


def word_observable(word) -> Observable:
    if not word:
        return Identity(wires=0)
    parts = [_PAULI[p].observable(wires=w) for p, w in word]
    return parts[0] if len(parts) == 1 else tensor_observable(parts)


def parse_hamiltonian(text: str) -> Hamiltonian:
    """Parse lines ``<coefficient> <factor>...`` with factors like ``Z0`` or ``I``.

    ``#`` starts a comment and blank lines are skipped.
    """
    coeffs, terms = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *factors = line.split()
        try:
            c = float(head)
        except ValueError:
            raise ParseError(f"expected a coefficient, got {head!r}", lineno) from None
        if not np.isfinite(c):
            raise ParseError(f"coefficient {head!r} is not finite", lineno)
        if not factors:
            raise ParseError("missing Pauli word (use 'I' for the identity)", lineno)
        word = []
        if factors == ["I"]:
            pass
        else:
            for f in factors:
                m = _FACTOR.match(f)
                if m is None:
                    raise ParseError(f"bad Pauli factor {f!r}", lineno)
                word.append((m.group(1), int(m.group(2))))
            wires = [w for _, w in word]
            if len(set(wires)) != len(wires):
                raise ParseError("Pauli word repeats a wire", lineno)
        coeffs.append(c)
        terms.append(tuple(word))
    if not terms:
        raise ParseError("no Hamiltonian terms found", None)
    return Hamiltonian(np.array(coeffs), terms)


def load_hamiltonian(path) -> Hamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_hamiltonian(fh.read())


class VQECost:
    """``params -> sum_i c_i <ansatz(params)| P_i |ansatz(params)>``.

    Equivalent to ``dot(h.coeffs, map(ansatz, h.ops, device))``.
    """

    def __init__(self, ansatz: Callable, hamiltonian: Hamiltonian, device, parallel: bool = False,
                 **qnode_kwargs):
        devices = device if isinstance(device, (list, tuple)) else [device]
        for t in hamiltonian.terms:
            for p, w in t:
                for d in devices:
                    if w >= d.num_wires:
                        raise UnsupportedObservable(
                            f"Pauli{p} on wire {w} (device has {d.num_wires} wires)"
                        )
        self.hamiltonian = hamiltonian
        self.parallel = parallel
        self.qnodes = map(ansatz, hamiltonian.ops, device, **qnode_kwargs)
        self.cost_fn = dot(hamiltonian.coeffs, self.qnodes)

    def __call__(self, *args, **kwargs):
        kwargs.setdefault("parallel", self.parallel)
        return self.cost_fn(*args, **kwargs)
