"""Reusable circuit fragments: embeddings, layered ansatze and initializers.

Templates are ordinary functions that apply gates, so inside a quantum
function they record like any other gate. They also return the list of
gates they applied, which makes them usable (and testable) on their own.
"""
from __future__ import annotations

import functools
import inspect
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import InvalidGateEmission, ShapeMismatch, TooManyFeatures
from .ir import GateApplication, _wires_tuple, active_recorder, recording
from .ops.qubit import CNOT, RX, RY, RZ, Hadamard, Rot


@dataclass(frozen=True)
class TemplateSpec:
    name: str
    kind: str  # "embedding", "layers" or "custom"
    fn: Callable
    param_shape: Optional[Callable[..., tuple]] = None

    def __call__(self, *args, **kwargs):
        return self.fn(*args, **kwargs)


def template(fn: Callable = None, *, kind: str = "custom", param_shape=None):
    """Register a gate-applying function as a template.

    The wrapped function must accept a ``wires`` argument; every gate it
    applies has to act on those wires only, otherwise
    :class:`InvalidGateEmission` is raised. The call returns the gates.
    """
    if fn is None:
        return functools.partial(template, kind=kind, param_shape=param_shape)
    sig = inspect.signature(fn)
    if "wires" not in sig.parameters:
        raise TypeError(f"template {fn.__name__} must take a 'wires' argument")

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        bound = sig.bind(*args, **kwargs)
        bound.apply_defaults()
        allowed = set(_wires_tuple(bound.arguments["wires"]))
        outer = active_recorder()
        with recording() as rec:
            fn(*args, **kwargs)
        gates = list(rec.operations)
        if rec.measurements:
            raise InvalidGateEmission(f"template {fn.__name__} must not measure")
        for g in gates:
            if not isinstance(g, GateApplication):
                raise InvalidGateEmission(f"template {fn.__name__} emitted {g!r}")
            stray = set(g.wires) - allowed
            if stray:
                raise InvalidGateEmission(
                    f"template {fn.__name__} applied {g.name} to wires {sorted(stray)} "
                    f"outside its declared wires {sorted(allowed)}"
                )
        if outer is not None:
            for g in gates:
                outer.add_operation(g)
        return gates

    return TemplateSpec(fn.__name__, kind, wrapper, param_shape)


_ROTATIONS = {"X": RX, "Y": RY, "Z": RZ}


@template(kind="embedding")
def AngleEmbedding(features, wires, rotation: str = "X"):
    """One single-axis rotation per feature, feature ``i`` on ``wires[i]``."""
    wires = _wires_tuple(wires)
    features = list(features) if np.ndim(features) else [features]
    if len(features) > len(wires):
        raise TooManyFeatures(f"{len(features)} features do not fit on {len(wires)} wires")
    try:
        gate = _ROTATIONS[rotation.upper()]
    except KeyError:
        raise ValueError(f"rotation must be one of X, Y, Z, got {rotation!r}") from None
    for f, w in zip(features, wires):
        gate(f, wires=w)


def strong_ent_layers_shape(n_layers: int, n_wires: int) -> tuple[int, int, int]:
    return (n_layers, n_wires, 3)


@template(kind="layers", param_shape=strong_ent_layers_shape)
def StronglyEntanglingLayers(weights, wires):
    """Layers of general rotations followed by a ring of CNOTs.

    ``weights`` has shape ``(L, W, 3)`` with ``W = len(wires) >= 2``. In
    layer ``l`` wire ``i`` controls a CNOT on wire ``(i + r) mod W`` where
    ``r = (l mod (W - 1)) + 1``.
    """
    wires = _wires_tuple(wires)
    W = len(wires)
    shape = np.shape(weights)
    if W < 2:
        raise ShapeMismatch("StronglyEntanglingLayers needs at least two wires")
    if len(shape) != 3 or shape[1:] != (W, 3):
        raise ShapeMismatch(f"weights must have shape (L, {W}, 3), got {shape}")
    for l in range(shape[0]):
        for i in range(W):
            Rot(*weights[l][i], wires=wires[i])
        r = (l % (W - 1)) + 1
        for i in range(W):
            CNOT(wires=(wires[i], wires[(i + r) % W]))


def _check_sizes(n_layers, n_wires):
    if n_layers < 1 or n_wires < 1:
        raise ValueError("n_layers and n_wires must be >= 1")


def strong_ent_layers_uniform(n_layers: int, n_wires: int, low: float = 0.0,
                              high: float = 2 * np.pi, seed=None) -> np.ndarray:
    """Weights drawn i.i.d. from ``[low, high)``."""
    _check_sizes(n_layers, n_wires)
    rng = np.random.default_rng(seed)
    return rng.uniform(low, high, size=strong_ent_layers_shape(n_layers, n_wires))


def strong_ent_layers_normal(n_layers: int, n_wires: int, mean: float = 0.0,
                             std: float = 0.1, seed=None) -> np.ndarray:
    _check_sizes(n_layers, n_wires)
    rng = np.random.default_rng(seed)
    return rng.normal(mean, std, size=strong_ent_layers_shape(n_layers, n_wires))


@template
def bell_state_preparation(wires: Sequence[int]):
    Hadamard(wires=wires[0])
    CNOT(wires=wires)
