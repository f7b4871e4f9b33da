"""Hybrid quantum-classical automatic differentiation.

Quantum circuits run on pluggable simulator devices, are differentiated with
parameter-shift rules or finite differences, and compose with a small
reverse-mode autodiff tape into trainable hybrid cost functions.
"""
from __future__ import annotations

__version__ = "0.1.0"

from . import autodiff, templates
from .autodiff import grad, jacobian, value_and_grad
from .devices import device, list_devices, load_device, register_device
from .exceptions import *  # noqa: F401,F403
from .gradients import DiffMethod, qnode_jacobian
from .ir import build_tape, expval, sample, tensor_observable, var
from .ops import *  # noqa: F401,F403
from .qnode import QNode, qnode
from .collections import (  # noqa: E402 - needs qnode
    Hamiltonian, QNodeCollection, VQECost, apply, dot, map, parse_hamiltonian, sum,
)
from .optimize import (
    Adagrad, Adam, GradientDescent, Momentum, NesterovMomentum, RMSProp, make_optimizer,
)
