"""Gradient-based optimizers.

Every optimizer works on the flat vector of all numeric leaves of the
parameters and restores the original structure afterwards, so tuples such
as ``(bias, weights)`` can be optimized directly. Costs take the
parameters as their single positional argument.

Optimizers are stateful objects: accumulators live on the instance and
:meth:`Optimizer.reset` clears them.
"""
from __future__ import annotations

from typing import Callable, Union

import numpy as np

from .autodiff import flatten_values, unflatten_values, value_and_grad

Schedule = Union[float, Callable[[int], float]]


class Optimizer:
    """Plain gradient descent: ``mu <- mu - eta * grad``.

    ``stepsize`` may be a constant or a callable ``t -> eta(t)`` of the
    zero-based step count.
    """

    kind = "gd"

    def __init__(self, stepsize: Schedule = 0.01):
        if not callable(stepsize) and not stepsize > 0:
            raise ValueError(f"stepsize must be positive, got {stepsize}")
        self.stepsize = stepsize
        self.reset()

    def reset(self):
        self.t = 0

    def eta(self) -> float:
        return float(self.stepsize(self.t) if callable(self.stepsize) else self.stepsize)

    def compute_grad(self, cost, x: np.ndarray, like):
        value, g = value_and_grad(lambda p: cost(p), argnum=0)(unflatten_values(x, like))
        return value, flatten_values(g)

    def apply_grad(self, g: np.ndarray, x: np.ndarray) -> np.ndarray:
        return x - self.eta() * g

    def _update(self, cost, params):
        x = flatten_values(params)
        value, g = self.compute_grad(cost, x, params)
        x_new = self.apply_grad(g, x)
        self.t += 1
        return unflatten_values(x_new, params), value

    def step(self, cost: Callable, params):
        """One update; returns the new parameters."""
        return self._update(cost, params)[0]

    def step_and_cost(self, cost: Callable, params):
        """One update; returns ``(new parameters, cost before the step)``."""
        return self._update(cost, params)


GradientDescent = Optimizer


class Momentum(Optimizer):
    """``a <- beta a + eta g``; ``mu <- mu - a``."""

    kind = "momentum"

    def __init__(self, stepsize: Schedule = 0.01, momentum: float = 0.9):
        self.momentum = momentum
        super().__init__(stepsize)

    def reset(self):
        super().reset()
        self.accumulation = None

    def apply_grad(self, g, x):
        a = np.zeros_like(x) if self.accumulation is None else self.accumulation
        self.accumulation = self.momentum * a + self.eta() * g
        return x - self.accumulation


class NesterovMomentum(Momentum):
    """Momentum with the gradient taken at the look-ahead point ``mu - beta a``."""

    kind = "nesterov"

    def compute_grad(self, cost, x, like):
        if self.accumulation is None:
            return super().compute_grad(cost, x, like)
        _, g = super().compute_grad(cost, x - self.momentum * self.accumulation, like)
        # the reported cost is at the current point, not the look-ahead one
        return float(np.asarray(cost(unflatten_values(x, like)))), g


class Adagrad(Optimizer):
    """``G <- G + g^2``; ``mu <- mu - eta g / (sqrt(G) + eps)``."""

    kind = "adagrad"

    def __init__(self, stepsize: Schedule = 0.01, eps: float = 1e-8):
        self.eps = eps
        super().__init__(stepsize)

    def reset(self):
        super().reset()
        self.accumulation = None

    def apply_grad(self, g, x):
        G = np.zeros_like(x) if self.accumulation is None else self.accumulation
        self.accumulation = G + g**2
        return x - self.eta() * g / (np.sqrt(self.accumulation) + self.eps)


class RMSProp(Adagrad):
    """``G <- decay G + (1 - decay) g^2``; ``mu <- mu - eta g / (sqrt(G) + eps)``."""

    kind = "rmsprop"

    def __init__(self, stepsize: Schedule = 0.01, decay: float = 0.9, eps: float = 1e-8):
        self.decay = decay
        super().__init__(stepsize, eps)

    def apply_grad(self, g, x):
        G = np.zeros_like(x) if self.accumulation is None else self.accumulation
        self.accumulation = self.decay * G + (1 - self.decay) * g**2
        return x - self.eta() * g / (np.sqrt(self.accumulation) + self.eps)


class Adam(Optimizer):
    """Bias-corrected moments: ``mu <- mu - eta m_hat / (sqrt(v_hat) + eps)``."""

    kind = "adam"

    def __init__(self, stepsize: Schedule = 0.01, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        super().__init__(stepsize)

    def reset(self):
        super().reset()
        self.fm = None
        self.sm = None

    def apply_grad(self, g, x):
        fm = np.zeros_like(x) if self.fm is None else self.fm
        sm = np.zeros_like(x) if self.sm is None else self.sm
        self.fm = self.beta1 * fm + (1 - self.beta1) * g
        self.sm = self.beta2 * sm + (1 - self.beta2) * g**2
        k = self.t + 1
        m_hat = self.fm / (1 - self.beta1**k)
        v_hat = self.sm / (1 - self.beta2**k)
        return x - self.eta() * m_hat / (np.sqrt(v_hat) + self.eps)


OPTIMIZERS = {
    cls.kind: cls for cls in (Optimizer, Momentum, NesterovMomentum, Adagrad, RMSProp, Adam)
}


def make_optimizer(kind: str, stepsize: Schedule = 0.01, **hyper) -> Optimizer:
    try:
        cls = OPTIMIZERS[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown optimizer {kind!r}; choose from {', '.join(OPTIMIZERS)}") from None
    return cls(stepsize, **hyper)
