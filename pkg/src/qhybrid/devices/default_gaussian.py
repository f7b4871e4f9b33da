"""Gaussian continuous-variable simulator, ``default.gaussian`` (hbar = 2).

The state is a mean vector ordered ``(x_0, p_0, x_1, p_1, ...)`` and the
symmetrized covariance matrix; the vacuum has zero means and identity
covariance. A gate with Heisenberg matrix ``[[1, 0], [d, S]]`` maps
``means -> S means + d`` and ``cov -> S cov S^T``.

With ``shots > 0`` the first-order observables of a circuit are sampled
jointly from their Gaussian marginal. Second-order observables are always
evaluated exactly and cannot be sampled.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from ..exceptions import DeviceError, NotGaussian
from ..ir import GateApplication
from ..ops.cv import CV_OBSERVABLES, CV_OPERATIONS, HBAR
from .base import Device


def symplectic_form(num_modes: int) -> np.ndarray:
    return np.kron(np.eye(num_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _quad_indices(wires) -> np.ndarray:
    return np.array([[2 * w, 2 * w + 1] for w in wires], dtype=int).reshape(-1)


@dataclass
class GaussianState:
    means: np.ndarray
    cov: np.ndarray

    @classmethod
    def vacuum(cls, num_modes: int) -> "GaussianState":
        return cls(np.zeros(2 * num_modes), np.eye(2 * num_modes) * HBAR / 2)

    @property
    def num_modes(self) -> int:
        return len(self.means) // 2

    def reduced(self, wires):
        idx = _quad_indices(wires)
        return self.means[idx], self.cov[np.ix_(idx, idx)]


def heisenberg_rep(g: GateApplication) -> np.ndarray:
    """Matrix of ``U^dagger (.) U`` on the local basis ``(I, x_0, p_0, ...)``."""
    if g.op.heisenberg_fn is None:
        raise NotGaussian(f"{g.name} is not a Gaussian operation")
    return np.asarray(g.op.heisenberg_fn(*g.parameters), dtype=float)


def apply_gaussian(state: GaussianState, g: GateApplication) -> GaussianState:
    H = heisenberg_rep(g)
    idx = _quad_indices(g.wires)
    S_local, d_local = H[1:, 1:], H[1:, 0]
    n = len(state.means)
    S = np.eye(n)
    S[np.ix_(idx, idx)] = S_local
    d = np.zeros(n)
    d[idx] = d_local
    return GaussianState(S @ state.means + d, S @ state.cov @ S.T)


def cv_expval(state: GaussianState, order: int, rep: np.ndarray, wires) -> float:
    """Expectation of an observable given by its coefficients on ``(I, x, p, ...)`` of ``wires``."""
    m, C = state.reduced(wires)
    if order == 1:
        return float(rep[0] + rep[1:] @ m)
    mext = np.concatenate([[1.0], m])
    Cext = np.zeros((len(mext), len(mext)))
    Cext[1:, 1:] = C
    return float(np.sum(rep * (Cext + np.outer(mext, mext))))


def cv_var(state: GaussianState, order: int, rep: np.ndarray, wires) -> float:
    m, C = state.reduced(wires)
    if order == 1:
        b = rep[1:]
        return float(b @ C @ b)
    A = rep[1:, 1:]
    b = rep[1:, 0]
    W = symplectic_form(len(wires))
    lin = A @ m + b
    return float(
        2 * np.trace(A @ C @ A @ C)
        + (HBAR**2 / 2) * np.trace(A @ W @ A @ W)
        + 4 * lin @ C @ lin
    )


class DefaultGaussian(Device):
    name = "Default Gaussian simulator"
    short_name = "default.gaussian"
    version = "0.1.0"
    author = "qhybrid"
    operations = frozenset(CV_OPERATIONS)
    observables = frozenset(CV_OBSERVABLES)
    capabilities = MappingProxyType({"model": "CV", "provides_jacobian": False})

    def __init__(self, wires, shots=0, seed=None):
        super().__init__(wires, shots, seed)
        self.reset()

    def reset(self):
        self.state = GaussianState.vacuum(self.num_wires)
        self._sample_columns = {}

    def apply(self, operations, rotations=()):
        for g in list(operations) + list(rotations):
            self.state = apply_gaussian(self.state, g)

    def generate_samples(self):
        first_order = [
            m.obs for m in self._circuit.measurements if m.obs.heisenberg_rep()[0] == 1
        ]
        if not first_order:
            return np.empty((self.shots, 0))
        n = 2 * self.num_wires
        B = np.zeros((len(first_order), n))
        c = np.zeros(len(first_order))
        for row, obs in enumerate(first_order):
            _, rep = obs.heisenberg_rep()
            B[row, _quad_indices(obs.wires)] = rep[1:]
            c[row] = rep[0]
        mean = B @ self.state.means + c
        cov = B @ self.state.cov @ B.T
        self._sample_columns = {id(obs): i for i, obs in enumerate(first_order)}
        return self.rng.multivariate_normal(mean, cov, size=self.shots, method="eigh")

    def _sampled(self, obs):
        if self._samples is None:
            return None
        col = self._sample_columns.get(id(obs))
        return None if col is None else self._samples[:, col]

    def expval(self, obs):
        s = self._sampled(obs)
        if s is not None:
            return float(np.mean(s))
        order, rep = obs.heisenberg_rep()
        return cv_expval(self.state, order, rep, obs.wires)

    def var(self, obs):
        s = self._sampled(obs)
        if s is not None:
            return float(np.var(s))
        order, rep = obs.heisenberg_rep()
        return cv_var(self.state, order, rep, obs.wires)

    def sample(self, obs):
        s = self._sampled(obs)
        if s is None:
            raise DeviceError(f"{obs.name} is second order and cannot be sampled")
        return s
