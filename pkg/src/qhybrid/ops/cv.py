"""Gaussian continuous-variable gates and quadrature observables.

Convention: hbar = 2, so ``x = a + a^dagger`` and the vacuum covariance is
the identity. Heisenberg matrices act on the local basis
``r = (I, x_0, p_0, x_1, p_1, ...)`` of the wires a gate touches and give the
adjoint action ``U^dagger r U = M r``.
"""
from __future__ import annotations

import numpy as np

from ..exceptions import InvalidParameter
from ..ir import GradMethod, ObservableDef, OperationDef, ParamDomain, two_term_recipe

HBAR = 2.0

# first-order shift for parameters entering linearly
_LINEAR_SHIFT = 0.1
# squeezing magnitudes enter through cosh/sinh
_SQ_SHIFT = 0.1


def _rotation(phi, bare=False):
    c, s = np.cos(phi), np.sin(phi)
    if bare:
        return np.array([[c, -s], [s, c]])
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def displacement_rep(r, phi):
    return np.array([
        [1, 0, 0],
        [2 * r * np.cos(phi), 1, 0],
        [2 * r * np.sin(phi), 0, 1],
    ], dtype=float)


def rotation_rep(phi):
    return _rotation(phi)


def squeezing_rep(r, phi):
    R = _rotation(phi / 2)
    return R @ np.diag([1, np.exp(-r), np.exp(r)]) @ R.T


def beamsplitter_rep(theta, phi):
    R = _rotation(phi, bare=True)
    c, s = np.cos(theta), np.sin(theta)
    U = c * np.eye(5)
    U[0, 0] = 1
    U[1:3, 3:5] = -s * R.T
    U[3:5, 1:3] = s * R
    return U


def two_mode_squeezing_rep(r, phi):
    R = _rotation(phi, bare=True)
    S = np.sinh(r) * np.diag([1, -1])
    U = np.cosh(r) * np.eye(5)
    U[0, 0] = 1
    U[1:3, 3:5] = S @ R.T
    U[3:5, 1:3] = S @ R.T
    return U


def quadratic_phase_rep(s):
    U = np.eye(3)
    U[2, 1] = s
    return U


def _cv(name, num_params, num_wires, rep, grad_method=GradMethod.ANALYTIC, recipe=None):
    return OperationDef(
        name, num_params, num_wires,
        grad_method=grad_method, grad_recipe=recipe, heisenberg_fn=rep, model="cv",
    )


Displacement = _cv(
    "Displacement", 2, 1, displacement_rep,
    recipe=(two_term_recipe(0.5 / _LINEAR_SHIFT, _LINEAR_SHIFT), None),
)
Rotation = _cv("Rotation", 1, 1, rotation_rep)
Squeezing = _cv(
    "Squeezing", 2, 1, squeezing_rep,
    recipe=(two_term_recipe(0.5 / np.sinh(_SQ_SHIFT), _SQ_SHIFT), None),
)
Beamsplitter = _cv("Beamsplitter", 2, 2, beamsplitter_rep)
TwoModeSqueezing = _cv("TwoModeSqueezing", 2, 2, two_mode_squeezing_rep, GradMethod.FINITE_DIFF)
QuadraticPhase = _cv("QuadraticPhase", 1, 1, quadratic_phase_rep, GradMethod.FINITE_DIFF)

CV_OPERATIONS = {
    op.name: op
    for op in (Displacement, Rotation, Squeezing, Beamsplitter, TwoModeSqueezing, QuadraticPhase)
}


# observables -------------------------------------------------------------------
# heisenberg_fn returns (order, rep) on the observable's local basis

def _poly_rep(q):
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        return 1, q
    if q.ndim == 2 and q.shape[0] == q.shape[1]:
        if not np.allclose(q, q.T):
            raise InvalidParameter("second-order PolyXP coefficients must be symmetric")
        return 2, q
    raise InvalidParameter(f"PolyXP expects a vector or square matrix, got shape {q.shape}")


def _cv_obs(name, num_wires, fn, num_params=0, par_domain=ParamDomain.NONE):
    return ObservableDef(
        name, num_wires, num_params=num_params, par_domain=par_domain,
        heisenberg_fn=fn, model="cv",
    )


X = _cv_obs("X", 1, lambda: (1, np.array([0.0, 1.0, 0.0])))
P = _cv_obs("P", 1, lambda: (1, np.array([0.0, 0.0, 1.0])))
QuadOperator = _cv_obs(
    "QuadOperator", 1, lambda phi: (1, np.array([0.0, np.cos(phi), np.sin(phi)])),
    num_params=1, par_domain=ParamDomain.REAL,
)
# n = (x^2 + p^2) / (2 hbar) - 1/2
NumberOperator = _cv_obs(
    "NumberOperator", 1,
    lambda: (2, np.diag([-0.5, 1 / (2 * HBAR), 1 / (2 * HBAR)])),
)
PolyXP = _cv_obs("PolyXP", None, _poly_rep, num_params=1, par_domain=ParamDomain.ARRAY)

CV_OBSERVABLES = {o.name: o for o in (X, P, QuadOperator, NumberOperator, PolyXP)}
