from __future__ import annotations

import numpy as np
import pytest
from helpers import make_circuit1

import qhybrid as qh
from qhybrid import autodiff as ad
from qhybrid.optimize import OPTIMIZERS

# first three iterates on f(mu) = mu^2 from mu = 1 with stepsize 0.1 and
# default remaining hyperparameters, worked out from the textbook update rules
REFERENCE = {
    "gd": [0.8, 0.64, 0.512],
    "momentum": [0.8, 0.46, 0.062],
    "nesterov": [0.8, 0.496, 0.17792],
    "adagrad": [0.9000000005, 0.8331035275658407, 0.7804561822187429],
    "rmsprop": [0.683772238983162, 0.498870613507054, 0.36918056029155977],
    "adam": [0.9000000005, 0.8004122286917927, 0.70158627294603],
}


def square(mu):
    return mu**2


@pytest.mark.parametrize("kind", sorted(REFERENCE))
def test_reference_steps(kind):
    opt = qh.make_optimizer(kind, 0.1)
    mu = 1.0
    for expected in REFERENCE[kind]:
        mu = opt.step(square, mu)
        assert abs(mu - expected) < 1e-9


def test_six_kinds():
    assert sorted(OPTIMIZERS) == sorted(REFERENCE)


def test_defaults():
    assert qh.GradientDescent().stepsize == 0.01
    assert qh.Momentum().momentum == 0.9
    assert qh.NesterovMomentum().momentum == 0.9
    assert qh.Adagrad().eps == 1e-8
    r = qh.RMSProp()
    assert (r.decay, r.eps) == (0.9, 1e-8)
    a = qh.Adam()
    assert (a.beta1, a.beta2, a.eps) == (0.9, 0.999, 1e-8)


def test_gd_bitwise():
    opt = qh.GradientDescent(0.37)
    for mu in (1.0, -0.3, 2.5):
        assert opt.step(square, mu) == mu - 0.37 * (2 * mu)


def test_adam_first_step():
    assert abs(qh.Adam(0.1).step(square, 1.0) - 0.9) < 1e-9


def test_step_and_cost():
    new, cost = qh.GradientDescent(0.1).step_and_cost(square, 1.0)
    assert (new, cost) == (0.8, 1.0)


def test_step_and_cost_matches_step():
    x = np.array([0.3, -1.2])
    f = lambda x: ad.sum(ad.sin(x) * x)
    for kind in REFERENCE:
        a = qh.make_optimizer(kind, 0.05)
        b = qh.make_optimizer(kind, 0.05)
        xa = xb = x
        for _ in range(3):
            xa = a.step(f, xa)
            xb, _ = b.step_and_cost(f, xb)
        np.testing.assert_array_equal(xa, xb)


def test_constant_cost():
    new, cost = qh.Adam(0.1).step_and_cost(lambda x: 2.0, np.array([1.0, 2.0]))
    np.testing.assert_array_equal(new, [1.0, 2.0])
    assert cost == 2.0


def test_structure_preserved():
    def cost(params):
        bias, w = params
        return (bias - 1) ** 2 + ad.sum(w**2)

    params = (0.0, np.array([[1.0, 2.0]]))
    new = qh.Adam(0.1).step(cost, params)
    assert isinstance(new, tuple) and np.shape(new[1]) == (1, 2)
    assert new[0] > 0 and np.all(np.abs(new[1]) < np.abs(params[1]))


@pytest.mark.parametrize("kind", sorted(REFERENCE))
def test_descent_on_bowl(kind, rng):
    bowl = lambda x: ad.sum(x**2)
    for _ in range(5):
        x = rng.uniform(-1, 1, 5)
        opt = qh.make_optimizer(kind)
        start = float(np.sum(x**2))
        for _ in range(50):
            x = opt.step(bowl, x)
        assert float(np.sum(x**2)) < start


def test_schedule_hook():
    opt = qh.GradientDescent(lambda t: 0.1 / (t + 1))
    mu = opt.step(square, 1.0)
    assert mu == pytest.approx(0.8)
    assert opt.step(square, mu) == pytest.approx(mu - 0.05 * 2 * mu)


def test_invalid_stepsize():
    with pytest.raises(ValueError):
        qh.GradientDescent(0.0)
    with pytest.raises(ValueError):
        qh.make_optimizer("lbfgs")


def test_qubit_flip(dev1):
    c = make_circuit1(dev1)
    cost = lambda p: c(p[0], p[1])
    opt = qh.GradientDescent(0.4)
    p = np.array([0.011, 0.012])
    for _ in range(100):
        p = opt.step(cost, p)
    assert cost(p) < -0.999
