from __future__ import annotations

import numpy as np
import pytest
from helpers import PipelineLogger

import qhybrid as qh
from qhybrid.devices import (
    DefaultQubit, DeviceDescriptor, api_compatible, register_device, sample_basis_states,
    unregister_device,
)
from qhybrid.devices.default_qubit import apply_gate, marginal_probability, zero_state
from qhybrid.ir import build_tape


def tape(ops, meas, n=1):
    return build_tape(ops, meas, n)


class TestRegistry:
    def test_builtin_devices(self):
        names = [d.short_name for d in qh.list_devices()]
        assert {"default.qubit", "default.gaussian"} <= set(names)

    def test_load(self):
        dev = qh.load_device("default.qubit", 2, 0)
        assert dev.num_wires == 2 and dev.analytic and dev.model == "qubit"
        assert qh.load_device("default.gaussian", 2).capabilities["model"] == "CV"

    def test_fresh_instances(self):
        assert qh.device("default.qubit", 1) is not qh.device("default.qubit", 1)

    def test_unknown(self):
        with pytest.raises(qh.UnknownDevice):
            qh.load_device("no.such", 1, 0)

    def test_duplicate(self):
        with pytest.raises(qh.DuplicateShortName):
            register_device(DefaultQubit)

    def test_register_plugin(self):
        class MyDevice(DefaultQubit):
            short_name = "example.mydevice"

        try:
            register_device(MyDevice)
            assert "example.mydevice" in [d.short_name for d in qh.list_devices()]
            assert isinstance(qh.load_device("example.mydevice", 1), MyDevice)
        finally:
            unregister_device("example.mydevice")

    def test_incompatible_api(self):
        class Future(DefaultQubit):
            short_name = "example.future"
            api_version = "0.2.0"

        try:
            register_device(Future)
            with pytest.raises(qh.IncompatibleApiVersion):
                qh.load_device("example.future", 1)
        finally:
            unregister_device("example.future")

    def test_api_ranges(self):
        assert api_compatible("0.1.0", "0.1.3")
        assert not api_compatible("0.2.0", "0.1.3")
        assert not api_compatible("0.1.4", "0.1.3")
        assert api_compatible("1.0", "1.4")
        assert not api_compatible("1.0", "2.0")
        assert api_compatible(">=0.1,<0.3", "0.2.5")

    def test_descriptor_rules(self):
        with pytest.raises(ValueError):
            DeviceDescriptor("x", "nodot", "0.1", "0.1", "a", {"model": "qubit"})
        with pytest.raises(ValueError):
            DeviceDescriptor("x", "a.b", "0.1", "0.1", "a", {})

    def test_bad_wires(self):
        with pytest.raises(qh.DeviceError):
            qh.load_device("default.qubit", 0)


class TestCheckValidity:
    def test_ok(self, dev2):
        dev2.check_validity(tape([qh.RX(0.1, wires=0), qh.CNOT(wires=[0, 1])], [qh.expval(qh.PauliZ(0))], 2))

    def test_cv_gate_on_qubit_device(self, dev1):
        with pytest.raises(qh.UnsupportedOperation) as err:
            dev1.check_validity(tape([qh.Displacement(0.1, 0.0, wires=0)], [qh.expval(qh.PauliZ(0))]))
        assert err.value.name == "Displacement"

    def test_unsupported_observable(self, dev1):
        with pytest.raises(qh.UnsupportedObservable):
            dev1.check_validity(tape([], [qh.expval(qh.X(0))]))

    def test_too_many_wires(self, dev2):
        with pytest.raises(qh.TooManyWires):
            dev2.execute(tape([qh.Hadamard(wires=2)], [qh.expval(qh.PauliZ(0))], 3))


class TestExecute:
    def test_flip(self, dev1):
        np.testing.assert_allclose(dev1.execute(tape([qh.RX(np.pi, wires=0)], [qh.expval(qh.PauliZ(0))])), [-1.0])

    def test_ground_state(self, dev1):
        assert dev1.execute(tape([], [qh.expval(qh.PauliZ(0))])).tolist() == [1.0]

    def test_sample_needs_shots(self, dev1):
        with pytest.raises(qh.SampleRequiresShots):
            dev1.execute(tape([], [qh.sample(qh.PauliZ(0))]))

    def test_state_reset_between_executes(self, dev1):
        t = tape([qh.PauliX(wires=0)], [qh.expval(qh.PauliZ(0))])
        assert dev1.execute(t)[0] == dev1.execute(t)[0] == -1.0

    def test_results_follow_measurement_order(self, dev2):
        t = tape([qh.PauliX(wires=1)], [qh.expval(qh.PauliZ(1)), qh.expval(qh.PauliZ(0))], 2)
        assert dev2.execute(t).tolist() == [-1.0, 1.0]

    def test_deterministic_analytic(self, dev2, rng):
        ops = [qh.Rot(*rng.normal(size=3), wires=0), qh.CNOT(wires=[0, 1]), qh.RY(0.3, wires=1)]
        t = tape(ops, [qh.expval(qh.PauliX(0) @ qh.PauliY(1))], 2)
        assert dev2.execute(t).tobytes() == dev2.execute(t).tobytes()

    def test_execution_counter(self, dev1):
        t = tape([], [qh.expval(qh.PauliZ(0))])
        dev1.execute(t)
        dev1.execute(t)
        assert dev1.num_executions == 2


class TestPipelineOrder:
    def test_analytic(self):
        dev = PipelineLogger(1)
        dev.execute(tape([qh.RX(0.2, wires=0)], [qh.expval(qh.PauliX(0))]))
        assert dev.log == ["check_validity", "reset", ("apply", ["RX"], ["Hadamard"]), "statistics"]

    def test_sampled(self):
        dev = PipelineLogger(2, shots=10, seed=1)
        dev.execute(tape([qh.RX(0.2, wires=0)], [qh.sample(qh.PauliY(0)), qh.expval(qh.PauliZ(1))], 2))
        assert dev.log == [
            "check_validity", "reset", ("apply", ["RX"], ["PauliZ", "S", "Hadamard"]),
            "generate_samples", "statistics",
        ]

    def test_invalid_stops_early(self):
        dev = PipelineLogger(1)
        with pytest.raises(qh.UnsupportedOperation):
            dev.execute(tape([qh.Rotation(0.1, wires=0)], [qh.expval(qh.PauliZ(0))]))
        assert dev.log == ["check_validity"]


class TestStatistics:
    def test_expval_ground(self, dev1):
        assert dev1.execute(tape([], [qh.expval(qh.PauliZ(0))]))[0] == 1.0

    def test_var_plus(self, dev1):
        np.testing.assert_allclose(dev1.execute(tape([qh.Hadamard(wires=0)], [qh.var(qh.PauliZ(0))])), [1.0])

    def test_var_ground(self, dev1):
        assert dev1.execute(tape([], [qh.var(qh.PauliZ(0))]))[0] == 0.0

    @pytest.mark.parametrize("shots", [3, 4])
    def test_sample_deterministic(self, shots):
        dev = qh.device("default.qubit", 1, shots=shots, seed=0)
        out = dev.execute(tape([qh.PauliX(wires=0)], [qh.sample(qh.PauliZ(0))]))
        assert out[0].tolist() == [-1.0] * shots

    def test_sample_with_expval_mixture(self):
        dev = qh.device("default.qubit", 2, shots=5, seed=0)
        out = dev.execute(tape([qh.PauliX(wires=1)], [qh.sample(qh.PauliZ(1)), qh.expval(qh.PauliZ(0))], 2))
        assert out[0].tolist() == [-1.0] * 5 and out[1] == 1.0

    def test_hermitian_expval(self, dev1):
        out = dev1.execute(tape([], [qh.expval(qh.Hermitian(np.diag([2.0, 5.0]), wires=0))]))
        np.testing.assert_allclose(out, [2.0])

    def test_shared_batch(self):
        # expval and var from the same batch agree with each other exactly
        dev = qh.device("default.qubit", 2, shots=50, seed=3)
        t = tape([qh.Hadamard(wires=0), qh.CNOT(wires=[0, 1])], [qh.expval(qh.PauliZ(0)), qh.expval(qh.PauliZ(1))], 2)
        a, b = dev.execute(t)
        assert a == b

    def test_estimator_variance(self):
        dev = qh.device("default.qubit", 1, shots=200, seed=11)
        t = tape([qh.RY(1.0, wires=0)], [qh.expval(qh.PauliZ(0))])
        means = np.array([dev.execute(t)[0] for _ in range(400)])
        exact = np.cos(1.0)
        var_b = 1 - exact**2
        assert abs(means.mean() - exact) < 5 * np.sqrt(var_b / 200 / 400)
        assert 0.7 < means.var(ddof=1) / (var_b / 200) < 1.4


class TestStatevector:
    def test_x(self):
        s = apply_gate(zero_state(1), qh.PauliX(wires=0))
        np.testing.assert_allclose(s.reshape(-1), [0, 1])

    def test_bell(self):
        s = apply_gate(apply_gate(zero_state(2), qh.Hadamard(wires=0)), qh.CNOT(wires=[0, 1]))
        np.testing.assert_allclose(s.reshape(-1), np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_rx_pi(self):
        s = apply_gate(zero_state(1), qh.RX(np.pi, wires=0))
        np.testing.assert_allclose(s.reshape(-1), [0, -1j], atol=1e-15)

    def test_wire_order_matches_kron(self, rng):
        # wire 0 is the most significant bit
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        U, _ = np.linalg.qr(A)
        state = rng.normal(size=8) + 1j * rng.normal(size=8)
        state /= np.linalg.norm(state)
        out = apply_gate(state.reshape(2, 2, 2), qh.QubitUnitary(U, wires=1)).reshape(-1)
        np.testing.assert_allclose(out, np.kron(np.kron(np.eye(2), U), np.eye(2)) @ state)

    def test_cnot_reversed_wires(self):
        s = apply_gate(apply_gate(zero_state(2), qh.PauliX(wires=1)), qh.CNOT(wires=[1, 0]))
        np.testing.assert_allclose(s.reshape(-1), [0, 0, 0, 1])

    def test_decomposition_fallback(self):
        s = apply_gate(zero_state(3), qh.BasisState(np.array([1, 0, 1]), wires=[0, 1, 2]))
        assert np.argmax(np.abs(s.reshape(-1))) == 0b101

    def test_basis_state_must_be_first(self):
        dev = qh.device("default.qubit", 1)
        t = tape([qh.Hadamard(wires=0), qh.BasisState(np.array([1]), wires=[0])], [qh.expval(qh.PauliZ(0))])
        with pytest.raises(qh.DeviceError):
            dev.execute(t)

    def test_norm_preserved_random_circuits(self, rng):
        gates1 = [qh.Hadamard, qh.S, qh.T, qh.PauliY]
        rot = [qh.RX, qh.RY, qh.RZ, qh.PhaseShift]
        for _ in range(30):
            n = int(rng.integers(1, 7))
            s = zero_state(n)
            for _ in range(20):
                k = rng.integers(4)
                w = int(rng.integers(n))
                if k == 0 and n > 1:
                    a, b = rng.choice(n, 2, replace=False)
                    g = (qh.CNOT if rng.random() < 0.5 else qh.CZ)(wires=[int(a), int(b)])
                elif k == 1:
                    g = gates1[rng.integers(4)](wires=w)
                elif k == 2:
                    g = qh.Rot(*rng.uniform(0, 2 * np.pi, 3), wires=w)
                else:
                    g = rot[rng.integers(4)](rng.uniform(0, 2 * np.pi), wires=w)
                s = apply_gate(s, g)
            assert abs(np.linalg.norm(s) - 1) < 1e-9


class TestMarginals:
    def bell(self):
        return np.array([1, 0, 0, 1], dtype=complex).reshape(2, 2) / np.sqrt(2)

    def test_ground(self):
        np.testing.assert_allclose(marginal_probability(zero_state(1), [0]), [1, 0])

    def test_bell_one_wire(self):
        np.testing.assert_allclose(marginal_probability(self.bell(), [0]), [0.5, 0.5])

    def test_bell_both(self):
        np.testing.assert_allclose(marginal_probability(self.bell(), [0, 1]), [0.5, 0, 0, 0.5])

    def test_requested_order(self):
        s = apply_gate(zero_state(2), qh.PauliX(wires=1))  # |01>
        np.testing.assert_allclose(marginal_probability(s, [0, 1]), [0, 1, 0, 0])
        np.testing.assert_allclose(marginal_probability(s, [1, 0]), [0, 0, 1, 0])

    def test_out_of_range(self):
        with pytest.raises(qh.WireOutOfRange):
            marginal_probability(zero_state(2), [2])

    def test_full_marginal_exact(self, rng):
        s = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
        s /= np.linalg.norm(s)
        assert np.array_equal(marginal_probability(s, [0, 1, 2]), (np.abs(s) ** 2).reshape(-1))


class TestSampling:
    def test_deterministic_distribution(self):
        assert sample_basis_states([1.0, 0.0], 5, 0).tolist() == [0] * 5

    def test_fair_coin(self):
        draws = sample_basis_states([0.5, 0.5], 10000, 7)
        assert abs(np.mean(draws == 0) - 0.5) < 0.025

    def test_seeded(self):
        a = sample_basis_states([0.3, 0.7], 100, 42)
        b = sample_basis_states([0.3, 0.7], 100, 42)
        assert np.array_equal(a, b)

    def test_invalid(self):
        with pytest.raises(qh.InvalidDistribution):
            sample_basis_states([0.5, 0.6], 10, 0)
        with pytest.raises(qh.InvalidDistribution):
            sample_basis_states([-0.1, 1.1], 10, 0)

    def test_seeded_device(self):
        t = tape([qh.Hadamard(wires=0)], [qh.sample(qh.PauliZ(0))])
        a = qh.device("default.qubit", 1, shots=20, seed=5).execute(t)
        b = qh.device("default.qubit", 1, shots=20, seed=5).execute(t)
        assert np.array_equal(a, b)

    def test_exact_vs_sampled(self, rng):
        for _ in range(5):
            ops = [qh.Rot(*rng.uniform(0, 2 * np.pi, 3), wires=0), qh.CNOT(wires=[0, 1]),
                   qh.RY(rng.uniform(0, 2 * np.pi), wires=1)]
            t = tape(ops, [qh.expval(qh.PauliZ(0) @ qh.PauliX(1))], 2)
            exact = qh.device("default.qubit", 2).execute(t)[0]
            R = 100_000
            est = qh.device("default.qubit", 2, shots=R, seed=int(rng.integers(1 << 30))).execute(t)[0]
            sd = np.sqrt(max(1 - exact**2, 1e-12) / R)
            assert abs(est - exact) < 5 * sd + 1e-12


class TestClosedForm:
    def test_fig4_grid(self, dev1):
        for p1 in np.linspace(0, 2 * np.pi, 10, endpoint=False):
            for p2 in np.linspace(0, 2 * np.pi, 10, endpoint=False):
                t = tape([qh.RX(p1, wires=0), qh.RY(p2, wires=0)], [qh.expval(qh.PauliZ(0))])
                assert abs(dev1.execute(t)[0] - np.cos(p1) * np.cos(p2)) < 1e-10

    def test_fig4_point(self, dev1):
        t = tape([qh.RX(0.3, wires=0), qh.RY(0.7, wires=0)], [qh.expval(qh.PauliZ(0))])
        assert dev1.execute(t)[0] == pytest.approx(0.7306817, abs=1e-7)

    def test_bell_correlation(self, dev2):
        t = tape([qh.Hadamard(wires=0), qh.CNOT(wires=[0, 1])], [qh.expval(qh.PauliZ(0) @ qh.PauliZ(1))], 2)
        np.testing.assert_allclose(dev2.execute(t), [1.0])

    def test_hadamard_observable(self, dev1):
        # RY(pi/4)|0> is the +1 eigenvector of H; H|0> = |+> gives 1/sqrt(2)
        t = tape([qh.RY(np.pi / 4, wires=0)], [qh.expval(qh.Hadamard(0))])
        np.testing.assert_allclose(dev1.execute(t), [1.0])
        t = tape([qh.Hadamard(wires=0)], [qh.expval(qh.Hadamard(0))])
        np.testing.assert_allclose(dev1.execute(t), [1 / np.sqrt(2)])

    def test_tensor_vs_dense(self, dev2, rng):
        ops = [qh.Rot(*rng.normal(size=3), wires=0), qh.CNOT(wires=[0, 1]), qh.Rot(*rng.normal(size=3), wires=1)]
        obs = qh.PauliY(0) @ qh.PauliX(1)
        dev2.execute(tape(ops, [qh.expval(qh.PauliZ(0))], 2))
        psi = dev2.state.copy()
        t = tape(ops, [qh.expval(obs)], 2)
        np.testing.assert_allclose(dev2.execute(t)[0], np.real(psi.conj() @ obs.matrix @ psi), atol=1e-12)
