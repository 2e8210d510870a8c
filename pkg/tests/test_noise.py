import numpy as np
import pytest

from vqdyn import circuit as qc
from vqdyn.benchmark import data_dir
from vqdyn.circuit import DensityMatrix, StateVector, apply_circuit
from vqdyn.noise import (CalibrationError, CouplerCalibration, NoiseModel,
                         QubitCalibration, amplitude_damping_kraus,
                         apply_depolarizing, apply_kraus_1q, apply_kraus_2q,
                         apply_noisy_gate, dephasing_kraus, depolarizing_kraus,
                         load_calibration, noisy_readout,
                         readout_confused_probabilities)

JAKARTA = data_dir() / "ibmq_jakarta_2021-10-10.csv"


@pytest.fixture(scope="module")
def model():
    return load_calibration(JAKARTA)


def random_rho(rng, width):
    a = rng.normal(size=(2 ** width, 2 ** width)) + 1j * rng.normal(size=(2 ** width, 2 ** width))
    m = a @ a.conj().T
    return DensityMatrix(width, m / np.trace(m))


class TestCalibration:
    def test_bundled_qubit0(self, model):
        cal = model.qubit_params(0)
        assert cal.gate_error == 0.000311
        assert cal.readout_error == 0.0465
        assert cal.t1 == 186.661
        assert cal.t2 == 37.528

    def test_bundled_pair(self, model):
        cal = model.pair_params(0, 1)
        assert cal.gate_error == 0.01106
        assert cal.gate_time == 235.0

    def test_strict_pair_lookup(self, model):
        assert model.pair_params(2, 1).gate_time == 249.0
        with pytest.raises(KeyError):
            model.pair_params(0, 2)
        with pytest.raises(KeyError):
            model.qubit_params(9)

    def test_worst_fallback(self, model):
        worst = model.with_fallback("worst").pair_params(0, 2)
        assert worst.gate_error == 0.01281  # max among pairs touching 0 or 2
        assert worst.gate_time == 284.0

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(CalibrationError):
            load_calibration(path)

    def test_physicality_violation_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("[qubits]\nid,gate_error,readout_error,t1_us,t2_us\n0,0.0,0.0,10.0,30.0\n")
        with pytest.raises(CalibrationError):
            load_calibration(path)
        with pytest.raises(CalibrationError):
            QubitCalibration(1.5, 0.0, 10.0, 10.0)


class TestChannels:
    @pytest.mark.parametrize("kraus", [
        amplitude_damping_kraus(0.3),
        dephasing_kraus(0.4),
        depolarizing_kraus(0.25, 1),
        depolarizing_kraus(0.9, 2),
    ])
    def test_kraus_completeness(self, kraus):
        total = sum(k.conj().T @ k for k in kraus)
        assert np.abs(total - np.eye(len(total))).max() < 1e-12

    def test_full_depolarizing_gives_maximally_mixed(self, rng):
        rho = random_rho(rng, 2)
        apply_depolarizing(rho, 1.0, (0,))
        # qubit 0's reduced state = I/2 (trace out qubit 1 = axes 1, 3)
        q0_red = np.trace(rho.entries.reshape(2, 2, 2, 2), axis1=1, axis2=3)
        assert np.abs(q0_red - np.eye(2) / 2).max() < 1e-12

    def test_closed_form_matches_kraus(self, rng):
        for qubits in [(0,), (1,), (0, 1), (1, 2)]:
            rho_a = random_rho(rng, 3)
            rho_b = rho_a.copy()
            p = 0.37
            apply_depolarizing(rho_a, p, qubits)
            if len(qubits) == 1:
                apply_kraus_1q(rho_b, depolarizing_kraus(p, 1), qubits[0])
            else:
                apply_kraus_2q(rho_b, depolarizing_kraus(p, 2), *qubits)
            assert np.abs(rho_a.entries - rho_b.entries).max() < 1e-13

    def test_amplitude_damping_population(self):
        # |1><1| relaxing for 235 ns at T1 = 186.661 us
        rho = DensityMatrix(1, np.diag([0.0, 1.0]).astype(complex))
        apply_kraus_1q(rho, amplitude_damping_kraus(1 - np.exp(-0.235 / 186.661)), 0)
        assert rho.entries[1, 1].real == pytest.approx(np.exp(-0.235 / 186.661), abs=1e-12)
        assert rho.entries[1, 1].real == pytest.approx(0.998742, abs=1e-6)

    def test_dephasing_scales_coherence_exactly(self):
        rho = DensityMatrix(1, np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex))
        apply_kraus_1q(rho, dephasing_kraus(0.3), 0)
        assert rho.entries[0, 1].real == pytest.approx(0.5 * 0.7, abs=1e-14)


class TestNoisyGates:
    def test_zero_noise_is_ideal(self):
        quiet = NoiseModel(
            {q: QubitCalibration(0.0, 0.0, 1e12, 1e12) for q in range(3)},
            {(a, b): CouplerCalibration((a, b), 0.0, 1.0)
             for a in range(3) for b in range(3) if a != b},
        )
        gates = [qc.h(0), qc.crx(0.8, 0, 1), qc.cnot(1, 2), qc.ry(0.3, 2)]
        ideal = apply_circuit(DensityMatrix(3), list(gates))
        noisy = DensityMatrix(3)
        for g in gates:
            apply_noisy_gate(noisy, g, quiet)
        assert np.abs(ideal.entries - noisy.entries).max() < 1e-12

    def test_trace_and_positivity_after_noisy_circuit(self, model, rng):
        worst = model.with_fallback("worst")
        rho = DensityMatrix(3)
        gates = [qc.h(0), qc.ry(0.7, 1), qc.cnot(0, 1), qc.crx(1.1, 1, 2),
                 qc.pauli("XY", (0, 2)).controlled(1, 0), qc.rz(0.4, 2)]
        for g in gates * 4:
            apply_noisy_gate(rho, g, worst)
        assert abs(rho.trace() - 1.0) < 1e-10
        eigs = np.linalg.eigvalsh(rho.entries)
        assert eigs.min() > -1e-9
        assert np.abs(rho.entries - rho.entries.conj().T).max() < 1e-12

    def test_purity_never_increases_under_noise_only(self, model, rng):
        rho = random_rho(rng, 2)
        purity = rho.purity()
        for _ in range(10):
            for q in (0, 1):
                from vqdyn.noise import _thermal_relaxation
                _thermal_relaxation(rho, q, model.qubit_params(q), 100.0)
            apply_depolarizing(rho, 0.02, (0, 1))
            new_purity = rho.purity()
            assert new_purity <= purity + 1e-12
            purity = new_purity

    def test_uncovered_qubit_raises(self, model):
        with pytest.raises(KeyError):
            apply_noisy_gate(DensityMatrix(8), qc.x(7), model)


class TestReadout:
    def test_confusion_anchor(self, model):
        rho = DensityMatrix(1)  # p0 = 1
        assert noisy_readout(rho, 0, model, shots=0) == pytest.approx((0.9535, 0.0465))

    def test_zero_error_matches_ideal(self, model):
        state = apply_circuit(StateVector(1), [qc.ry(0.9, 0)])
        rho = DensityMatrix.from_statevector(state)
        quiet = NoiseModel({0: QubitCalibration(0.0, 0.0, 1.0, 1.0)}, {})
        assert noisy_readout(rho, 0, quiet, shots=0) == pytest.approx(
            qc.measure_qubit(state, 0, shots=0))

    def test_midpoint_fixed_point(self, model):
        state = apply_circuit(StateVector(1), [qc.h(0)])
        rho = DensityMatrix.from_statevector(state)
        p0, p1 = noisy_readout(rho, 0, model, shots=0)
        assert p0 == pytest.approx(0.5, abs=1e-12)

    def test_joint_confusion_normalized(self, model, rng):
        probs = rng.dirichlet(np.ones(8))
        out = readout_confused_probabilities(probs, model, 3)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)
        assert out.min() >= 0
