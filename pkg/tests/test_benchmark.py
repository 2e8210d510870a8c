import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import REF_FINALS_HCP
from vqdyn.benchmark import (deviation, final_probabilities, integrate_tdse,
                             read_golden, write_golden)
from vqdyn.model import IR, SR, BasisSet, LaserPulse, hamiltonian_at

HCP = LaserPulse(omega=0.06)


class TestIntegration:
    def test_h2_reference(self):
        probs = final_probabilities(BasisSet.preset("h2"), HCP)
        assert probs == pytest.approx(REF_FINALS_HCP["h2"], abs=1e-5)

    def test_zero_field_stationary(self, h4_basis):
        times, amps = integrate_tdse(h4_basis, LaserPulse(e0=0.0), t_end=200.0,
                                     t_eval=np.linspace(0, 200, 21),
                                     c0=np.array([0.6, 0.8j, 0, 0]), rtol=1e-10)
        probs = np.abs(amps) ** 2
        assert np.abs(probs - probs[0]).max() < 1e-12

    def test_norm_drift(self):
        for preset in ("h2", "h4", "h8", "h16"):
            _, amps = integrate_tdse(BasisSet.preset(preset), HCP, t_end=200.0,
                                     t_eval=np.linspace(0, 200, 41))
            norms = np.linalg.norm(amps, axis=1)
            assert np.abs(norms - 1.0).max() < 1e-9

    def test_sr_ir_gauge_equivalence(self, h4_basis):
        p_sr = final_probabilities(h4_basis, HCP, rep=SR)
        p_ir = final_probabilities(h4_basis, HCP, rep=IR)
        assert np.abs(p_sr - p_ir).max() < 1e-8

    def test_tolerance_robustness(self):
        for preset, omega in [("h2", 0.06), ("h4", 0.06), ("h4", 0.222),
                              ("h8", 0.06), ("h8", 0.222), ("h16", 0.06), ("h16", 0.222)]:
            basis = BasisSet.preset(preset)
            pulse = LaserPulse(omega=omega)
            loose = final_probabilities(basis, pulse)
            tight = final_probabilities(basis, pulse, atol=1e-14, rtol=1e-8)
            assert np.abs(loose - tight).max() < 1e-8, (preset, omega)

    def test_matrix_exponential_oracle(self, h4_basis):
        """Frozen h: the integrator matches expm stepping on a 0.01 grid.

        A tau >> t_end pulse with omega = 0 keeps F(t) constant to ~1e-24,
        so the integrator sees a fixed matrix through its normal interface.
        """
        dt, t_end = 0.01, 5.0
        frozen_pulse = LaserPulse(e0=0.1, tau=1e12, t0=0.0, omega=0.0)
        h = hamiltonian_at(h4_basis, frozen_pulse, 0.0).entries

        c = np.zeros(4, dtype=complex)
        c[0] = 1.0
        u = expm(-1j * dt * h)
        for _ in range(int(round(t_end / dt))):
            c = u @ c

        _, amps = integrate_tdse(h4_basis, frozen_pulse, t_end=t_end,
                                 t_eval=np.arange(0.0, t_end + dt / 2, dt))
        assert np.abs(amps[-1] - c).max() < 1e-8

    def test_invalid_tolerances(self, h4_basis):
        with pytest.raises(ValueError):
            integrate_tdse(h4_basis, HCP, atol=0.0)


class TestDeviation:
    def test_identity(self):
        p = np.array([0.4, 0.6])
        assert np.all(deviation(p, p).deviations_percent == 0.0)

    def test_uniform_scale(self):
        p_b = np.array([0.25, 0.5, 0.25])
        report = deviation(1.01 * p_b, p_b)
        assert report.deviations_percent == pytest.approx([1.0, 1.0, 1.0], abs=1e-12)

    def test_anchor_arithmetic(self):
        report = deviation([0.000445], [0.00044517])
        assert report.deviations_percent[0] == pytest.approx(-0.0382, abs=1e-4)

    def test_zero_benchmark_rejected(self):
        with pytest.raises(ValueError):
            deviation([0.1], [0.0])

    @given(st.integers(0, 2 ** 31))
    @settings(max_examples=20, deadline=None)
    def test_summary_bounds(self, seed):
        rng = np.random.default_rng(seed)
        p_b = rng.uniform(0.01, 1.0, size=5)
        p_t = p_b * rng.uniform(0.5, 1.5, size=5)
        report = deviation(p_t, p_b)
        devs = np.abs(report.deviations_percent)
        assert report.max_abs == pytest.approx(devs.max())
        assert report.mean_abs == pytest.approx(devs.mean())
        assert isinstance(report.format_table(), str)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            deviation([0.1, 0.9], [1.0])


class TestGoldenFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "g.csv"
        write_golden(path, ["1s", "2p"], [0.9, 0.1])
        labels, probs = read_golden(path)
        assert labels == ["1s", "2p"]
        assert probs == pytest.approx([0.9, 0.1])

    def test_bundled_goldens_match_regeneration(self):
        from vqdyn.benchmark import benchmark_probabilities, golden_path
        for preset, omega in [("h2", 0.06), ("h4", 0.06)]:
            bundled = read_golden(golden_path(preset, omega))[1]
            fresh = final_probabilities(BasisSet.preset(preset), LaserPulse(omega=omega))
            assert np.abs(bundled - fresh).max() < 1e-10
