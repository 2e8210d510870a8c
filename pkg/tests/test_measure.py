import numpy as np
import pytest

from vqdyn.ansatz import make_ansatz
from vqdyn.benchmark import data_dir
from vqdyn.measure import (ANALYTIC, CIRCUIT, EvalBackend, HadamardTest,
                           build_test, evaluate, evaluate_sum)
from vqdyn.model import BasisSet, LaserPulse, hamiltonian_at
from vqdyn.noise import load_calibration
from vqdyn.pauli import PauliString, encode_jwe, encode_qee

HCP = LaserPulse(omega=0.06)
EXACT_CIRCUIT = EvalBackend(mode=CIRCUIT, shots=0)
ANALYTIC_BACKEND = EvalBackend(mode=ANALYTIC)


def hamiltonian_terms(spec, basis, t):
    h = hamiltonian_at(basis, HCP, t).entries
    psum = encode_jwe(h) if spec.scheme == "jwe" else encode_qee(h)
    return [(c.real, s) for c, s in psum.terms if not s.is_identity]


class TestBackendValidation:
    def test_modes(self):
        with pytest.raises(ValueError):
            EvalBackend(mode="magic")
        with pytest.raises(ValueError):
            EvalBackend(mode=CIRCUIT, shots=-1)
        with pytest.raises(ValueError):
            EvalBackend(mode=ANALYTIC, shots=100,
                        noise_model=load_calibration(data_dir() / "ibmq_jakarta_2021-10-10.csv"))

    def test_noise_requires_shots(self):
        model = load_calibration(data_dir() / "ibmq_jakarta_2021-10-10.csv")
        with pytest.raises(ValueError):
            EvalBackend(mode=CIRCUIT, shots=0, noise_model=model)


class TestBuildTest:
    def test_single_rotation_pair_gives_one_quarter(self):
        spec = make_ansatz("qee", 4)
        theta = np.zeros(6)
        tests = build_test("a_entry", spec, theta, i=1, j=2)
        assert len(tests) == 1
        assert tests[0].coeff == pytest.approx(0.25)

    def test_crx_parameter_doubles_tests(self):
        spec = make_ansatz("jwe", 4)
        theta = np.zeros(6)
        # theta_1 and theta_2 drive CRX gates in the N=4 cascade
        assert len(build_test("a_entry", spec, theta, i=1, j=4)) == 2
        assert len(build_test("a_entry", spec, theta, i=1, j=2)) == 4
        assert len(build_test("overlap", spec, theta, i=1)) == 2

    def test_energy_kind_identity_term_is_classical(self):
        spec = make_ansatz("qee", 4)
        assert build_test("energy", spec, np.zeros(6),
                          term=PauliString("II")) == []
        tests = build_test("energy", spec, np.zeros(6),
                           term=PauliString("ZI"), term_coeff=-0.25)
        assert len(tests) == 1 and tests[0].coeff == pytest.approx(-0.25)

    def test_unknown_kind(self):
        spec = make_ansatz("qee", 4)
        with pytest.raises(ValueError):
            build_test("b_entry", spec, np.zeros(6), i=1)


class TestEvaluation:
    def test_identity_test_returns_one(self):
        # U = identity on a normalized |phi>: ansatz on both sides, nothing controlled
        from vqdyn.measure import _ansatz_ops

        spec = make_ansatz("qee", 4)
        theta = np.random.default_rng(0).uniform(-np.pi, np.pi, 6)
        test = HadamardTest(3, _ansatz_ops(spec, theta), 1.0)
        for backend in (ANALYTIC_BACKEND, EXACT_CIRCUIT):
            assert evaluate(test, backend) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("scheme", ["jwe", "qee"])
    def test_circuit_equals_analytic_on_random_draws(self, scheme):
        spec = make_ansatz(scheme, 4)
        basis = BasisSet.preset("h4")
        rng = np.random.default_rng(99)
        for _ in range(20):
            theta = rng.uniform(-np.pi, np.pi, spec.n_params)
            t = rng.uniform(0.0, 200.0)
            terms = hamiltonian_terms(spec, basis, t)
            coeff, string = terms[rng.integers(len(terms))]
            i = int(rng.integers(1, spec.n_params + 1))
            j = int(rng.integers(1, spec.n_params + 1))
            for kind, kwargs in [
                ("a_entry", dict(i=i, j=j)),
                ("overlap", dict(i=i)),
                ("c_entry", dict(i=i, term=string, term_coeff=coeff)),
                ("energy", dict(term=string, term_coeff=coeff)),
            ]:
                tests = build_test(kind, spec, theta, **kwargs)
                exact = evaluate_sum(tests, EXACT_CIRCUIT)
                direct = evaluate_sum(tests, ANALYTIC_BACKEND)
                assert exact == pytest.approx(direct, abs=1e-10)

    def test_hermitian_symmetry_from_circuits(self):
        spec = make_ansatz("jwe", 4)
        rng = np.random.default_rng(5)
        theta = rng.uniform(-np.pi, np.pi, 6)
        for i, j in [(1, 3), (2, 5), (4, 6)]:
            a_ij = evaluate_sum(build_test("a_entry", spec, theta, i=i, j=j), EXACT_CIRCUIT)
            a_ji = evaluate_sum(build_test("a_entry", spec, theta, i=j, j=i), EXACT_CIRCUIT)
            assert a_ij == pytest.approx(a_ji, abs=1e-10)

    def test_sampled_within_five_sigma(self):
        spec = make_ansatz("qee", 4)
        theta = np.random.default_rng(1).uniform(-np.pi, np.pi, 6)
        tests = build_test("a_entry", spec, theta, i=2, j=3)
        exact = evaluate_sum(tests, EXACT_CIRCUIT)
        shots = 50_000
        sampled = evaluate_sum(tests, EvalBackend(mode=CIRCUIT, shots=shots, seed=11))
        sigma = sum(abs(t.coeff) for t in tests) / np.sqrt(shots)
        assert abs(sampled - exact) < 5 * sigma

    def test_sampling_estimator_consistency(self):
        """Mean over 200 seeded repetitions within 3 standard errors of exact."""
        spec = make_ansatz("qee", 4)
        theta = np.random.default_rng(2).uniform(-np.pi, np.pi, 6)
        tests = build_test("overlap", spec, theta, i=1)
        exact = evaluate_sum(tests, EXACT_CIRCUIT)
        shots = 2000
        draws = np.array([
            evaluate_sum(tests, EvalBackend(mode=CIRCUIT, shots=shots, seed=seed))
            for seed in range(200)
        ])
        stderr = draws.std(ddof=1) / np.sqrt(len(draws))
        assert abs(draws.mean() - exact) < 3 * stderr

    def test_noisy_evaluation_runs_and_biases(self):
        model = load_calibration(data_dir() / "ibmq_jakarta_2021-10-10.csv").with_fallback("worst")
        spec = make_ansatz("qee", 4)
        theta = np.random.default_rng(3).uniform(-np.pi, np.pi, 6)
        tests = build_test("a_entry", spec, theta, i=1, j=1)
        exact = evaluate_sum(tests, EXACT_CIRCUIT)
        noisy = evaluate_sum(tests, EvalBackend(mode=CIRCUIT, shots=200_000, seed=4,
                                                noise_model=model))
        # depolarizing + relaxation shrink the interference term toward zero
        assert abs(noisy) < abs(exact)
        assert abs(noisy - exact) < 0.2
