"""Damping channels, the perturbed cross-resonance model, and device files."""

import math
import warnings

import numpy as np
import pytest

from vqfactor.circuits import CNOT_MATRIX, cnot
from vqfactor.device import (
    CoherenceError,
    SchemaError,
    default_device_model,
    device_from_dict,
    device_to_dict,
    parse_device_model,
    save_device_model,
    uniform_device,
)
from vqfactor.noise import (
    CRParams,
    InvalidCoherenceError,
    KrausChannel,
    NoiseConfig,
    apply_damping_channel,
    build_xi_generator,
    cnot_segment_unitary,
    cr_evolution,
    cr_generator,
    cr_unitary,
    damping_kraus,
    damping_params_from_coherence,
    ecr_two_pulse,
    ecr_unitary,
    noisy_cnot,
    run_circuit,
    xi_rad_per_ns,
)
from vqfactor.simulator import DensityMatrix, InvalidChannelError, StateVector

Z = np.diag([1.0, -1.0]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def dense_expm_oracle(generator: np.ndarray, t: float) -> np.ndarray:
    """Independent exponential via Hermitian eigendecomposition."""
    w, v = np.linalg.eigh(generator)
    return (v * np.exp(1j * t * w)) @ v.conj().T


def embed(op_by_qubit: dict[int, np.ndarray], qubits: tuple[int, ...]) -> np.ndarray:
    total = np.array([[1.0]], dtype=complex)
    for q in qubits:
        total = np.kron(total, op_by_qubit.get(q, np.eye(2, dtype=complex)))
    return total


class TestDampingParams:
    def test_device_average_values(self):
        eps_r, eps_d = damping_params_from_coherence(64, 82, 315)
        assert eps_r == pytest.approx(4.910e-3, rel=1e-3)
        assert eps_d == pytest.approx(1.380e-3, rel=1e-3)

    def test_t2_at_limit_gives_no_dephasing(self):
        eps_r, eps_d = damping_params_from_coherence(50, 100, 0)
        assert (eps_r, eps_d) == (0.0, 0.0)
        _, eps_d = damping_params_from_coherence(50, 100, 400)
        assert eps_d == 0.0

    def test_infinite_coherence(self):
        assert damping_params_from_coherence(math.inf, math.inf, 315) == (0.0, 0.0)

    def test_invalid_coherence(self):
        with pytest.raises(InvalidCoherenceError):
            damping_params_from_coherence(10, 21, 100)


class TestDampingChannel:
    def test_kraus_completeness(self):
        for eps_r, eps_d in ((0.0, 0.0), (0.3, 0.1), (4.9e-3, 1.4e-3), (1.0, 0.0)):
            ops = damping_kraus(eps_r, eps_d)
            total = sum(op.conj().T @ op for op in ops)
            assert np.max(np.abs(total - np.eye(2))) < 1e-12

    def test_full_relaxation(self):
        rho = DensityMatrix(1, np.array([[0, 0], [0, 1]], dtype=complex))
        apply_damping_channel(rho, 0, 1.0, 0.0)
        assert np.allclose(rho.matrix, [[1, 0], [0, 0]])

    def test_identity_channel(self):
        rho = DensityMatrix.plus_state(1)
        before = rho.matrix.copy()
        apply_damping_channel(rho, 0, 0.0, 0.0)
        assert np.allclose(rho.matrix, before)

    def test_full_dephasing_mixes_plus(self):
        rho = DensityMatrix.plus_state(1)
        apply_damping_channel(rho, 0, 0.0, 1.0)
        assert np.allclose(rho.matrix, np.diag([0.5, 0.5]))

    def test_trace_preserved(self):
        rng = np.random.default_rng(5)
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        amps /= np.linalg.norm(amps)
        rho = StateVector(2, amps).to_density_matrix()
        apply_damping_channel(rho, 1, 0.05, 0.02)
        assert abs(rho.trace() - 1.0) < 1e-12

    def test_incomplete_kraus_rejected(self):
        with pytest.raises(InvalidChannelError):
            KrausChannel((np.eye(2) * 0.9,), 0)

    def test_unphysical_parameters_rejected(self):
        with pytest.raises(InvalidChannelError):
            damping_kraus(0.7, 0.5)


class TestCREvolution:
    def test_quarter_turn_closed_form(self):
        params = CRParams.cnot_calibrated(315.0)
        matrix, support = cr_unitary(params, 0, 1)
        zx = np.kron(Z, X)
        expected = math.cos(math.pi / 4) * np.eye(4) + 1j * math.sin(math.pi / 4) * zx
        assert support == (0, 1)
        assert np.max(np.abs(matrix - expected)) < 1e-12

    def test_perturbed_matches_dense_oracle(self):
        xi = xi_rad_per_ns(100.0)
        params = CRParams.cnot_calibrated(315.0, [((0, 1), xi)])
        matrix, _ = cr_unitary(params, 0, 1)
        gen = (math.pi / (4 * 315.0)) * np.kron(Z, X) + xi * np.kron(Z, Z)
        assert np.max(np.abs(matrix - dense_expm_oracle(gen, 315.0))) < 1e-10

    def test_pure_zz_phase(self):
        xi = 0.003
        params = CRParams(gamma=0.0, t_ns=100.0, xi_terms=(((0, 1), xi),))
        matrix, _ = cr_unitary(params, 0, 1)
        phases = np.exp(1j * xi * 100.0 * np.array([1, -1, -1, 1]))
        assert np.max(np.abs(matrix - np.diag(phases))) < 1e-12

    def test_spectator_generator_matches_oracle(self):
        terms = [((0, 1), 0.001), ((0, 2), 0.0005), ((1, 3), -0.0008)]
        params = CRParams.cnot_calibrated(200.0, terms)
        matrix, support = cr_unitary(params, 0, 1)
        assert support == (0, 1, 2, 3)
        gen = (math.pi / 800.0) * embed({0: Z, 1: X}, support)
        for (a, b), strength in terms:
            gen = gen + strength * embed({a: Z, b: Z}, support)
        assert np.max(np.abs(matrix - dense_expm_oracle(gen, 200.0))) < 1e-10

    def test_state_application(self):
        params = CRParams.cnot_calibrated(315.0)
        state = StateVector.plus_state(2)
        matrix, _ = cr_unitary(params, 0, 1)
        expected = matrix @ state.amplitudes
        cr_evolution(state, params, 0, 1)
        assert np.max(np.abs(state.amplitudes - expected)) < 1e-12


class TestECR:
    def test_echo_equals_single_pulse_without_perturbation(self):
        params = CRParams.cnot_calibrated(412.0)
        single, _ = cr_unitary(params, 0, 1)
        echoed, _ = ecr_unitary(params, 0, 1)
        assert np.max(np.abs(single - echoed)) < 1e-12

    @pytest.mark.parametrize("xi_t", [0.01, 0.03, 0.1])
    def test_echo_suppresses_drive_pair_coupling(self, xi_t):
        t = 315.0
        params = CRParams.cnot_calibrated(t, [((0, 1), xi_t / t)])
        ideal, _ = cr_unitary(CRParams.cnot_calibrated(t), 0, 1)
        single, _ = cr_unitary(params, 0, 1)
        echoed, _ = ecr_unitary(params, 0, 1)
        assert np.linalg.norm(echoed - ideal, 2) < np.linalg.norm(single - ideal, 2)

    def test_target_spectator_changes_echo(self):
        t = 315.0
        base = CRParams.cnot_calibrated(t, [((0, 1), 0.0008)])
        with_spec = CRParams.cnot_calibrated(t, [((0, 1), 0.0008), ((1, 2), 0.0005)])
        echo_base, _ = ecr_unitary(base, 0, 1)
        echo_spec, support = ecr_unitary(with_spec, 0, 1)
        lifted = np.kron(echo_base, np.eye(2))  # qubit 2 is last in the support order
        assert support == (0, 1, 2)
        assert np.linalg.norm(echo_spec - lifted, 2) > 1e-6

    def test_control_spectator_cancels_exactly_under_echo(self):
        # Z(control)Z(spectator) commutes with the ZX drive, so the echo
        # removes it entirely while the single pulse keeps a phase error
        t = 315.0
        base = CRParams.cnot_calibrated(t, [((0, 1), 0.0008)])
        with_spec = CRParams.cnot_calibrated(t, [((0, 1), 0.0008), ((0, 2), 0.0005)])
        echo_base, _ = ecr_unitary(base, 0, 1)
        echo_spec, _ = ecr_unitary(with_spec, 0, 1)
        assert np.linalg.norm(echo_spec - np.kron(echo_base, np.eye(2)), 2) < 1e-10
        single_base, _ = cr_unitary(base, 0, 1)
        single_spec, _ = cr_unitary(with_spec, 0, 1)
        assert np.linalg.norm(single_spec - np.kron(single_base, np.eye(2)), 2) > 1e-3

    def test_echo_matches_explicit_product(self):
        t = 257.0
        xi = 0.0009
        params = CRParams.cnot_calibrated(t, [((0, 1), xi)])
        gen_pos = (math.pi / (4 * t)) * np.kron(Z, X) + xi * np.kron(Z, Z)
        gen_neg = -(math.pi / (4 * t)) * np.kron(Z, X) + xi * np.kron(Z, Z)
        xc = np.kron(X, np.eye(2))
        explicit = xc @ dense_expm_oracle(gen_neg, t / 2) @ xc @ dense_expm_oracle(gen_pos, t / 2)
        echoed, _ = ecr_unitary(params, 0, 1)
        assert np.max(np.abs(echoed - explicit)) < 1e-10

    def test_state_application(self):
        params = CRParams.cnot_calibrated(315.0, [((0, 1), 0.001)])
        state = StateVector.plus_state(2)
        matrix, _ = ecr_unitary(params, 0, 1)
        expected = matrix @ state.amplitudes
        ecr_two_pulse(state, params, 0, 1)
        assert np.max(np.abs(state.amplitudes - expected)) < 1e-12


class TestXiGenerator:
    def test_single_edge(self):
        device = default_device_model()
        config = NoiseConfig(mode="zz", device=device, mapping=(0, 1))
        terms = build_xi_generator(config, 0, 1)
        assert terms == [((0, 1), pytest.approx(2 * math.pi * 275.1e3 * 1e-9))]

    def test_absent_edge_is_zero_with_warning(self):
        device = default_device_model()
        config = NoiseConfig(mode="zz", device=device, mapping=(0, 5))
        with pytest.warns(UserWarning):
            terms = build_xi_generator(config, 0, 1)
        assert terms == [((0, 1), 0.0)]

    def test_spectators_from_paper_mapping(self):
        device = default_device_model()
        config = NoiseConfig(mode="zz", spectators=True, device=device,
                             mapping=(6, 7, 12, 8, 3))
        terms = build_xi_generator(config, 1, 3)  # physical CNOT on (7, 8)
        pairs = [pair for pair, _ in terms]
        assert pairs == [(1, 3), (1, 0), (1, 2), (3, 4)]
        strengths = {pair: xi for pair, xi in terms}
        assert strengths[(1, 3)] == pytest.approx(xi_rad_per_ns(69.8))
        assert strengths[(1, 0)] == pytest.approx(xi_rad_per_ns(117.8))
        assert strengths[(1, 2)] == pytest.approx(xi_rad_per_ns(74.9))
        assert strengths[(3, 4)] == pytest.approx(xi_rad_per_ns(54.7))


class TestNoisyCnot:
    def test_ideal_composition_exact(self):
        config = NoiseConfig(mode="zz", device=uniform_device(2, xi_khz=0.0))
        matrix, support, _ = cnot_segment_unitary(config, 0, 1)
        assert np.max(np.abs(matrix - CNOT_MATRIX)) < 1e-10

    def test_zero_xi_state_matches_cnot(self):
        config = NoiseConfig(mode="zz", device=uniform_device(3, xi_khz=0.0))
        rng = np.random.default_rng(8)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps /= np.linalg.norm(amps)
        noisy = StateVector(3, amps.copy())
        noisy_cnot(noisy, config, 0, 2)
        clean = StateVector(3, amps.copy())
        clean.apply_gate(cnot(0, 2))
        assert np.max(np.abs(noisy.amplitudes - clean.amplitudes)) < 1e-10

    def test_100khz_perturbation_against_oracle(self):
        config = NoiseConfig(mode="zz", device=uniform_device(2, xi_khz=100.0, cnot_ns=315.0))
        matrix, support, duration = cnot_segment_unitary(config, 0, 1)
        assert duration == 315.0
        xi = xi_rad_per_ns(100.0)
        gen = (math.pi / (4 * 315.0)) * np.kron(Z, X) + xi * np.kron(Z, Z)
        segment = dense_expm_oracle(gen, 315.0)
        rz_c = np.kron(np.diag(np.exp([-0.25j * math.pi, 0.25j * math.pi])), np.eye(2))
        rx_t = np.kron(np.eye(2), dense_expm_oracle(-X / 2, math.pi / 2))
        expected = np.exp(0.25j * math.pi) * rz_c @ segment @ rx_t
        assert np.max(np.abs(matrix - expected)) < 1e-10
        fidelity = abs(np.trace(CNOT_MATRIX.conj().T @ matrix)) / 4
        assert fidelity < 1.0 - 1e-4

    def test_damping_mode_applies_channels(self):
        device = uniform_device(2, t1_us=50.0, t2_us=70.0, cnot_ns=300.0)
        config = NoiseConfig(mode="damping", device=device)
        rho = DensityMatrix.plus_state(2)
        noisy_cnot(rho, config, 0, 1)
        assert abs(rho.trace() - 1.0) < 1e-12
        # off-diagonals must have shrunk relative to the ideal CNOT output
        ideal = DensityMatrix.plus_state(2)
        ideal.apply_gate(cnot(0, 1))
        assert np.abs(rho.matrix[0, 3]) < np.abs(ideal.matrix[0, 3])


class TestRunCircuit:
    def test_ideal_returns_statevector(self):
        state = run_circuit((cnot(0, 1),), 2)
        assert isinstance(state, StateVector)

    def test_damping_returns_density(self):
        config = NoiseConfig(mode="damping", device=uniform_device(2, t1_us=60, t2_us=80))
        state = run_circuit((cnot(0, 1),), 2, config)
        assert isinstance(state, DensityMatrix)

    def test_damping_and_zz_combines(self):
        device = uniform_device(2, t1_us=60, t2_us=80, xi_khz=80.0)
        both = run_circuit((cnot(0, 1),), 2, NoiseConfig(mode="damping_and_zz", device=device))
        assert isinstance(both, DensityMatrix)
        assert abs(both.trace() - 1.0) < 1e-10


class TestDeviceModel:
    def test_bundled_default(self):
        device = default_device_model()
        assert len(device.qubits) == 20
        edge = device.edge(0, 1)
        assert edge.xi_khz == pytest.approx(275.1)
        assert edge.cnot_ns == 220

    def test_missing_key_raises_schema_error(self):
        data = device_to_dict(uniform_device(2))
        del data["qubits"][0]["t1_us"]
        with pytest.raises(SchemaError) as err:
            device_from_dict(data)
        assert "t1_us" in str(err.value)

    def test_coherence_violation_names_qubit(self):
        data = device_to_dict(uniform_device(2, t1_us=10.0, t2_us=10.0))
        data["qubits"][1]["t2_us"] = 25.0
        with pytest.raises(CoherenceError) as err:
            device_from_dict(data)
        assert err.value.qubit == 1

    def test_round_trip(self, tmp_path):
        device = default_device_model()
        path = tmp_path / "device.json"
        save_device_model(device, str(path))
        clone = parse_device_model(str(path))
        assert clone == device

    def test_env_override(self, tmp_path, monkeypatch):
        path = tmp_path / "alt.json"
        save_device_model(uniform_device(3, t1_us=1.0, t2_us=1.0), str(path))
        monkeypatch.setenv("VQFACTOR_DEVICE_FILE", str(path))
        assert len(default_device_model().qubits) == 3
