"""QAOA ansatz construction, two-phase optimization, and success metrics.

Phase one sweeps a (gamma_k, beta_k) grid for each new layer with earlier
layers frozen at their optima; phase two refines all 2p parameters with
box-constrained L-BFGS-B.  Energies are exact expectation values (statevector
when the noise model is unitary, density matrix with damping); sampling is
opt-in and seed-deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .circuits import Circuit, Gate, circuit_metrics, h, pauli_z_rotation_circuit, rx
from .clauses import ClauseSystem, verify_assignment
from .ising import Hamiltonian
from .noise import IDEAL, CircuitRunner, NoiseConfig
from .simulator import (
    DensityMatrix,
    DimensionMismatchError,
    StateVector,
    expectation_value,
    sample_bitstrings,
)

TWO_PI = 2.0 * math.pi


class QAOAError(Exception):
    pass


class MapMismatchError(QAOAError):
    pass


class NoSolutionSampledError(QAOAError):
    pass


@dataclass(frozen=True)
class Schedule:
    """QAOA parameters: one (gamma, beta) pair per layer."""

    gammas: tuple[float, ...] = ()
    betas: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.gammas) != len(self.betas):
            raise ValueError("gamma and beta lists must have equal length")

    @property
    def p(self) -> int:
        return len(self.gammas)

    def extended(self, gamma: float, beta: float) -> "Schedule":
        return Schedule(self.gammas + (gamma,), self.betas + (beta,))

    def as_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas, dtype=float)

    @classmethod
    def from_vector(cls, vec) -> "Schedule":
        vec = np.asarray(vec, dtype=float)
        p = vec.size // 2
        return cls(tuple(vec[:p]), tuple(vec[p:]))


@dataclass(frozen=True)
class OptimizerConfig:
    """Grid resolution, refinement budget, gradient choice, sampling."""

    grid_resolution: float = math.pi / 6
    refine_maxiter: int = 100
    grad_tol: float = 1e-8
    gradient_method: str = "auto"   # auto | adjoint | fd
    fd_step: float = 1e-5
    shots: int = 0                  # 0 = exact probabilities only
    seed: int = 0

    def __post_init__(self):
        if round(TWO_PI / self.grid_resolution) < 4:
            raise ValueError("grid resolution must divide 2*pi into at least 4 points")
        if self.gradient_method not in ("auto", "adjoint", "fd"):
            raise ValueError("gradient_method must be auto, adjoint, or fd")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be positive")

    def resolved_gradient_method(self, noise: NoiseConfig) -> str:
        if self.gradient_method != "auto":
            return self.gradient_method
        return "adjoint" if noise.mode == "ideal" else "fd"


@dataclass
class LandscapeGrid:
    """Energies over one layer's (gamma, beta) grid with earlier layers frozen."""

    layer: int
    resolution: float
    prefix: Schedule
    gamma_values: np.ndarray
    beta_values: np.ndarray
    energies: np.ndarray  # [i_gamma, i_beta]

    def argmin(self) -> tuple[float, float]:
        flat = int(np.argmin(self.energies))
        i, j = divmod(flat, self.energies.shape[1])
        return float(self.gamma_values[i]), float(self.beta_values[j])

    def min_energy(self) -> float:
        return float(self.energies.min())


@dataclass
class LayerRecord:
    p: int
    schedule: Schedule
    energy: float
    success_exact: float
    success_sampled: float | None
    shots: int
    metrics: dict[str, int]
    refine_converged: bool = True


@dataclass
class RunResult:
    N: int
    n_p: int
    n_q: int
    n_qubits: int
    layers: list[LayerRecord] = field(default_factory=list)
    factors: tuple[int, int] | None = None
    solved_classically: bool = False
    no_solution_sampled: bool = False


# -- ansatz -------------------------------------------------------------------


def _annotated_ansatz(hamiltonian: Hamiltonian, schedule: Schedule):
    """Ansatz gates plus, per gate, which parameter it carries and at what scale.

    Parameter indices: gamma_l -> l, beta_l -> p + l; an rz inside the
    Z-string ladder of a term with weight c carries angle 2*c*gamma_l.
    """
    n = hamiltonian.n_qubits
    p = schedule.p
    ops: list[tuple[Gate, tuple[int, float] | None]] = [(h(q), None) for q in range(n)]
    for layer in range(p):
        gamma, beta = schedule.gammas[layer], schedule.betas[layer]
        for term in hamiltonian.interaction_terms():
            for gate in pauli_z_rotation_circuit(term.qubits, gamma * term.coefficient):
                info = (layer, 2.0 * term.coefficient) if gate.name == "rz" else None
                ops.append((gate, info))
        for q in range(n):
            ops.append((rx(q, 2.0 * beta), (p + layer, 2.0)))
    return ops


def build_ansatz_circuit(hamiltonian: Hamiltonian, schedule: Schedule) -> Circuit:
    """Hadamard layer, then alternating cost-phase and admixer layers."""
    return tuple(gate for gate, _ in _annotated_ansatz(hamiltonian, schedule))


def _layer_circuit(hamiltonian: Hamiltonian, gamma: float, beta: float) -> Circuit:
    gates: list[Gate] = []
    for term in hamiltonian.interaction_terms():
        gates.extend(pauli_z_rotation_circuit(term.qubits, gamma * term.coefficient))
    gates.extend(rx(q, 2.0 * beta) for q in range(hamiltonian.n_qubits))
    return tuple(gates)


# -- energy and gradient --------------------------------------------------------


class AnsatzEvaluator:
    """Shared-runner evaluation of energies and gradients for one (H, noise)."""

    def __init__(self, hamiltonian: Hamiltonian, noise: NoiseConfig | None = None):
        self.h = hamiltonian
        self.noise = noise or IDEAL
        self.runner = CircuitRunner(hamiltonian.n_qubits, self.noise)

    def state(self, schedule: Schedule):
        return self.runner.run(build_ansatz_circuit(self.h, schedule))

    def energy(self, schedule: Schedule) -> float:
        return expectation_value(self.state(schedule), self.h)

    def energy_from_prefix(self, prefix_state, gamma: float, beta: float) -> float:
        state = prefix_state.copy()
        for gate in _layer_circuit(self.h, gamma, beta):
            self.runner.apply_gate(state, gate)
        return expectation_value(state, self.h)

    # ---- gradients ----

    def gradient(self, schedule: Schedule, method: str = "adjoint", fd_step: float = 1e-5) -> np.ndarray:
        if schedule.p == 0:
            return np.zeros(0)
        if method == "fd":
            return self._fd_gradient(schedule, fd_step)
        if isinstance(self.runner.fresh_state(), DensityMatrix):
            return self._adjoint_density(schedule)
        return self._adjoint_statevector(schedule)

    def _fd_gradient(self, schedule: Schedule, step: float) -> np.ndarray:
        x0 = schedule.as_vector()
        grad = np.zeros_like(x0)
        for k in range(x0.size):
            plus, minus = x0.copy(), x0.copy()
            plus[k] += step
            minus[k] -= step
            grad[k] = (
                self.energy(Schedule.from_vector(plus)) - self.energy(Schedule.from_vector(minus))
            ) / (2 * step)
        return grad

    def _tape(self, schedule: Schedule):
        """Expanded op list: ('u', matrix, qubits, param_info) / ('k', ops, qubit)."""
        from .circuits import gate_matrix
        from .noise import cnot_duration_ns

        config = self.noise
        tape = []
        for gate, info in _annotated_ansatz(self.h, schedule):
            if gate.name == "cnot" and config.with_zz:
                matrix, support, duration = self.runner._cnot_payload(*gate.qubits)
                tape.append(("u", matrix, support, None))
            else:
                tape.append(("u", gate_matrix(gate), gate.qubits, info))
                duration = (
                    cnot_duration_ns(config, *gate.qubits)
                    if gate.name == "cnot"
                    else (config.device.sq_gate_ns if config.device else 0.0)
                )
            if config.with_damping:
                for q in gate.qubits:
                    tape.append(("k", self.runner._damping_ops(q, duration), q))
        return tape

    def _adjoint_statevector(self, schedule: Schedule) -> np.ndarray:
        from .simulator import _contract

        n = self.h.n_qubits
        tape = self._tape(schedule)
        ket = StateVector(n)
        for kind, matrix, qubits, _ in tape:
            ket.apply_unitary(matrix, qubits)
        shape = (2,) * n
        bra = (self.h.diagonal * ket.amplitudes).reshape(shape)
        ket_t = ket.amplitudes.reshape(shape)
        grad = np.zeros(2 * schedule.p)
        for kind, matrix, qubits, info in reversed(tape):
            ket_t = _contract(ket_t, matrix.conj().T, qubits)
            if info is not None:
                index, scale = info
                deriv = _contract(ket_t, _pauli_derivative(matrix, qubits), qubits)
                grad[index] += scale * 2.0 * np.real(np.vdot(bra, deriv))
            bra = _contract(bra, matrix.conj().T, qubits)
        return grad

    def _adjoint_density(self, schedule: Schedule) -> np.ndarray:
        from .simulator import _contract

        n = self.h.n_qubits
        dim = 1 << n
        tape = self._tape(schedule)
        state = DensityMatrix(n)
        snapshots: dict[int, np.ndarray] = {}
        for pos, (kind, matrix, qubits, *rest) in enumerate(tape):
            if kind == "u" and rest[0] is not None:
                snapshots[pos] = state.matrix.copy()
            if kind == "u":
                state.apply_unitary(matrix, qubits)
            else:
                state.apply_kraus(list(matrix), (qubits,))
        lam = np.diag(self.h.diagonal.astype(complex))
        grad = np.zeros(2 * schedule.p)
        shape = (2,) * (2 * n)
        for pos in range(len(tape) - 1, -1, -1):
            kind, matrix, qubits, *rest = tape[pos]
            if kind == "u":
                info = rest[0]
                if info is not None:
                    index, scale = info
                    rho = snapshots[pos].reshape(shape)
                    col_axes = tuple(q + n for q in qubits)
                    branch = _contract(rho, _pauli_derivative(matrix, qubits), qubits)
                    branch = _contract(branch, matrix.conj(), col_axes)
                    value = np.vdot(lam, branch.reshape(dim, dim))
                    grad[index] += scale * 2.0 * np.real(value)
                # Heisenberg step: Lambda <- U^dagger Lambda U
                lam_t = lam.reshape(shape)
                lam_t = _contract(lam_t, matrix.conj().T, qubits)
                lam_t = _contract(lam_t, matrix.T, tuple(q + n for q in qubits))
                lam = lam_t.reshape(dim, dim)
            else:
                kraus, qubit = matrix, qubits
                lam_t = lam.reshape(shape)
                total = None
                for op in kraus:
                    piece = _contract(lam_t, op.conj().T, (qubit,))
                    piece = _contract(piece, op.T, (qubit + n,))
                    total = piece if total is None else total + piece
                lam = total.reshape(dim, dim)
        return grad


def _pauli_derivative(matrix: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    """d/dtheta of RZ/RX at the gate's own angle: (-i/2) * P * U."""
    if matrix.shape != (2, 2):
        raise QAOAError("parametric gates are single-qubit rotations")
    if abs(matrix[0, 1]) < 1e-15 and abs(matrix[1, 0]) < 1e-15:
        pauli = np.array([[1, 0], [0, -1]], dtype=complex)   # rz
    else:
        pauli = np.array([[0, 1], [1, 0]], dtype=complex)    # rx
    return -0.5j * pauli @ matrix


def energy(hamiltonian: Hamiltonian, schedule: Schedule, noise: NoiseConfig | None = None) -> float:
    return AnsatzEvaluator(hamiltonian, noise).energy(schedule)


def gradient(hamiltonian: Hamiltonian, schedule: Schedule, noise: NoiseConfig | None = None,
             config: OptimizerConfig | None = None) -> np.ndarray:
    config = config or OptimizerConfig()
    evaluator = AnsatzEvaluator(hamiltonian, noise)
    method = config.resolved_gradient_method(evaluator.noise)
    return evaluator.gradient(schedule, method=method, fd_step=config.fd_step)


# -- phase one: per-layer grid ---------------------------------------------------


def layer_grid_sweep(hamiltonian: Hamiltonian, layer: int, prefix: Schedule,
                     resolution: float, noise: NoiseConfig | None = None,
                     evaluator: AnsatzEvaluator | None = None) -> LandscapeGrid:
    """Exact energies over the [0, 2pi)^2 grid for one layer's parameters."""
    if prefix.p != layer:
        raise QAOAError(f"prefix has {prefix.p} layers, sweeping layer {layer}")
    evaluator = evaluator or AnsatzEvaluator(hamiltonian, noise)
    points = int(round(TWO_PI / resolution))
    values = np.arange(points) * (TWO_PI / points)
    prefix_state = evaluator.state(prefix)
    energies = np.empty((points, points))
    for i, gamma in enumerate(values):
        for j, beta in enumerate(values):
            energies[i, j] = evaluator.energy_from_prefix(prefix_state, gamma, beta)
    return LandscapeGrid(
        layer=layer,
        resolution=TWO_PI / points,
        prefix=prefix,
        gamma_values=values,
        beta_values=values.copy(),
        energies=energies,
    )


# -- phase two: refinement -------------------------------------------------------


def refine_parameters(hamiltonian: Hamiltonian, start: Schedule, config: OptimizerConfig,
                      noise: NoiseConfig | None = None,
                      evaluator: AnsatzEvaluator | None = None,
                      objective=None) -> tuple[Schedule, dict]:
    """Box-constrained L-BFGS-B over all 2p parameters from the given start.

    Never returns a point worse than the start; ``objective`` may inject a
    test function with signature (vector) -> (value, gradient).
    """
    if objective is None:
        evaluator = evaluator or AnsatzEvaluator(hamiltonian, noise)
        method = config.resolved_gradient_method(evaluator.noise)

        def objective(vec):
            schedule = Schedule.from_vector(vec)
            value = evaluator.energy(schedule)
            grad = evaluator.gradient(schedule, method=method, fd_step=config.fd_step)
            return value, grad

    x0 = start.as_vector()
    if x0.size == 0:
        return start, {"converged": True, "iterations": 0, "energy": objective(x0)[0]}
    start_value = objective(x0)[0]
    result = minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, TWO_PI)] * x0.size,
        options={"maxiter": config.refine_maxiter, "gtol": config.grad_tol},
    )
    info = {
        "converged": bool(result.success) or result.status == 0,
        "iterations": int(result.nit),
        "energy": float(result.fun),
    }
    if result.fun > start_value + 1e-12:
        return start, {**info, "energy": start_value, "converged": True}
    return Schedule.from_vector(result.x), info


# -- success rate ----------------------------------------------------------------


def solution_mask(system: ClauseSystem, qubit_map: dict, n_qubits: int) -> np.ndarray:
    """Boolean mask over basis states marking clause-satisfying assignments."""
    unknowns = system.sorted_unknowns()
    if len(unknowns) != n_qubits or set(qubit_map) != set(unknowns):
        raise MapMismatchError("qubit map does not cover the system's unknowns")
    mask = np.zeros(1 << n_qubits, dtype=bool)
    for index in range(1 << n_qubits):
        bits = {var: (index >> (n_qubits - 1 - qubit_map[var])) & 1 for var in unknowns}
        mask[index] = verify_assignment(system, bits)
    return mask


def success_rate(state_or_samples, system: ClauseSystem, qubit_map: dict) -> float:
    """Probability (exact state) or fraction (samples) of clause-satisfying outcomes."""
    if isinstance(state_or_samples, (StateVector, DensityMatrix)):
        state = state_or_samples
        mask = solution_mask(system, qubit_map, state.n_qubits)
        return float(np.sum(state.probabilities()[mask]))
    samples = list(state_or_samples)
    if not samples:
        raise ValueError("empty sample list")
    width = len(samples[0])
    mask = solution_mask(system, qubit_map, width)
    hits = sum(1 for s in samples if mask[int(s, 2)])
    return hits / len(samples)


# -- the full pipeline -------------------------------------------------------------


def run_vqf(system: ClauseSystem, hamiltonian: Hamiltonian, p_max: int,
            config: OptimizerConfig | None = None,
            noise: NoiseConfig | None = None) -> RunResult:
    """Layer-by-layer optimization up to p_max layers, with per-layer records.

    Phase one chains grid optima: each new layer is swept with the earlier
    layers frozen at their grid values.  At every depth the chained schedule
    (or, if better, the previous refined optimum padded with an identity
    layer) seeds a full 2p-parameter refinement, which keeps the recorded
    energies non-increasing in p.
    """
    config = config or OptimizerConfig()
    evaluator = AnsatzEvaluator(hamiltonian, noise)
    result = RunResult(
        N=system.N, n_p=system.n_p, n_q=system.n_q, n_qubits=hamiltonian.n_qubits
    )
    if hamiltonian.n_qubits == 0:
        result.solved_classically = True
        result.factors = _classical_factors(system)
        return result

    mask = solution_mask(system, hamiltonian.qubit_map, hamiltonian.n_qubits)
    chain = Schedule()        # phase-one grid values
    refined = Schedule()      # best refined schedule seen at the previous depth
    result.layers.append(_record(evaluator, system, hamiltonian, chain, mask, config, converged=True))
    for p in range(1, p_max + 1):
        grid = layer_grid_sweep(hamiltonian, p - 1, chain, config.grid_resolution,
                                evaluator=evaluator)
        gamma, beta = grid.argmin()
        chain = chain.extended(gamma, beta)
        # refine the phase-one chain; an identity-padded copy of the previous
        # optimum guarantees the recorded energy never rises with depth
        best, best_info = None, None
        for start in (chain, refined.extended(0.0, 0.0)):
            candidate, info = refine_parameters(hamiltonian, start, config, evaluator=evaluator)
            if best is None or evaluator.energy(candidate) < evaluator.energy(best) - 1e-15:
                best, best_info = candidate, info
        refined = best
        result.layers.append(
            _record(evaluator, system, hamiltonian, refined, mask, config,
                    converged=best_info["converged"])
        )

    final_state = evaluator.state(refined if p_max > 0 else chain)
    result.factors = _factors_from_state(final_state, system, hamiltonian, mask, config)
    if result.factors is None:
        result.no_solution_sampled = True
    return result


def _record(evaluator, system, hamiltonian, schedule, mask, config, converged) -> LayerRecord:
    state = evaluator.state(schedule)
    probs = state.probabilities()
    exact = float(np.sum(probs[mask]))
    sampled = None
    if config.shots > 0:
        samples = sample_bitstrings(state, config.shots, config.seed + schedule.p)
        sampled = sum(1 for s in samples if mask[int(s, 2)]) / len(samples)
    return LayerRecord(
        p=schedule.p,
        schedule=schedule,
        energy=expectation_value(state, hamiltonian),
        success_exact=exact,
        success_sampled=sampled,
        shots=config.shots,
        metrics=circuit_metrics(build_ansatz_circuit(hamiltonian, schedule)),
        refine_converged=converged,
    )


def evaluate_schedules(system: ClauseSystem, hamiltonian: Hamiltonian,
                       schedules: list[Schedule],
                       noise: NoiseConfig | None = None) -> list[tuple[float, float]]:
    """(energy, exact success rate) of given schedules under a noise model.

    This is how the reference noisy curves are built: parameters come from
    the ideal protocol and only the evaluation sees the noise, exposing what
    the noise does to an already-tuned circuit.
    """
    evaluator = AnsatzEvaluator(hamiltonian, noise)
    mask = solution_mask(system, hamiltonian.qubit_map, hamiltonian.n_qubits)
    out = []
    for schedule in schedules:
        state = evaluator.state(schedule)
        energy_value = expectation_value(state, hamiltonian)
        out.append((energy_value, float(np.sum(state.probabilities()[mask]))))
    return out


def _factors_from_state(state, system, hamiltonian, mask, config):
    from .clauses import reconstruct_factors

    probs = state.probabilities().copy()
    probs[~mask] = -1.0
    index = int(np.argmax(probs))
    if not mask[index]:
        return None
    n = hamiltonian.n_qubits
    unknowns = system.sorted_unknowns()
    bits = {var: (index >> (n - 1 - hamiltonian.qubit_map[var])) & 1 for var in unknowns}
    return reconstruct_factors(system, bits)


def _classical_factors(system):
    from .clauses import reconstruct_factors

    return reconstruct_factors(system, {})
