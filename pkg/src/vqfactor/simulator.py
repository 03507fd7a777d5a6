"""Exact statevector and density-matrix simulation.

Basis convention: qubit 0 is the most significant bit of the computational
basis index, so bitstring "q0 q1 ... q_{n-1}" names basis state
sum_k bits[k] << (n-1-k).  Gates are applied by tensor contraction on the
reshaped state; density matrices get the conjugate applied to column axes.
"""

from __future__ import annotations

import numpy as np

from .circuits import BadTargetError, Circuit, Gate, gate_matrix


class SimulatorError(Exception):
    pass


class DimensionMismatchError(SimulatorError):
    pass


class InvalidChannelError(SimulatorError):
    pass


NORM_TOL = 1e-10


def _contract(tensor: np.ndarray, matrix: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to the given axes of a rank-(2,2,...) tensor."""
    k = len(axes)
    op = matrix.reshape((2,) * (2 * k))
    moved = np.tensordot(op, tensor, axes=(tuple(range(k, 2 * k)), axes))
    return np.moveaxis(moved, tuple(range(k)), axes)


class StateVector:
    """Pure state over n qubits."""

    def __init__(self, n_qubits: int, amplitudes: np.ndarray | None = None):
        self.n_qubits = n_qubits
        if amplitudes is None:
            amplitudes = np.zeros(1 << n_qubits, dtype=complex)
            amplitudes[0] = 1.0
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << n_qubits,):
            raise DimensionMismatchError("amplitude vector does not match qubit count")

    @classmethod
    def plus_state(cls, n_qubits: int) -> "StateVector":
        dim = 1 << n_qubits
        return cls(n_qubits, np.full(dim, 1.0 / np.sqrt(dim), dtype=complex))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def apply_unitary(self, matrix: np.ndarray, qubits: tuple[int, ...]) -> None:
        self._check_targets(qubits)
        tensor = self.amplitudes.reshape((2,) * self.n_qubits)
        self.amplitudes = _contract(tensor, matrix, qubits).reshape(-1)

    def apply_gate(self, gate: Gate) -> None:
        self.apply_unitary(gate_matrix(gate), gate.qubits)

    def run(self, circuit: Circuit) -> "StateVector":
        for gate in circuit:
            self.apply_gate(gate)
        return self

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))

    def _check_targets(self, qubits: tuple[int, ...]) -> None:
        if len(set(qubits)) != len(qubits) or any(not 0 <= q < self.n_qubits for q in qubits):
            raise BadTargetError(f"bad targets {qubits} for {self.n_qubits} qubits")


class DensityMatrix:
    """Mixed state over n qubits, stored dense."""

    def __init__(self, n_qubits: int, matrix: np.ndarray | None = None):
        self.n_qubits = n_qubits
        dim = 1 << n_qubits
        if matrix is None:
            matrix = np.zeros((dim, dim), dtype=complex)
            matrix[0, 0] = 1.0
        self.matrix = np.asarray(matrix, dtype=complex)
        if self.matrix.shape != (dim, dim):
            raise DimensionMismatchError("density matrix does not match qubit count")

    @classmethod
    def plus_state(cls, n_qubits: int) -> "DensityMatrix":
        return StateVector.plus_state(n_qubits).to_density_matrix()

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, self.matrix.copy())

    def _tensor(self) -> np.ndarray:
        return self.matrix.reshape((2,) * (2 * self.n_qubits))

    def apply_unitary(self, matrix: np.ndarray, qubits: tuple[int, ...]) -> None:
        self._check_targets(qubits)
        n = self.n_qubits
        tensor = self._tensor()
        tensor = _contract(tensor, matrix, qubits)
        tensor = _contract(tensor, matrix.conj(), tuple(q + n for q in qubits))
        self.matrix = tensor.reshape(1 << n, 1 << n)

    def apply_gate(self, gate: Gate) -> None:
        self.apply_unitary(gate_matrix(gate), gate.qubits)

    def apply_kraus(self, operators: list[np.ndarray], qubits: tuple[int, ...]) -> None:
        """rho -> sum_m E_m rho E_m^dagger on the given qubits."""
        self._check_targets(qubits)
        n = self.n_qubits
        tensor = self._tensor()
        col_axes = tuple(q + n for q in qubits)
        total = None
        for op in operators:
            branch = _contract(tensor, op, qubits)
            branch = _contract(branch, op.conj(), col_axes)
            total = branch if total is None else total + branch
        self.matrix = total.reshape(1 << n, 1 << n)

    def run(self, circuit: Circuit) -> "DensityMatrix":
        for gate in circuit:
            self.apply_gate(gate)
        return self

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def _check_targets(self, qubits: tuple[int, ...]) -> None:
        if len(set(qubits)) != len(qubits) or any(not 0 <= q < self.n_qubits for q in qubits):
            raise BadTargetError(f"bad targets {qubits} for {self.n_qubits} qubits")


State = StateVector | DensityMatrix


def expectation_value(state: State, hamiltonian) -> float:
    """<H> for a diagonal cost operator, from exact basis probabilities."""
    if hamiltonian.n_qubits != state.n_qubits:
        raise DimensionMismatchError(
            f"{hamiltonian.n_qubits}-qubit operator on {state.n_qubits}-qubit state"
        )
    return float(np.dot(state.probabilities(), hamiltonian.diagonal))


def sample_bitstrings(state: State, shots: int, seed: int) -> list[str]:
    """Independent computational-basis samples, reproducible per seed."""
    if shots < 1:
        raise ValueError("shots must be positive")
    probs = np.clip(state.probabilities(), 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(probs.size, size=shots, p=probs)
    width = state.n_qubits
    return [format(int(v), f"0{width}b") for v in outcomes]
