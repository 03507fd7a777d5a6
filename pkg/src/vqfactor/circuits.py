"""Gate-level circuit representation and builders.

Circuits are flat tuples of gates over the native set {H, X, RZ, RX, CNOT}
plus opaque dense unitaries for composed multi-qubit operations.  Matrix
conventions: RZ(t) = exp(-i t Z / 2), RX(t) = exp(-i t X / 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin

import numpy as np


class CircuitError(Exception):
    pass


class BadTargetError(CircuitError):
    pass


class EmptyTupleError(CircuitError):
    pass


@dataclass(frozen=True)
class Gate:
    name: str                      # "h", "x", "rz", "rx", "cnot", "unitary"
    qubits: tuple[int, ...]
    param: float | None = None
    matrix: np.ndarray | None = None  # dense 2^k x 2^k, "unitary" only

    def __post_init__(self):
        if len(set(self.qubits)) != len(self.qubits):
            raise BadTargetError(f"repeated qubit in {self.name} on {self.qubits}")


Circuit = tuple[Gate, ...]

H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)
CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def gate_matrix(gate: Gate) -> np.ndarray:
    if gate.name == "h":
        return H_MATRIX
    if gate.name == "x":
        return X_MATRIX
    if gate.name == "cnot":
        return CNOT_MATRIX
    if gate.name == "rz":
        return rz_matrix(gate.param)
    if gate.name == "rx":
        return rx_matrix(gate.param)
    if gate.name == "unitary":
        return gate.matrix
    raise CircuitError(f"unknown gate {gate.name}")


def h(q: int) -> Gate:
    return Gate("h", (q,))


def x(q: int) -> Gate:
    return Gate("x", (q,))


def rz(q: int, theta: float) -> Gate:
    return Gate("rz", (q,), float(theta))


def rx(q: int, theta: float) -> Gate:
    return Gate("rx", (q,), float(theta))


def cnot(control: int, target: int) -> Gate:
    return Gate("cnot", (control, target))


def unitary(qubits: tuple[int, ...], matrix: np.ndarray) -> Gate:
    dim = 1 << len(qubits)
    if matrix.shape != (dim, dim):
        raise BadTargetError(f"matrix shape {matrix.shape} does not fit {len(qubits)} qubits")
    return Gate("unitary", tuple(qubits), matrix=matrix)


def pauli_z_rotation_circuit(qubits: tuple[int, ...], angle: float) -> Circuit:
    """CNOT ladder + RZ + inverse ladder implementing exp(-i*angle*Z...Z).

    The parity of the tuple is accumulated onto its last qubit, rotated by
    RZ(2*angle), and uncomputed; the composition equals the Z-string
    exponential exactly (no stray global phase).
    """
    if not qubits:
        raise EmptyTupleError("need at least one qubit for a Z-string rotation")
    if len(qubits) == 1:
        return (rz(qubits[0], 2.0 * angle),)
    ladder = [cnot(a, b) for a, b in zip(qubits, qubits[1:])]
    return tuple(ladder) + (rz(qubits[-1], 2.0 * angle),) + tuple(reversed(ladder))


def circuit_metrics(circuit: Circuit) -> dict[str, int]:
    """CNOT/single-qubit counts and dependency depth of a circuit."""
    cnots = sum(1 for g in circuit if g.name == "cnot")
    singles = sum(1 for g in circuit if g.name in ("h", "x", "rz", "rx"))
    frontier: dict[int, int] = {}
    depth = 0
    for gate in circuit:
        level = max((frontier.get(q, 0) for q in gate.qubits), default=0) + 1
        for q in gate.qubits:
            frontier[q] = level
        depth = max(depth, level)
    return {"cnots": cnots, "singles": singles, "depth": depth}


def compose_unitary(circuit: Circuit, n_qubits: int) -> np.ndarray:
    """Dense matrix of the whole circuit (test-scale register sizes)."""
    dim = 1 << n_qubits
    total = np.eye(dim, dtype=complex)
    for gate in circuit:
        total = embed_unitary(gate_matrix(gate), gate.qubits, n_qubits) @ total
    return total


def embed_unitary(matrix: np.ndarray, qubits: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Expand a k-qubit matrix to the full register (qubit 0 = most significant)."""
    k = len(qubits)
    if any(not 0 <= q < n_qubits for q in qubits):
        raise BadTargetError(f"qubits {qubits} outside register of {n_qubits}")
    op = matrix.reshape((2,) * (2 * k))
    full = np.eye(1 << n_qubits, dtype=complex).reshape((2,) * (2 * n_qubits))
    # contract op's input legs with the identity's row legs on the target axes
    out = np.tensordot(op, full, axes=(tuple(range(k, 2 * k)), tuple(qubits)))
    order_src = list(range(k))
    moved = np.moveaxis(out, order_src, list(qubits))
    return moved.reshape(1 << n_qubits, 1 << n_qubits)
