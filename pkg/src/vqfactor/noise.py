"""Incoherent damping channels and the coherent ZZ-perturbed CNOT model.

The CNOT is decomposed (up to a global phase folded into the echoed factor)
as single-qubit rotations around an entangling ZX quarter-turn:

    CNOT = e^{i pi/4} * Rz(pi/2)_c * CR(t) * Rx(pi/2)_t,   CR(t) = e^{i Gamma ZX t}

with Gamma * t = pi/4.  Residual ZZ coupling perturbs the entangling segment
to e^{i (Gamma ZX + Xi) t}, where Xi collects ZZ terms between the drive pair
and, optionally, their mapped spectator neighbours.  The echoed two-pulse
variant flips the drive sign between segments while Xi stays put:

    ECR(t) = X_c * e^{i(-Gamma ZX + Xi) t/2} * X_c * e^{i(Gamma ZX + Xi) t/2}

which coincides with CR(t) exactly when Xi = 0.  Damping channels with
per-qubit rates derived from T1/T2 and the gate duration follow every gate in
the damping modes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .circuits import Circuit, Gate, rx_matrix, rz_matrix
from .device import DEFAULT_CNOT_NS, DeviceModel
from .simulator import DensityMatrix, InvalidChannelError, StateVector

TWO_PI = 2.0 * math.pi
CPTP_TOL = 1e-12

MODES = ("ideal", "damping", "zz", "damping_and_zz")
CR_SCHEMES = ("single_pulse", "ecr_two_pulse")

_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


class NoiseError(Exception):
    pass


class InvalidCoherenceError(NoiseError):
    pass


class BadPairError(NoiseError):
    pass


class MapMismatchError(NoiseError):
    pass


def damping_params_from_coherence(t1_us: float, t2_us: float, t_gate_ns: float) -> tuple[float, float]:
    """Per-gate relaxation and dephasing probabilities from coherence times.

    eps_r = 1 - exp(-t/T1); eps_d = 1 - exp(-t/T_phi) with
    1/T_phi = 1/T2 - 1/(2 T1).  Infinite T1/T2 yield a noiseless gate.
    """
    if t_gate_ns < 0:
        raise ValueError("gate duration must be non-negative")
    if not t1_us > 0 or not t2_us > 0:
        raise InvalidCoherenceError("coherence times must be positive")
    if t2_us > 2 * t1_us + 1e-9:
        raise InvalidCoherenceError(f"T2={t2_us} exceeds 2*T1={2 * t1_us}")
    t_us = t_gate_ns * 1e-3
    eps_r = -math.expm1(-t_us / t1_us) if math.isfinite(t1_us) else 0.0
    inv_t_phi = (1.0 / t2_us if math.isfinite(t2_us) else 0.0) - (
        0.5 / t1_us if math.isfinite(t1_us) else 0.0
    )
    inv_t_phi = max(inv_t_phi, 0.0)
    eps_d = -math.expm1(-t_us * inv_t_phi)
    return eps_r, eps_d


def damping_kraus(eps_r: float, eps_d: float) -> list[np.ndarray]:
    """Combined relaxation + dephasing Kraus set (complete by construction)."""
    if eps_r < 0 or eps_d < 0 or eps_r + eps_d > 1:
        raise InvalidChannelError(f"eps_r={eps_r}, eps_d={eps_d} outside the physical region")
    e1 = np.array([[1, 0], [0, math.sqrt(1 - eps_r - eps_d)]], dtype=complex)
    e2 = np.array([[0, math.sqrt(eps_r)], [0, 0]], dtype=complex)
    e3 = np.array([[0, 0], [0, math.sqrt(eps_d)]], dtype=complex)
    return [e1, e2, e3]


@dataclass(frozen=True)
class KrausChannel:
    """A single-qubit CPTP map given by explicit Kraus operators."""

    operators: tuple[np.ndarray, ...]
    qubit: int

    def __post_init__(self):
        total = sum(op.conj().T @ op for op in self.operators)
        defect = np.max(np.abs(total - np.eye(total.shape[0])))
        if defect > CPTP_TOL:
            raise InvalidChannelError(f"completeness defect {defect:.2e}")

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        rho.apply_kraus(list(self.operators), (self.qubit,))
        return rho


def apply_damping_channel(rho: DensityMatrix, qubit: int, eps_r: float, eps_d: float) -> DensityMatrix:
    """Relaxation-plus-dephasing channel on one qubit of a density matrix."""
    return KrausChannel(tuple(damping_kraus(eps_r, eps_d)), qubit).apply(rho)


@dataclass(frozen=True)
class CRParams:
    """Cross-resonance segment: ZX rate, duration, and ZZ perturbation terms."""

    gamma: float                                      # rad/ns
    t_ns: float
    xi_terms: tuple[tuple[tuple[int, int], float], ...] = ()  # ((qubit, qubit), rad/ns)

    @classmethod
    def cnot_calibrated(cls, t_ns: float, xi_terms=()) -> "CRParams":
        return cls(gamma=math.pi / (4.0 * t_ns), t_ns=t_ns, xi_terms=tuple(xi_terms))


@dataclass(frozen=True)
class NoiseConfig:
    """What noise to simulate and how logical qubits sit on the device."""

    mode: str = "ideal"
    cr_scheme: str = "single_pulse"
    spectators: bool = False
    device: DeviceModel | None = None
    mapping: tuple[int, ...] | None = None   # logical index -> device qubit

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.cr_scheme not in CR_SCHEMES:
            raise ValueError(f"cr_scheme must be one of {CR_SCHEMES}")
        if self.mapping is not None and len(set(self.mapping)) != len(self.mapping):
            raise MapMismatchError("qubit mapping must be injective")

    @property
    def with_damping(self) -> bool:
        return self.mode in ("damping", "damping_and_zz")

    @property
    def with_zz(self) -> bool:
        return self.mode in ("zz", "damping_and_zz")

    def physical(self, logical: int) -> int:
        if self.mapping is None:
            return logical
        if logical >= len(self.mapping):
            raise MapMismatchError(f"logical qubit {logical} outside mapping {self.mapping}")
        return self.mapping[logical]

    def logical_of(self, physical: int) -> int | None:
        if self.mapping is None:
            return physical
        try:
            return self.mapping.index(physical)
        except ValueError:
            return None


IDEAL = NoiseConfig()


def xi_rad_per_ns(xi_khz: float) -> float:
    return TWO_PI * xi_khz * 1e-6


def build_xi_generator(config: NoiseConfig, control: int, target: int) -> list[tuple[tuple[int, int], float]]:
    """ZZ perturbation terms, in register coordinates, for a CNOT on (control, target).

    Always includes the drive pair (strength 0 when the device lacks the
    edge); with spectators on, adds one term per mapped device-neighbour of
    control and of target.
    """
    device = config.device
    if device is None:
        return []
    pc, pt = config.physical(control), config.physical(target)
    edge = device.edge(pc, pt)
    if edge is None:
        warnings.warn(f"no device edge {pc}-{pt}; treating residual coupling as zero", stacklevel=2)
        terms = [((control, target), 0.0)]
    else:
        terms = [((control, target), xi_rad_per_ns(edge.xi_khz))]
    if config.spectators:
        for anchor_logical, anchor_physical, excluded in ((control, pc, pt), (target, pt, pc)):
            for neighbour in device.neighbors(anchor_physical):
                if neighbour == excluded:
                    continue
                logical = config.logical_of(neighbour)
                if logical is None:
                    continue
                spec_edge = device.edge(anchor_physical, neighbour)
                terms.append(((anchor_logical, logical), xi_rad_per_ns(spec_edge.xi_khz)))
    return terms


def _embed_pauli(op_by_qubit: dict[int, np.ndarray], support: tuple[int, ...]) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    for q in support:
        out = np.kron(out, op_by_qubit.get(q, np.eye(2, dtype=complex)))
    return out


def cr_generator(params: CRParams, control: int, target: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Hermitian generator Gamma*ZX + Xi on the sorted support qubits."""
    if control == target:
        raise BadPairError("control and target coincide")
    involved = {control, target}
    for (a, b), _ in params.xi_terms:
        if control not in (a, b) and target not in (a, b):
            raise BadPairError(f"perturbation pair {(a, b)} touches neither drive qubit")
        involved.update((a, b))
    support = tuple(sorted(involved))
    gen = params.gamma * _embed_pauli({control: _Z, target: _X}, support)
    for (a, b), xi in params.xi_terms:
        if a == b:
            raise BadPairError(f"degenerate ZZ pair {(a, b)}")
        gen = gen + xi * _embed_pauli({a: _Z, b: _Z}, support)
    return gen, support


def cr_unitary(params: CRParams, control: int, target: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """exp(i (Gamma ZX + Xi) t) on the support qubits."""
    gen, support = cr_generator(params, control, target)
    return expm(1j * params.t_ns * gen), support


def ecr_unitary(params: CRParams, control: int, target: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Echoed two-pulse sequence with the drive sign flipped between halves."""
    gen_pos, support = cr_generator(params, control, target)
    flipped = CRParams(-params.gamma, params.t_ns, params.xi_terms)
    gen_neg, _ = cr_generator(flipped, control, target)
    x_on_control = _embed_pauli({control: _X}, support)
    half = 0.5j * params.t_ns
    return (
        x_on_control @ expm(half * gen_neg) @ x_on_control @ expm(half * gen_pos),
        support,
    )


def cr_evolution(state, params: CRParams, control: int, target: int):
    """Apply the (possibly perturbed) cross-resonance segment exactly."""
    matrix, support = cr_unitary(params, control, target)
    state.apply_unitary(matrix, support)
    return state


def ecr_two_pulse(state, params: CRParams, control: int, target: int):
    """Apply the echoed two-pulse cross-resonance segment exactly."""
    matrix, support = ecr_unitary(params, control, target)
    state.apply_unitary(matrix, support)
    return state


def cnot_segment_unitary(config: NoiseConfig, control: int, target: int) -> tuple[np.ndarray, tuple[int, ...], float]:
    """Full CNOT replacement unitary under the config's coherent model.

    Returns (matrix, support qubits, duration ns); matrix includes the
    single-qubit factors and the global phase, so it equals CNOT exactly when
    the perturbation vanishes.
    """
    duration = cnot_duration_ns(config, control, target)
    xi_terms = build_xi_generator(config, control, target) if config.with_zz else []
    params = CRParams.cnot_calibrated(duration, xi_terms)
    if config.cr_scheme == "ecr_two_pulse":
        segment, support = ecr_unitary(params, control, target)
    else:
        segment, support = cr_unitary(params, control, target)
    rz_c = _embed_pauli({control: rz_matrix(math.pi / 2)}, support)
    rx_t = _embed_pauli({target: rx_matrix(math.pi / 2)}, support)
    matrix = np.exp(0.25j * math.pi) * (rz_c @ segment @ rx_t)
    return matrix, support, duration


def cnot_duration_ns(config: NoiseConfig, control: int, target: int) -> float:
    if config.device is None:
        return DEFAULT_CNOT_NS
    edge = config.device.edge(config.physical(control), config.physical(target))
    return edge.cnot_ns if edge is not None else DEFAULT_CNOT_NS


class CircuitRunner:
    """Executes circuits under one noise configuration, caching gate payloads."""

    def __init__(self, n_qubits: int, config: NoiseConfig | None = None):
        self.n_qubits = n_qubits
        self.config = config or IDEAL
        if self.config.mapping is not None and len(self.config.mapping) < n_qubits:
            raise MapMismatchError(
                f"mapping covers {len(self.config.mapping)} qubits, register has {n_qubits}"
            )
        self._cnot_cache: dict[tuple[int, int], tuple[np.ndarray, tuple[int, ...], float]] = {}
        self._kraus_cache: dict[tuple[int, float], list[np.ndarray]] = {}

    def fresh_state(self):
        if self.config.with_damping:
            return DensityMatrix(self.n_qubits)
        return StateVector(self.n_qubits)

    def _damping_ops(self, logical: int, duration_ns: float) -> list[np.ndarray]:
        key = (logical, duration_ns)
        ops = self._kraus_cache.get(key)
        if ops is None:
            spec = self.config.device.qubit(self.config.physical(logical))
            eps_r, eps_d = damping_params_from_coherence(spec.t1_us, spec.t2_us, duration_ns)
            ops = damping_kraus(eps_r, eps_d)
            self._kraus_cache[key] = ops
        return ops

    def _damp(self, state, qubits: tuple[int, ...], duration_ns: float) -> None:
        if not self.config.with_damping:
            return
        for q in qubits:
            state.apply_kraus(self._damping_ops(q, duration_ns), (q,))

    def _cnot_payload(self, control: int, target: int):
        key = (control, target)
        payload = self._cnot_cache.get(key)
        if payload is None:
            payload = cnot_segment_unitary(self.config, control, target)
            self._cnot_cache[key] = payload
        return payload

    def apply_gate(self, state, gate: Gate) -> None:
        if gate.name == "cnot" and self.config.with_zz:
            matrix, support, duration = self._cnot_payload(*gate.qubits)
            state.apply_unitary(matrix, support)
            self._damp(state, gate.qubits, duration)
            return
        state.apply_gate(gate)
        if gate.name == "cnot":
            duration = cnot_duration_ns(self.config, *gate.qubits)
            self._damp(state, gate.qubits, duration)
        else:
            sq_ns = self.config.device.sq_gate_ns if self.config.device else 0.0
            self._damp(state, gate.qubits, sq_ns)

    def run(self, circuit: Circuit, state=None):
        if state is None:
            state = self.fresh_state()
        for gate in circuit:
            self.apply_gate(state, gate)
        return state


def noisy_cnot(state, config: NoiseConfig, control: int, target: int):
    """One CNOT under the configured noise, on an existing state."""
    runner = CircuitRunner(state.n_qubits, config)
    runner.apply_gate(state, Gate("cnot", (control, target)))
    return state


def run_circuit(circuit: Circuit, n_qubits: int, config: NoiseConfig | None = None):
    """Simulate a circuit from |0...0> under the given noise configuration."""
    return CircuitRunner(n_qubits, config).run(circuit)
