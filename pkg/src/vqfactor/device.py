"""Device models: qubit coherence times, coupling strengths, gate durations.

The bundled default model is a 20-qubit fixed-frequency transmon lattice with
per-qubit T1/T2, per-edge residual ZZ strengths (signed, in kHz) and CNOT
durations.  Qubits without a characterized T1/T2 fall back to the device-wide
averages; edges without a calibrated CNOT duration fall back to 315 ns.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources

DEFAULT_SQ_GATE_NS = 35.0
DEFAULT_CNOT_NS = 315.0
DEVICE_FILE_ENV = "VQFACTOR_DEVICE_FILE"


class DeviceError(Exception):
    pass


class SchemaError(DeviceError):
    def __init__(self, key: str, detail: str = ""):
        self.key = key
        super().__init__(f"device file misses or mangles '{key}'" + (f": {detail}" if detail else ""))


class CoherenceError(DeviceError):
    def __init__(self, qubit: int, detail: str):
        self.qubit = qubit
        super().__init__(f"qubit {qubit}: {detail}")


@dataclass(frozen=True)
class QubitSpec:
    index: int
    t1_us: float
    t2_us: float


@dataclass(frozen=True)
class EdgeSpec:
    a: int
    b: int
    xi_khz: float      # residual ZZ strength xi/2pi, signed
    cnot_ns: float

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


@dataclass(frozen=True)
class DeviceModel:
    qubits: tuple[QubitSpec, ...]
    edges: tuple[EdgeSpec, ...]
    sq_gate_ns: float = DEFAULT_SQ_GATE_NS
    _edge_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        seen = set()
        for edge in self.edges:
            if edge.a == edge.b:
                raise SchemaError("edges", f"self-loop on {edge.a}")
            if edge.key in seen:
                raise SchemaError("edges", f"duplicate edge {edge.key}")
            seen.add(edge.key)
            self._edge_index[edge.key] = edge
        known = set()
        for q in self.qubits:
            if q.index in known:
                raise SchemaError("qubits", f"duplicate qubit {q.index}")
            known.add(q.index)
            if not q.t1_us > 0 or not q.t2_us > 0:
                raise CoherenceError(q.index, "non-positive coherence time")
            if q.t2_us > 2 * q.t1_us + 1e-9:
                raise CoherenceError(q.index, f"T2={q.t2_us} exceeds 2*T1={2 * q.t1_us}")

    def qubit(self, index: int) -> QubitSpec:
        for q in self.qubits:
            if q.index == index:
                return q
        raise SchemaError("qubits", f"qubit {index} not in device")

    def edge(self, a: int, b: int) -> EdgeSpec | None:
        return self._edge_index.get((a, b) if a < b else (b, a))

    def neighbors(self, index: int) -> list[int]:
        out = []
        for edge in self.edges:
            if edge.a == index:
                out.append(edge.b)
            elif edge.b == index:
                out.append(edge.a)
        return sorted(out)


def uniform_device(n_qubits: int, t1_us: float = math.inf, t2_us: float = math.inf,
                   xi_khz: float = 0.0, cnot_ns: float = DEFAULT_CNOT_NS,
                   sq_gate_ns: float = DEFAULT_SQ_GATE_NS) -> DeviceModel:
    """Fully connected device with identical qubits; for noise sweeps."""
    qubits = tuple(QubitSpec(i, t1_us, t2_us) for i in range(n_qubits))
    edges = tuple(
        EdgeSpec(a, b, xi_khz, cnot_ns) for a in range(n_qubits) for b in range(a + 1, n_qubits)
    )
    return DeviceModel(qubits, edges, sq_gate_ns)


def _parse_float(entry: dict, key: str, context: str) -> float:
    if key not in entry:
        raise SchemaError(key, f"missing in {context}")
    value = entry[key]
    if value is None:
        return math.inf
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SchemaError(key, f"non-numeric in {context}")
    return float(value)


def device_from_dict(data: dict) -> DeviceModel:
    if "qubits" not in data:
        raise SchemaError("qubits")
    if "edges" not in data:
        raise SchemaError("edges")
    qubits = []
    for entry in data["qubits"]:
        if "id" not in entry:
            raise SchemaError("id", "missing in qubit entry")
        qubits.append(QubitSpec(
            index=int(entry["id"]),
            t1_us=_parse_float(entry, "t1_us", f"qubit {entry['id']}"),
            t2_us=_parse_float(entry, "t2_us", f"qubit {entry['id']}"),
        ))
    edges = []
    for entry in data["edges"]:
        for key in ("a", "b"):
            if key not in entry:
                raise SchemaError(key, "missing in edge entry")
        edges.append(EdgeSpec(
            a=int(entry["a"]),
            b=int(entry["b"]),
            xi_khz=_parse_float(entry, "xi_khz", f"edge {entry['a']}-{entry['b']}"),
            cnot_ns=float(entry.get("cnot_ns", DEFAULT_CNOT_NS)),
        ))
    sq = float(data.get("sq_gate_ns", DEFAULT_SQ_GATE_NS))
    return DeviceModel(tuple(qubits), tuple(edges), sq)


def device_to_dict(device: DeviceModel) -> dict:
    def opt(value: float):
        return None if math.isinf(value) else value

    return {
        "qubits": [{"id": q.index, "t1_us": opt(q.t1_us), "t2_us": opt(q.t2_us)} for q in device.qubits],
        "edges": [
            {"a": e.a, "b": e.b, "xi_khz": e.xi_khz, "cnot_ns": e.cnot_ns} for e in device.edges
        ],
        "sq_gate_ns": device.sq_gate_ns,
    }


def parse_device_model(path: str) -> DeviceModel:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as err:
            raise SchemaError("json", str(err)) from err
    return device_from_dict(data)


def save_device_model(device: DeviceModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(device_to_dict(device), handle, indent=2)
        handle.write("\n")


def default_device_model() -> DeviceModel:
    """Bundled 20-qubit model; override with the VQFACTOR_DEVICE_FILE env var."""
    override = os.environ.get(DEVICE_FILE_ENV)
    if override:
        return parse_device_model(override)
    text = resources.files("vqfactor.data").joinpath("boeblingen.json").read_text()
    return device_from_dict(json.loads(text))
