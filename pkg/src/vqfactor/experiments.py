"""Figure-class experiments as plain row generators.

Every function returns lists of dictionaries (one per CSV row) so the CLI
only formats and writes; rows are reproducible given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clauses import ClauseSystem
from .device import DeviceModel, uniform_device
from .ising import Hamiltonian, compile_hamiltonian, locality_histogram
from .noise import IDEAL, NoiseConfig
from .preprocessing import reduce_biprime, reduce_to_width
from .qaoa import (
    AnsatzEvaluator,
    OptimizerConfig,
    RunResult,
    Schedule,
    evaluate_schedules,
    layer_grid_sweep,
    run_vqf,
    solution_mask,
)

AVERAGE_T1_US = 64.0
AVERAGE_T2_US = 82.0
AVERAGE_XI_KHZ = 102.0
SWEEP_GATE_NS = 315.0


@dataclass(frozen=True)
class InstancePreset:
    """A named biprime with its bit-length split, qubit budget, and mapping."""

    name: str
    N: int
    split: tuple[int, int]
    expected_unknowns: int
    qubit_mapping: tuple[int, ...]
    grid_resolution: float

    def __post_init__(self):
        if len(self.qubit_mapping) != self.expected_unknowns:
            raise ValueError(f"preset {self.name}: mapping does not match qubit budget")

    def reduce(self):
        return reduce_to_width(self.N, self.expected_unknowns, split=self.split)


PRESETS: dict[str, InstancePreset] = {
    preset.name: preset
    for preset in (
        InstancePreset("1099551473989", 1099551473989, (21, 21), 3, (0, 1, 2), math.pi / 6),
        InstancePreset("3127", 3127, (6, 6), 4, (0, 1, 2, 3), 2 * math.pi / 23),
        InstancePreset("6557", 6557, (7, 7), 5, (6, 7, 12, 8, 3), 2 * math.pi / 23),
        InstancePreset("297491", 297491, (10, 10), 4, (6, 7, 8, 12), 2 * math.pi / 23),
    )
}


def resolve_instance(token: str) -> tuple[ClauseSystem, Hamiltonian, InstancePreset | None]:
    """A preset name or integer literal -> reduced system plus Hamiltonian."""
    preset = PRESETS.get(token)
    if preset is not None:
        system, _ = preset.reduce()
    else:
        system, _ = reduce_biprime(int(token))
    return system, compile_hamiltonian(system), preset


def run_rows(token: str, result: RunResult, noise: NoiseConfig, config: OptimizerConfig) -> list[dict]:
    rows = []
    for record in result.layers:
        rows.append({
            "instance": token,
            "p": record.p,
            "mode": noise.mode,
            "cr_scheme": noise.cr_scheme,
            "spectators": int(noise.spectators),
            "energy": f"{record.energy:.12g}",
            "success_exact": f"{record.success_exact:.12g}",
            "success_sampled": "" if record.success_sampled is None else f"{record.success_sampled:.12g}",
            "shots": record.shots,
            "seed": config.seed,
            "cnots": record.metrics["cnots"],
            "depth": record.metrics["depth"],
        })
    return rows


def landscape_rows(system: ClauseSystem, hamiltonian: Hamiltonian, layer: int,
                   resolution: float, noise: NoiseConfig | None = None,
                   config: OptimizerConfig | None = None) -> list[dict]:
    """Energy grid of one layer, earlier layers at their ideal-protocol optima."""
    config = config or OptimizerConfig(grid_resolution=resolution)
    if layer < 1:
        raise ValueError("layers are numbered from 1")
    prefix = Schedule()
    if layer > 1:
        ideal_run = run_vqf(system, hamiltonian, layer - 1, config)
        prefix = ideal_run.layers[-1].schedule
    grid = layer_grid_sweep(hamiltonian, layer - 1, prefix, resolution, noise=noise)
    rows = []
    for i, gamma in enumerate(grid.gamma_values):
        for j, beta in enumerate(grid.beta_values):
            rows.append({
                "layer": layer,
                "gamma": f"{gamma:.12g}",
                "beta": f"{beta:.12g}",
                "energy": f"{grid.energies[i, j]:.12g}",
            })
    return rows


def ideal_schedules(system: ClauseSystem, hamiltonian: Hamiltonian, p_max: int,
                    config: OptimizerConfig) -> list:
    """Optimized schedule for each depth 0..p_max from the ideal protocol."""
    result = run_vqf(system, hamiltonian, p_max, config)
    return [record.schedule for record in result.layers]


def noise_sweep_rows(system: ClauseSystem, hamiltonian: Hamiltonian, p_max: int,
                     config: OptimizerConfig | None = None,
                     t2_grid_us: tuple[float, ...] = (10.0, 25.0, 50.0, 100.0),
                     t1_grid_us: tuple[float, ...] = (10.0, 25.0, 50.0, 100.0),
                     xi_grid_khz: tuple[float, ...] = (10.0, 25.0, 50.0, 100.0),
                     gate_ns: float = SWEEP_GATE_NS) -> list[dict]:
    """Success-rate curves for isolated phase damping, amplitude damping, and ZZ.

    Parameters are tuned once with the ideal protocol; each noise channel then
    re-evaluates those schedules, showing what the channel alone does to the
    tuned circuit.  Phase damping rows use T1 = inf with the given T2;
    amplitude damping rows use T2 = 2*T1 (no excess dephasing); ZZ rows use a
    uniform coupling at the given strength with single-pulse CNOTs.
    """
    config = config or OptimizerConfig(gradient_method="adjoint")
    n = hamiltonian.n_qubits
    schedules = ideal_schedules(system, hamiltonian, p_max, config)
    rows: list[dict] = []

    def add_curve(label: str, value: float, noise: NoiseConfig | None) -> None:
        for p, (energy, success) in enumerate(
            evaluate_schedules(system, hamiltonian, schedules, noise)
        ):
            rows.append({
                "channel": label,
                "value": f"{value:.12g}",
                "p": p,
                "energy": f"{energy:.12g}",
                "success_exact": f"{success:.12g}",
            })

    add_curve("ideal", 0.0, IDEAL)
    for t2 in t2_grid_us:
        device = uniform_device(n, t1_us=math.inf, t2_us=t2, cnot_ns=gate_ns, sq_gate_ns=gate_ns)
        add_curve("phase_damping_t2_us", t2, NoiseConfig(mode="damping", device=device))
    for t1 in t1_grid_us:
        device = uniform_device(n, t1_us=t1, t2_us=2 * t1, cnot_ns=gate_ns, sq_gate_ns=gate_ns)
        add_curve("amplitude_damping_t1_us", t1, NoiseConfig(mode="damping", device=device))
    for xi in xi_grid_khz:
        device = uniform_device(n, xi_khz=xi, cnot_ns=gate_ns, sq_gate_ns=gate_ns)
        add_curve("zz_khz", xi, NoiseConfig(mode="zz", device=device))
    return rows


def _sieve_primes(limit: int) -> list[int]:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for k in range(2, int(limit**0.5) + 1):
        if flags[k]:
            flags[k * k :: k] = False
    return [int(v) for v in np.flatnonzero(flags)]


def random_biprimes(bits: int, count: int, rng: np.random.Generator) -> list[int]:
    """Distinct odd biprimes with exactly the requested bit length."""
    half = bits // 2 + 2
    primes = [p for p in _sieve_primes(1 << half) if p > 2]
    chosen: set[int] = set()
    attempts = 0
    while len(chosen) < count and attempts < 20000:
        p, q = rng.choice(len(primes), size=2)
        candidate = primes[p] * primes[q]
        attempts += 1
        if candidate.bit_length() == bits:
            chosen.add(candidate)
    return sorted(chosen)


def scaling_rows(max_bits: int, samples: int, seed: int, min_bits: int = 6) -> list[dict]:
    """Unknown counts and locality histograms over random biprimes per bit length."""
    rng = np.random.default_rng(seed)
    rows = []
    for bits in range(min_bits, max_bits + 1):
        for N in random_biprimes(bits, samples, rng):
            system, _ = reduce_biprime(N)
            hist = {1: 0, 2: 0, 3: 0, 4: 0}
            if len(system.unknowns) <= 20:
                hist.update(locality_histogram(compile_hamiltonian(system)))
            rows.append({
                "N": N,
                "n": bits,
                "qubits_after": len(system.unknowns),
                "local1": hist[1],
                "local2": hist[2],
                "local3": hist[3],
                "local4": hist[4],
            })
    return rows
