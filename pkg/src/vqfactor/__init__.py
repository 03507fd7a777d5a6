"""Variational quantum factoring: clause reduction, Ising compilation, QAOA
simulation with damping and residual-ZZ noise, and experiment harnesses."""

__version__ = "0.1.0"

from .clauses import (
    BitVar,
    ClauseSystem,
    ContradictionError,
    LinExpr,
    Monomial,
    build_clauses,
    choose_bit_lengths,
    factor_oracle,
    reconstruct_factors,
    verify_assignment,
)
from .device import DeviceModel, default_device_model, parse_device_model, uniform_device
from .experiments import PRESETS, InstancePreset, resolve_instance
from .ising import (
    Hamiltonian,
    PauliZTerm,
    compile_hamiltonian,
    energy_of_bitstring,
    ground_states_bruteforce,
    locality_histogram,
)
from .noise import (
    CRParams,
    KrausChannel,
    NoiseConfig,
    apply_damping_channel,
    build_xi_generator,
    cr_evolution,
    damping_params_from_coherence,
    ecr_two_pulse,
    noisy_cnot,
    run_circuit,
)
from .preprocessing import (
    PreprocessOptions,
    PreprocessReport,
    apply_rules_once,
    preprocess,
    reduce_biprime,
    reduce_to_width,
)
from .qaoa import (
    OptimizerConfig,
    RunResult,
    Schedule,
    build_ansatz_circuit,
    energy,
    evaluate_schedules,
    gradient,
    layer_grid_sweep,
    refine_parameters,
    run_vqf,
    success_rate,
)
from .simulator import DensityMatrix, StateVector, expectation_value, sample_bitstrings
from .circuits import circuit_metrics, pauli_z_rotation_circuit
