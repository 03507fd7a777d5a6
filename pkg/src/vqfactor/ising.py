"""Compilation of clause systems into diagonal Pauli-Z cost operators.

Every binary variable maps to (1 - Z)/2 on its qubit; each clause is squared
symbolically and the squares are summed, so the operator's spectrum consists
of non-negative integers and its zero eigenspace is spanned exactly by the
clause-satisfying basis states.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .clauses import BitVar, ClauseSystem, LinExpr

MAX_SYMBOLIC_QUBITS = 24


class IsingError(Exception):
    pass


class TooManyUnknownsError(IsingError):
    pass


class TooManyQubitsError(IsingError):
    pass


class LengthMismatchError(IsingError):
    pass


@dataclass(frozen=True)
class PauliZTerm:
    """A product of Pauli-Z factors on distinct qubits with a real weight."""

    qubits: tuple[int, ...]
    coefficient: float

    @property
    def locality(self) -> int:
        return len(self.qubits)


@dataclass(frozen=True)
class Hamiltonian:
    """Diagonal cost operator: sum of weighted Z-products plus an offset."""

    n_qubits: int
    terms: tuple[PauliZTerm, ...]
    qubit_map: dict[BitVar, int]

    @cached_property
    def diagonal(self) -> np.ndarray:
        """Energies of all computational basis states, index bit k = qubit k."""
        if self.n_qubits > MAX_SYMBOLIC_QUBITS:
            raise TooManyQubitsError(f"{self.n_qubits} qubits exceeds dense bound")
        size = 1 << self.n_qubits
        idx = np.arange(size)
        signs = [1 - 2 * ((idx >> (self.n_qubits - 1 - q)) & 1) for q in range(self.n_qubits)]
        diag = np.zeros(size)
        for term in self.terms:
            prod = np.ones(size)
            for q in term.qubits:
                prod = prod * signs[q]
            diag += term.coefficient * prod
        return diag

    @property
    def offset(self) -> float:
        for term in self.terms:
            if not term.qubits:
                return term.coefficient
        return 0.0

    def interaction_terms(self) -> tuple[PauliZTerm, ...]:
        return tuple(t for t in self.terms if t.qubits)


def _pauli_product(a: dict[tuple[int, ...], float], b: dict[tuple[int, ...], float]):
    """Multiply two Z-polynomials; Z^2 = I makes products symmetric differences."""
    out: dict[tuple[int, ...], float] = {}
    for qa, ca in a.items():
        sa = set(qa)
        for qb, cb in b.items():
            key = tuple(sorted(sa.symmetric_difference(qb)))
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def _clause_operator(clause: LinExpr, qubit_map: dict[BitVar, int]):
    """Z-polynomial of a clause under b -> (1 - Z)/2."""
    poly: dict[tuple[int, ...], float] = {(): float(clause.constant)}
    for mono, coeff in clause.terms:
        factor: dict[tuple[int, ...], float] = {(): 1.0}
        for var in mono:
            factor = _pauli_product(factor, {(): 0.5, (qubit_map[var],): -0.5})
        for key, value in factor.items():
            poly[key] = poly.get(key, 0.0) + coeff * value
    return poly


def assign_qubits(system: ClauseSystem) -> dict[BitVar, int]:
    """Stable qubit numbering: factor bits in index order, then carries."""
    return {var: k for k, var in enumerate(system.sorted_unknowns())}


def compile_hamiltonian(system: ClauseSystem) -> Hamiltonian:
    """Square each clause symbolically and sum into one diagonal operator.

    Recorded zero products are constraints in their own right (clauses
    ``x*y = 0``), so they contribute their square ``x*y`` alongside the column
    clauses; this keeps the zero eigenspace exactly the clause-satisfying set
    even when the clause that produced a zero product has since been folded
    away.
    """
    if len(system.unknowns) > MAX_SYMBOLIC_QUBITS:
        raise TooManyUnknownsError(f"{len(system.unknowns)} unknowns exceed the symbolic bound")
    qubit_map = assign_qubits(system)
    total: dict[tuple[int, ...], float] = {}
    for clause in system.clauses:
        cleaned = clause.drop_monomials(system.zero_products)
        op = _clause_operator(cleaned, qubit_map)
        for key, value in _pauli_product(op, op).items():
            total[key] = total.get(key, 0.0) + value
    for pair in sorted(system.zero_products):
        op = _clause_operator(LinExpr.build(0, {pair: 1}), qubit_map)
        for key, value in op.items():
            total[key] = total.get(key, 0.0) + value
    terms = tuple(
        PauliZTerm(qubits, coeff)
        for qubits, coeff in sorted(total.items(), key=lambda kv: (len(kv[0]), kv[0]))
        if abs(coeff) > 1e-12
    )
    return Hamiltonian(n_qubits=len(system.unknowns), terms=terms, qubit_map=qubit_map)


def energy_of_bitstring(hamiltonian: Hamiltonian, bits: str | list[int]) -> float:
    """Diagonal energy of one basis state; bit k belongs to qubit k."""
    values = [int(b) for b in bits]
    if len(values) != hamiltonian.n_qubits:
        raise LengthMismatchError(f"{len(values)} bits for {hamiltonian.n_qubits} qubits")
    total = 0.0
    for term in hamiltonian.terms:
        sign = 1
        for q in term.qubits:
            sign = -sign if values[q] else sign
        total += term.coefficient * sign
    return total


def ground_states_bruteforce(hamiltonian: Hamiltonian) -> set[str]:
    """All zero-energy basis states by dense enumeration."""
    if hamiltonian.n_qubits > MAX_SYMBOLIC_QUBITS:
        raise TooManyQubitsError(f"{hamiltonian.n_qubits} qubits exceeds enumeration bound")
    diag = hamiltonian.diagonal
    width = hamiltonian.n_qubits
    return {format(i, f"0{width}b") for i in np.flatnonzero(np.abs(diag) < 0.5)}


def locality_histogram(hamiltonian: Hamiltonian) -> dict[int, int]:
    """Term counts by locality, identity offset excluded."""
    hist: dict[int, int] = {}
    for term in hamiltonian.terms:
        if term.qubits:
            hist[term.locality] = hist.get(term.locality, 0) + 1
    return hist


def hamiltonian_to_dict(hamiltonian: Hamiltonian) -> dict:
    return {
        "n_qubits": hamiltonian.n_qubits,
        "terms": [[list(t.qubits), t.coefficient] for t in hamiltonian.terms],
        "qubit_map": {var.name: q for var, q in sorted(hamiltonian.qubit_map.items())},
    }


def hamiltonian_from_dict(data: dict) -> Hamiltonian:
    terms = tuple(PauliZTerm(tuple(qubits), float(coeff)) for qubits, coeff in data["terms"])
    qubit_map = {BitVar.parse(name): q for name, q in data["qubit_map"].items()}
    return Hamiltonian(n_qubits=data["n_qubits"], terms=terms, qubit_map=qubit_map)


def hamiltonian_to_json(hamiltonian: Hamiltonian, indent: int | None = None) -> str:
    return json.dumps(hamiltonian_to_dict(hamiltonian), indent=indent)


def hamiltonian_from_json(text: str) -> Hamiltonian:
    return hamiltonian_from_dict(json.loads(text))
