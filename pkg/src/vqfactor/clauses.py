"""Binary-multiplication clause systems for factoring biprimes.

A biprime N = p*q is encoded column by column, longhand style: every output
bit column yields one integer-valued clause over the factor bits p_i, q_j and
carry bits z_{i,j} (a carry from column i into column j).  A clause is
satisfied when it evaluates to zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator, Mapping


class FactoringError(Exception):
    """Base class for clause-system errors."""


class EvenInputError(FactoringError):
    pass


class TooSmallError(FactoringError):
    pass


class InvalidSplitError(FactoringError):
    pass


class ContradictionError(FactoringError):
    """A clause reduced to a non-zero constant: no factorization under this split."""


class MissingVariableError(FactoringError):
    pass


class NotASolutionError(FactoringError):
    pass


class OracleOutOfReachError(FactoringError):
    pass


class VarKind(IntEnum):
    P = 0
    Q = 1
    CARRY = 2


@dataclass(frozen=True, order=True)
class BitVar:
    """One binary variable: a factor bit p_i / q_i, or a carry bit z_{i,j}."""

    kind: VarKind
    i: int
    j: int = 0  # destination column, CARRY only

    def __post_init__(self):
        if self.kind is VarKind.CARRY and self.j <= self.i:
            raise ValueError(f"carry must move up a column: z_{self.i},{self.j}")
        object.__setattr__(self, "_hash", hash((int(self.kind), self.i, self.j)))

    def __hash__(self):
        return self._hash

    @property
    def name(self) -> str:
        if self.kind is VarKind.P:
            return f"p{self.i}"
        if self.kind is VarKind.Q:
            return f"q{self.i}"
        return f"z{self.i}_{self.j}"

    def __repr__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, name: str) -> "BitVar":
        if name.startswith("z"):
            a, b = name[1:].split("_")
            return cls(VarKind.CARRY, int(a), int(b))
        kind = VarKind.P if name[0] == "p" else VarKind.Q
        return cls(kind, int(name[1:]))


def pvar(i: int) -> BitVar:
    return BitVar(VarKind.P, i)


def qvar(i: int) -> BitVar:
    return BitVar(VarKind.Q, i)


def zvar(i: int, j: int) -> BitVar:
    return BitVar(VarKind.CARRY, i, j)


@dataclass(frozen=True, order=True)
class Monomial:
    """A product of distinct binary variables; x*x = x keeps the degree <= 2."""

    variables: tuple[BitVar, ...]

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(self.variables))

    def __hash__(self):
        return self._hash

    @classmethod
    def of(cls, *variables: BitVar) -> "Monomial":
        return cls(tuple(sorted(set(variables))))

    @property
    def degree(self) -> int:
        return len(self.variables)

    def contains(self, var: BitVar) -> bool:
        return var in self.variables

    def __iter__(self) -> Iterator[BitVar]:
        return iter(self.variables)

    def __repr__(self) -> str:
        return "*".join(v.name for v in self.variables) if self.variables else "1"


ONE = Monomial(())


@dataclass(frozen=True)
class LinExpr:
    """Integer-coefficient expression over monomials, kept in normal form."""

    constant: int
    terms: tuple[tuple[Monomial, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.constant, self.terms)))

    def __hash__(self):
        return self._hash

    @classmethod
    def build(cls, constant: int, coeffs: Mapping[Monomial, int]) -> "LinExpr":
        items = tuple(sorted((m, c) for m, c in coeffs.items() if c != 0))
        return cls(constant, items)

    def coeff_map(self) -> dict[Monomial, int]:
        return dict(self.terms)

    def variables(self) -> set[BitVar]:
        return {v for m, _ in self.terms for v in m}

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def evaluate(self, assignment: Mapping[BitVar, int]) -> int:
        total = self.constant
        for mono, coeff in self.terms:
            value = 1
            for var in mono:
                value *= assignment[var]
            total += coeff * value
        return total

    def substitute(self, var: BitVar, const: int, coeff: int, other: BitVar | None) -> "LinExpr":
        """Replace var by the affine expression const + coeff*other."""
        constant = self.constant
        out: dict[Monomial, int] = {}
        for mono, c in self.terms:
            if not mono.contains(var):
                out[mono] = out.get(mono, 0) + c
                continue
            rest = tuple(v for v in mono if v != var)
            if const:
                if rest:
                    m = Monomial(rest)
                    out[m] = out.get(m, 0) + c * const
                else:
                    constant += c * const
            if coeff and other is not None:
                m = Monomial.of(other, *rest)
                out[m] = out.get(m, 0) + c * coeff
        return LinExpr.build(constant, out)

    def drop_monomials(self, dead: Iterable[Monomial]) -> "LinExpr":
        dead = set(dead)
        kept = {m: c for m, c in self.terms if m not in dead}
        if len(kept) == len(self.terms):
            return self
        return LinExpr.build(self.constant, kept)

    def __repr__(self) -> str:
        parts = [str(self.constant)] if self.constant or not self.terms else []
        for mono, coeff in self.terms:
            parts.append(f"{coeff:+d}*{mono!r}")
        return " ".join(parts)


@dataclass(frozen=True)
class Affine:
    """Value of an eliminated variable: const + coeff * var (or a bare constant)."""

    const: int
    coeff: int = 0
    var: BitVar | None = None


@dataclass
class ClauseSystem:
    """Clauses for N = p*q plus the deductions made against them so far.

    Every variable ever created lives in exactly one of ``unknowns``,
    ``fixed`` or ``identifications``; re-applying fixed values and
    identifications to ``original_clauses`` reproduces ``clauses``.
    """

    N: int
    n_p: int
    n_q: int
    clauses: list[LinExpr]
    unknowns: set[BitVar]
    fixed: dict[BitVar, int]
    identifications: dict[BitVar, Affine]
    zero_products: set[Monomial]
    original_clauses: tuple[LinExpr, ...]

    def copy(self) -> "ClauseSystem":
        return ClauseSystem(
            N=self.N,
            n_p=self.n_p,
            n_q=self.n_q,
            clauses=list(self.clauses),
            unknowns=set(self.unknowns),
            fixed=dict(self.fixed),
            identifications=dict(self.identifications),
            zero_products=set(self.zero_products),
            original_clauses=self.original_clauses,
        )

    def sorted_unknowns(self) -> list[BitVar]:
        return sorted(self.unknowns)

    def resolve(self, var: BitVar, bits: Mapping[BitVar, int]) -> int:
        """Value of any variable given values for the current unknowns."""
        seen = set()
        const, coeff = 0, 1
        while True:
            if var in seen:
                raise FactoringError(f"identification cycle at {var}")
            seen.add(var)
            if var in self.fixed:
                return const + coeff * self.fixed[var]
            if var in self.identifications:
                aff = self.identifications[var]
                const, coeff = const + coeff * aff.const, coeff * aff.coeff
                if aff.var is None:
                    return const
                var = aff.var
                continue
            if var not in bits:
                raise MissingVariableError(f"no value for unknown {var}")
            return const + coeff * bits[var]

    def full_assignment(self, bits: Mapping[BitVar, int]) -> dict[BitVar, int]:
        out: dict[BitVar, int] = {}
        for var in self.unknowns | set(self.fixed) | set(self.identifications):
            value = self.resolve(var, bits)
            if value not in (0, 1):
                raise NotASolutionError(f"{var} resolves to {value}")
            out[var] = value
        return out


def _column_products(N_bits_p: int, n_p: int, n_q: int, i: int):
    """(constant, monomials) of sum_j q_j * p_{i-j} with boundary bits folded in."""

    def factor_bit(kind: VarKind, k: int, width: int):
        if k == 0 or k == width - 1:
            return 1, None
        return None, BitVar(kind, k)

    const = 0
    monos: list[Monomial] = []
    for j in range(n_q):
        k = i - j
        if not 0 <= k < n_p:
            continue
        qc, qv = factor_bit(VarKind.Q, j, n_q)
        pc, pv = factor_bit(VarKind.P, k, n_p)
        if qv is None and pv is None:
            const += 1
        elif qv is None:
            monos.append(Monomial.of(pv))
        elif pv is None:
            monos.append(Monomial.of(qv))
        else:
            monos.append(Monomial.of(pv, qv))
    return const, monos


def choose_bit_lengths(N: int) -> list[tuple[int, int]]:
    """Candidate (n_p, n_q) factor bit-length splits, most balanced first.

    A product of an n_p-bit and an n_q-bit integer has n_p + n_q or
    n_p + n_q - 1 bits, so only splits with n_p + n_q in {n, n+1} can work.
    """
    if N < 9:
        raise TooSmallError(f"N={N} is below the smallest odd biprime 9")
    if N % 2 == 0:
        raise EvenInputError(f"N={N} is even")
    n = N.bit_length()
    pairs = []
    for total in (n, n + 1):
        for n_q in range(2, total // 2 + 1):
            pairs.append((total - n_q, n_q))
    pairs.sort(key=lambda pq: (pq[0] - pq[1], pq[0]))
    return pairs


def build_clauses(N: int, n_p: int, n_q: int) -> ClauseSystem:
    """Build the column clauses for N = p*q with the given factor bit lengths.

    The low bits p_0 = q_0 = 1 (N odd) and the leading bits
    p_{n_p-1} = q_{n_q-1} = 1 are pre-fixed; columns whose sum is fully
    constant are folded away on the spot, propagating their carries as
    constants.  Carry variables are allocated per column from the column-sum
    upper bound.
    """
    n = N.bit_length()
    if n_p + n_q not in (n, n + 1):
        raise InvalidSplitError(f"n_p + n_q = {n_p + n_q} incompatible with {n}-bit N")
    if min(n_p, n_q) < 2:
        raise InvalidSplitError("factors need at least 2 bits each")

    top = n_p + n_q - 1
    incoming_const = [0] * (top + 1)
    incoming_vars: list[list[BitVar]] = [[] for _ in range(top + 1)]
    clauses: list[LinExpr] = []
    carry_vars: list[BitVar] = []

    for i in range(top + 1):
        n_i = (N >> i) & 1
        const, monos = _column_products(N, n_p, n_q, i)
        const += incoming_const[i]
        monos = monos + [Monomial.of(z) for z in incoming_vars[i]]

        if not monos:
            diff = const - n_i
            if diff < 0 or diff % 2:
                raise ContradictionError(f"column {i} cannot balance: {const} vs bit {n_i}")
            value, j = diff // 2, 1
            while value:
                if value & 1:
                    if i + j > top:
                        raise ContradictionError(f"column {i} overflows past column {top}")
                    incoming_const[i + j] += 1
                value >>= 1
                j += 1
            continue

        bound = const + len(monos)
        coeffs: dict[Monomial, int] = {}
        for mono in monos:
            coeffs[mono] = coeffs.get(mono, 0) - 1
        n_carries = ((bound - n_i) // 2).bit_length()
        for j in range(1, n_carries + 1):
            if i + j > top:
                break
            z = zvar(i, i + j)
            carry_vars.append(z)
            incoming_vars[i + j].append(z)
            coeffs[Monomial.of(z)] = 2**j
        clauses.append(LinExpr.build(n_i - const, coeffs))

    unknowns = {v for c in clauses for v in c.variables()}
    fixed = {pvar(0): 1, qvar(0): 1, pvar(n_p - 1): 1, qvar(n_q - 1): 1}
    return ClauseSystem(
        N=N,
        n_p=n_p,
        n_q=n_q,
        clauses=clauses,
        unknowns=unknowns,
        fixed=fixed,
        identifications={},
        zero_products=set(),
        original_clauses=tuple(clauses),
    )


def verify_assignment(system: ClauseSystem, bits: Mapping[BitVar, int]) -> bool:
    """True iff the assignment of the current unknowns satisfies every original clause."""
    missing = system.unknowns - set(bits)
    if missing:
        raise MissingVariableError(f"assignment misses {sorted(missing)}")
    try:
        full = system.full_assignment(bits)
    except NotASolutionError:
        return False
    return all(clause.evaluate(full) == 0 for clause in system.original_clauses)


def reconstruct_factors(system: ClauseSystem, bits: Mapping[BitVar, int]) -> tuple[int, int]:
    """Assemble (p, q) from a clause-satisfying assignment."""
    if not verify_assignment(system, bits):
        raise NotASolutionError("assignment does not satisfy the clause system")
    full = system.full_assignment(bits)
    p = sum(full.get(pvar(k), 0) << k for k in range(system.n_p))
    q = sum(full.get(qvar(k), 0) << k for k in range(system.n_q))
    if p * q != system.N:
        raise NotASolutionError(f"reconstructed {p}*{q} != {system.N}")
    return p, q


TRIAL_DIVISION_BOUND = 1 << 25


def factor_oracle(N: int) -> tuple[int, int]:
    """Deterministic trial-division factorization of an odd biprime."""
    if N % 2 == 0 or N < 9:
        raise OracleOutOfReachError(f"N={N} is not an odd biprime candidate")
    limit = min(math.isqrt(N), TRIAL_DIVISION_BOUND)
    for d in range(3, limit + 1, 2):
        if N % d == 0:
            return d, N // d
    raise OracleOutOfReachError(f"no factor of {N} below min(sqrt(N), 2^25)")


def system_to_dict(system: ClauseSystem) -> dict:
    def expr_to_list(expr: LinExpr):
        return {
            "constant": expr.constant,
            "terms": [[c, [v.name for v in m]] for m, c in expr.terms],
        }

    def affine_to_dict(aff: Affine):
        return {"const": aff.const, "coeff": aff.coeff, "var": aff.var.name if aff.var else None}

    return {
        "N": system.N,
        "n_p": system.n_p,
        "n_q": system.n_q,
        "clauses": [expr_to_list(c) for c in system.clauses],
        "original_clauses": [expr_to_list(c) for c in system.original_clauses],
        "fixed": {v.name: val for v, val in sorted(system.fixed.items())},
        "identifications": {v.name: affine_to_dict(a) for v, a in sorted(system.identifications.items())},
        "zero_products": [[v.name for v in m] for m in sorted(system.zero_products)],
        "unknowns": [v.name for v in system.sorted_unknowns()],
    }


def system_from_dict(data: dict) -> ClauseSystem:
    def expr_from(entry) -> LinExpr:
        coeffs = {Monomial.of(*(BitVar.parse(n) for n in names)): c for c, names in entry["terms"]}
        return LinExpr.build(entry["constant"], coeffs)

    def affine_from(entry) -> Affine:
        var = BitVar.parse(entry["var"]) if entry["var"] else None
        return Affine(entry["const"], entry["coeff"], var)

    return ClauseSystem(
        N=data["N"],
        n_p=data["n_p"],
        n_q=data["n_q"],
        clauses=[expr_from(e) for e in data["clauses"]],
        unknowns={BitVar.parse(n) for n in data["unknowns"]},
        fixed={BitVar.parse(n): v for n, v in data["fixed"].items()},
        identifications={BitVar.parse(n): affine_from(a) for n, a in data["identifications"].items()},
        zero_products={Monomial.of(*(BitVar.parse(n) for n in names)) for names in data["zero_products"]},
        original_clauses=tuple(expr_from(e) for e in data["original_clauses"]),
    )


def system_to_json(system: ClauseSystem, indent: int | None = None) -> str:
    return json.dumps(system_to_dict(system), indent=indent)


def system_from_json(text: str) -> ClauseSystem:
    return system_from_dict(json.loads(text))
