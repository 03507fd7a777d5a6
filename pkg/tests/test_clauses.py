"""Clause construction, preprocessing rules, and reduction soundness."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from vqfactor.clauses import (
    Affine,
    BitVar,
    ClauseSystem,
    ContradictionError,
    EvenInputError,
    InvalidSplitError,
    LinExpr,
    Monomial,
    MissingVariableError,
    NotASolutionError,
    OracleOutOfReachError,
    TooSmallError,
    build_clauses,
    choose_bit_lengths,
    factor_oracle,
    pvar,
    qvar,
    reconstruct_factors,
    system_from_json,
    system_to_json,
    verify_assignment,
    zvar,
)
from vqfactor.preprocessing import (
    apply_rules_once,
    preprocess,
    reduce_biprime,
    reduce_to_width,
)

SMALL_PRIMES = [3, 5, 7, 11, 13, 17, 19, 23]  # keeps brute-force spaces tractable


def brute_force_solutions(system: ClauseSystem) -> set[tuple]:
    """Full assignments satisfying all original clauses, from the current unknowns."""
    unknowns = system.sorted_unknowns()
    found = set()
    for values in itertools.product((0, 1), repeat=len(unknowns)):
        bits = dict(zip(unknowns, values))
        try:
            full = system.full_assignment(bits)
        except NotASolutionError:
            continue
        if all(c.evaluate(full) == 0 for c in system.original_clauses):
            found.add(tuple(sorted((v.name, val) for v, val in full.items())))
    return found


def make_system(clauses, unknowns):
    return ClauseSystem(
        N=0, n_p=0, n_q=0,
        clauses=list(clauses),
        unknowns=set(unknowns),
        fixed={}, identifications={}, zero_products=set(),
        original_clauses=tuple(clauses),
    )


def longhand_assignment(p, q, n_p, n_q):
    """Factor bits and canonical carries from the column-by-column sums."""
    bits = {}
    for k in range(n_p):
        bits[pvar(k)] = (p >> k) & 1
    for k in range(n_q):
        bits[qvar(k)] = (q >> k) & 1
    top = n_p + n_q - 1
    incoming = [0] * (top + 1)
    target = p * q
    for i in range(top + 1):
        total = incoming[i] + sum(
            bits[qvar(j)] * bits[pvar(i - j)] for j in range(n_q) if 0 <= i - j < n_p
        )
        carry = (total - ((target >> i) & 1)) // 2
        b = 0
        while carry:
            if carry & 1:
                bits[zvar(i, i + 1 + b)] = 1
                incoming[i + 1 + b] += 1
            carry >>= 1
            b += 1
    return bits


class TestChooseBitLengths:
    def test_3127_contains_balanced_split(self):
        assert (6, 6) in choose_bit_lengths(3127)

    def test_6557_contains_balanced_split(self):
        assert (7, 7) in choose_bit_lengths(6557)

    def test_nine(self):
        assert (2, 2) in choose_bit_lengths(9)

    def test_sorted_by_imbalance(self):
        pairs = choose_bit_lengths(3127)
        gaps = [a - b for a, b in pairs]
        assert gaps == sorted(gaps)
        assert all(a >= b >= 2 for a, b in pairs)
        n = 3127 .bit_length()
        assert all(a + b in (n, n + 1) for a, b in pairs)

    def test_even_input_rejected(self):
        with pytest.raises(EvenInputError):
            choose_bit_lengths(1000)

    def test_too_small_rejected(self):
        with pytest.raises(TooSmallError):
            choose_bit_lengths(7)


class TestBuildClauses:
    def test_nine_resolves_at_build(self):
        system = build_clauses(9, 2, 2)
        assert len(system.unknowns) == 0
        assert system.clauses == []
        assert verify_assignment(system, {})
        assert reconstruct_factors(system, {}) == (3, 3)

    def test_true_assignment_satisfies_3127(self):
        system = build_clauses(3127, 6, 6)
        truth = longhand_assignment(53, 59, 6, 6)
        bits = {v: truth.get(v, 0) for v in system.unknowns}
        assert verify_assignment(system, bits)
        assert reconstruct_factors(system, bits) == (53, 59)

    def test_column_zero_folds_away(self):
        # N0 = p0 q0 = 1 is consumed during construction for every odd N
        system = build_clauses(15, 3, 2)
        assert all(pvar(0) not in c.variables() for c in system.clauses)
        assert system.fixed[pvar(0)] == 1
        assert system.fixed[qvar(0)] == 1

    def test_boundary_bits_fixed(self):
        system = build_clauses(3127, 6, 6)
        assert system.fixed == {pvar(0): 1, qvar(0): 1, pvar(5): 1, qvar(5): 1}

    def test_invalid_split_rejected(self):
        with pytest.raises(InvalidSplitError):
            build_clauses(3127, 4, 4)

    def test_monomial_degree_capped(self):
        system = build_clauses(6557, 7, 7)
        degrees = [m.degree for c in system.clauses for m, _ in c.terms]
        assert max(degrees) <= 2


class TestRules:
    def test_rule1_product_one(self):
        system = make_system(
            [LinExpr.build(-1, {Monomial.of(pvar(1), qvar(1)): 1})],
            [pvar(1), qvar(1)],
        )
        reduced, hits = apply_rules_once(system)
        assert hits[1] >= 1
        assert reduced.fixed[pvar(1)] == 1
        assert reduced.fixed[qvar(1)] == 1
        assert not reduced.clauses

    def test_rule2_sum_one_records_zero_product(self):
        system = make_system(
            [LinExpr.build(-1, {Monomial.of(pvar(1)): 1, Monomial.of(qvar(1)): 1})],
            [pvar(1), qvar(1)],
        )
        reduced, hits = apply_rules_once(system)
        assert hits[2] == 1
        assert Monomial.of(pvar(1), qvar(1)) in reduced.zero_products
        # the defining clause stays: both variables remain unknowns
        assert reduced.unknowns == {pvar(1), qvar(1)}

    def test_rule3_identifies_even_pair(self):
        z = zvar(1, 2)
        system = make_system(
            [LinExpr.build(0, {Monomial.of(pvar(1)): 1, Monomial.of(qvar(1)): 1, Monomial.of(z): -2})],
            [pvar(1), qvar(1), z],
        )
        reduced, hits = apply_rules_once(system)
        assert hits[3] == 2
        assert len(reduced.unknowns) == 1
        survivor = next(iter(reduced.unknowns))
        for var in (pvar(1), qvar(1), z):
            if var == survivor:
                continue
            aff = reduced.identifications[var]
            assert (aff.const, aff.coeff, aff.var) == (0, 1, survivor)

    def test_rule4_saturated_sum(self):
        system = make_system(
            [LinExpr.build(-2, {Monomial.of(pvar(1), qvar(2)): 1, Monomial.of(qvar(1)): 1})],
            [pvar(1), qvar(1), qvar(2)],
        )
        reduced, hits = apply_rules_once(system)
        assert hits[4] >= 1
        assert reduced.fixed == {pvar(1): 1, qvar(1): 1, qvar(2): 1}

    def test_rule5_overshoot_fixes_zero(self):
        # 1 + 2z = p with z = 1 impossible
        system = make_system(
            [LinExpr.build(1, {Monomial.of(zvar(1, 2)): 2, Monomial.of(pvar(1)): -1})],
            [pvar(1), zvar(1, 2)],
        )
        reduced, hits = apply_rules_once(system)
        assert reduced.fixed[zvar(1, 2)] == 0

    def test_rule6_forced_one(self):
        # 2z = 2: the only variable side must saturate
        system = make_system(
            [LinExpr.build(-2, {Monomial.of(zvar(1, 2)): 2})],
            [zvar(1, 2)],
        )
        reduced, hits = apply_rules_once(system)
        assert reduced.fixed[zvar(1, 2)] == 1

    def test_rule7_parity(self):
        # p + 2z = 1: parity forces p = 1
        system = make_system(
            [LinExpr.build(-1, {Monomial.of(pvar(1)): 1, Monomial.of(zvar(1, 2)): 2})],
            [pvar(1), zvar(1, 2)],
        )
        reduced, hits = apply_rules_once(system)
        assert reduced.fixed[pvar(1)] == 1

    def test_parity_contradiction(self):
        system = make_system(
            [LinExpr.build(-1, {Monomial.of(pvar(1)): 2})],
            [pvar(1)],
        )
        with pytest.raises(ContradictionError):
            apply_rules_once(system)


class TestPreprocess:
    def test_paper_instance_unknown_counts(self, instance_big, instance_3127, instance_6557):
        assert len(instance_big[0].unknowns) == 3
        assert len(instance_3127[0].unknowns) == 4
        assert len(instance_6557[0].unknowns) == 5

    def test_297491_reduces_to_four(self):
        system, _ = reduce_to_width(297491, 4, split=(10, 10))
        assert len(system.unknowns) == 4

    def test_fixed_point_is_stable(self):
        system, report = reduce_biprime(1387)  # 19 * 73
        again, hits = apply_rules_once(system)
        assert not any(hits.values())
        assert again.unknowns == system.unknowns

    def test_unknowns_non_increasing(self):
        _, report = reduce_biprime(3127, split=(6, 6))
        trajectory = report.unknown_trajectory
        assert all(a >= b for a, b in zip(trajectory, trajectory[1:]))

    def test_report_counts(self):
        system, report = preprocess(build_clauses(3127, 6, 6), max_passes=5)
        assert report.passes == 5
        assert report.unknowns_before == 24
        assert report.unknowns_after == len(system.unknowns)
        assert set(report.rule_hits) == set(range(1, 8))
        assert report.to_dict()["total_rule_firings"] == report.total_rule_firings

    def test_max_passes_validation(self):
        with pytest.raises(ValueError):
            preprocess(build_clauses(9, 2, 2), max_passes=0)

    def test_wrong_split_contradicts(self):
        with pytest.raises(ContradictionError):
            preprocess(build_clauses(3127, 7, 6), max_passes=64)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(SMALL_PRIMES), st.sampled_from(SMALL_PRIMES))
def test_reduction_preserves_solutions(p, q):
    """All-splits soundness: reduced solutions map exactly onto originals."""
    N = p * q
    if N < 9:
        return
    for n_p, n_q in choose_bit_lengths(N):
        try:
            original = build_clauses(N, n_p, n_q)
        except ContradictionError:
            continue
        base = brute_force_solutions(original)
        try:
            reduced, _ = preprocess(original, max_passes=64)
        except ContradictionError:
            assert not base
            continue
        assert brute_force_solutions(reduced) == base


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(SMALL_PRIMES), st.sampled_from(SMALL_PRIMES))
def test_factor_roundtrip(p, q):
    N = p * q
    if N < 15:
        return
    system, _ = reduce_biprime(N)
    solutions = brute_force_solutions(system)
    assert solutions
    unknowns = system.sorted_unknowns()
    for values in itertools.product((0, 1), repeat=len(unknowns)):
        bits = dict(zip(unknowns, values))
        if verify_assignment(system, bits):
            got = reconstruct_factors(system, bits)
            assert got[0] * got[1] == N


class TestVerifyAndReconstruct:
    def test_missing_variable(self, instance_3127):
        system = instance_3127[0]
        with pytest.raises(MissingVariableError):
            verify_assignment(system, {})

    def test_all_zero_not_solution(self, instance_3127):
        system = instance_3127[0]
        bits = {v: 0 for v in system.unknowns}
        assert not verify_assignment(system, bits)

    def test_not_a_solution_raises(self, instance_3127):
        system = instance_3127[0]
        bits = {v: 0 for v in system.unknowns}
        with pytest.raises(NotASolutionError):
            reconstruct_factors(system, bits)

    def test_reconstructs_3127(self, instance_3127):
        system = instance_3127[0]
        unknowns = system.sorted_unknowns()
        found = set()
        for values in itertools.product((0, 1), repeat=len(unknowns)):
            bits = dict(zip(unknowns, values))
            if verify_assignment(system, bits):
                found.add(tuple(sorted(reconstruct_factors(system, bits))))
        assert found == {(53, 59)}


class TestFactorOracle:
    @pytest.mark.parametrize("n,expected", [
        (15, (3, 5)),
        (3127, (53, 59)),
        (6557, (79, 83)),
        (297491, (521, 571)),
        (1099551473989, (1048589, 1048601)),
    ])
    def test_known_factorizations(self, n, expected):
        assert factor_oracle(n) == expected

    def test_out_of_reach(self):
        with pytest.raises(OracleOutOfReachError):
            factor_oracle(97)  # prime: no factor below sqrt


class TestSerialization:
    def test_round_trip(self, instance_3127):
        system = instance_3127[0]
        clone = system_from_json(system_to_json(system))
        assert clone.N == system.N
        assert clone.clauses == system.clauses
        assert clone.unknowns == system.unknowns
        assert clone.fixed == system.fixed
        assert clone.identifications == system.identifications
        assert clone.zero_products == system.zero_products
        assert clone.original_clauses == system.original_clauses

    def test_stable_keys(self, instance_3127):
        import json

        data = json.loads(system_to_json(instance_3127[0]))
        for key in ("N", "n_p", "n_q", "clauses", "fixed", "identifications", "unknowns"):
            assert key in data

    def test_variable_name_round_trip(self):
        for var in (pvar(3), qvar(0), zvar(2, 5)):
            assert BitVar.parse(var.name) == var
