"""Classical reduction of clause systems with binary deduction rules.

Each pass walks the clauses in column order and applies, in order:

1. x*y = 1          -> x = y = 1
2. x + y = 1        -> x*y = 0 recorded as a zero product
3. x + y = 2z       -> x = y = z
4. sum saturated    -> every monomial on the variable side is 1
5. x = 1 makes one side's minimum exceed the other's maximum -> x = 0
6. lone variable on one side, other side's minimum exceeds
   that side's constant                                       -> x = 1
7. parity: a single odd-coefficient 1-variable monomial is fixed by the
   clause constant's parity; all-even terms with an odd constant are a
   contradiction

Deductions are substituted into every clause the moment they are made.

Two closure mechanisms sharpen the basic rules, mirroring how much wider a
net a production preprocessor casts while staying sound:

* clause combination -- subtracting an integer multiple of one clause from
  another when that strictly shrinks it (both clauses are kept, so the
  solution set is untouched);
* exhaustive per-clause propagation -- for small clauses, enumerating all
  assignments consistent with the clause and the known zero products, then
  harvesting forced values, forced (anti-)equalities between variables, and
  new zero products.

Forced equalities are applied at most one per pass and only on passes where
nothing else fired, so the unknown count descends one variable at a time;
``max_passes`` therefore selects how much of the system is folded into the
classical side, which is exactly the tunable tradeoff the pipeline exposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clauses import (
    Affine,
    BitVar,
    ClauseSystem,
    ContradictionError,
    LinExpr,
    Monomial,
    VarKind,
    build_clauses,
    choose_bit_lengths,
)

N_RULES = 7


@dataclass
class PreprocessOptions:
    """Power and determinism knobs for the deduction engine."""

    propagate_var_cap: int = 18      # exhaustive propagation only below this many clause vars
    pair_var_cap: int = 16           # joint cap for two-clause propagation
    combine: bool = True             # allow clause-minus-clause simplification
    pair_propagation: bool = True    # two-clause propagation when single clauses stall
    identifications: bool = True     # allow forced (anti-)equality eliminations
    one_identification_per_pass: bool = False  # fine-grained unknown-count trajectory


@dataclass
class PreprocessReport:
    """Rule and closure statistics for one preprocessing run."""

    passes: int = 0
    rule_hits: dict[int, int] = field(default_factory=lambda: {r: 0 for r in range(1, N_RULES + 1)})
    propagation_fixes: int = 0
    propagation_zero_products: int = 0
    identifications: int = 0
    combinations: int = 0
    unknowns_before: int = 0
    unknowns_after: int = 0
    unknown_trajectory: list[int] = field(default_factory=list)

    @property
    def total_rule_firings(self) -> int:
        return sum(self.rule_hits.values())

    def to_dict(self) -> dict:
        return {
            "passes": self.passes,
            "rule_hits": {str(k): v for k, v in self.rule_hits.items()},
            "total_rule_firings": self.total_rule_firings,
            "propagation_fixes": self.propagation_fixes,
            "propagation_zero_products": self.propagation_zero_products,
            "identifications": self.identifications,
            "combinations": self.combinations,
            "unknowns_before": self.unknowns_before,
            "unknowns_after": self.unknowns_after,
            "unknown_trajectory": list(self.unknown_trajectory),
        }


class _Reducer:
    """Mutable deduction engine over a working copy of a clause system."""

    def __init__(self, system: ClauseSystem, hits: dict[int, int]):
        self.sys = system
        self.hits = hits
        self.changed = False
        self.at_least_pairs: set[Monomial] = set()  # pairs that cannot both be 0

    # -- deduction primitives -------------------------------------------------

    def _root(self, var: BitVar) -> tuple[int, int, BitVar | None]:
        """Resolve through identifications/fixings to const + coeff * root."""
        const, coeff = 0, 1
        for _ in range(len(self.sys.identifications) + 2):
            if var in self.sys.fixed:
                return const + coeff * self.sys.fixed[var], 0, None
            aff = self.sys.identifications.get(var)
            if aff is None:
                return const, coeff, var
            const += coeff * aff.const
            coeff *= aff.coeff
            if aff.var is None:
                return const, 0, None
            var = aff.var
        raise ContradictionError(f"identification cycle at {var}")

    def fix(self, var: BitVar, value: int, rule: int = 0) -> None:
        const, coeff, root = self._root(var)
        if root is None:
            if const != value:
                raise ContradictionError(f"{var} already bound to {const}, cannot fix {value}")
            return
        root_value = (value - const) // coeff if coeff else 0
        if const + coeff * root_value != value or root_value not in (0, 1):
            raise ContradictionError(f"{var} = {value} forces non-binary {root}")
        if rule:
            self.hits[rule] += 1
        self.changed = True
        self.sys.unknowns.discard(root)
        self.sys.fixed[root] = root_value
        self._substitute(root, root_value, 0, None)

    def identify(self, var: BitVar, target: BitVar, rule: int = 0, negated: bool = False) -> None:
        """Bind var = target (or var = 1 - target), eliminating one unknown.

        The variable kept is the smaller of the two roots under (kind, index)
        order, except that a carry root is always the one eliminated when
        paired with a factor bit.
        """
        vc, vk, vroot = self._root(var)
        tc, tk, troot = [(tc0, tk0, tr0) for tc0, tk0, tr0 in (self._root(target),)][0]
        if negated:
            tc, tk = 1 - tc, -tk
        if vroot is None and troot is None:
            if vc != tc:
                raise ContradictionError(f"{var} = {target} contradicts earlier bindings")
            return
        if vroot is None:
            self._fix_affine(troot, tc, tk, vc, rule)
            return
        if troot is None:
            self._fix_affine(vroot, vc, vk, tc, rule)
            return
        if vroot == troot:
            if vc == tc and vk == tk:
                return
            self._fix_affine(vroot, vc - tc, vk - tk, 0, rule)
            return
        keep_first = (vroot.kind is not VarKind.CARRY and troot.kind is VarKind.CARRY) or (
            (vroot.kind is VarKind.CARRY) == (troot.kind is VarKind.CARRY) and vroot < troot
        )
        keep, kc, kk = (vroot, vc, vk) if keep_first else (troot, tc, tk)
        gone, gc, gk = (troot, tc, tk) if keep_first else (vroot, vc, vk)
        # gc + gk*gone = kc + kk*keep  ->  gone = (kc - gc)/gk + (kk/gk)*keep
        const, coeff = (kc - gc) // gk, kk // gk
        if gc + gk * const != kc or gk * coeff != kk:
            raise ContradictionError(f"{var} = {target} is not an integer identification")
        if rule:
            self.hits[rule] += 1
        self.changed = True
        self.sys.unknowns.discard(gone)
        self.sys.identifications[gone] = Affine(const, coeff, keep)
        self._substitute(gone, const, coeff, keep)

    def _fix_affine(self, root: BitVar | None, const: int, coeff: int, value: int, rule: int) -> None:
        if root is None or coeff == 0:
            if const != value:
                raise ContradictionError("inconsistent constant binding")
            return
        root_value = (value - const) // coeff
        if const + coeff * root_value != value or root_value not in (0, 1):
            raise ContradictionError(f"{root} forced to a non-binary value")
        self.fix(root, root_value, rule)

    def zero_product(self, a: BitVar, b: BitVar, rule: int = 0) -> bool:
        ac, ak, aroot = self._root(a)
        bc, bk, broot = self._root(b)
        if ak < 0 or bk < 0:
            # a factor rewrote to 1 - x: keep the product constraint as a clause
            self._append_product_clause(ac, ak, aroot, bc, bk, broot)
            return True
        if aroot is None:
            if ac == 0:
                return False
            if broot is None:
                if bc == 1:
                    raise ContradictionError("zero product of two ones")
                return False
            self.fix(broot, 0, rule)
            return True
        if broot is None:
            if bc == 1:
                self.fix(aroot, 0, rule)
                return True
            return False
        if aroot == broot:
            self.fix(aroot, 0, rule)  # x*x = x = 0
            return True
        mono = Monomial.of(aroot, broot)
        if mono in self.sys.zero_products:
            return False
        if rule:
            self.hits[rule] += 1
        self.changed = True
        self.sys.zero_products.add(mono)
        self.sys.clauses = [c.drop_monomials([mono]) for c in self.sys.clauses]
        return True

    def _append_product_clause(self, ac: int, ak: int, ra: BitVar | None,
                               bc: int, bk: int, rb: BitVar | None) -> None:
        """Record (ac + ak*ra)(bc + bk*rb) = 0 as an ordinary clause."""
        coeffs: dict[Monomial, int] = {}

        def add(mono: Monomial, value: int) -> None:
            if value:
                coeffs[mono] = coeffs.get(mono, 0) + value

        constant = ac * bc
        if ra is not None:
            add(Monomial.of(ra), ak * bc)
        if rb is not None:
            add(Monomial.of(rb), bk * ac)
        if ra is not None and rb is not None:
            add(Monomial.of(ra, rb), ak * bk)
        expr = LinExpr.build(constant, coeffs).drop_monomials(self.sys.zero_products)
        if expr.is_constant:
            if expr.constant != 0:
                raise ContradictionError("zero product impossible under current bindings")
            return
        self.changed = True
        self.sys.clauses.append(expr)

    # -- substitution ----------------------------------------------------------

    def _substitute(self, var: BitVar, const: int, coeff: int, other: BitVar | None) -> None:
        self.sys.clauses = [
            c.substitute(var, const, coeff, other).drop_monomials(self.sys.zero_products)
            for c in self.sys.clauses
        ]
        stale = [m for m in self.sys.zero_products if m.contains(var)]
        for mono in stale:
            self.sys.zero_products.discard(mono)
            partner = next(v for v in mono if v != var)
            if coeff == 0:
                if const == 1:
                    self.fix(partner, 0)
                # const == 0: the product vanished with the variable
            elif coeff == 1 and const == 0:
                self.zero_product(other, partner)
            else:
                self._append_product_clause(const, coeff, other, 0, 1, partner)

    def check_constants(self) -> None:
        live = []
        for clause in self.sys.clauses:
            if clause.is_constant:
                if clause.constant != 0:
                    raise ContradictionError(f"clause reduced to constant {clause.constant}")
                continue
            live.append(clause)
        self.sys.clauses = live


def _sides(expr: LinExpr):
    """Split into lhs = rhs with non-negative coefficients and constants."""
    lhs: dict[Monomial, int] = {}
    rhs: dict[Monomial, int] = {}
    for mono, coeff in expr.terms:
        (lhs if coeff > 0 else rhs)[mono] = abs(coeff)
    lc = expr.constant if expr.constant > 0 else 0
    rc = -expr.constant if expr.constant < 0 else 0
    return lc, lhs, rc, rhs


def _side_max(const: int, side: dict[Monomial, int], zero_products: set[Monomial]) -> int:
    """Largest achievable value of one side, honouring known zero products.

    Two monomials cannot both be 1 when their combined variables contain a
    pair known to multiply to zero, so the maximum is a max-weight independent
    set over that exclusion graph (clauses are small enough to search exactly).
    """
    monos = list(side)
    if not zero_products or len(monos) < 2 or len(monos) > 12:
        return const + sum(side.values())
    pairs = [(a, b) for i, a in enumerate(monos) for b in monos[i + 1 :]
             if any(set(zp.variables) <= set(a.variables) | set(b.variables) for zp in zero_products)]
    if not pairs:
        return const + sum(side.values())
    excluded = {m: set() for m in monos}
    for a, b in pairs:
        excluded[a].add(b)
        excluded[b].add(a)

    def best(remaining: list[Monomial]) -> int:
        if not remaining:
            return 0
        head, rest = remaining[0], remaining[1:]
        take = side[head] + best([m for m in rest if m not in excluded[head]])
        return max(take, best(rest))

    return const + best(monos)


def _rule1_product_one(red: _Reducer, expr: LinExpr) -> None:
    if len(expr.terms) != 1:
        return
    mono, coeff = expr.terms[0]
    if mono.degree == 2 and coeff + expr.constant == 0 and coeff > 0:
        for var in mono:
            red.fix(var, 1, rule=1)


def _rule2_sum_one(red: _Reducer, expr: LinExpr) -> None:
    lc, lhs, rc, rhs = _sides(expr)
    for side, own_c, other_c, other in ((lhs, lc, rc, rhs), (rhs, rc, lc, lhs)):
        if other or own_c or other_c != 1:
            continue
        if any(c != 1 for c in side.values()):
            continue
        # a sum of monomials equal to 1: no two degree-1 members can both be 1
        singles = [m for m in side if m.degree == 1]
        for i, a in enumerate(singles):
            for b in singles[i + 1 :]:
                red.zero_product(tuple(a)[0], tuple(b)[0], rule=2)
        return


def _rule3_even_pair(red: _Reducer, expr: LinExpr) -> None:
    if expr.constant != 0 or len(expr.terms) != 3:
        return
    if any(m.degree != 1 for m, _ in expr.terms):
        return
    coeffs = sorted(c for _, c in expr.terms)
    if coeffs not in ([-2, 1, 1], [-1, -1, 2]):
        return
    double = next(m for m, c in expr.terms if abs(c) == 2)
    singles = [m for m, c in expr.terms if abs(c) == 1]
    (z,) = tuple(double)
    for mono in singles:
        (x,) = tuple(mono)
        red.identify(x, z, rule=3)


def _rule4_saturated(red: _Reducer, expr: LinExpr) -> None:
    lc, lhs, rc, rhs = _sides(expr)
    for side, own_c, other_c, other in ((lhs, lc, rc, rhs), (rhs, rc, lc, lhs)):
        if other or not side:
            continue
        if own_c + sum(side.values()) == other_c:
            for mono in list(side):
                for var in mono:
                    red.fix(var, 1, rule=4)
            return


def _rule5_overshoot(red: _Reducer, expr: LinExpr) -> None:
    lc, lhs, rc, rhs = _sides(expr)
    zps = red.sys.zero_products
    l_max = _side_max(lc, lhs, zps)
    r_max = _side_max(rc, rhs, zps)
    variables = sorted(expr.variables())
    for var in variables:
        l_min1 = lc + sum(c for m, c in lhs.items() if m == Monomial.of(var))
        r_min1 = rc + sum(c for m, c in rhs.items() if m == Monomial.of(var))
        if l_min1 > r_max or r_min1 > l_max:
            red.fix(var, 0, rule=5)
            return
    # pairwise form: two variables that jointly overshoot cannot both be 1
    for i, a in enumerate(variables):
        for b in variables[i + 1 :]:
            pair = {a, b}
            l_min2 = lc + sum(c for m, c in lhs.items() if set(m.variables) <= pair)
            r_min2 = rc + sum(c for m, c in rhs.items() if set(m.variables) <= pair)
            if l_min2 > r_max or r_min2 > l_max:
                red.zero_product(a, b, rule=5)


def _rule6_forced_one(red: _Reducer, expr: LinExpr) -> None:
    lc, lhs, rc, rhs = _sides(expr)
    for side, own_c, other_c, other in ((lhs, lc, rc, rhs), (rhs, rc, lc, lhs)):
        if len(side) != 1:
            continue
        ((mono, coeff),) = side.items()
        if mono.degree != 1:
            continue
        if other_c > own_c:
            (var,) = tuple(mono)
            red.fix(var, 1, rule=6)
            return


def _rule7_parity(red: _Reducer, expr: LinExpr) -> None:
    odd = [m for m, c in expr.terms if c % 2]
    if not odd:
        if expr.constant % 2:
            raise ContradictionError(f"parity violation in {expr!r}")
        return
    if len(odd) == 1 and odd[0].degree == 1:
        (var,) = tuple(odd[0])
        red.fix(var, expr.constant % 2, rule=7)


_RULES = (
    _rule1_product_one,
    _rule2_sum_one,
    _rule3_even_pair,
    _rule4_saturated,
    _rule5_overshoot,
    _rule6_forced_one,
    _rule7_parity,
)


# -- exhaustive per-clause propagation ----------------------------------------


@dataclass(frozen=True)
class _Facts:
    """Semantic consequences of one (or two) clauses over their variables."""

    fixes: tuple[tuple[BitVar, int], ...]
    zero_pairs: tuple[tuple[BitVar, BitVar], ...]
    equalities: tuple[tuple[BitVar, BitVar, bool], ...]  # (a, b, negated)


def _feasible_assignments(exprs: list[LinExpr], zero_products: set[Monomial]) -> tuple[list[BitVar], np.ndarray]:
    """All assignments of the clauses' variables satisfying them and the zero products."""
    variables = sorted({v for e in exprs for v in e.variables()})
    v = len(variables)
    index = {var: k for k, var in enumerate(variables)}
    count = 1 << v
    idx = np.arange(count, dtype=np.int64)
    shifts = np.array([v - 1 - k for k in range(v)], dtype=np.int64)
    cols = ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)
    mask = np.ones(count, dtype=bool)
    for expr in exprs:
        total = np.full(count, expr.constant, dtype=np.int32)
        for mono, coeff in expr.terms:
            selected = [index[var] for var in mono]
            hit = cols[:, selected[0]].copy()
            for k in selected[1:]:
                hit &= cols[:, k]
            total += coeff * hit
        mask &= total == 0
    for zp in zero_products:
        if all(var in index for var in zp):
            a, b = (index[var] for var in zp)
            mask &= ~(cols[:, a] & cols[:, b])
    return variables, cols[mask]


def _extract_facts(variables: list[BitVar], table: np.ndarray,
                   known_zps: set[Monomial]) -> _Facts:
    fixes = []
    zero_pairs = []
    equalities = []
    rows, v = table.shape
    ones = table.sum(axis=0)
    for k in range(v):
        if ones[k] == 0:
            fixes.append((variables[k], 0))
        elif ones[k] == rows:
            fixes.append((variables[k], 1))
    forced = {var for var, _ in fixes}
    # pairwise stats in two matrix products: counts of (1,1) and (0,0) rows
    x = table.astype(np.int32)
    both_one = x.T @ x
    both_zero = (1 - x).T @ (1 - x)
    agree = both_one + both_zero
    for i in range(v):
        if variables[i] in forced:
            continue
        for j in range(i + 1, v):
            if variables[j] in forced:
                continue
            if agree[i, j] == rows:
                equalities.append((variables[i], variables[j], False))
            elif agree[i, j] == 0:
                equalities.append((variables[i], variables[j], True))
            elif both_one[i, j] == 0 and Monomial.of(variables[i], variables[j]) not in known_zps:
                zero_pairs.append((variables[i], variables[j]))
    return _Facts(tuple(fixes), tuple(zero_pairs), tuple(equalities))


def _propagate_clause(red: _Reducer, expr: LinExpr, cap: int,
                      cache: dict | None = None) -> list[tuple[BitVar, BitVar, bool]]:
    """Apply forced values/zero pairs of a single clause; return equality candidates.

    Results are cached on (clause, relevant zero products): a clause whose
    analysis inputs have not changed can only re-offer already-applied facts.
    """
    clause_vars = expr.variables()
    if not clause_vars or len(clause_vars) > cap:
        return []
    relevant = frozenset(zp for zp in red.sys.zero_products if set(zp.variables) <= clause_vars)
    key = (expr, relevant)
    facts = cache.get(key) if cache is not None else None
    if facts is None:
        variables, table = _feasible_assignments([expr], relevant)
        if table.shape[0] == 0:
            raise ContradictionError(f"clause has no satisfying assignment: {expr!r}")
        facts = _extract_facts(variables, table, relevant)
        if cache is not None:
            cache[key] = facts
    for var, value in facts.fixes:
        red.fix(var, value)
    for a, b in facts.zero_pairs:
        red.zero_product(a, b)
    return list(facts.equalities)


def _combine_clauses(red: _Reducer) -> int:
    """Subtract scaled clauses from each other while it strictly shrinks them.

    Both clauses stay in the system, so this is plain row reduction over the
    integers and the solution set is untouched.
    """
    applied = 0
    improved = True
    while improved:
        improved = False
        clauses = red.sys.clauses
        for i in range(len(clauses)):
            base = clauses[i]
            if not base.terms:
                continue
            base_map = base.coeff_map()
            for j in range(len(clauses)):
                other = clauses[j]
                if i == j or not other.terms:
                    continue
                other_map = other.coeff_map()
                shared = [m for m in base_map if m in other_map]
                if not shared:
                    continue
                ratios = {other_map[m] // base_map[m] for m in shared
                          if other_map[m] % base_map[m] == 0 and other_map[m] // base_map[m] != 0}
                for k in sorted(ratios):
                    merged: dict[Monomial, int] = dict(other_map)
                    for mono, coeff in base_map.items():
                        merged[mono] = merged.get(mono, 0) - k * coeff
                    merged = {m: c for m, c in merged.items() if c != 0}
                    if len(merged) < len(other_map):
                        new = LinExpr.build(other.constant - k * base.constant, merged)
                        red.sys.clauses[j] = new.drop_monomials(red.sys.zero_products)
                        red.changed = True
                        applied += 1
                        improved = True
                        break
        red.check_constants()
    return applied


def apply_rules_once(system: ClauseSystem,
                     options: PreprocessOptions | None = None) -> tuple[ClauseSystem, dict[int, int]]:
    """One full pass of rules 1-7 over all clauses, deductions applied eagerly."""
    hits = {r: 0 for r in range(1, N_RULES + 1)}
    red = _Reducer(system.copy(), hits)
    red.check_constants()
    index = 0
    while index < len(red.sys.clauses):
        for rule in _RULES:
            if index >= len(red.sys.clauses):
                break
            clause = red.sys.clauses[index]
            if clause.is_constant:
                break
            rule(red, clause)
            red.check_constants()
        index += 1
    return red.sys, hits


def _run_pass(red: _Reducer, options: PreprocessOptions, report: PreprocessReport,
              cache: dict) -> None:
    """One pass: rules, combination, propagation, then forced identifications.

    Rule 5's bound search is skipped on clauses small enough for exhaustive
    propagation, which subsumes it.
    """
    red.check_constants()
    index = 0
    while index < len(red.sys.clauses):
        for rule in _RULES:
            if index >= len(red.sys.clauses):
                break
            clause = red.sys.clauses[index]
            if clause.is_constant:
                break
            if rule is _rule5_overshoot and len(clause.variables()) <= options.propagate_var_cap:
                continue
            rule(red, clause)
            red.check_constants()
        index += 1

    if options.combine:
        report.combinations += _combine_clauses(red)

    equality_candidates: list[tuple[BitVar, BitVar, bool]] = []
    index = 0
    while index < len(red.sys.clauses):
        clause = red.sys.clauses[index]
        before_fixes = len(red.sys.fixed)
        before_zps = len(red.sys.zero_products)
        equality_candidates += _propagate_clause(red, clause, options.propagate_var_cap, cache)
        report.propagation_fixes += len(red.sys.fixed) - before_fixes
        report.propagation_zero_products += max(0, len(red.sys.zero_products) - before_zps)
        red.check_constants()
        index += 1

    if red.changed or not options.identifications:
        return

    if equality_candidates:
        for a, b, negated in _order_equalities(equality_candidates):
            red.identify(a, b, negated=negated)
            report.identifications += 1
            red.check_constants()
            if options.one_identification_per_pass:
                return
        return

    if options.pair_propagation:
        _pair_propagation(red, options, report)


def _order_equalities(candidates: list[tuple[BitVar, BitVar, bool]]):
    """Carry-eliminating equalities first, then factor-bit ones, stable order."""

    def rank(item):
        a, b, negated = item
        carries = (a.kind is VarKind.CARRY) + (b.kind is VarKind.CARRY)
        return (-carries, a, b, negated)

    return sorted(set(candidates), key=rank)


def _pair_propagation(red: _Reducer, options: PreprocessOptions, report: PreprocessReport) -> None:
    """Joint propagation over clause pairs; used only when single clauses stall."""
    count = len(red.sys.clauses)
    equality_candidates: list[tuple[BitVar, BitVar, bool]] = []
    for i in range(count):
        for j in range(i + 1, count):
            a, b = red.sys.clauses[i], red.sys.clauses[j]
            if a.is_constant or b.is_constant:
                continue
            joint = a.variables() | b.variables()
            if len(a.variables() & b.variables()) < 2 or len(joint) > options.pair_var_cap:
                continue
            variables, table = _feasible_assignments([a, b], red.sys.zero_products)
            if table.shape[0] == 0:
                raise ContradictionError("clause pair has no satisfying assignment")
            facts = _extract_facts(variables, table, red.sys.zero_products)
            for var, value in facts.fixes:
                red.fix(var, value)
                report.propagation_fixes += 1
            for x, y in facts.zero_pairs:
                if red.zero_product(x, y):
                    report.propagation_zero_products += 1
            equality_candidates += facts.equalities
    red.check_constants()
    if red.changed or not (equality_candidates and options.identifications):
        return
    for x, y, negated in _order_equalities(equality_candidates):
        red.identify(x, y, negated=negated)
        report.identifications += 1
        red.check_constants()
        if options.one_identification_per_pass:
            return


def preprocess(system: ClauseSystem, max_passes: int = 64,
               options: PreprocessOptions | None = None) -> tuple[ClauseSystem, PreprocessReport]:
    """Run deduction passes up to a fixed point or the pass cap.

    The returned report carries per-rule counts and the unknown count after
    every pass; truncating via ``max_passes`` trades classical work against
    the number of unknowns left for the quantum stage.
    """
    if max_passes < 1:
        raise ValueError("max_passes must be at least 1")
    options = options or PreprocessOptions()
    report = PreprocessReport(unknowns_before=len(system.unknowns))
    current = system
    cache: dict = {}
    for _ in range(max_passes):
        red = _Reducer(current.copy(), report.rule_hits)
        _run_pass(red, options, report, cache)
        current = red.sys
        report.passes += 1
        report.unknown_trajectory.append(len(current.unknowns))
        if not red.changed:
            break
    report.unknowns_after = len(current.unknowns)
    return current, report


def system_is_satisfiable(system: ClauseSystem, node_budget: int = 200000) -> bool:
    """Backtracking search for one solution of the reduced clauses.

    Interval pruning per clause plus the known zero products refute
    unsatisfiable systems quickly; if the node budget runs out the system is
    assumed satisfiable (the assumption only matters for splits that
    preprocessing could not decide either way).
    """
    exprs = [c for c in system.clauses if not c.is_constant]
    if not exprs:
        return True
    variables = sorted({v for e in exprs for v in e.variables()})
    index = {var: k for k, var in enumerate(variables)}
    clauses = [
        (e.constant, [(coeff, tuple(index[v] for v in mono)) for mono, coeff in e.terms])
        for e in exprs
    ]
    exclusions: list[list[int]] = [[] for _ in variables]
    for zp in system.zero_products:
        if all(v in index for v in zp):
            a, b = (index[v] for v in zp)
            exclusions[a].append(b)
            exclusions[b].append(a)
    # branch on the most-used variables first
    frequency = [0] * len(variables)
    for _, terms in clauses:
        for _, mono in terms:
            for k in mono:
                frequency[k] += 1
    order = sorted(range(len(variables)), key=lambda k: (-frequency[k], k))
    assignment: list[int | None] = [None] * len(variables)
    budget = [node_budget]

    def clause_feasible(constant: int, terms) -> bool:
        low = high = constant
        for coeff, mono in terms:
            value = 1
            for k in mono:
                bit = assignment[k]
                if bit is None:
                    value = None
                    break
                if bit == 0:
                    value = 0
                    break
            if value is None:
                low += min(coeff, 0)
                high += max(coeff, 0)
            else:
                low += coeff * value
                high += coeff * value
        return low <= 0 <= high

    def search(depth: int) -> bool:
        if budget[0] <= 0:
            return True  # undecided: treat as satisfiable
        budget[0] -= 1
        if depth == len(order):
            return True
        k = order[depth]
        for bit in (0, 1):
            if bit == 1 and any(assignment[other] == 1 for other in exclusions[k]):
                continue
            assignment[k] = bit
            if all(clause_feasible(c, t) for c, t in clauses):
                if search(depth + 1):
                    return True
            assignment[k] = None
        return False

    return search(0)


def reduce_to_width(N: int, target_unknowns: int,
                    split: tuple[int, int] | None = None,
                    options: PreprocessOptions | None = None) -> tuple[ClauseSystem, PreprocessReport]:
    """Reduce N until exactly ``target_unknowns`` variables remain.

    Preprocessing folds one more variable into the classical side each quiet
    pass (identifications are rationed to one per pass here), so stopping at
    the first pass whose unknown count matches the target realizes the
    classical-work-versus-qubits tradeoff deterministically.
    """
    if options is None:
        options = PreprocessOptions(one_identification_per_pass=True)
    probe, report = reduce_biprime(N, max_passes=64, options=options, split=split)
    for passes, count in enumerate(report.unknown_trajectory, start=1):
        if count == target_unknowns:
            return reduce_biprime(N, max_passes=passes, options=options,
                                  split=(probe.n_p, probe.n_q))
    raise ValueError(
        f"no pass of {N}'s reduction leaves {target_unknowns} unknowns "
        f"(trajectory {report.unknown_trajectory})"
    )


def _split_in_range(N: int, n_p: int, n_q: int) -> bool:
    """Can an odd p with exactly n_p bits times an odd q with n_q bits reach N?"""
    lo = ((1 << (n_p - 1)) + 1) * ((1 << (n_q - 1)) + 1)
    hi = ((1 << n_p) - 1) * ((1 << n_q) - 1)
    return lo <= N <= hi


def reduce_biprime(N: int, max_passes: int = 64,
                   options: PreprocessOptions | None = None,
                   split: tuple[int, int] | None = None) -> tuple[ClauseSystem, PreprocessReport]:
    """Reduce N's clause system, choosing the bit-length split unless given one.

    Split selection always runs to a fixed point: contradicted or unsatisfiable
    splits are skipped, and among the survivors the fewest-unknowns system wins
    (most balanced split on ties).  The winning split is then re-reduced with
    the caller's ``max_passes`` so a truncated pass budget still applies to the
    right split.
    """
    if split is None:
        best = None
        for n_p, n_q in choose_bit_lengths(N):
            if not _split_in_range(N, n_p, n_q):
                continue
            try:
                system = build_clauses(N, n_p, n_q)
                reduced, report = preprocess(system, 64, options)
            except ContradictionError:
                continue
            if not system_is_satisfiable(reduced):
                continue
            if best is None or len(reduced.unknowns) < len(best[0].unknowns):
                best = (reduced, report, (n_p, n_q))
                if len(reduced.unknowns) <= 1:
                    break  # nothing later can be meaningfully smaller
        if best is None:
            raise ContradictionError(f"no bit-length split admits a factorization of {N}")
        if max_passes >= best[1].passes:
            return best[0], best[1]
        split = best[2]
    return preprocess(build_clauses(N, *split), max_passes, options)
