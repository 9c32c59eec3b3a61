from __future__ import annotations

import random

import pytest

from ctl_lint.cfg import KripkeStructure
from ctl_lint.ctl import (
    AF, AG, AU, AX, And, EF, EG, EU, EX, Implies, Not, Or, Prop, TRUE,
    check, is_witnessable, normalize, witness,
)
from oracle_ctl import (
    edge_valid, random_formula, random_kripke, sat_oracle, trace_demonstrates,
)

p, q = Prop("p"), Prop("q")


def mk(succ, labels):
    n = len(succ)
    return KripkeStructure(n, succ, [frozenset(x) for x in labels])


class TestNormalize:
    def test_ag(self):
        assert normalize(AG(p)) == Not(EU(TRUE, Not(p)))

    def test_ex_is_fixpoint(self):
        assert normalize(EX(p)) == EX(p)

    def test_au_rewrite(self):
        got = normalize(AU(p, q))
        want = And(Not(EU(Not(q), And(Not(p), Not(q)))), Not(EG(Not(q))))
        assert got == want

    def test_ef(self):
        assert normalize(EF(p)) == EU(TRUE, p)

    def test_ax(self):
        assert normalize(AX(p)) == Not(EX(Not(p)))

    def test_af(self):
        assert normalize(AF(p)) == Not(EG(Not(p)))

    def test_or_and_implies_eliminated(self):
        assert normalize(Or(p, q)) == Not(And(Not(p), Not(q)))
        assert normalize(Implies(p, q)) == Not(And(p, Not(q)))

    def test_double_negation_collapses(self):
        assert normalize(Not(Not(p))) == p

    def test_idempotent(self):
        rng = random.Random(7)
        for _ in range(50):
            f = random_formula(rng)
            assert normalize(normalize(f)) == normalize(f)

    def test_semantics_preserved(self):
        rng = random.Random(8)
        for _ in range(60):
            k = random_kripke(rng)
            f = random_formula(rng)
            sat = check(k, f)
            assert sat.states(f) == sat.states(normalize(f))


class TestCheck:
    def test_single_state_self_loop(self):
        k = mk([[0]], [{"p"}])
        assert check(k, EF(p)).states(EF(p)) == frozenset({0})

    def test_chain_to_self_loop(self):
        k = mk([[1], [1]], [set(), {"p"}])
        sat = check(k, EU(TRUE, p))
        assert sat.states(EU(TRUE, p)) == frozenset({0, 1})
        assert sat.states(EG(Not(p))) == frozenset()

    def test_two_cycle(self):
        k = mk([[1], [0]], [{"p"}, set()])
        sat = check(k, AG(p))
        assert sat.states(EG(Or(p, Not(p)))) == frozenset({0, 1})
        assert sat.states(AG(p)) == frozenset()

    def test_true_and_not_invariants(self):
        k = mk([[1], [0, 1]], [{"p"}, set()])
        sat = check(k, p)
        assert sat.states(TRUE) == frozenset({0, 1})
        assert sat.states(Not(p)) == frozenset({0, 1}) - sat.states(p)


class TestOracleEquivalence:
    def test_random_structures(self):
        rng = random.Random(2024)
        for _ in range(250):
            k = random_kripke(rng)
            f = random_formula(rng)
            sat = check(k, f)
            memo = {}
            for s in range(k.n):
                assert sat.holds(f, s) == sat_oracle(k, f, s, memo), (f, s, k.succ, k.labels)

    def test_ag_ef_duality(self):
        rng = random.Random(11)
        for _ in range(80):
            k = random_kripke(rng)
            body = random_formula(rng, depth=2)
            sat = check(k, AG(body))
            universe = frozenset(range(k.n))
            assert sat.states(AG(body)) == universe - sat.states(EF(Not(body)))


class TestFixpointShape:
    def _eu_rounds(self, k, sat_l, sat_r):
        rounds = [frozenset(sat_r)]
        while True:
            cur = rounds[-1]
            nxt = cur | {s for s in sat_l if any(t in cur for t in k.succ[s])}
            if nxt == cur:
                return rounds
            rounds.append(nxt)

    def _eg_rounds(self, k, sat_b):
        rounds = [frozenset(sat_b)]
        while True:
            cur = rounds[-1]
            nxt = frozenset(s for s in cur if any(t in cur for t in k.succ[s]))
            if nxt == cur:
                return rounds
            rounds.append(nxt)

    def test_eu_increasing_eg_decreasing_bounded(self):
        rng = random.Random(5)
        for _ in range(60):
            k = random_kripke(rng)
            a = random_formula(rng, depth=1)
            b = random_formula(rng, depth=1)
            sat = check(k, EU(a, b))
            sat_a, sat_b = sat.states(a), sat.states(b)
            eu_rounds = self._eu_rounds(k, sat_a, sat_b)
            assert all(x <= y for x, y in zip(eu_rounds, eu_rounds[1:]))
            assert len(eu_rounds) <= k.n + 1
            assert eu_rounds[-1] == sat.states(EU(a, b))
            eg_rounds = self._eg_rounds(k, sat_a)
            assert all(x >= y for x, y in zip(eg_rounds, eg_rounds[1:]))
            assert len(eg_rounds) <= k.n + 1
            assert eg_rounds[-1] == sat.states(EG(a))


class TestWitness:
    def test_ef_two_steps_minimal(self):
        k = mk([[1, 2], [3], [3], [3]], [set(), set(), set(), {"p"}])
        w = witness(k, EF(p), 0)
        assert w.states == (0, 1, 3)  # shortest, lowest-id tie-break
        assert w.kind == "finite-path"

    def test_ex_direct_successor(self):
        k = mk([[1], [1]], [set(), {"p"}])
        w = witness(k, EX(p), 0)
        assert w.states == (0, 1)

    def test_unsatisfied_returns_none(self):
        k = mk([[0]], [set()])
        assert witness(k, EF(p), 0) is None

    def test_eg_gives_lasso(self):
        k = mk([[1], [2], [1]], [{"p"}, {"p"}, {"p"}])
        w = witness(k, EG(p), 0)
        assert w.kind == "lasso"
        assert w.states == (0, 1, 2)
        assert w.cycle_start == 1

    def test_nonwitnessable_fragment_rejected(self):
        k = mk([[0]], [{"p"}])
        with pytest.raises(ValueError):
            witness(k, AG(p), 0)
        assert not is_witnessable(And(EF(p), EF(q)))
        assert is_witnessable(EF(And(p, EX(EU(Not(q), p)))))

    def test_random_witnesses_validate(self):
        rng = random.Random(77)
        validated = 0
        for _ in range(300):
            k = random_kripke(rng)
            f = random_formula(rng)
            if not is_witnessable(f):
                continue
            sat = check(k, f)
            for s in range(k.n):
                if sat.holds(f, s):
                    w = witness(k, f, s, sat)
                    assert edge_valid(k, w)
                    assert trace_demonstrates(k, f, w), (f, w.states, w.cycle_start)
                    validated += 1
        assert validated > 100
