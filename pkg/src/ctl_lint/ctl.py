"""Explicit-state CTL model checker.

Formulas are rewritten into the adequate set {True, Prop, Not, And, EX,
EU, EG} and evaluated by global fixed-point labeling: least fixpoint with
a backward worklist for EU, greatest fixpoint by successor counting for
EG.  Each (sub)formula is labeled once per structure; results are memoized
by structural identity, so repeated queries on the same structure are
cheap.

Witness extraction covers the existential-positive fragment used by the
check catalog: EF / EX / EU / EG nesting over propositional cores, with
Or-choice and at most one temporal conjunct per And.  Witnesses for
EU/EX obligations are BFS-shortest with lowest-successor-id tie-breaks;
EG obligations close into a lasso whose cycle stays inside the EG body's
satisfaction set.
"""

from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass

from .cfg import KripkeStructure


class CtlFormula:
    __slots__ = ()


@dataclass(frozen=True)
class TrueF(CtlFormula):
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class Prop(CtlFormula):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not(CtlFormula):
    sub: CtlFormula

    def __str__(self) -> str:
        return f"!{_wrap(self.sub)}"


@dataclass(frozen=True)
class And(CtlFormula):
    left: CtlFormula
    right: CtlFormula

    def __str__(self) -> str:
        return f"{_wrap(self.left)} & {_wrap(self.right)}"


@dataclass(frozen=True)
class Or(CtlFormula):
    left: CtlFormula
    right: CtlFormula

    def __str__(self) -> str:
        return f"{_wrap(self.left)} | {_wrap(self.right)}"


@dataclass(frozen=True)
class Implies(CtlFormula):
    left: CtlFormula
    right: CtlFormula

    def __str__(self) -> str:
        return f"{_wrap(self.left)} -> {_wrap(self.right)}"


@dataclass(frozen=True)
class EX(CtlFormula):
    sub: CtlFormula

    def __str__(self) -> str:
        return f"EX {_wrap(self.sub)}"


@dataclass(frozen=True)
class AX(CtlFormula):
    sub: CtlFormula

    def __str__(self) -> str:
        return f"AX {_wrap(self.sub)}"


@dataclass(frozen=True)
class EF(CtlFormula):
    sub: CtlFormula

    def __str__(self) -> str:
        return f"EF {_wrap(self.sub)}"


@dataclass(frozen=True)
class AF(CtlFormula):
    sub: CtlFormula

    def __str__(self) -> str:
        return f"AF {_wrap(self.sub)}"


@dataclass(frozen=True)
class EG(CtlFormula):
    sub: CtlFormula

    def __str__(self) -> str:
        return f"EG {_wrap(self.sub)}"


@dataclass(frozen=True)
class AG(CtlFormula):
    sub: CtlFormula

    def __str__(self) -> str:
        return f"AG {_wrap(self.sub)}"


@dataclass(frozen=True)
class EU(CtlFormula):
    left: CtlFormula
    right: CtlFormula

    def __str__(self) -> str:
        return f"E[{self.left} U {self.right}]"


@dataclass(frozen=True)
class AU(CtlFormula):
    left: CtlFormula
    right: CtlFormula

    def __str__(self) -> str:
        return f"A[{self.left} U {self.right}]"


TRUE = TrueF()


def _wrap(f: CtlFormula) -> str:
    if isinstance(f, (TrueF, Prop, Not, EX, AX, EF, AF, EG, AG, EU, AU)):
        return str(f)
    return f"({f})"


def props_of(f: CtlFormula) -> frozenset[str]:
    if isinstance(f, Prop):
        return frozenset((f.name,))
    if isinstance(f, (TrueF,)):
        return frozenset()
    if isinstance(f, (Not, EX, AX, EF, AF, EG, AG)):
        return props_of(f.sub)
    return props_of(f.left) | props_of(f.right)


@functools.cache
def normalize(f: CtlFormula) -> CtlFormula:
    """Rewrite into the adequate set {True, Prop, Not, And, EX, EU, EG}.

    EF p = E[true U p];  AX p = !EX !p;  AG p = !E[true U !p];
    AF p = !EG !p;  A[p U q] = !(E[!q U (!p & !q)] | EG !q), with Or and
    Implies removed by De Morgan.  Double negations are collapsed.
    """
    if isinstance(f, (TrueF, Prop)):
        return f
    if isinstance(f, Not):
        sub = normalize(f.sub)
        if isinstance(sub, Not):
            return sub.sub
        return Not(sub)
    if isinstance(f, And):
        return And(normalize(f.left), normalize(f.right))
    if isinstance(f, Or):
        return normalize(Not(And(Not(f.left), Not(f.right))))
    if isinstance(f, Implies):
        return normalize(Not(And(f.left, Not(f.right))))
    if isinstance(f, EX):
        return EX(normalize(f.sub))
    if isinstance(f, AX):
        return normalize(Not(EX(Not(f.sub))))
    if isinstance(f, EF):
        return EU(TRUE, normalize(f.sub))
    if isinstance(f, AG):
        return normalize(Not(EU(TRUE, Not(f.sub))))
    if isinstance(f, AF):
        return normalize(Not(EG(Not(f.sub))))
    if isinstance(f, EG):
        return EG(normalize(f.sub))
    if isinstance(f, EU):
        return EU(normalize(f.left), normalize(f.right))
    if isinstance(f, AU):
        # !(E[!q U (!p & !q)] | EG !q) == !E[...] & !EG !q
        return normalize(And(Not(EU(Not(f.right), And(Not(f.left), Not(f.right)))),
                             Not(EG(Not(f.right)))))
    raise TypeError(f"not a CTL formula: {f!r}")


class SatSets:
    """Satisfaction sets of a formula and its subformulas on one structure.

    Lookups accept any formula; it is normalized and evaluated on demand,
    memoized by structural identity.
    """

    def __init__(self, kripke: KripkeStructure):
        self.kripke = kripke
        self._all = frozenset(range(kripke.n))
        self._memo: dict[CtlFormula, frozenset[int]] = {}

    def states(self, f: CtlFormula) -> frozenset[int]:
        return self._eval(normalize(f))

    def holds(self, f: CtlFormula, state: int) -> bool:
        return state in self.states(f)

    def dump(self) -> str:
        """Debug rendering of every labeled subformula and its states."""
        lines = [f"{sorted(states)}  {formula}"
                 for formula, states in self._memo.items()]
        return "\n".join(sorted(lines)) + ("\n" if lines else "")

    def _eval(self, f: CtlFormula) -> frozenset[int]:
        got = self._memo.get(f)
        if got is not None:
            return got
        k = self.kripke
        if isinstance(f, TrueF):
            result = self._all
        elif isinstance(f, Prop):
            result = frozenset(s for s in range(k.n) if f.name in k.labels[s])
        elif isinstance(f, Not):
            result = self._all - self._eval(f.sub)
        elif isinstance(f, And):
            result = self._eval(f.left) & self._eval(f.right)
        elif isinstance(f, EX):
            result = self._pre_exists(self._eval(f.sub))
        elif isinstance(f, EU):
            result = self._eval_eu(self._eval(f.left), self._eval(f.right))
        elif isinstance(f, EG):
            result = self._eval_eg(self._eval(f.sub))
        else:
            raise AssertionError(f"non-normalized operator reached evaluator: {f!r}")
        self._memo[f] = result
        return result

    def _pre_exists(self, target: frozenset[int]) -> frozenset[int]:
        pred = self.kripke.pred
        out: set[int] = set()
        for t in target:
            out.update(pred[t])
        return frozenset(out)

    def _eval_eu(self, sat_l: frozenset[int], sat_r: frozenset[int]) -> frozenset[int]:
        # least fixpoint Z = sat_r | (sat_l & pre_exists(Z)), backward worklist
        pred = self.kripke.pred
        result = set(sat_r)
        work = deque(sat_r)
        while work:
            t = work.popleft()
            for s in pred[t]:
                if s in sat_l and s not in result:
                    result.add(s)
                    work.append(s)
        return frozenset(result)

    def _eval_eg(self, sat: frozenset[int]) -> frozenset[int]:
        # greatest fixpoint Z = sat & pre_exists(Z): peel states whose
        # successor count inside the candidate set drains to zero
        succ, pred = self.kripke.succ, self.kripke.pred
        count = {s: sum(1 for t in succ[s] if t in sat) for s in sat}
        work = deque(s for s, c in count.items() if c == 0)
        removed = set(work)
        while work:
            t = work.popleft()
            for s in pred[t]:
                if s in sat and s not in removed:
                    count[s] -= 1
                    if count[s] == 0:
                        removed.add(s)
                        work.append(s)
        return frozenset(s for s in sat if s not in removed)


def check(k: KripkeStructure, f: CtlFormula) -> SatSets:
    """Label every state of `k` with the subformulas of `f` it satisfies."""
    sets = SatSets(k)
    sets.states(f)
    return sets


# ---------------------------------------------------------------------------
# Witness extraction

@dataclass(frozen=True)
class WitnessTrace:
    """A path demonstrating an existential formula from its first state.

    `cycle_start` marks the state the final transition loops back to when
    the witness is a lasso; None means a plain finite path.
    """

    states: tuple[int, ...]
    cycle_start: int | None = None

    @property
    def kind(self) -> str:
        return "lasso" if self.cycle_start is not None else "finite-path"

    def edge_list(self) -> list[tuple[int, int]]:
        edges = list(zip(self.states, self.states[1:]))
        if self.cycle_start is not None:
            edges.append((self.states[-1], self.states[self.cycle_start]))
        return edges


def is_propositional(f: CtlFormula) -> bool:
    if isinstance(f, (TrueF, Prop)):
        return True
    if isinstance(f, Not):
        return is_propositional(f.sub)
    if isinstance(f, (And, Or, Implies)):
        return is_propositional(f.left) and is_propositional(f.right)
    return False


def is_witnessable(f: CtlFormula) -> bool:
    """Existential-positive fragment with single-path witnesses."""
    if is_propositional(f):
        return True
    if isinstance(f, And):
        if is_propositional(f.left):
            return is_witnessable(f.right)
        if is_propositional(f.right):
            return is_witnessable(f.left)
        return False
    if isinstance(f, Or):
        return is_witnessable(f.left) and is_witnessable(f.right)
    if isinstance(f, (EX, EF)):
        return is_witnessable(f.sub)
    if isinstance(f, EU):
        return is_propositional(f.left) and is_witnessable(f.right)
    if isinstance(f, EG):
        return is_propositional(f.sub)
    return False


def witness(k: KripkeStructure, f: CtlFormula, s: int,
            sat: SatSets | None = None) -> WitnessTrace | None:
    """Extract a demonstrating trace for `f` at `s`, or None if s does not
    satisfy f.  `f` must lie in the witnessable fragment."""
    if not is_witnessable(f):
        raise ValueError(f"no single-path witness exists for {f}")
    sat = sat or check(k, f)
    if not sat.holds(f, s):
        return None
    states, cycle = _demonstrate(k, sat, f, s)
    return WitnessTrace(tuple(states), cycle)


def _demonstrate(k: KripkeStructure, sat: SatSets, f: CtlFormula,
                 s: int) -> tuple[list[int], int | None]:
    if is_propositional(f):
        return [s], None
    if isinstance(f, And):
        inner = f.right if is_propositional(f.left) else f.left
        return _demonstrate(k, sat, inner, s)
    if isinstance(f, Or):
        side = f.left if sat.holds(f.left, s) else f.right
        return _demonstrate(k, sat, side, s)
    if isinstance(f, EX):
        sat_sub = sat.states(f.sub)
        t = min(t for t in k.succ[s] if t in sat_sub)
        rest, cycle = _demonstrate(k, sat, f.sub, t)
        return [s] + rest, _shift(cycle, 1)
    if isinstance(f, EF):
        return _demonstrate(k, sat, EU(TRUE, f.sub), s)
    if isinstance(f, EU):
        path = _bfs_until(k, sat.states(f.left), sat.states(f.right), s)
        rest, cycle = _demonstrate(k, sat, f.right, path[-1])
        return path[:-1] + rest, _shift(cycle, len(path) - 1)
    if isinstance(f, EG):
        return _eg_lasso(k, sat.states(EG(f.sub)), s)
    raise AssertionError(f"unreachable for witnessable formula {f!r}")


def _shift(cycle: int | None, by: int) -> int | None:
    return None if cycle is None else cycle + by


def _bfs_until(k: KripkeStructure, sat_left: frozenset[int],
               sat_right: frozenset[int], s: int) -> list[int]:
    """Shortest path from s to a `sat_right` state through `sat_left`
    states, expanding successors in id order."""
    if s in sat_right:
        return [s]
    parent: dict[int, int] = {s: -1}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u not in sat_left:
            continue
        for t in k.succ[u]:  # already sorted
            if t in parent:
                continue
            parent[t] = u
            if t in sat_right:
                path = [t]
                while path[-1] != s:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            queue.append(t)
    raise AssertionError("witness search failed on a satisfying state")


def _eg_lasso(k: KripkeStructure, core: frozenset[int],
              s: int) -> tuple[list[int], int | None]:
    """Walk inside SAT(EG body) picking lowest successor ids until a state
    repeats; the repeat closes the cycle."""
    seen: dict[int, int] = {}
    path: list[int] = []
    cur = s
    while cur not in seen:
        seen[cur] = len(path)
        path.append(cur)
        cur = min(t for t in k.succ[cur] if t in core)
    return path, seen[cur]
