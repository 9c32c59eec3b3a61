"""Counterexample feasibility refinement.

A witness trace is compiled into linear path constraints: assignments
introduce SSA-style fresh versions, branch guards add (in)equalities, and
anything nonlinear or unknown havocs its target.  The conjunction is then
tested for rational satisfiability by Fourier-Motzkin elimination.  An
Infeasible verdict is trusted (rational emptiness implies integer
emptiness, and dropped constraints only over-approximate), so a diagnostic
is suppressed only when every enumerated witness is infeasible and the
enumeration ran to exhaustion or the configured witness budget.

Feasible verdicts over-approximate twice, by design: havocked values are
unconstrained, and integer tightening is not performed, so a path that is
rationally but not integrally satisfiable still confirms its diagnostic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

from . import frontend as ast
from .cfg import COND, Cfg, FALSE, STMT, TRUE
from .ctl import (
    And, CtlFormula, EF, EU, EX, Or, SatSets, TrueF, WitnessTrace, check,
    is_propositional, witness,
)
from .speclang import CheckTask

EQ, LE, LT = "=", "<=", "<"

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class PathConstraint:
    """Sum of coeff*versioned-variable  (= | <= | <)  constant."""

    terms: tuple[tuple[str, Fraction], ...]  # sorted by variable
    op: str  # EQ | LE | LT
    rhs: Fraction

    def __str__(self) -> str:
        if not self.terms:
            lhs = "0"
        else:
            lhs = " + ".join(f"{c}*{v}" if c != 1 else v for v, c in self.terms)
        return f"{lhs} {self.op} {self.rhs}"


@dataclass(frozen=True)
class FeasibilityVerdict:
    kind: str  # FEASIBLE | INFEASIBLE | UNKNOWN
    reason: str | None = None  # for UNKNOWN: "nonlinear-havoc" | "budget"

    def __bool__(self) -> bool:
        return self.kind == FEASIBLE


Feasible = FeasibilityVerdict(FEASIBLE)
Infeasible = FeasibilityVerdict(INFEASIBLE)


def _constraint(terms: dict[str, Fraction], op: str, rhs: Fraction) -> PathConstraint:
    clean = tuple(sorted((v, c) for v, c in terms.items() if c != 0))
    return PathConstraint(clean, op, rhs)


# ---------------------------------------------------------------------------
# Trace -> constraints

class _Versions:
    def __init__(self):
        self.cur: dict[str, int] = {}

    def read(self, name: str) -> str:
        return f"{name}@{self.cur.get(name, 0)}"

    def fresh(self, name: str) -> str:
        self.cur[name] = self.cur.get(name, 0) + 1
        return f"{name}@{self.cur[name]}"


def _linear(e: ast.Expr, v: _Versions) -> tuple[dict[str, Fraction], Fraction] | None:
    """Affine form of an expression over current versions, or None."""
    if isinstance(e, ast.IntLit):
        return {}, Fraction(e.value)
    if isinstance(e, ast.Var):
        return {v.read(e.name): Fraction(1)}, Fraction(0)
    if isinstance(e, ast.Unary) and e.op == "-":
        sub = _linear(e.operand, v)
        if sub is None:
            return None
        terms, c = sub
        return {k: -x for k, x in terms.items()}, -c
    if isinstance(e, ast.Binary) and e.op in ("+", "-"):
        l = _linear(e.left, v)
        r = _linear(e.right, v)
        if l is None or r is None:
            return None
        lt, lc = l
        rt, rc = r
        sign = 1 if e.op == "+" else -1
        out = dict(lt)
        for k, x in rt.items():
            out[k] = out.get(k, Fraction(0)) + sign * x
        return out, lc + sign * rc
    if isinstance(e, ast.Binary) and e.op == "*":
        l = _linear(e.left, v)
        r = _linear(e.right, v)
        if l is None or r is None:
            return None
        lt, lc = l
        rt, rc = r
        if not lt:
            return {k: lc * x for k, x in rt.items()}, lc * rc
        if not rt:
            return {k: rc * x for k, x in lt.items()}, rc * lc
        return None
    return None  # division, modulo, comparisons, calls, derefs: nonlinear


def _user_calls_in(e: ast.Expr | None) -> bool:
    if e is None:
        return False
    if isinstance(e, ast.Call):
        return e.name not in ast.BUILTIN_FUNCTIONS or any(_user_calls_in(a) for a in e.args)
    if isinstance(e, ast.Unary):
        return _user_calls_in(e.operand)
    if isinstance(e, ast.Binary):
        return _user_calls_in(e.left) or _user_calls_in(e.right)
    if isinstance(e, ast.Index):
        return _user_calls_in(e.base) or _user_calls_in(e.index)
    return False


_CMP_TRUE = {
    # l ? r rewritten as (l - r) op 0
    "<": (LT, False), "<=": (LE, False), ">": (LT, True), ">=": (LE, True),
}
_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def path_constraints(trace: WitnessTrace, cfg: Cfg,
                     global_names: frozenset[str] = frozenset()) -> list[PathConstraint]:
    """Linear constraints implied by walking the trace.

    Only the stem of a lasso is encoded: loop iterations would multiply
    constraints without bound, and dropping them only widens feasibility,
    which keeps suppression sound.  Strict integer guards stay strict over
    the rationals.
    """
    states = list(trace.states)
    if trace.cycle_start is not None:
        last = trace.cycle_start  # guard of the stem->cycle edge still applies
        states = states[:last + 1]
    v = _Versions()
    out: list[PathConstraint] = []
    for i, sid in enumerate(states):
        node = cfg.nodes[sid]
        nxt = states[i + 1] if i + 1 < len(states) else None
        if node.kind == STMT:
            s = node.stmt
            if isinstance(s, (ast.VarDecl, ast.Assign)):
                target = None
                if isinstance(s, ast.VarDecl):
                    target, rhs = s.name, s.init
                elif isinstance(s.target, ast.Var):
                    target, rhs = s.target.name, s.value
                else:
                    rhs = s.value
                if _user_calls_in(rhs):
                    for g in sorted(global_names):
                        v.fresh(g)
                if target is None:
                    continue  # write through *p / arr[i]: tracked vars unchanged
                lin = _linear(rhs, v) if rhs is not None else None
                fresh = v.fresh(target)
                if lin is not None:
                    terms, c = lin
                    terms = dict(terms)
                    terms[fresh] = terms.get(fresh, Fraction(0)) - 1
                    # rhs - fresh = -c  i.e.  fresh = rhs
                    out.append(_constraint({k: -x for k, x in terms.items()}, EQ, c))
                # nonlinear/unknown: fresh version stays unconstrained
            elif isinstance(s, (ast.ExprStmt, ast.Return)):
                e = s.expr if isinstance(s, ast.ExprStmt) else s.value
                if _user_calls_in(e):
                    for g in sorted(global_names):
                        v.fresh(g)
        elif node.kind == COND and nxt is not None:
            label = _edge_label(cfg, sid, nxt)
            if label is None:
                continue
            if _user_calls_in(node.expr):
                for g in sorted(global_names):
                    v.fresh(g)
            c = _guard_constraint(node.expr, label, v)
            if c is not None:
                out.append(c)
    return out


def _edge_label(cfg: Cfg, a: int, b: int) -> str | None:
    labels = [lab for t, lab in cfg.succ[a] if t == b]
    if not labels:
        return None
    if TRUE in labels and FALSE in labels:
        return None  # both branches join at the same node: guard is vacuous
    return labels[0]


def _guard_constraint(e: ast.Expr, branch: str, v: _Versions) -> PathConstraint | None:
    if isinstance(e, ast.Binary) and e.op in ("<", "<=", ">", ">=", "==", "!="):
        op = e.op if branch == TRUE else _NEGATE[e.op]
        if op == "!=":
            return None  # not expressible as a convex constraint
        l = _linear(e.left, v)
        r = _linear(e.right, v)
        if l is None or r is None:
            return None
        lt, lc = l
        rt, rc = r
        diff = dict(lt)
        for k, x in rt.items():
            diff[k] = diff.get(k, Fraction(0)) - x
        rhs = rc - lc
        if op == "==":
            return _constraint(diff, EQ, rhs)
        cmp_op, flip = _CMP_TRUE[op]
        if flip:
            diff = {k: -x for k, x in diff.items()}
            rhs = -rhs
        return _constraint(diff, cmp_op, rhs)
    # truth-value guard: the false branch pins a linear expression to 0
    lin = _linear(e, v)
    if lin is None:
        return None
    terms, c = lin
    if branch == FALSE:
        return _constraint(terms, EQ, -c)
    if not terms and c == 0:
        # constant-zero guard taken on its true edge: impossible path
        return _constraint({}, LT, Fraction(0))
    return None


# ---------------------------------------------------------------------------
# Fourier-Motzkin over the rationals

DEFAULT_FM_BUDGET = 20_000


def feasible(cs: list[PathConstraint], budget: int = DEFAULT_FM_BUDGET) -> FeasibilityVerdict:
    """Rational satisfiability of a constraint conjunction.

    Equalities are removed by substitution, inequalities by pairwise
    variable elimination.  When the remaining variable-count x
    constraint-count product exceeds `budget`, gives up with
    Unknown(budget).
    """
    eqs = [c for c in cs if c.op == EQ]
    ineqs = [c for c in cs if c.op != EQ]

    while eqs:
        c = eqs.pop()
        if not c.terms:
            if c.rhs != 0:
                return Infeasible
            continue
        var, coef = c.terms[0]
        # var = (rhs - rest)/coef
        rest = {k: x for k, x in c.terms[1:]}
        sub_terms = {k: -x / coef for k, x in rest.items()}
        sub_const = c.rhs / coef
        eqs = [_substitute(o, var, sub_terms, sub_const) for o in eqs]
        ineqs = [_substitute(o, var, sub_terms, sub_const) for o in ineqs]

    ineqs = _dedup(ineqs)
    while True:
        ground_bad = any(_ground_violated(c) for c in ineqs if not c.terms)
        if ground_bad:
            return Infeasible
        ineqs = [c for c in ineqs if c.terms]
        variables = sorted({v for c in ineqs for v, _ in c.terms})
        if not variables:
            return Feasible
        if len(variables) * len(ineqs) > budget:
            return FeasibilityVerdict(UNKNOWN, "budget")
        var = min(variables, key=lambda v: (_elim_cost(ineqs, v), v))
        pos = [c for c in ineqs if _coef(c, var) > 0]
        neg = [c for c in ineqs if _coef(c, var) < 0]
        rest = [c for c in ineqs if _coef(c, var) == 0]
        if not pos or not neg:
            ineqs = rest  # var unbounded on one side: always satisfiable
            continue
        for p in pos:
            a = _coef(p, var)
            for q in neg:
                b = -_coef(q, var)
                terms: dict[str, Fraction] = {}
                for k, x in p.terms:
                    terms[k] = terms.get(k, Fraction(0)) + b * x
                for k, x in q.terms:
                    terms[k] = terms.get(k, Fraction(0)) + a * x
                op = LT if LT in (p.op, q.op) else LE
                rest.append(_constraint(terms, op, b * p.rhs + a * q.rhs))
        ineqs = _dedup(rest)


def _coef(c: PathConstraint, var: str) -> Fraction:
    for v, x in c.terms:
        if v == var:
            return x
    return Fraction(0)


def _elim_cost(cs: list[PathConstraint], var: str) -> int:
    pos = sum(1 for c in cs if _coef(c, var) > 0)
    neg = sum(1 for c in cs if _coef(c, var) < 0)
    return pos * neg


def _substitute(c: PathConstraint, var: str, sub_terms: dict[str, Fraction],
                sub_const: Fraction) -> PathConstraint:
    coef = _coef(c, var)
    if coef == 0:
        return c
    terms = {k: x for k, x in c.terms if k != var}
    for k, x in sub_terms.items():
        terms[k] = terms.get(k, Fraction(0)) + coef * x
    return _constraint(terms, c.op, c.rhs - coef * sub_const)


def _ground_violated(c: PathConstraint) -> bool:
    if c.op == LE:
        return c.rhs < 0
    if c.op == LT:
        return c.rhs <= 0
    return c.rhs != 0


def _dedup(cs: list[PathConstraint]) -> list[PathConstraint]:
    seen = set()
    out = []
    for c in cs:
        key = (c.terms, c.op, c.rhs)
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


# ---------------------------------------------------------------------------
# Witness enumeration

@dataclass(frozen=True)
class _Gate:
    prop: CtlFormula
    nxt: int


@dataclass(frozen=True)
class _Step:
    nxt: int


@dataclass(frozen=True)
class _Stay:
    prop: CtlFormula
    nxt: int


@dataclass(frozen=True)
class _Split:
    a: int
    b: int


@dataclass(frozen=True)
class _Accept:
    prop: CtlFormula


def _compile_obligations(f: CtlFormula, phases: list) -> int | None:
    """Obligation automaton for linear EX/EU/EF chains; None if the formula
    needs branching or lasso witnesses (EG, two temporal conjuncts, ...)."""
    if is_propositional(f):
        phases.append(_Accept(f))
        return len(phases) - 1
    if isinstance(f, And):
        if is_propositional(f.left):
            prop, temporal = f.left, f.right
        elif is_propositional(f.right):
            prop, temporal = f.right, f.left
        else:
            return None
        nxt = _compile_obligations(temporal, phases)
        if nxt is None:
            return None
        phases.append(_Gate(prop, nxt))
        return len(phases) - 1
    if isinstance(f, Or):
        a = _compile_obligations(f.left, phases)
        b = _compile_obligations(f.right, phases)
        if a is None or b is None:
            return None
        phases.append(_Split(a, b))
        return len(phases) - 1
    if isinstance(f, EX):
        nxt = _compile_obligations(f.sub, phases)
        if nxt is None:
            return None
        phases.append(_Step(nxt))
        return len(phases) - 1
    if isinstance(f, EF):
        nxt = _compile_obligations(f.sub, phases)
        if nxt is None:
            return None
        phases.append(_Stay(TrueF(), nxt))
        return len(phases) - 1
    if isinstance(f, EU):
        if not is_propositional(f.left):
            return None
        nxt = _compile_obligations(f.right, phases)
        if nxt is None:
            return None
        phases.append(_Stay(f.left, nxt))
        return len(phases) - 1
    return None


DEFAULT_ENUM_BUDGET = 4_000


def enumerate_witnesses(task_kripke, formula: CtlFormula, start: int, limit: int,
                        sat: SatSets | None = None,
                        budget: int = DEFAULT_ENUM_BUDGET) -> tuple[list[WitnessTrace], bool]:
    """Up to `limit` distinct finite witnesses, shortest first with
    lowest-state-id tie-breaks; second result reports whether enumeration
    ran to exhaustion.  Distinct means differing in at least one edge;
    idling on self-loops is not a distinct witness.
    """
    phases: list = []
    entry = _compile_obligations(formula, phases)
    if entry is None:
        return [], False
    sat = sat or check(task_kripke, formula)
    holds = sat.holds
    found: list[WitnessTrace] = []
    seen_traces: set[tuple[int, ...]] = set()
    heap: list[tuple[int, tuple[int, ...], int]] = [(0, (start,), entry)]
    visited: set[tuple[tuple[int, ...], int]] = set()
    expansions = 0
    while heap and len(found) < limit:
        steps, states, ph = heapq.heappop(heap)
        key = (states, ph)
        if key in visited:
            continue
        visited.add(key)
        expansions += 1
        if expansions > budget:
            return found, False
        state = states[-1]
        phase = phases[ph]
        if isinstance(phase, _Accept):
            if holds(phase.prop, state) and states not in seen_traces:
                seen_traces.add(states)
                found.append(WitnessTrace(states))
            continue
        if isinstance(phase, _Gate):
            if holds(phase.prop, state):
                heapq.heappush(heap, (steps, states, phase.nxt))
            continue
        if isinstance(phase, _Split):
            heapq.heappush(heap, (steps, states, phase.a))
            heapq.heappush(heap, (steps, states, phase.b))
            continue
        if isinstance(phase, _Step):
            for t in task_kripke.succ[state]:
                heapq.heappush(heap, (steps + 1, states + (t,), phase.nxt))
            continue
        if isinstance(phase, _Stay):
            heapq.heappush(heap, (steps, states, phase.nxt))
            if holds(phase.prop, state):
                for t in task_kripke.succ[state]:
                    if t == state:
                        continue  # product self-loop: idling adds nothing
                    heapq.heappush(heap, (steps + 1, states + (t,), ph))
            continue
        raise AssertionError(phase)
    return found, not heap


# ---------------------------------------------------------------------------
# The refinement loop

CONFIRMED = "confirmed"
UNCONFIRMED = "unconfirmed"
SUPPRESSED = "suppressed"


def refine_diagnostic(task: CheckTask, cfg: Cfg, max_witnesses: int,
                      global_names: frozenset[str] = frozenset(),
                      sat: SatSets | None = None,
                      fm_budget: int = DEFAULT_FM_BUDGET,
                      enum_budget: int = DEFAULT_ENUM_BUDGET,
                      ) -> tuple[str, WitnessTrace | None]:
    """Feasibility-filter a satisfied check task.

    Enumerates up to `max_witnesses` distinct traces shortest-first: the
    first feasible one confirms the diagnostic; if every enumerated trace
    is infeasible and enumeration was exhaustive or hit the witness budget,
    the diagnostic is suppressed; any Unknown (or an aborted enumeration)
    downgrades to unconfirmed instead.
    """
    sat = sat or check(task.kripke, task.formula)
    assert sat.holds(task.formula, cfg.entry), "refine requires a satisfied task"
    if max_witnesses <= 0:
        return UNCONFIRMED, witness(task.kripke, task.formula, cfg.entry, sat)
    traces, exhausted = enumerate_witnesses(
        task.kripke, task.formula, cfg.entry, max_witnesses, sat, enum_budget)
    if not traces:
        return UNCONFIRMED, witness(task.kripke, task.formula, cfg.entry, sat)
    saw_unknown = False
    for trace in traces:
        verdict = feasible(path_constraints(trace, cfg, global_names), fm_budget)
        if verdict.kind == FEASIBLE:
            return CONFIRMED, trace
        if verdict.kind == UNKNOWN:
            saw_unknown = True
    if saw_unknown or (not exhausted and len(traces) < max_witnesses):
        return UNCONFIRMED, traces[0]
    return SUPPRESSED, None
