"""Per-function control-flow graphs and the Kripke-structure view.

Granularity is one node per statement or atomic condition.  `&&`, `||`
and `!` in conditions are expanded into chains of single-condition nodes
during construction (short-circuit form), so each Cond node carries an
expression free of boolean connectives and edge labels keep their plain
meaning: the `true` edge is taken when the node's expression is nonzero.

Unreachable nodes are kept in the graph and flagged; the dead-code check
needs to see them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .frontend import (
    Assign, Binary, Block, Break, Continue, Expr, ExprStmt, For, FunctionDef,
    If, IntLit, Return, SourceLocation, Stmt, Unary, VarDecl, While,
)

ENTRY = "entry"
EXIT = "exit"
STMT = "stmt"
COND = "cond"

UNCOND = "uncond"
TRUE = "true"
FALSE = "false"


@dataclass(eq=False)
class CfgNode:
    id: int
    kind: str  # ENTRY | EXIT | STMT | COND
    loc: SourceLocation
    stmt: Stmt | None = None  # for STMT nodes
    expr: Expr | None = None  # for COND nodes

    def describe(self) -> str:
        if self.kind == ENTRY:
            return "entry"
        if self.kind == EXIT:
            return "exit"
        if self.kind == COND:
            return f"cond @ {self.loc.line}:{self.loc.column}"
        return f"{type(self.stmt).__name__.lower()} @ {self.loc.line}:{self.loc.column}"


@dataclass(eq=False)
class Cfg:
    function: str
    func: FunctionDef
    nodes: list[CfgNode]
    edges: list[tuple[int, int, str]]  # (from, to, label)
    entry: int
    exit: int
    loop_heads: frozenset[int]

    @cached_property
    def succ(self) -> list[list[tuple[int, str]]]:
        out: list[list[tuple[int, str]]] = [[] for _ in self.nodes]
        for a, b, lab in self.edges:
            out[a].append((b, lab))
        for lst in out:
            lst.sort()
        return out

    @cached_property
    def pred(self) -> list[list[tuple[int, str]]]:
        out: list[list[tuple[int, str]]] = [[] for _ in self.nodes]
        for a, b, lab in self.edges:
            out[b].append((a, lab))
        for lst in out:
            lst.sort()
        return out

    @cached_property
    def unreachable(self) -> frozenset[int]:
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            n = stack.pop()
            for m, _ in self.succ[n]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return frozenset(n.id for n in self.nodes if n.id not in seen)

    @cached_property
    def node_of_fragment(self) -> dict[int, int]:
        """Map id(ast node) -> cfg node id, for statements and cond expressions."""
        out: dict[int, int] = {}
        for n in self.nodes:
            if n.stmt is not None:
                out[id(n.stmt)] = n.id
            if n.expr is not None:
                out[id(n.expr)] = n.id
        return out


class _Builder:
    # Sinks passed around below are either a concrete node id or a list
    # collecting dangling (node, label) pairs to be resolved later.

    def __init__(self, f: FunctionDef):
        self.f = f
        self.nodes: list[CfgNode] = []
        self.edges: list[tuple[int, int, str]] = []
        self.loop_heads: set[int] = set()
        self.return_nodes: list[int] = []

    def new_node(self, kind: str, loc: SourceLocation, stmt: Stmt | None = None,
                 expr: Expr | None = None) -> int:
        node = CfgNode(len(self.nodes), kind, loc, stmt=stmt, expr=expr)
        self.nodes.append(node)
        return node.id

    def connect(self, src: int, label: str, sink) -> None:
        if isinstance(sink, int):
            self.edges.append((src, sink, label))
        else:
            sink.append((src, label))

    def resolve(self, dangling: list[tuple[int, str]], target: int) -> None:
        for src, label in dangling:
            self.edges.append((src, target, label))

    # -- conditions, expanded to short-circuit chains

    def cond(self, e: Expr, t_sink, f_sink) -> int:
        if isinstance(e, Binary) and e.op == "&&":
            right = self.cond(e.right, t_sink, f_sink)
            return self.cond(e.left, right, f_sink)
        if isinstance(e, Binary) and e.op == "||":
            right = self.cond(e.right, t_sink, f_sink)
            return self.cond(e.left, t_sink, right)
        if isinstance(e, Unary) and e.op == "!":
            return self.cond(e.operand, f_sink, t_sink)
        nid = self.new_node(COND, e.loc, expr=e)
        self.connect(nid, TRUE, t_sink)
        self.connect(nid, FALSE, f_sink)
        return nid

    # -- statements; a segment is (entry id or None when empty, dangling outs)

    def seq(self, stmts: list[Stmt], brk, cont) -> tuple[int | None, list[tuple[int, str]]]:
        entry: int | None = None
        outs: list[tuple[int, str]] = []
        first = True
        for s in stmts:
            s_entry, s_outs = self.stmt(s, brk, cont)
            if s_entry is None:
                continue
            if first:
                entry = s_entry
                first = False
            else:
                self.resolve(outs, s_entry)
            outs = s_outs
        return entry, outs

    def stmt(self, s: Stmt, brk, cont) -> tuple[int | None, list[tuple[int, str]]]:
        if isinstance(s, Block):
            return self.seq(s.stmts, brk, cont)
        if isinstance(s, (VarDecl, Assign, ExprStmt)):
            nid = self.new_node(STMT, s.loc, stmt=s)
            return nid, [(nid, UNCOND)]
        if isinstance(s, Return):
            nid = self.new_node(STMT, s.loc, stmt=s)
            self.return_nodes.append(nid)
            return nid, []
        if isinstance(s, Break):
            nid = self.new_node(STMT, s.loc, stmt=s)
            self.connect(nid, UNCOND, brk)
            return nid, []
        if isinstance(s, Continue):
            nid = self.new_node(STMT, s.loc, stmt=s)
            self.connect(nid, UNCOND, cont)
            return nid, []
        if isinstance(s, If):
            outs: list[tuple[int, str]] = []
            t_entry, t_outs = self.stmt(s.then, brk, cont)
            t_sink = t_entry if t_entry is not None else outs
            if s.orelse is not None:
                e_entry, e_outs = self.stmt(s.orelse, brk, cont)
                f_sink = e_entry if e_entry is not None else outs
                outs.extend(e_outs)
            else:
                f_sink = outs
            entry = self.cond(s.cond, t_sink, f_sink)
            outs.extend(t_outs)
            return entry, outs
        if isinstance(s, While):
            after: list[tuple[int, str]] = []
            body_sink: list[tuple[int, str]] = []
            head = self.cond(s.cond, body_sink, after)
            self.loop_heads.add(head)
            b_entry, b_outs = self.stmt(s.body, after, head)
            self.resolve(body_sink, b_entry if b_entry is not None else head)
            self.resolve(b_outs, head)
            return head, after
        if isinstance(s, For):
            after: list[tuple[int, str]] = []
            cond_expr = s.cond
            if cond_expr is None:
                cond_expr = IntLit(1)
                cond_expr.loc = s.loc
            body_sink: list[tuple[int, str]] = []
            head = self.cond(cond_expr, body_sink, after)
            self.loop_heads.add(head)
            if s.step is not None:
                step_entry, step_outs = self.stmt(s.step, None, None)
                self.resolve(step_outs, head)
                cont_target: int = step_entry  # type: ignore[assignment]
            else:
                cont_target = head
            b_entry, b_outs = self.stmt(s.body, after, cont_target)
            self.resolve(body_sink, b_entry if b_entry is not None else cont_target)
            self.resolve(b_outs, cont_target)
            if s.init is not None:
                i_entry, i_outs = self.stmt(s.init, None, None)
                self.resolve(i_outs, head)
                return i_entry, after
            return head, after
        raise AssertionError(f"unhandled statement {s!r}")

    def build(self) -> Cfg:
        entry = self.new_node(ENTRY, self.f.loc)
        body_entry, outs = self.seq(self.f.body.stmts, None, None)
        exit_ = self.new_node(EXIT, self.f.end_loc)
        if body_entry is None:
            self.edges.append((entry, exit_, UNCOND))
        else:
            self.edges.append((entry, body_entry, UNCOND))
            self.resolve(outs, exit_)
        for r in self.return_nodes:
            self.edges.append((r, exit_, UNCOND))
        return Cfg(self.f.name, self.f, self.nodes, self.edges, entry, exit_,
                   frozenset(self.loop_heads))


def build_cfg(f: FunctionDef) -> Cfg:
    """Build the statement-level control-flow graph of a well-formed function."""
    return _Builder(f).build()


# ---------------------------------------------------------------------------
# Kripke structures

class KripkeStructure:
    """Finite transition system with a total transition relation.

    States are the dense CFG node ids; `succ[s]` is the sorted successor
    list and `labels[s]` the atomic propositions holding at s.
    """

    __slots__ = ("n", "succ", "labels", "_pred")

    def __init__(self, n: int, succ: list[list[int]], labels: list[frozenset[str]]):
        self.n = n
        self.succ = succ
        self.labels = labels
        self._pred: list[list[int]] | None = None
        for s in range(n):
            if not succ[s]:
                raise ValueError(f"state {s} has no successors; transition relation must be total")

    @property
    def pred(self) -> list[list[int]]:
        if self._pred is None:
            pred: list[list[int]] = [[] for _ in range(self.n)]
            for s in range(self.n):
                for t in self.succ[s]:
                    pred[t].append(s)
            self._pred = pred
        return self._pred

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.succ[a]

    def states(self) -> range:
        return range(self.n)


def to_kripke(cfg: Cfg, labeling: dict[int, set[str]] | None = None) -> KripkeStructure:
    """View a CFG as a Kripke structure, totalized with an exit self-loop."""
    n = len(cfg.nodes)
    succ: list[list[int]] = [sorted({b for b, _ in cfg.succ[a]}) for a in range(n)]
    for s in range(n):
        if not succ[s]:
            succ[s] = [s]
    labeling = labeling or {}
    labels = [frozenset(labeling.get(s, ())) for s in range(n)]
    return KripkeStructure(n, succ, labels)


def reverse(k: KripkeStructure) -> KripkeStructure:
    """Flip all transitions; self-loops keep the reversed relation total."""
    succ: list[list[int]] = [[] for _ in range(k.n)]
    for s in range(k.n):
        for t in k.succ[s]:
            succ[t].append(s)
    for s in range(k.n):
        if not succ[s]:
            succ[s] = [s]
        else:
            succ[s] = sorted(set(succ[s]))
    return KripkeStructure(k.n, succ, list(k.labels))


def to_dot(cfg: Cfg) -> str:
    """DOT rendering of the CFG for debugging."""
    lines = [f'digraph "{cfg.function}" {{']
    for n in cfg.nodes:
        shape = {ENTRY: "circle", EXIT: "doublecircle", COND: "diamond", STMT: "box"}[n.kind]
        dead = " (dead)" if n.id in cfg.unreachable else ""
        lines.append(f'  n{n.id} [shape={shape} label="{n.id}: {n.describe()}{dead}"];')
    for a, b, lab in cfg.edges:
        attr = "" if lab == UNCOND else f' [label="{lab}"]'
        lines.append(f"  n{a} -> n{b}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"
