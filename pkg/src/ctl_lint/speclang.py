"""The check-specification DSL.

A check declares named atomic propositions as syntactic patterns over one
quantified program variable, plus a CTL property over those labels.  For
every candidate variable of the quantified class, the patterns are matched
against every CFG node to label a Kripke structure, producing one small
model-checking task per binding.  Tasks whose trigger label (the first
declared one) never matches are skipped before any checking happens.

Grammar of `.chk` files (# starts a line comment):

    check    := "check" IDENT "{" "severity:" SEV
                "forall" METAVAR ":" ("pointer"|"array"|"any")
                labeldecl+ "property:" ctl ["refine:" ("on"|"off")] "}"
    labeldecl:= "label" IDENT ":=" pattern
    pattern  := PATNAME "(" args? ")"
    ctl      := IDENT | "!" ctl | ctl ("&"|"|"|"->") ctl
              | ("AX"|"EX"|"AF"|"EF"|"AG"|"EG") ctl
              | ("A"|"E") "[" ctl "U" ctl "]" | "(" ctl ")"
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from . import frontend as ast
from .cfg import COND, Cfg, CfgNode, ENTRY, EXIT, KripkeStructure, to_kripke
from .ctl import (
    AF, AG, AU, AX, And, CtlFormula, EF, EG, EU, EX, Implies, Not, Or, Prop,
    props_of,
)
from .frontend import SourceLocation


class SpecError(Exception):
    def __init__(self, loc: SourceLocation, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


PATTERN_NAMES = {
    "call": ("name",),
    "malloc_assign": ("metavar",),
    "null_assign": ("metavar",),
    "assign_to": ("metavar",),
    "free_of": ("metavar",),
    "deref": ("metavar",),
    "use": ("metavar",),
    "decl_uninit": ("metavar",),
    "null_check": ("metavar",),
    "index_of": ("metavar", "wildcard"),
    "at_entry": (),
    "at_exit": (),
}

_RESERVED = {"AX", "EX", "AF", "EF", "AG", "EG", "A", "E", "U"}

VAR_CLASSES = ("pointer", "array", "any")


@dataclass(frozen=True)
class Pattern:
    name: str
    args: tuple[str, ...]  # metavariables ($v), identifiers, or "_"

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.args)})"

    @property
    def metavars(self) -> tuple[str, ...]:
        return tuple(a for a in self.args if a.startswith("$"))


@dataclass(frozen=True)
class CheckSpec:
    id: str
    severity: str
    metavar: str
    var_class: str  # pointer | array | any
    labels: tuple[tuple[str, Pattern], ...]
    prop: CtlFormula
    refine: bool
    loc: SourceLocation

    @property
    def trigger_label(self) -> str:
        return self.labels[0][0]


@dataclass(frozen=True)
class CheckTask:
    check: CheckSpec
    function: str
    binding: tuple[tuple[str, str], ...]  # metavar -> variable
    kripke: KripkeStructure
    formula: CtlFormula

    @property
    def bound_var(self) -> str:
        return self.binding[0][1]


# ---------------------------------------------------------------------------
# DSL parsing

_PUNCT = (":=", "->", "{", "}", "(", ")", "[", "]", ":", ",", "!", "&", "|", "_")


def _lex_chk(text: str, file: str) -> list[tuple[str, str, SourceLocation]]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        loc = SourceLocation(file, line, col)
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_-"):
                j += 1
            tokens.append(("ident", text[i:j], loc))
            col += j - i
            i = j
            continue
        if c == "$":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                raise SpecError(loc, "expected a name after '$'")
            tokens.append(("metavar", text[i:j], loc))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(("punct", p, loc))
                i += len(p)
                col += len(p)
                break
        else:
            raise SpecError(loc, f"unexpected character {c!r}")
    tokens.append(("eof", "", SourceLocation(file, line, col)))
    return tokens


class _ChkParser:
    def __init__(self, text: str, file: str):
        self.toks = _lex_chk(text, file)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        tok = self.toks[self.pos]
        if tok[0] != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str):
        kind, val, loc = self.peek()
        if val != text or kind == "eof":
            found = repr(val) if kind != "eof" else "end of file"
            raise SpecError(loc, f"expected '{text}', found {found}")
        return self.next()

    def expect_ident(self, what: str):
        kind, val, loc = self.peek()
        if kind != "ident":
            found = repr(val) if kind != "eof" else "end of file"
            raise SpecError(loc, f"expected {what}, found {found}")
        return self.next()

    def parse_file(self) -> list[CheckSpec]:
        checks: list[CheckSpec] = []
        if self.peek()[0] == "eof":
            raise SpecError(self.peek()[2], "expected 'check'")
        while self.peek()[0] != "eof":
            checks.append(self.parse_check())
        ids = [c.id for c in checks]
        for c in checks:
            if ids.count(c.id) > 1:
                raise SpecError(c.loc, f"duplicate check id '{c.id}'")
        return checks

    def parse_check(self) -> CheckSpec:
        _, _, loc = self.expect("check")
        _, check_id, _ = self.expect_ident("a check id")
        self.expect("{")
        self.expect("severity")
        self.expect(":")
        _, severity, sev_loc = self.expect_ident("a severity")
        if severity not in ("error", "warning", "info"):
            raise SpecError(sev_loc, f"severity must be error, warning or info, not '{severity}'")
        self.expect("forall")
        kind, metavar, mv_loc = self.next()
        if kind != "metavar":
            raise SpecError(mv_loc, "expected a metavariable like '$v' after 'forall'")
        self.expect(":")
        _, var_class, vc_loc = self.expect_ident("a variable class")
        if var_class not in VAR_CLASSES:
            raise SpecError(vc_loc, "variable class must be pointer, array or any")

        labels: list[tuple[str, Pattern]] = []
        while self.peek()[1] == "label":
            self.next()
            _, name, name_loc = self.expect_ident("a label name")
            if name in _RESERVED:
                raise SpecError(name_loc, f"'{name}' is reserved")
            if any(name == seen for seen, _ in labels):
                raise SpecError(name_loc, f"duplicate label '{name}'")
            self.expect(":=")
            labels.append((name, self.parse_pattern(metavar)))
        if not labels:
            raise SpecError(self.peek()[2], "expected at least one 'label' declaration")

        self.expect("property")
        self.expect(":")
        prop = self.parse_ctl()
        label_names = {name for name, _ in labels}
        for p in sorted(props_of(prop)):
            if p not in label_names:
                raise SpecError(loc, f"unknown label '{p}' in property of '{check_id}'")

        refine = False
        if self.peek()[1] == "refine":
            self.next()
            self.expect(":")
            _, mode, mode_loc = self.expect_ident("'on' or 'off'")
            if mode not in ("on", "off"):
                raise SpecError(mode_loc, "refine must be 'on' or 'off'")
            refine = mode == "on"
        self.expect("}")
        return CheckSpec(check_id, severity, metavar, var_class, tuple(labels),
                         prop, refine, loc)

    def parse_pattern(self, quantified: str) -> Pattern:
        _, name, loc = self.expect_ident("a pattern name")
        shape = PATTERN_NAMES.get(name)
        if shape is None:
            raise SpecError(loc, f"unknown pattern '{name}'")
        self.expect("(")
        args: list[str] = []
        if self.peek()[1] != ")":
            while True:
                kind, val, aloc = self.next()
                if kind not in ("ident", "metavar") and val != "_":
                    raise SpecError(aloc, f"bad pattern argument {val!r}")
                args.append(val)
                if self.peek()[1] != ",":
                    break
                self.next()
        self.expect(")")
        if len(args) != len(shape):
            raise SpecError(loc, f"'{name}' takes {len(shape)} argument(s)")
        for arg, want in zip(args, shape):
            if want == "metavar":
                if not arg.startswith("$"):
                    raise SpecError(loc, f"'{name}' needs a metavariable argument")
                if arg != quantified:
                    raise SpecError(loc, f"unbound metavariable '{arg}'")
            elif want == "wildcard" and arg != "_":
                raise SpecError(loc, f"the index argument of '{name}' must be '_'")
            elif want == "name" and (arg.startswith("$") or arg == "_"):
                raise SpecError(loc, f"'{name}' needs a function name argument")
        return Pattern(name, tuple(args))

    # CTL precedence: ->  <  |  <  &  <  unary/temporal
    def parse_ctl(self) -> CtlFormula:
        left = self._ctl_or()
        if self.peek()[1] == "->":
            self.next()
            return Implies(left, self.parse_ctl())
        return left

    def _ctl_or(self) -> CtlFormula:
        left = self._ctl_and()
        while self.peek()[1] == "|":
            self.next()
            left = Or(left, self._ctl_and())
        return left

    def _ctl_and(self) -> CtlFormula:
        left = self._ctl_unary()
        while self.peek()[1] == "&":
            self.next()
            left = And(left, self._ctl_unary())
        return left

    _UNARY_OPS = {"AX": AX, "EX": EX, "AF": AF, "EF": EF, "AG": AG, "EG": EG}

    def _ctl_unary(self) -> CtlFormula:
        kind, val, loc = self.peek()
        if val == "!":
            self.next()
            return Not(self._ctl_unary())
        if val == "(":
            self.next()
            f = self.parse_ctl()
            self.expect(")")
            return f
        if val in self._UNARY_OPS:
            self.next()
            return self._UNARY_OPS[val](self._ctl_unary())
        if val in ("A", "E"):
            self.next()
            self.expect("[")
            left = self.parse_ctl()
            self.expect("U")
            right = self.parse_ctl()
            self.expect("]")
            return (AU if val == "A" else EU)(left, right)
        if kind == "ident":
            self.next()
            return Prop(val)
        found = repr(val) if kind != "eof" else "end of file"
        raise SpecError(loc, f"expected a CTL formula, found {found}")


def parse_checks(text: str, file: str = "<checks>") -> list[CheckSpec]:
    """Parse a .chk file into check specifications."""
    return _ChkParser(text, file).parse_file()


def parse_check(text: str, file: str = "<checks>") -> CheckSpec:
    """Parse a .chk source containing exactly one check."""
    checks = parse_checks(text, file)
    if len(checks) != 1:
        raise SpecError(checks[1].loc, "expected exactly one check")
    return checks[0]


def load_builtin_checks() -> list[CheckSpec]:
    text = resources.files(__package__).joinpath("builtin.chk").read_text("utf-8")
    return parse_checks(text, "builtin.chk")


# ---------------------------------------------------------------------------
# Pattern matching

def match_pattern(p: Pattern, node: CfgNode, binding: dict[str, str]) -> bool:
    """Does `node`'s AST fragment match `p` under the metavariable binding?"""
    if p.name == "at_entry":
        return node.kind == ENTRY
    if p.name == "at_exit":
        return node.kind == EXIT
    if p.name == "call":
        return any(isinstance(e, ast.Call) and e.name == p.args[0]
                   for root in _roots(node) for e in _walk(root))
    var = binding[p.args[0]] if p.args and p.args[0].startswith("$") else None
    s = node.stmt
    if p.name == "malloc_assign":
        return _is_assign_of(s, var, lambda e: isinstance(e, ast.Call) and e.name == "malloc")
    if p.name == "null_assign":
        return _is_assign_of(s, var, lambda e: isinstance(e, ast.IntLit) and e.value == 0)
    if p.name == "assign_to":
        if isinstance(s, ast.Assign) and isinstance(s.target, ast.Var):
            return s.target.name == var
        return isinstance(s, ast.VarDecl) and s.name == var and s.init is not None
    if p.name == "free_of":
        return any(isinstance(e, ast.Call) and e.name == "free"
                   and isinstance(e.args[0], ast.Var) and e.args[0].name == var
                   for root in _roots(node) for e in _walk(root))
    if p.name == "deref":
        for root in _roots(node):
            for e in _walk(root):
                if isinstance(e, ast.Unary) and e.op == "*" \
                        and isinstance(e.operand, ast.Var) and e.operand.name == var:
                    return True
                if isinstance(e, ast.Index) and isinstance(e.base, ast.Var) \
                        and e.base.name == var:
                    return True
        return False
    if p.name == "use":
        return var in _reads(node)
    if p.name == "decl_uninit":
        return isinstance(s, ast.VarDecl) and s.name == var and s.init is None \
            and not isinstance(s.type, ast.ArrayInt)
    if p.name == "null_check":
        if node.kind != COND:
            return False
        e = node.expr
        if isinstance(e, ast.Var) and e.name == var:
            return True
        if isinstance(e, ast.Binary) and e.op in ("==", "!=", "<", "<=", ">", ">="):
            l, r = e.left, e.right
            if isinstance(l, ast.Var) and l.name == var and isinstance(r, ast.IntLit) and r.value == 0:
                return True
            if isinstance(r, ast.Var) and r.name == var and isinstance(l, ast.IntLit) and l.value == 0:
                return True
        return False
    if p.name == "index_of":
        return any(isinstance(e, ast.Index) and isinstance(e.base, ast.Var)
                   and e.base.name == var
                   for root in _roots(node) for e in _walk(root))
    raise AssertionError(f"unknown pattern {p.name!r}")


def _is_assign_of(s: ast.Stmt | None, var: str | None, rhs_pred) -> bool:
    if isinstance(s, ast.Assign) and isinstance(s.target, ast.Var) and s.target.name == var:
        return rhs_pred(s.value)
    if isinstance(s, ast.VarDecl) and s.name == var and s.init is not None:
        return rhs_pred(s.init)
    return False


def _roots(node: CfgNode) -> list[ast.Expr]:
    if node.kind == COND:
        return [node.expr]
    s = node.stmt
    if isinstance(s, ast.VarDecl):
        return [s.init] if s.init is not None else []
    if isinstance(s, ast.Assign):
        return [s.target, s.value]
    if isinstance(s, ast.ExprStmt):
        return [s.expr]
    if isinstance(s, ast.Return):
        return [s.value] if s.value is not None else []
    return []


def _walk(e: ast.Expr):
    yield e
    if isinstance(e, ast.Unary):
        yield from _walk(e.operand)
    elif isinstance(e, ast.Binary):
        yield from _walk(e.left)
        yield from _walk(e.right)
    elif isinstance(e, ast.Index):
        yield from _walk(e.base)
        yield from _walk(e.index)
    elif isinstance(e, ast.Call):
        for a in e.args:
            yield from _walk(a)


def _reads(node: CfgNode) -> set[str]:
    """Names whose value is read at this node.

    The direct target of an assignment and a declaration's own name are
    writes, and `&v` takes an address without reading the value; everything
    else that mentions a variable reads it.
    """
    out: set[str] = set()

    def visit(e: ast.Expr):
        if isinstance(e, ast.Var):
            out.add(e.name)
        elif isinstance(e, ast.Unary):
            if e.op == "&" and isinstance(e.operand, ast.Var):
                return
            visit(e.operand)
        elif isinstance(e, ast.Binary):
            visit(e.left)
            visit(e.right)
        elif isinstance(e, ast.Index):
            visit(e.base)
            visit(e.index)
        elif isinstance(e, ast.Call):
            for a in e.args:
                visit(a)

    s = node.stmt
    if node.kind == COND:
        visit(node.expr)
    elif isinstance(s, ast.VarDecl):
        if s.init is not None:
            visit(s.init)
    elif isinstance(s, ast.Assign):
        if isinstance(s.target, ast.Unary):
            visit(s.target.operand)
        elif isinstance(s.target, ast.Index):
            visit(s.target.base)
            visit(s.target.index)
        visit(s.value)
    elif isinstance(s, ast.ExprStmt):
        visit(s.expr)
    elif isinstance(s, ast.Return):
        if s.value is not None:
            visit(s.value)
    return out


# ---------------------------------------------------------------------------
# Task instantiation

def candidate_variables(check: CheckSpec, cfg: Cfg,
                        globals_: list[ast.VarDecl] = ()) -> list[str]:
    """In-scope variables matching the check's quantified class, in
    declaration order: params, then locals, then globals."""
    ordered: list[tuple[str, ast.MiniCType]] = []
    seen: set[str] = set()
    for prm in cfg.func.params:
        if prm.name not in seen:
            ordered.append((prm.name, prm.type))
            seen.add(prm.name)
    for node in cfg.nodes:
        d = node.stmt
        if isinstance(d, ast.VarDecl) and d.name not in seen:
            ordered.append((d.name, d.type))
            seen.add(d.name)
    for g in globals_:
        if g.name not in seen:
            ordered.append((g.name, g.type))
            seen.add(g.name)
    if check.var_class == "pointer":
        return [n for n, t in ordered if isinstance(t, ast.PtrInt)]
    if check.var_class == "array":
        return [n for n, t in ordered if isinstance(t, ast.ArrayInt)]
    return [n for n, _ in ordered]


def instantiate(check: CheckSpec, cfg: Cfg, globals_: list[ast.VarDecl] = (),
                augment=None) -> list[CheckTask]:
    """One task per admissible binding whose trigger label matches somewhere.

    `augment(node_id, pattern_name, var) -> bool` adds extra matches, used
    for summary-mediated facts at call nodes.
    """
    base = to_kripke(cfg)
    tasks: list[CheckTask] = []
    for var in candidate_variables(check, cfg, globals_):
        binding = {check.metavar: var}
        labeling: dict[int, set[str]] = {}
        for name, pattern in check.labels:
            for node in cfg.nodes:
                hit = match_pattern(pattern, node, binding)
                if not hit and augment is not None and pattern.metavars:
                    hit = augment(node.id, pattern.name, var)
                if hit:
                    labeling.setdefault(node.id, set()).add(name)
        trigger = check.trigger_label
        if not any(trigger in props for props in labeling.values()):
            continue
        labels = [frozenset(labeling.get(s, ())) for s in range(base.n)]
        k = KripkeStructure(base.n, base.succ, labels)
        k._pred = base.pred  # share the adjacency across bindings
        tasks.append(CheckTask(check, cfg.function, ((check.metavar, var),),
                               k, check.prop))
    return tasks
