"""Intraprocedural interval analysis over the CFG.

Classic integer intervals with widening at loop heads and a single
meet-based narrowing pass.  Division and modulo follow C semantics
(truncation toward zero, remainder takes the dividend's sign); analysis
integers are unbounded, so machine wraparound is out of scope.

Backs the buffer-overrun and division-by-zero checks: a definitely-bad
operation escalates to an error, a possibly-bad one stays a warning.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import frontend as ast
from .cfg import COND, Cfg, CfgNode, FALSE, STMT, TRUE
from .diagnostics import CONFIRMED, Diagnostic, UNCONFIRMED

_NEG_INF = float("-inf")
_POS_INF = float("inf")


def tdiv(a: int, b: int) -> int:
    """C integer division: truncation toward zero."""
    q, r = divmod(a, b)
    if r != 0 and (a < 0) != (b < 0):
        q += 1
    return q


def tmod(a: int, b: int) -> int:
    """C remainder: same sign as the dividend."""
    return a - b * tdiv(a, b)


@dataclass(frozen=True)
class Interval:
    lo: int | None  # None = -oo
    hi: int | None  # None = +oo
    empty: bool = False

    def __post_init__(self):
        if not self.empty and self.lo is not None and self.hi is not None:
            assert self.lo <= self.hi, f"malformed interval [{self.lo}, {self.hi}]"

    def __repr__(self) -> str:
        if self.empty:
            return "<empty>"
        lo = "-oo" if self.lo is None else str(self.lo)
        hi = "+oo" if self.hi is None else str(self.hi)
        return f"[{lo}, {hi}]"

    def is_top(self) -> bool:
        return not self.empty and self.lo is None and self.hi is None

    def is_const(self) -> bool:
        return not self.empty and self.lo is not None and self.lo == self.hi

    def contains(self, v: int) -> bool:
        if self.empty:
            return False
        if self.lo is not None and v < self.lo:
            return False
        if self.hi is not None and v > self.hi:
            return False
        return True

    def _bounds(self) -> tuple[float, float]:
        lo = _NEG_INF if self.lo is None else self.lo
        hi = _POS_INF if self.hi is None else self.hi
        return lo, hi


TOP = Interval(None, None)
BOTTOM = Interval(None, None, empty=True)
BOOL = Interval(0, 1)


def _mk(lo, hi) -> Interval:
    lo = None if lo == _NEG_INF else int(lo)
    hi = None if hi == _POS_INF else int(hi)
    if lo is not None and hi is not None and lo > hi:
        return BOTTOM
    return Interval(lo, hi)


def const(v: int) -> Interval:
    return Interval(v, v)


def join(a: Interval, b: Interval) -> Interval:
    if a.empty:
        return b
    if b.empty:
        return a
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    return _mk(min(alo, blo), max(ahi, bhi))


def meet(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return BOTTOM
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    return _mk(max(alo, blo), min(ahi, bhi))


def widen(old: Interval, new: Interval) -> Interval:
    """[a,b] widened by [c,d]: bounds that grew jump to infinity."""
    if old.empty:
        return new
    if new.empty:
        return old
    alo, ahi = old._bounds()
    blo, bhi = new._bounds()
    return _mk(_NEG_INF if blo < alo else alo, _POS_INF if bhi > ahi else ahi)


def interval_leq(a: Interval, b: Interval) -> bool:
    if a.empty:
        return True
    if b.empty:
        return False
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    return blo <= alo and ahi <= bhi


def add(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return BOTTOM
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    return _mk(alo + blo, ahi + bhi)


def sub(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return BOTTOM
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    return _mk(alo - bhi, ahi - blo)


def neg(a: Interval) -> Interval:
    if a.empty:
        return BOTTOM
    alo, ahi = a._bounds()
    return _mk(-ahi, -alo)


def _bmul(x: float, y: float) -> float:
    if x == 0 or y == 0:
        return 0
    return x * y


def mul(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return BOTTOM
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    corners = [_bmul(x, y) for x in (alo, ahi) for y in (blo, bhi)]
    return _mk(min(corners), max(corners))


def _bdiv(x: float, y: float) -> float:
    if x in (_NEG_INF, _POS_INF):
        return x if y > 0 else -x
    if y in (_NEG_INF, _POS_INF):
        return 0
    return tdiv(int(x), int(y))


def div(a: Interval, b: Interval) -> Interval:
    """Truncating division; a divisor interval containing 0 yields Top."""
    if a.empty or b.empty:
        return BOTTOM
    if b.contains(0):
        return TOP
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    corners = [_bdiv(x, y) for x in (alo, ahi) for y in (blo, bhi)]
    return _mk(min(corners), max(corners))


def mod(a: Interval, b: Interval) -> Interval:
    """C remainder bounds: |a % b| < |b| and |a % b| <= |a|, sign of a."""
    if a.empty or b.empty:
        return BOTTOM
    if b.contains(0):
        return TOP
    if a.is_const() and b.is_const():
        return const(tmod(a.lo, b.lo))
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    mag = min(max(abs(alo), abs(ahi)), max(abs(blo), abs(bhi)) - 1)
    lo = 0 if alo >= 0 else -mag
    hi = 0 if ahi <= 0 else mag
    return _mk(lo, hi)


def _cmp(op: str, a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return BOTTOM
    alo, ahi = a._bounds()
    blo, bhi = b._bounds()
    if op == "<":
        if ahi < blo:
            return const(1)
        if alo >= bhi:
            return const(0)
    elif op == "<=":
        if ahi <= blo:
            return const(1)
        if alo > bhi:
            return const(0)
    elif op == ">":
        return _cmp("<", b, a)
    elif op == ">=":
        return _cmp("<=", b, a)
    elif op == "==":
        if a.is_const() and b.is_const() and a.lo == b.lo:
            return const(1)
        if ahi < blo or bhi < alo:
            return const(0)
    elif op == "!=":
        r = _cmp("==", a, b)
        if r.is_const():
            return const(1 - r.lo)
    return BOOL


def truthiness(a: Interval) -> Interval:
    """Map an interval to the {0,1} truth interval of `x != 0`."""
    if a.empty:
        return BOTTOM
    if a.is_const() and a.lo == 0:
        return const(0)
    if not a.contains(0):
        return const(1)
    return BOOL


def logic_not(a: Interval) -> Interval:
    t = truthiness(a)
    if t.is_const():
        return const(1 - t.lo)
    return t


# ---------------------------------------------------------------------------
# Environments

class IntervalEnv:
    """Variable valuation; absent variables are Top, `is_bottom` marks an
    unreachable state."""

    __slots__ = ("vars", "is_bottom")

    def __init__(self, vars: dict[str, Interval] | None = None, is_bottom: bool = False):
        self.vars = vars or {}
        self.is_bottom = is_bottom

    def __repr__(self) -> str:
        if self.is_bottom:
            return "<unreachable>"
        inner = ", ".join(f"{k}: {v!r}" for k, v in sorted(self.vars.items()))
        return "{" + inner + "}"

    def get(self, name: str) -> Interval:
        if self.is_bottom:
            return BOTTOM
        return self.vars.get(name, TOP)

    def set(self, name: str, value: Interval) -> IntervalEnv:
        if self.is_bottom:
            return self
        if value.empty:
            return BOTTOM_ENV
        out = dict(self.vars)
        if value.is_top():
            out.pop(name, None)
        else:
            out[name] = value
        return IntervalEnv(out)

    def drop(self, names) -> IntervalEnv:
        if self.is_bottom:
            return self
        out = {k: v for k, v in self.vars.items() if k not in names}
        return IntervalEnv(out)

    def equals(self, other: IntervalEnv) -> bool:
        if self.is_bottom or other.is_bottom:
            return self.is_bottom == other.is_bottom
        return self.vars == other.vars


BOTTOM_ENV = IntervalEnv(is_bottom=True)


def env_join(a: IntervalEnv, b: IntervalEnv) -> IntervalEnv:
    if a.is_bottom:
        return b
    if b.is_bottom:
        return a
    out = {}
    for k in a.vars.keys() & b.vars.keys():
        v = join(a.vars[k], b.vars[k])
        if not v.is_top():
            out[k] = v
    return IntervalEnv(out)


def env_meet(a: IntervalEnv, b: IntervalEnv) -> IntervalEnv:
    if a.is_bottom or b.is_bottom:
        return BOTTOM_ENV
    out = dict(a.vars)
    for k, v in b.vars.items():
        m = meet(out.get(k, TOP), v)
        if m.empty:
            return BOTTOM_ENV
        out[k] = m
    return IntervalEnv(out)


def env_widen(old: IntervalEnv, new: IntervalEnv) -> IntervalEnv:
    if old.is_bottom:
        return new
    if new.is_bottom:
        return old
    out = {}
    for k in old.vars.keys() & new.vars.keys():
        v = widen(old.vars[k], new.vars[k])
        if not v.is_top():
            out[k] = v
    return IntervalEnv(out)


def env_leq(a: IntervalEnv, b: IntervalEnv) -> bool:
    if a.is_bottom:
        return True
    if b.is_bottom:
        return False
    return all(interval_leq(a.get(k), v) for k, v in b.vars.items())


# ---------------------------------------------------------------------------
# Expression evaluation and transfer

def eval_expr(e: ast.Expr, env: IntervalEnv) -> Interval:
    if env.is_bottom:
        return BOTTOM
    if isinstance(e, ast.IntLit):
        return const(e.value)
    if isinstance(e, ast.Var):
        return env.get(e.name)
    if isinstance(e, ast.Unary):
        if e.op == "-":
            return neg(eval_expr(e.operand, env))
        if e.op == "!":
            return logic_not(eval_expr(e.operand, env))
        return TOP  # * and &: values behind pointers are untracked
    if isinstance(e, ast.Binary):
        if e.op == "&&":
            lt = truthiness(eval_expr(e.left, env))
            rt = truthiness(eval_expr(e.right, env))
            if (lt.is_const() and lt.lo == 0) or (rt.is_const() and rt.lo == 0):
                return const(0)
            if lt.is_const() and rt.is_const():
                return const(1)
            return BOOL
        if e.op == "||":
            lt = truthiness(eval_expr(e.left, env))
            rt = truthiness(eval_expr(e.right, env))
            if (lt.is_const() and lt.lo == 1) or (rt.is_const() and rt.lo == 1):
                return const(1)
            if lt.is_const() and rt.is_const():
                return const(0)
            return BOOL
        l = eval_expr(e.left, env)
        r = eval_expr(e.right, env)
        if e.op == "+":
            return add(l, r)
        if e.op == "-":
            return sub(l, r)
        if e.op == "*":
            return mul(l, r)
        if e.op == "/":
            return div(l, r)
        if e.op == "%":
            return mod(l, r)
        return _cmp(e.op, l, r)
    if isinstance(e, (ast.Index, ast.Call)):
        return TOP  # array cells and call results are untracked
    raise AssertionError(f"unhandled expression {e!r}")


def _has_user_call(e: ast.Expr | None) -> bool:
    if e is None:
        return False
    if isinstance(e, ast.Call):
        if e.name not in ast.BUILTIN_FUNCTIONS:
            return True
        return any(_has_user_call(a) for a in e.args)
    if isinstance(e, ast.Unary):
        return _has_user_call(e.operand)
    if isinstance(e, ast.Binary):
        return _has_user_call(e.left) or _has_user_call(e.right)
    if isinstance(e, ast.Index):
        return _has_user_call(e.base) or _has_user_call(e.index)
    return False


def node_exprs(node: CfgNode) -> list[ast.Expr]:
    """Expression roots evaluated at a CFG node."""
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


def _refine_by_cmp(iv: Interval, op: str, c: int) -> Interval:
    if op == "<":
        return meet(iv, Interval(None, c - 1))
    if op == "<=":
        return meet(iv, Interval(None, c))
    if op == ">":
        return meet(iv, Interval(c + 1, None))
    if op == ">=":
        return meet(iv, Interval(c, None))
    if op == "==":
        return meet(iv, const(c))
    if op == "!=":
        if iv.empty:
            return iv
        if iv.is_const() and iv.lo == c:
            return BOTTOM
        lo, hi = iv.lo, iv.hi
        if lo is not None and lo == c:
            lo = c + 1
        if hi is not None and hi == c:
            hi = c - 1
        return _mk(_NEG_INF if lo is None else lo, _POS_INF if hi is None else hi)
    raise AssertionError(op)


_NEGATED = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}
_FLIPPED = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}


def _refine_guard(expr: ast.Expr, env: IntervalEnv, branch: str) -> IntervalEnv:
    """Meet the environment with what a guard implies along a branch."""
    guard = eval_expr(expr, env)
    if branch == TRUE and guard.is_const() and guard.lo == 0:
        return BOTTOM_ENV
    if branch == FALSE and not guard.contains(0):
        return BOTTOM_ENV
    if isinstance(expr, ast.Var):
        iv = env.get(expr.name)
        iv = _refine_by_cmp(iv, "!=" if branch == TRUE else "==", 0)
        return env.set(expr.name, iv)
    if isinstance(expr, ast.Binary) and expr.op in _NEGATED:
        op = expr.op if branch == TRUE else _NEGATED[expr.op]
        out = env
        lv = eval_expr(expr.left, env)
        rv = eval_expr(expr.right, env)
        if isinstance(expr.left, ast.Var) and rv.is_const():
            iv = _refine_by_cmp(out.get(expr.left.name), op, rv.lo)
            out = out.set(expr.left.name, iv)
        if isinstance(expr.right, ast.Var) and lv.is_const() and not out.is_bottom:
            iv = _refine_by_cmp(out.get(expr.right.name), _FLIPPED[op], lv.lo)
            out = out.set(expr.right.name, iv)
        return out
    return env


def transfer(node: CfgNode, env: IntervalEnv, branch: str | None = None,
             call_havoc: frozenset[str] = frozenset(),
             array_vars: frozenset[str] = frozenset()) -> IntervalEnv:
    """Abstract effect of executing `node`, leaving along `branch`.

    `call_havoc` names the variables any user call may modify (globals and
    address-taken locals); they drop to Top whenever such a call appears in
    the node.  `array_vars` names declared arrays: writes indexed through
    them touch only untracked cells and havoc nothing.
    """
    if env.is_bottom:
        return BOTTOM_ENV
    has_call = any(_has_user_call(e) for e in node_exprs(node))
    if node.kind == COND:
        if has_call:
            env = env.drop(call_havoc)
        return _refine_guard(node.expr, env, branch if branch is not None else TRUE)
    if node.kind != STMT:
        return env
    s = node.stmt
    # calls may run before sibling operands are read, so havoc first
    if isinstance(s, ast.VarDecl):
        if has_call:
            env = env.drop(call_havoc)
        value = eval_expr(s.init, env) if s.init is not None else TOP
        return env.set(s.name, value)
    if isinstance(s, ast.Assign):
        if has_call:
            env = env.drop(call_havoc)
        value = eval_expr(s.value, env)
        if isinstance(s.target, ast.Var):
            return env.set(s.target.name, value)
        # writes through *p (or an index over a non-array base) may alias
        # any variable whose address escapes
        if isinstance(s.target, ast.Unary) or not isinstance(s.target.base, ast.Var) \
                or s.target.base.name not in array_vars:
            return env.drop(call_havoc)
        return env
    if has_call:
        env = env.drop(call_havoc)
    return env


# ---------------------------------------------------------------------------
# Fixpoint

class AbsResult:
    """Per-node abstract environments at node entry."""

    def __init__(self, envs: list[IntervalEnv], iterations: int):
        self.envs = envs
        self.iterations = iterations

    def at(self, node_id: int) -> IntervalEnv:
        return self.envs[node_id]

    def dump(self) -> str:
        """Debug rendering: one line per node."""
        return "".join(f"n{i}: {env!r}\n" for i, env in enumerate(self.envs))


_WIDEN_DELAY = 3


def _call_havoc_set(cfg: Cfg, global_names: frozenset[str]) -> frozenset[str]:
    taken: set[str] = set(global_names)

    def walk(e: ast.Expr | None):
        if e is None:
            return
        if isinstance(e, ast.Unary):
            if e.op == "&" and isinstance(e.operand, ast.Var):
                taken.add(e.operand.name)
            walk(e.operand)
        elif isinstance(e, ast.Binary):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, ast.Index):
            walk(e.base)
            walk(e.index)
        elif isinstance(e, ast.Call):
            for a in e.args:
                walk(a)

    for node in cfg.nodes:
        for e in node_exprs(node):
            walk(e)
    return frozenset(taken)


def iteration_cap(n_nodes: int, n_vars: int, n_heads: int) -> int:
    """Hard bound on worklist pops: the 3-per-head plain phase plus a
    widening-bounded tail. Exceeding it is a bug, not an input property."""
    return 64 + 6 * n_nodes * (n_vars + 2) * (n_heads + 2)


def analyze(cfg: Cfg, global_names: frozenset[str] = frozenset()) -> AbsResult:
    """Worklist fixpoint with widening at loop heads after three plain
    joins per head, then one meet-based narrowing pass in reverse postorder."""
    n = len(cfg.nodes)
    havoc = _call_havoc_set(cfg, global_names)
    arrays = _array_var_names(cfg)
    envs: list[IntervalEnv] = [BOTTOM_ENV] * n
    envs[cfg.entry] = IntervalEnv()
    var_names: set[str] = set(global_names)
    for node in cfg.nodes:
        if isinstance(node.stmt, ast.VarDecl):
            var_names.add(node.stmt.name)
    var_names.update(p.name for p in cfg.func.params)

    cap = iteration_cap(n, len(var_names), len(cfg.loop_heads))
    update_count = [0] * n
    work = deque([cfg.entry])
    queued = [False] * n
    queued[cfg.entry] = True
    pops = 0
    while work:
        m = work.popleft()
        queued[m] = False
        pops += 1
        if pops > cap:
            raise RuntimeError(
                f"interval fixpoint exceeded its iteration cap ({cap}) in '{cfg.function}'")
        for t, label in cfg.succ[m]:
            out = transfer(cfg.nodes[m], envs[m], label, havoc, arrays)
            if env_leq(out, envs[t]):
                continue
            update_count[t] += 1
            if t in cfg.loop_heads and update_count[t] > _WIDEN_DELAY:
                envs[t] = env_widen(envs[t], env_join(envs[t], out))
            else:
                envs[t] = env_join(envs[t], out)
            if not queued[t]:
                queued[t] = True
                work.append(t)

    # narrowing: one in-order re-propagation, meeting with the fixpoint
    for t in _reverse_postorder(cfg):
        if t == cfg.entry:
            continue
        inflow = BOTTOM_ENV
        for m, label in cfg.pred[t]:
            inflow = env_join(inflow, transfer(cfg.nodes[m], envs[m], label, havoc, arrays))
        envs[t] = env_meet(envs[t], inflow)
    return AbsResult(envs, pops)


def _array_var_names(cfg: Cfg) -> frozenset[str]:
    names = {p.name for p in cfg.func.params if isinstance(p.type, ast.ArrayInt)}
    for node in cfg.nodes:
        if isinstance(node.stmt, ast.VarDecl) and isinstance(node.stmt.type, ast.ArrayInt):
            names.add(node.stmt.name)
    return frozenset(names)


def _reverse_postorder(cfg: Cfg) -> list[int]:
    seen = set()
    order: list[int] = []

    def dfs(start: int):
        stack = [(start, iter([t for t, _ in cfg.succ[start]]))]
        seen.add(start)
        while stack:
            node, it = stack[-1]
            advanced = False
            for t in it:
                if t not in seen:
                    seen.add(t)
                    stack.append((t, iter([u for u, _ in cfg.succ[t]])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()

    dfs(cfg.entry)
    order.reverse()
    return order


# ---------------------------------------------------------------------------
# Checks

BUFFER_OVERRUN = "buffer-overrun"
DIV_BY_ZERO = "div-by-zero"


def declared_types(cfg: Cfg, globals_: list[ast.VarDecl] = ()) -> dict[str, ast.MiniCType]:
    """Name -> type map; locals and params shadow globals. Same-name
    declarations inside one function are conflated (first wins)."""
    types: dict[str, ast.MiniCType] = {g.name: g.type for g in globals_}
    local: set[str] = set()
    for p in cfg.func.params:
        types[p.name] = p.type
        local.add(p.name)
    for node in cfg.nodes:
        d = node.stmt
        if isinstance(d, ast.VarDecl) and d.name not in local:
            types[d.name] = d.type
            local.add(d.name)
    return types


def interval_checks(cfg: Cfg, result: AbsResult,
                    globals_: list[ast.VarDecl] = ()) -> list[Diagnostic]:
    """Array-bound and divisor checks from the interval fixpoint.

    Certainly-failing operations are errors with confirmed confidence;
    possibly-failing ones are warnings left unconfirmed.  Nodes with a
    Bottom environment are unreachable and produce nothing.
    """
    types = declared_types(cfg, globals_)
    havoc = _call_havoc_set(cfg, frozenset(g.name for g in globals_))
    out: list[Diagnostic] = []
    for node in cfg.nodes:
        env = result.at(node.id)
        if env.is_bottom:
            continue
        if any(_has_user_call(e) for e in node_exprs(node)):
            env = env.drop(havoc)
        for root in node_exprs(node):
            for e in _walk(root):
                if isinstance(e, ast.Index) and isinstance(e.base, ast.Var):
                    ty = types.get(e.base.name)
                    if not isinstance(ty, ast.ArrayInt):
                        continue
                    idx = eval_expr(e.index, env)
                    if idx.empty:
                        continue
                    bound = Interval(0, ty.size - 1)
                    if meet(idx, bound).empty:
                        out.append(Diagnostic(
                            BUFFER_OVERRUN, "error", e.loc,
                            f"index {idx!r} is outside 'int {e.base.name}[{ty.size}]'",
                            cfg.function, CONFIRMED))
                    elif not interval_leq(idx, bound):
                        out.append(Diagnostic(
                            BUFFER_OVERRUN, "warning", e.loc,
                            f"index {idx!r} may fall outside 'int {e.base.name}[{ty.size}]'",
                            cfg.function, UNCONFIRMED))
                elif isinstance(e, ast.Binary) and e.op in ("/", "%"):
                    dv = eval_expr(e.right, env)
                    if dv.empty:
                        continue
                    if dv.is_const() and dv.lo == 0:
                        out.append(Diagnostic(
                            DIV_BY_ZERO, "error", e.loc,
                            "division by zero", cfg.function, CONFIRMED))
                    elif dv.contains(0):
                        out.append(Diagnostic(
                            DIV_BY_ZERO, "warning", e.loc,
                            "possible division by zero", cfg.function, UNCONFIRMED))
    return out


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
