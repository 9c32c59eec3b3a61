"""Analysis orchestration: summaries, caching, per-function task dispatch.

Functions are summarized bottom-up over the call graph (recursion falls
back to pessimistic summaries), then analyzed independently: pattern
labeling, CTL checking, witness refinement, interval checks and the
structural dead-code check.  Results are aggregated into a deterministic
diagnostic list that does not depend on worker count or scheduling.

Per-function results are cached in a single append-friendly store keyed by
content: the function's source text, the active check-set text, the callee
summary environment, relevant config and the tool version.  Cached
diagnostics are stored with function-relative line numbers so entries
survive moves within and across files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass

from . import __version__
from . import frontend as ast
from .cfg import Cfg, KripkeStructure, build_cfg, reverse, to_kripke
from .ctl import And, EF, EU, EX, Not, Prop, SatSets, TRUE, check, witness
from .diagnostics import CONFIRMED, Diagnostic, UNCONFIRMED
from .frontend import FunctionDef, SourceLocation, TranslationUnit, check_well_formed
from .intervals import analyze as interval_analyze, interval_checks
from .refine import (
    CONFIRMED as R_CONFIRMED, DEFAULT_ENUM_BUDGET, DEFAULT_FM_BUDGET,
    SUPPRESSED, refine_diagnostic,
)
from .speclang import (
    CheckSpec, CheckTask, Pattern, _roots, _walk, candidate_variables,
    instantiate, match_pattern,
)

logger = logging.getLogger("ctl_lint")

DEAD_CODE_ID = "dead-code"

CACHE_HEADER = "ctl-lint-cache v1"


class AnalysisError(Exception):
    """The unit is not analyzable (well-formedness failures)."""

    def __init__(self, errors):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = list(errors)


# ---------------------------------------------------------------------------
# Summaries

@dataclass(frozen=True)
class FunctionSummary:
    function: str
    may_return_null: bool = False
    always_frees: frozenset[int] = frozenset()
    derefs_param_unchecked: frozenset[int] = frozenset()

    def to_json_obj(self) -> dict:
        return {
            "function": self.function,
            "may_return_null": self.may_return_null,
            "always_frees": sorted(self.always_frees),
            "derefs_param_unchecked": sorted(self.derefs_param_unchecked),
        }

    @staticmethod
    def from_json_obj(obj: dict) -> FunctionSummary:
        return FunctionSummary(obj["function"], obj["may_return_null"],
                               frozenset(obj["always_frees"]),
                               frozenset(obj["derefs_param_unchecked"]))


def pessimistic_summary(f: FunctionDef) -> FunctionSummary:
    return FunctionSummary(f.name, may_return_null=True)


def _direct_callees(f: FunctionDef, known: set[str]) -> set[str]:
    out: set[str] = set()

    def walk_expr(e):
        if isinstance(e, ast.Call):
            if e.name in known:
                out.add(e.name)
            for a in e.args:
                walk_expr(a)
        elif isinstance(e, ast.Unary):
            walk_expr(e.operand)
        elif isinstance(e, ast.Binary):
            walk_expr(e.left)
            walk_expr(e.right)
        elif isinstance(e, ast.Index):
            walk_expr(e.base)
            walk_expr(e.index)

    def walk_stmt(s):
        if isinstance(s, ast.VarDecl):
            if s.init is not None:
                walk_expr(s.init)
        elif isinstance(s, ast.Assign):
            walk_expr(s.target)
            walk_expr(s.value)
        elif isinstance(s, ast.If):
            walk_expr(s.cond)
            walk_stmt(s.then)
            if s.orelse is not None:
                walk_stmt(s.orelse)
        elif isinstance(s, ast.While):
            walk_expr(s.cond)
            walk_stmt(s.body)
        elif isinstance(s, ast.For):
            for part in (s.init, s.step, s.body):
                if part is not None:
                    walk_stmt(part)
            if s.cond is not None:
                walk_expr(s.cond)
        elif isinstance(s, ast.Return):
            if s.value is not None:
                walk_expr(s.value)
        elif isinstance(s, ast.ExprStmt):
            walk_expr(s.expr)
        elif isinstance(s, ast.Block):
            for c in s.stmts:
                walk_stmt(c)

    walk_stmt(f.body)
    return out


def call_order(tu: TranslationUnit) -> tuple[list[str], set[str]]:
    """Bottom-up (callees first) processing order and the set of functions
    involved in recursion, via Tarjan SCCs."""
    names = [f.name for f in tu.functions]
    funcs = {f.name: f for f in tu.functions}
    known = set(names)
    callees = {n: sorted(_direct_callees(funcs[n], known)) for n in names}

    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    order: list[str] = []
    cyclic: set[str] = set()
    counter = [0]

    def strongconnect(v: str):
        work = [(v, iter(callees[v]))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(callees[w])))
                    advanced = True
                    break
                elif w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                scc = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.append(w)
                    if w == node:
                        break
                if len(scc) > 1 or node in callees[node]:
                    cyclic.update(scc)
                order.extend(sorted(scc))

    for n in names:
        if n not in index:
            strongconnect(n)
    return order, cyclic


def _return_nodes(cfg: Cfg) -> list[int]:
    return [n.id for n in cfg.nodes if isinstance(n.stmt, ast.Return)]


def _labeled_kripke(cfg: Cfg, labeling: dict[int, set[str]]) -> KripkeStructure:
    return to_kripke(cfg, labeling)


def _label_nodes(cfg: Cfg, var: str, pattern_names: list[str], augment) -> set[int]:
    """Nodes matching any of `pattern_names` for `var`, summary facts included."""
    hits: set[int] = set()
    binding = {"$v": var}
    for pname in pattern_names:
        pat = Pattern(pname, ("$v",))
        for node in cfg.nodes:
            if match_pattern(pat, node, binding):
                hits.add(node.id)
            elif augment is not None and augment(node.id, pname, var):
                hits.add(node.id)
    return hits


def compute_summary(f: FunctionDef, cfg: Cfg, summaries: dict[str, FunctionSummary],
                    augment) -> FunctionSummary:
    """Summarize one function given its callees' summaries.

    may_return_null: some return path yields 0, a malloc result, a may-null
    callee result, or a variable still holding one of those.
    always_frees(i): no path reaches exit without freeing parameter i.
    derefs_param_unchecked(i): some path dereferences parameter i before
    any null check of it.
    """
    may_null = False
    for rid in _return_nodes(cfg):
        value = cfg.nodes[rid].stmt.value
        if value is None:
            continue
        if isinstance(value, ast.IntLit) and value.value == 0:
            may_null = True
            break
        if isinstance(value, ast.Call):
            if value.name == "malloc":
                may_null = True
                break
            callee = summaries.get(value.name)
            if callee is not None and callee.may_return_null:
                may_null = True
                break
        if isinstance(value, ast.Var):
            nulled = _label_nodes(cfg, value.name, ["null_assign", "malloc_assign"], augment)
            assigns = _label_nodes(cfg, value.name, ["assign_to"], augment)
            labeling: dict[int, set[str]] = {}
            for n in nulled:
                labeling.setdefault(n, set()).add("nulled")
            for n in assigns:
                labeling.setdefault(n, set()).add("assign")
            labeling.setdefault(rid, set()).add("ret")
            k = _labeled_kripke(cfg, labeling)
            formula = EU(TRUE, And(Prop("nulled"),
                                   EX(EU(Not(Prop("assign")), Prop("ret")))))
            if check(k, formula).holds(formula, cfg.entry):
                may_null = True
                break

    always_frees: set[int] = set()
    derefs_unchecked: set[int] = set()
    for i, prm in enumerate(f.params):
        frees = _label_nodes(cfg, prm.name, ["free_of"], augment)
        labeling = {n: {"fre"} for n in frees}
        labeling.setdefault(cfg.exit, set()).add("ext")
        k = _labeled_kripke(cfg, labeling)
        escape = EU(Not(Prop("fre")), Prop("ext"))
        if not check(k, escape).holds(escape, cfg.entry):
            always_frees.add(i)

        derefs = _label_nodes(cfg, prm.name, ["deref"], augment)
        checksn = _label_nodes(cfg, prm.name, ["null_check"], augment)
        labeling = {}
        for n in derefs:
            labeling.setdefault(n, set()).add("drf")
        for n in checksn:
            labeling.setdefault(n, set()).add("chk")
        k = _labeled_kripke(cfg, labeling)
        unchecked = EU(Not(Prop("chk")), Prop("drf"))
        if check(k, unchecked).holds(unchecked, cfg.entry):
            derefs_unchecked.add(i)

    return FunctionSummary(f.name, may_null, frozenset(always_frees),
                           frozenset(derefs_unchecked))


def compute_summaries(tu: TranslationUnit,
                      cfgs: dict[str, Cfg] | None = None) -> dict[str, FunctionSummary]:
    """Bottom-up summaries for a whole unit; recursion cycles go pessimistic."""
    cfgs = cfgs or {f.name: build_cfg(f) for f in tu.functions}
    funcs = {f.name: f for f in tu.functions}
    order, cyclic = call_order(tu)
    summaries: dict[str, FunctionSummary] = {}
    for name in order:
        if name in cyclic:
            summaries[name] = pessimistic_summary(funcs[name])
        else:
            aug = apply_summaries(cfgs[name], summaries)
            summaries[name] = compute_summary(funcs[name], cfgs[name], summaries, aug)
    return summaries


def apply_summaries(cfg: Cfg, summaries: dict[str, FunctionSummary]):
    """Extra pattern facts implied by callee summaries at call nodes.

    Returns `augment(node_id, pattern_name, var) -> bool`:
      v = f(...)        matches null_assign(v) when f may return null
      f(..., v, ...)    matches free_of(v) at an always-frees position
                        and deref(v) at an unchecked-deref position.
    """
    facts: dict[int, set[tuple[str, str]]] = {}

    def add(nid: int, pname: str, var: str):
        facts.setdefault(nid, set()).add((pname, var))

    for node in cfg.nodes:
        s = node.stmt
        if s is None and node.expr is None:
            continue
        target_var = None
        call_rhs = None
        if isinstance(s, ast.Assign) and isinstance(s.target, ast.Var) \
                and isinstance(s.value, ast.Call):
            target_var, call_rhs = s.target.name, s.value
        elif isinstance(s, ast.VarDecl) and isinstance(s.init, ast.Call):
            target_var, call_rhs = s.name, s.init
        if call_rhs is not None:
            summ = summaries.get(call_rhs.name)
            if summ is not None and summ.may_return_null:
                add(node.id, "null_assign", target_var)
        for root in _roots(node):
            for e in _walk(root):
                if not isinstance(e, ast.Call):
                    continue
                summ = summaries.get(e.name)
                if summ is None:
                    continue
                for i in summ.always_frees:
                    if i < len(e.args) and isinstance(e.args[i], ast.Var):
                        add(node.id, "free_of", e.args[i].name)
                for i in summ.derefs_param_unchecked:
                    if i < len(e.args) and isinstance(e.args[i], ast.Var):
                        add(node.id, "deref", e.args[i].name)

    if not facts:
        return None

    def augment(node_id: int, pattern_name: str, var: str) -> bool:
        return (pattern_name, var) in facts.get(node_id, ())

    return augment


# ---------------------------------------------------------------------------
# Cache store

class CacheDb:
    """Single-file append-friendly store.

    Format: header line `ctl-lint-cache v1`, then records of
    `<64-hex key> <byte-length>\\n<payload>\\n` with the payload being
    canonical JSON.  A record whose framing or length does not match is
    corrupt: it and everything after it are treated as misses and the file
    is rewritten on the next store.
    """

    def __init__(self, path: str):
        self.path = path
        self._entries: dict[str, bytes] = {}
        self._lock = threading.Lock()
        self._needs_rewrite = False
        self._load()

    def _load(self) -> None:
        try:
            with open(self.path, "rb") as fh:
                blob = fh.read()
        except FileNotFoundError:
            return
        lines = blob.split(b"\n", 1)
        if lines[0].decode("utf-8", "replace") != CACHE_HEADER:
            logger.warning("cache %s: bad header, starting fresh", self.path)
            self._needs_rewrite = True
            return
        rest = lines[1] if len(lines) > 1 else b""
        pos = 0
        while pos < len(rest):
            nl = rest.find(b"\n", pos)
            if nl < 0:
                break
            head = rest[pos:nl].decode("utf-8", "replace").split(" ")
            ok = len(head) == 2 and len(head[0]) == 64 and head[1].isdigit() \
                and all(c in "0123456789abcdef" for c in head[0])
            if not ok:
                logger.warning("cache %s: corrupt record header at byte %d; "
                               "dropping remainder", self.path, pos)
                self._needs_rewrite = True
                return
            length = int(head[1])
            start = nl + 1
            payload = rest[start:start + length]
            if len(payload) != length or rest[start + length:start + length + 1] != b"\n":
                logger.warning("cache %s: corrupt payload for %s; dropping remainder",
                               self.path, head[0][:12])
                self._needs_rewrite = True
                return
            self._entries[head[0]] = payload
            pos = start + length + 1

    def get(self, key: str) -> dict | None:
        raw = self._entries.get(key)
        if raw is None:
            return None
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            logger.warning("cache %s: undecodable entry %s treated as miss",
                           self.path, key[:12])
            return None

    def put(self, key: str, obj: dict) -> None:
        payload = canonical_json(obj).encode("utf-8")
        with self._lock:
            self._entries[key] = payload
            if self._needs_rewrite:
                data = CACHE_HEADER + "\n"
                blob = data.encode("utf-8") + b"".join(
                    f"{k} {len(v)}\n".encode("utf-8") + v + b"\n"
                    for k, v in self._entries.items())
                with open(self.path, "wb") as fh:
                    fh.write(blob)
                self._needs_rewrite = False
                return
            record = f"{key} {len(payload)}\n".encode("utf-8") + payload + b"\n"
            try:
                with open(self.path, "ab") as fh:
                    if fh.tell() == 0:
                        fh.write((CACHE_HEADER + "\n").encode("utf-8"))
                    fh.write(record)
            except FileNotFoundError:
                raise OSError(f"cache path is not writable: {self.path}")


def canonical_json(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False, ensure_ascii=True)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cache_key(func: FunctionDef, checkset_text: str, callee_summaries: dict,
              globals_text: str, max_witnesses: int) -> str:
    """Content key: function source, check set, callee summary environment,
    globals, refinement budget and tool version."""
    summary_env = canonical_json(
        {name: callee_summaries[name].to_json_obj() for name in sorted(callee_summaries)})
    parts = [
        _sha256(func.source_text),
        _sha256(checkset_text),
        _sha256(summary_env),
        _sha256(globals_text),
        f"max_witnesses={max_witnesses}",
        f"ctl-lint/{__version__}",
    ]
    return _sha256("\n".join(parts))


# ---------------------------------------------------------------------------
# Per-function analysis

_MESSAGES = {
    "null-deref": "'{var}' may be NULL when dereferenced",
    "memory-leak": "allocation of '{var}' may reach function exit without free",
    "use-after-free": "'{var}' is used after being freed",
    "double-free": "'{var}' may be freed twice",
    "uninit-read": "'{var}' may be read before initialization",
}


def _message_for(check_id: str, var: str) -> str:
    template = _MESSAGES.get(check_id, "check '{id}' matched for '{var}'")
    return template.format(var=var, id=check_id)


@dataclass
class EngineConfig:
    checkset_text: str = ""
    max_witnesses: int = 5
    jobs: int = 1
    fm_budget: int = DEFAULT_FM_BUDGET
    enum_budget: int = DEFAULT_ENUM_BUDGET


@dataclass
class Counters:
    functions: int = 0
    tasks_created: int = 0
    tasks_skipped: int = 0
    tasks_checked: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    # content view: totals a fresh analysis of the same sources would report
    content_tasks: int = 0
    content_skipped: int = 0

    def merge_content(self, tasks: int, skipped: int) -> None:
        self.content_tasks += tasks
        self.content_skipped += skipped


def _trace_anchor(task: CheckTask, trace) -> int:
    """Anchor node of a diagnostic: the last trace state carrying a label
    other than the structural entry/exit ones."""
    structural = {name for name, pat in task.check.labels
                  if pat.name in ("at_entry", "at_exit")}
    for s in reversed(trace.states):
        if task.kripke.labels[s] - structural:
            return s
    return trace.states[0]


def analyze_function(f: FunctionDef, cfg: Cfg, checks: list[CheckSpec],
                     summaries: dict[str, FunctionSummary],
                     globals_: list[ast.VarDecl],
                     config: EngineConfig) -> tuple[list[Diagnostic], int, int]:
    """All diagnostics of one function plus (tasks_created, tasks_skipped)."""
    aug = apply_summaries(cfg, summaries)
    global_names = frozenset(g.name for g in globals_)
    diags: list[Diagnostic] = []
    created = 0
    skipped = 0
    for spec in checks:
        if spec.id == DEAD_CODE_ID:
            diags.extend(_dead_code_diags(cfg, spec))
            continue
        bindings = candidate_variables(spec, cfg, globals_)
        tasks = instantiate(spec, cfg, globals_, aug)
        created += len(bindings)
        skipped += len(bindings) - len(tasks)
        for task in tasks:
            sat = check(task.kripke, task.formula)
            if not sat.holds(task.formula, cfg.entry):
                continue
            if spec.refine:
                verdict, trace = refine_diagnostic(
                    task, cfg, config.max_witnesses, global_names, sat,
                    config.fm_budget, config.enum_budget)
                if verdict == SUPPRESSED:
                    continue
                confidence = CONFIRMED if verdict == R_CONFIRMED else UNCONFIRMED
            else:
                confidence = UNCONFIRMED
                trace = witness(task.kripke, task.formula, cfg.entry, sat)
            anchor = _trace_anchor(task, trace)
            diags.append(Diagnostic(
                spec.id, spec.severity, cfg.nodes[anchor].loc,
                _message_for(spec.id, task.bound_var), cfg.function, confidence,
                tuple(cfg.nodes[s].loc for s in trace.states)))
    result = interval_analyze(cfg, frozenset(g.name for g in globals_))
    diags.extend(interval_checks(cfg, result, globals_))
    diags.sort(key=Diagnostic.sort_key)
    return diags, created, skipped


def _dead_code_diags(cfg: Cfg, spec: CheckSpec) -> list[Diagnostic]:
    """Nodes that cannot reach the entry proposition in the reversed
    structure are unreachable; one diagnostic per dead region."""
    k = reverse(to_kripke(cfg, {cfg.entry: {"entry"}}))
    reach = EF(Prop("entry"))
    sat = check(k, reach)
    dead = {n.id for n in cfg.nodes if not sat.holds(reach, n.id)}
    out: list[Diagnostic] = []
    for region in _dead_regions(cfg, dead):
        head = cfg.nodes[min(region)]
        if head.kind in ("entry", "exit"):
            continue
        out.append(Diagnostic(spec.id, spec.severity, head.loc, "unreachable code",
                              cfg.function, CONFIRMED, (head.loc,)))
    return out


def _dead_regions(cfg: Cfg, dead: set[int]) -> list[set[int]]:
    regions: list[set[int]] = []
    left = set(dead)
    adj: dict[int, set[int]] = {d: set() for d in dead}
    for a, b, _ in cfg.edges:
        if a in dead and b in dead:
            adj[a].add(b)
            adj[b].add(a)
    while left:
        seed = min(left)
        comp = {seed}
        stack = [seed]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in comp:
                    comp.add(y)
                    stack.append(y)
        left -= comp
        regions.append(comp)
    regions.sort(key=min)
    return regions


# ---------------------------------------------------------------------------
# Unit analysis with caching

def _relativize(diags: list[Diagnostic], f: FunctionDef) -> list[dict]:
    base = f.loc.line
    out = []
    for d in diags:
        out.append({
            "check": d.check_id,
            "severity": d.severity,
            "rel_line": d.loc.line - base,
            "column": d.loc.column,
            "message": d.message,
            "confidence": d.confidence,
            "trace": [{"rel_line": t.line - base, "column": t.column} for t in d.trace],
        })
    return out


def _rehydrate(rel: list[dict], f: FunctionDef, file: str) -> list[Diagnostic]:
    base = f.loc.line
    out = []
    for r in rel:
        out.append(Diagnostic(
            r["check"], r["severity"],
            SourceLocation(file, base + r["rel_line"], r["column"]),
            r["message"], f.name, r["confidence"],
            tuple(SourceLocation(file, base + t["rel_line"], t["column"])
                  for t in r["trace"])))
    return out


def analyze_unit(tu: TranslationUnit, checks: list[CheckSpec],
                 db: CacheDb | None, config: EngineConfig,
                 counters: Counters | None = None) -> list[Diagnostic]:
    """Analyze one translation unit; diagnostics are deduplicated, sorted
    and cache-transparent (byte-identical with and without `db`)."""
    errors = check_well_formed(tu)
    if errors:
        raise AnalysisError(errors)
    counters = counters if counters is not None else Counters()
    funcs = {f.name: f for f in tu.functions}
    cfgs = {f.name: build_cfg(f) for f in tu.functions}
    globals_text = canonical_json([_global_sig(g) for g in tu.globals])
    order, cyclic = call_order(tu)

    summaries: dict[str, FunctionSummary] = {}
    keys: dict[str, str] = {}
    cached_entries: dict[str, dict] = {}
    to_analyze: list[str] = []
    for name in order:
        callee_env = {c: summaries[c] for c in _direct_callees(funcs[name], set(funcs))
                      if c in summaries}
        key = cache_key(funcs[name], config.checkset_text, callee_env,
                        globals_text, config.max_witnesses)
        keys[name] = key
        entry = db.get(key) if db is not None else None
        if entry is not None:
            cached_entries[name] = entry
            summaries[name] = FunctionSummary.from_json_obj(entry["summary"])
            counters.cache_hits += 1
            continue
        counters.cache_misses += 1
        if name in cyclic:
            summaries[name] = pessimistic_summary(funcs[name])
        else:
            aug = apply_summaries(cfgs[name], summaries)
            summaries[name] = compute_summary(funcs[name], cfgs[name], summaries, aug)
        to_analyze.append(name)

    def run_one(name: str) -> tuple[str, list[Diagnostic], int, int]:
        diags, created, skipped = analyze_function(
            funcs[name], cfgs[name], checks, summaries, tu.globals, config)
        return name, diags, created, skipped

    fresh: dict[str, tuple[list[Diagnostic], int, int]] = {}
    if config.jobs > 1 and len(to_analyze) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            for name, diags, created, skipped in pool.map(run_one, to_analyze):
                fresh[name] = (diags, created, skipped)
    else:
        for name in to_analyze:
            fresh[name] = run_one(name)[1:]

    all_diags: list[Diagnostic] = []
    for f in tu.functions:
        counters.functions += 1
        if f.name in fresh:
            diags, created, skipped = fresh[f.name]
            counters.tasks_created += created
            counters.tasks_skipped += skipped
            counters.tasks_checked += created - skipped
            counters.merge_content(created, skipped)
            if db is not None:
                db.put(keys[f.name], {
                    "diagnostics": _relativize(diags, f),
                    "summary": summaries[f.name].to_json_obj(),
                    "tasks": created,
                    "skipped": skipped,
                })
            all_diags.extend(diags)
        else:
            entry = cached_entries[f.name]
            counters.merge_content(entry["tasks"], entry["skipped"])
            all_diags.extend(_rehydrate(entry["diagnostics"], f, tu.file))

    return _finalize(all_diags)


def _global_sig(g: ast.VarDecl) -> list:
    return ["global", g.name, str(g.type), ast._sig(g.init)] if g.init is not None \
        else ["global", g.name, str(g.type), None]


def _finalize(diags: list[Diagnostic]) -> list[Diagnostic]:
    best: dict[tuple, Diagnostic] = {}
    for d in diags:
        key = (d.check_id, d.loc, d.function)
        cur = best.get(key)
        if cur is None or (cur.confidence != CONFIRMED and d.confidence == CONFIRMED):
            best[key] = d
    out = sorted(best.values(), key=Diagnostic.sort_key)
    return out


# ---------------------------------------------------------------------------
# Bulk task checking (the many-small-tasks path)

def _check_task_group(group: tuple[KripkeStructure, list[tuple[int, object]]]):
    kripke, items = group
    sat = SatSets(kripke)
    return [(idx, tuple(sorted(sat.states(formula)))) for idx, formula in items]


def run_check_tasks(tasks: list[CheckTask], jobs: int = 1) -> list[tuple[int, ...]]:
    """Model-check many tasks, returning each formula's satisfying states.

    Tasks sharing a Kripke structure are grouped so subformula results are
    reused; groups go to worker processes when jobs > 1.  Output order
    always matches input order.
    """
    groups: dict[int, tuple[KripkeStructure, list[tuple[int, object]]]] = {}
    for idx, task in enumerate(tasks):
        slot = groups.setdefault(id(task.kripke), (task.kripke, []))
        slot[1].append((idx, task.formula))
    group_list = list(groups.values())
    results: list[tuple[int, ...] | None] = [None] * len(tasks)
    if jobs <= 1:
        for group in group_list:
            for idx, sat_states in _check_task_group(group):
                results[idx] = sat_states
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for chunk in pool.map(_check_task_group, group_list,
                                  chunksize=max(1, len(group_list) // (jobs * 4) or 1)):
                for idx, sat_states in chunk:
                    results[idx] = sat_states
    return results  # type: ignore[return-value]
