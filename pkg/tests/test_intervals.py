from __future__ import annotations

from hypothesis import given, settings, strategies as st

from ctl_lint import frontend as F
from ctl_lint.cfg import FALSE, TRUE, build_cfg
from ctl_lint.intervals import (
    BOTTOM, BOTTOM_ENV, Interval, IntervalEnv, add, analyze, const, div,
    env_leq, eval_expr, interval_checks, interval_leq, iteration_cap, join,
    meet, mod, mul, sub, transfer, widen,
)
from minic_interp import Interpreter, tdiv, tmod
from program_gen import generate_program

iv = Interval


def cfg_of(src: str, idx: int = 0):
    tu = F.parse(src, "a.c")
    assert F.check_well_formed(tu) == []
    return build_cfg(tu.functions[idx]), tu


def expr_of(src: str):
    tu = F.parse(f"int f() {{ return {src}; }}", "a.c")
    return tu.functions[0].body.stmts[0].value


class TestArithmetic:
    def test_literal(self):
        assert eval_expr(expr_of("5"), IntervalEnv()) == const(5)

    def test_add_componentwise(self):
        assert add(iv(1, 3), iv(10, 10)) == iv(11, 13)

    def test_mul_corner_hull(self):
        assert mul(iv(-2, 3), iv(4, 5)) == iv(-10, 15)

    def test_sub(self):
        assert sub(iv(1, 3), iv(0, 2)) == iv(-1, 3)

    def test_div_truncates_toward_zero(self):
        assert div(iv(-7, -7), iv(2, 2)) == const(tdiv(-7, 2)) == const(-3)
        assert div(iv(1, 5), iv(2, 2)) == iv(0, 2)

    def test_div_by_interval_containing_zero_is_top(self):
        assert div(iv(1, 1), iv(-1, 1)).is_top()

    def test_div_with_unbounded_divisor(self):
        assert interval_leq(const(5 // 3), div(iv(5, 5), iv(2, None)))
        assert div(iv(5, 5), iv(2, None)) == iv(0, 2)

    def test_mod_sign_follows_dividend(self):
        assert mod(iv(-7, -7), iv(3, 3)) == const(tmod(-7, 3)) == const(-1)
        assert mod(iv(0, 10), iv(4, 4)) == iv(0, 3)
        assert mod(iv(-5, 5), iv(3, 3)) == iv(-2, 2)

    def test_comparison_intervals(self):
        assert eval_expr(expr_of("1 < 2"), IntervalEnv()) == const(1)
        assert eval_expr(expr_of("2 < 1"), IntervalEnv()) == const(0)
        env = IntervalEnv({"x": iv(0, 5)})
        tu = F.parse("int f(int x) { return x < 3; }", "a.c")
        assert eval_expr(tu.functions[0].body.stmts[0].value, env) == iv(0, 1)

    def test_unknown_calls_are_top(self):
        tu = F.parse("int g() { return 1; } int f() { return g(); }", "a.c")
        call = tu.functions[1].body.stmts[0].value
        assert eval_expr(call, IntervalEnv()).is_top()

    def test_lattice_ops(self):
        assert join(iv(0, 1), iv(5, 6)) == iv(0, 6)
        assert meet(iv(0, 5), iv(3, 9)) == iv(3, 5)
        assert meet(iv(0, 1), iv(5, 6)) == BOTTOM
        assert widen(iv(0, 3), iv(0, 4)) == iv(0, None)
        assert widen(iv(0, 3), iv(-1, 3)) == iv(None, 3)
        assert join(BOTTOM, iv(1, 2)) == iv(1, 2)


class TestTransfer:
    def _node(self, src, pick):
        g, _ = cfg_of(src)
        return g, next(n for n in g.nodes if pick(n))

    def test_assignment_updates_target(self):
        g, node = self._node("int f(int x) { x = 5; }",
                             lambda n: isinstance(n.stmt, F.Assign))
        out = transfer(node, IntervalEnv())
        assert out.get("x") == const(5)

    def test_true_branch_guard_refines(self):
        g, node = self._node("int f(int x) { if (x < 10) { x = 1; } }",
                             lambda n: n.kind == "cond")
        out = transfer(node, IntervalEnv(), TRUE)
        assert out.get("x") == iv(None, 9)

    def test_contradictory_guard_gives_bottom(self):
        g, node = self._node("int f(int x) { if (x < 10) { x = 1; } }",
                             lambda n: n.kind == "cond")
        out = transfer(node, IntervalEnv({"x": iv(20, 30)}), TRUE)
        assert out.is_bottom

    def test_false_branch_negates(self):
        g, node = self._node("int f(int x) { if (x < 10) { x = 1; } }",
                             lambda n: n.kind == "cond")
        out = transfer(node, IntervalEnv(), FALSE)
        assert out.get("x") == iv(10, None)

    def test_bottom_propagates(self):
        g, node = self._node("int f(int x) { x = 5; }",
                             lambda n: isinstance(n.stmt, F.Assign))
        assert transfer(node, BOTTOM_ENV).is_bottom

    def test_call_havocs_globals(self):
        src = "int g;\nint h() { g = 1; return 0; }\nint f() { g = 5; h(); return g; }"
        tu = F.parse(src, "a.c")
        cfg = build_cfg(tu.functions[1])
        call_node = next(n for n in cfg.nodes if isinstance(n.stmt, F.ExprStmt))
        out = transfer(call_node, IntervalEnv({"g": const(5)}),
                       call_havoc=frozenset({"g"}))
        assert out.get("g").is_top()


@st.composite
def env_pairs(draw):
    names = ["x", "y", "z"]
    big: dict[str, Interval] = {}
    small: dict[str, Interval] = {}
    for name in names:
        if draw(st.booleans()):
            lo = draw(st.one_of(st.none(), st.integers(-20, 20)))
            hi = draw(st.one_of(st.none(), st.integers(-20, 20)))
            if lo is not None and hi is not None and lo > hi:
                lo, hi = hi, lo
            big[name] = Interval(lo, hi)
    e2 = IntervalEnv(dict(big))
    for name, val in big.items():
        lo = draw(st.one_of(st.none(), st.integers(-20, 20)))
        hi = draw(st.one_of(st.none(), st.integers(-20, 20)))
        if lo is not None and hi is not None and lo > hi:
            lo, hi = hi, lo
        shrunk = meet(val, Interval(lo, hi)) if draw(st.booleans()) else val
        if shrunk.empty:
            return BOTTOM_ENV, e2
        small[name] = shrunk
    return IntervalEnv(small), e2


class TestMonotonicity:
    @given(env_pairs(), st.integers(0, 3), st.booleans())
    @settings(max_examples=120, deadline=None)
    def test_transfer_monotone(self, pair, node_pick, branch_true):
        small, big = pair
        assert env_leq(small, big)
        src = "int f(int x, int y, int z) { x = y + z; if (x < y) { z = x * y; } z = z / 2; }"
        g, _ = cfg_of(src)
        nodes = [n for n in g.nodes if n.kind in ("stmt", "cond")]
        node = nodes[node_pick % len(nodes)]
        branch = TRUE if branch_true else FALSE
        out_small = transfer(node, small, branch)
        out_big = transfer(node, big, branch)
        assert env_leq(out_small, out_big)


class TestAnalyze:
    def test_counted_loop_exact_exit_bound(self):
        g, _ = cfg_of("int f() { int i = 0; while (i < 10) { i = i + 1; } return i; }")
        r = analyze(g)
        ret = next(n.id for n in g.nodes if isinstance(n.stmt, F.Return))
        assert r.at(ret).get("i") == const(10)

    def test_straight_line_constants(self):
        g, _ = cfg_of("int f() { int x = 1; int y = x + 2; return y; }")
        r = analyze(g)
        exit_env = r.at(g.exit)
        assert exit_env.get("x") == const(1)
        assert exit_env.get("y") == const(3)

    def test_infinite_loop_exit_unreachable(self):
        g, _ = cfg_of("int f() { while (1) { } return 0; }")
        r = analyze(g)
        assert r.at(g.exit).is_bottom

    def test_for_loop_body_index_range(self):
        g, _ = cfg_of(
            "int f() { int a[10]; int i; for (i = 0; i < 10; i++) a[i] = 0; return 0; }")
        r = analyze(g)
        store = next(n.id for n in g.nodes
                     if isinstance(n.stmt, F.Assign) and isinstance(n.stmt.target, F.Index))
        assert r.at(store).get("i") == iv(0, 9)

    def test_narrowing_preserves_fixpoint_containment(self):
        for seed in range(40):
            tu = F.parse(generate_program(seed), "g.c")
            gnames = frozenset(g.name for g in tu.globals)
            for f in tu.functions:
                g = build_cfg(f)
                r = analyze(g, gnames)
                from ctl_lint.intervals import _array_var_names, _call_havoc_set
                havoc = _call_havoc_set(g, gnames)
                arrays = _array_var_names(g)
                for a, b, label in g.edges:
                    out = transfer(g.nodes[a], r.at(a), label, havoc, arrays)
                    assert env_leq(out, r.at(b)), (seed, f.name, a, b)

    def test_iteration_cap_never_hit_on_corpus(self):
        for seed in range(60):
            tu = F.parse(generate_program(seed), "g.c")
            gnames = frozenset(g.name for g in tu.globals)
            for f in tu.functions:
                g = build_cfg(f)
                r = analyze(g, gnames)  # raises if the cap is exceeded
                assert r.iterations <= iteration_cap(
                    len(g.nodes), 64, len(g.loop_heads))


class TestChecks:
    def _diags(self, src):
        tu = F.parse(src, "a.c")
        assert F.check_well_formed(tu) == []
        g = build_cfg(tu.functions[0])
        return interval_checks(g, analyze(g, frozenset(x.name for x in tu.globals)),
                               tu.globals)

    def test_definite_overrun_is_error(self):
        ds = self._diags("int f() { int a[10]; a[12] = 0; return 0; }")
        assert [(d.check_id, d.severity) for d in ds] == [("buffer-overrun", "error")]
        assert ds[0].confidence == "confirmed"

    def test_counted_loop_store_clean(self):
        ds = self._diags(
            "int f() { int a[10]; int i; for (i = 0; i < 10; i++) a[i] = 0; return 0; }")
        assert ds == []

    def test_possible_overrun_is_warning(self):
        ds = self._diags(
            "int f() { int a[5]; int i; for (i = 0; i <= 5; i++) a[i] = 0; return 0; }")
        assert [(d.check_id, d.severity) for d in ds] == [("buffer-overrun", "warning")]
        assert ds[0].confidence == "unconfirmed"

    def test_division_by_zero_literal(self):
        ds = self._diags("int f(int x) { return x / 0; }")
        assert [(d.check_id, d.severity) for d in ds] == [("div-by-zero", "error")]

    def test_possible_division_by_zero(self):
        ds = self._diags(
            "int f(int c) { int d = 0; if (c) { d = 2; } return 8 / d; }")
        assert [(d.check_id, d.severity) for d in ds] == [("div-by-zero", "warning")]

    def test_unreachable_node_produces_nothing(self):
        ds = self._diags("int f() { while (1) { } int a[2]; a[9] = 1; return 0; }")
        assert ds == []

    def test_guard_eliminates_overrun(self):
        ds = self._diags(
            "int f(int i) { int a[5]; if (i >= 0 && i < 5) { a[i] = 1; } return 0; }")
        assert ds == []


class TestInterpreterAgreement:
    def test_soundness_on_small_corpus(self):
        violations = []
        for seed in range(80):
            src = generate_program(seed)
            tu = F.parse(src, "g.c")
            gnames = frozenset(x.name for x in tu.globals)
            cfgs = {f.name: build_cfg(f) for f in tu.functions}
            results = {name: analyze(g, gnames) for name, g in cfgs.items()}

            def observer(fn, node, snapshot):
                env = results[fn].at(node)
                if env.is_bottom:
                    violations.append((seed, fn, node, "unreachable-but-hit"))
                    return
                for var, val in snapshot.items():
                    if not env.get(var).contains(val):
                        violations.append((seed, fn, node, var, val, repr(env.get(var))))

            interp = Interpreter(tu, observer=observer)
            import random as _r
            rng = _r.Random(seed)
            for f in tu.functions:
                for _ in range(2):
                    interp.run(f.name, tuple(rng.randint(-6, 6) for _ in f.params))
        assert violations == []
