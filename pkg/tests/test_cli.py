from __future__ import annotations

import json

import pytest

from ctl_lint.cli import main, render_summary, render_text
from ctl_lint.diagnostics import Diagnostic
from ctl_lint.engine import Counters
from ctl_lint.frontend import SourceLocation

CLEAN = "int add(int a, int b) { return a + b; }\n"
DOUBLE_FREE = "int f(int *p) { free(p); free(p); return 0; }\n"
LEAK = "int f() { int *p = malloc(4); return 0; }\n"


@pytest.fixture
def ws(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("CTL_LINT_DB", raising=False)

    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestExitCodes:
    def test_clean_file_exits_zero_no_stdout(self, ws, capsys):
        path = ws("clean.c", CLEAN)
        code, out, err = run(capsys, "analyze", path)
        assert code == 0
        assert out == ""
        assert "0 errors, 0 warnings, 0 infos" in err

    def test_bug_exits_one_with_trace(self, ws, capsys):
        path = ws("bug.c", DOUBLE_FREE)
        code, out, err = run(capsys, "analyze", path)
        assert code == 1
        assert "error [double-free] 'p' may be freed twice (confirmed)" in out
        assert "trace:" in out

    def test_syntax_error_exits_two(self, ws, capsys):
        path = ws("x.c", "int f( {\n")
        code, out, err = run(capsys, "analyze", "--format", "json", path)
        assert code == 2
        assert out == ""
        assert "error" in err

    def test_missing_file_exits_two(self, ws, capsys):
        code, out, err = run(capsys, "analyze", "no-such-file.c")
        assert code == 2

    def test_semantic_error_exits_two(self, ws, capsys):
        path = ws("x.c", "int f() { return y; }\n")
        code, out, err = run(capsys, "analyze", path)
        assert code == 2
        assert "undeclared 'y'" in err

    def test_no_arguments_exits_two(self, capsys):
        code, out, err = run(capsys)
        assert code == 2

    def test_unknown_command_exits_two(self, capsys):
        code, out, err = run(capsys, "frobnicate")
        assert code == 2

    def test_exit_code_law(self, ws, capsys):
        # exit 1 iff at least one diagnostic was rendered
        path = ws("bug.c", DOUBLE_FREE)
        code, out, _ = run(capsys, "analyze", "--min-severity", "error", path)
        assert code == 1 and out
        code, out, _ = run(capsys, "analyze", "--checks", "memory-leak", path)
        assert code == 0 and out == ""


class TestRenderText:
    def test_empty(self):
        assert render_text([]) == ""

    def test_memory_leak_line_format(self):
        loc = SourceLocation("a.c", 4, 3)
        d = Diagnostic("memory-leak", "warning", loc,
                       "allocation of 'p' may reach function exit without free",
                       "f", "confirmed",
                       (SourceLocation("a.c", 1, 1), loc, SourceLocation("a.c", 6, 1)))
        text = render_text([d])
        assert text.splitlines()[0] == (
            "a.c:4:3: warning [memory-leak] allocation of 'p' may reach "
            "function exit without free (confirmed)")
        assert text.splitlines()[1] == "  trace: 1:1 -> 4:3 -> 6:1"

    def test_min_severity_filter(self, ws, capsys):
        path = ws("dead.c", "int f() { return 0; return 1; }\n")
        code, out, _ = run(capsys, "analyze", path)
        assert "[dead-code]" in out
        code, out, _ = run(capsys, "analyze", "--min-severity", "warning", path)
        assert out == "" and code == 0


class TestRenderJson:
    def test_schema_and_fields(self, ws, capsys):
        path = ws("leak.c", LEAK)
        code, out, err = run(capsys, "analyze", "--format", "json", path)
        assert code == 1
        obj = json.loads(out)
        assert list(obj.keys()) == ["version", "diagnostics", "summary"]
        assert obj["version"] == "1"
        (d,) = obj["diagnostics"]
        assert list(d.keys()) == ["check", "severity", "file", "line", "column",
                                  "message", "confidence", "trace"]
        assert d["check"] == "memory-leak"
        assert all(list(t.keys()) == ["line", "column"] for t in d["trace"])
        assert list(obj["summary"].keys()) == ["error", "warning", "info",
                                               "tasks", "cache_hits"]

    def test_empty_run_zeros(self, ws, capsys):
        path = ws("clean.c", "int f() { return 0; }\n")
        code, out, _ = run(capsys, "analyze", "--format", "json", "--no-cache", path)
        obj = json.loads(out)
        assert obj["diagnostics"] == []
        assert obj["summary"]["error"] == obj["summary"]["warning"] == 0

    def test_reruns_byte_identical(self, ws, capsys):
        path = ws("bug.c", DOUBLE_FREE)
        _, out1, _ = run(capsys, "analyze", "--format", "json", path)
        _, out2, _ = run(capsys, "analyze", "--format", "json", path)
        assert out1 == out2

    def test_text_and_json_same_multiset(self, ws, capsys):
        src = DOUBLE_FREE + LEAK.replace("int f", "int g")
        path = ws("both.c", src)
        _, text_out, _ = run(capsys, "analyze", path)
        _, json_out, _ = run(capsys, "analyze", "--format", "json", path)
        obj = json.loads(json_out)
        from_json = sorted((d["check"], d["file"], d["line"], d["severity"])
                           for d in obj["diagnostics"])
        from_text = []
        for line in text_out.splitlines():
            if line.startswith("  trace:"):
                continue
            head, rest = line.split(": ", 1)
            file, lineno, _col = head.rsplit(":", 2)
            sev, check = rest.split(" ", 2)[:2]
            from_text.append((check.strip("[]"), file, int(lineno), sev))
        assert sorted(from_text) == from_json


class TestSummaryReport:
    def test_counts_match(self):
        locs = [SourceLocation("a.c", i, 1) for i in (1, 2, 3)]
        ds = [
            Diagnostic("double-free", "error", locs[0], "m", "f"),
            Diagnostic("memory-leak", "warning", locs[1], "m", "f"),
            Diagnostic("null-deref", "warning", locs[2], "m", "f"),
        ]
        text = render_summary(ds, Counters())
        assert text.splitlines()[0] == "1 errors, 2 warnings, 0 infos"

    def test_clean_line(self):
        assert render_summary([], Counters()).splitlines()[0] == "0 errors, 0 warnings, 0 infos"

    def test_cache_percentage(self, ws, capsys):
        path = ws("bug.c", DOUBLE_FREE)
        run(capsys, "analyze", path)
        _, _, err = run(capsys, "analyze", path)
        assert "cache hits: 100%" in err


class TestFlags:
    def test_checks_filter(self, ws, capsys):
        path = ws("bug.c", DOUBLE_FREE)
        code, out, _ = run(capsys, "analyze", "--checks", "double-free", path)
        assert code == 1
        assert "[double-free]" in out and "[use-after-free]" not in out

    def test_unknown_check_id(self, ws, capsys):
        path = ws("bug.c", DOUBLE_FREE)
        code, _, err = run(capsys, "analyze", "--checks", "wat", path)
        assert code == 2 and "unknown check ids: wat" in err

    def test_env_var_sets_db(self, ws, capsys, monkeypatch, tmp_path):
        path = ws("bug.c", DOUBLE_FREE)
        env_db = tmp_path / "env.db"
        monkeypatch.setenv("CTL_LINT_DB", str(env_db))
        run(capsys, "analyze", path)
        assert env_db.exists()
        flag_db = tmp_path / "flag.db"
        run(capsys, "analyze", "--db", str(flag_db), path)
        assert flag_db.exists()  # the flag wins over the environment

    def test_no_cache_touches_nothing(self, ws, capsys, tmp_path):
        path = ws("bug.c", DOUBLE_FREE)
        run(capsys, "analyze", "--no-cache", path)
        assert not (tmp_path / ".ctl-lint.db").exists()

    def test_default_db_created(self, ws, capsys, tmp_path):
        path = ws("bug.c", DOUBLE_FREE)
        run(capsys, "analyze", path)
        assert (tmp_path / ".ctl-lint.db").exists()

    def test_dump_cfg(self, ws, capsys):
        path = ws("clean.c", CLEAN)
        code, out, _ = run(capsys, "analyze", "--dump-cfg", path)
        assert code == 0
        assert out.startswith('digraph "add"')

    def test_list_checks(self, capsys):
        code, out, _ = run(capsys, "--list-checks")
        assert code == 0
        for check_id in ("null-deref", "memory-leak", "use-after-free",
                         "double-free", "uninit-read", "dead-code",
                         "buffer-overrun", "div-by-zero"):
            assert check_id in out

    def test_user_specs_loaded(self, ws, capsys):
        chk = ws("my.chk", """
check free-call-seen {
  severity: info
  forall $v: pointer
  label f := free_of($v)
  property: EF f
}
""")
        path = ws("bug.c", "int f(int *p) { free(p); return 0; }\n")
        code, out, _ = run(capsys, "analyze", "--specs", chk, "--checks",
                           "free-call-seen", path)
        assert code == 1
        assert "[free-call-seen]" in out

    def test_user_spec_duplicate_id_rejected(self, ws, capsys):
        chk = ws("dup.chk", """
check double-free {
  severity: info
  forall $v: pointer
  label f := free_of($v)
  property: EF f
}
""")
        path = ws("bug.c", DOUBLE_FREE)
        code, _, err = run(capsys, "analyze", "--specs", chk, path)
        assert code == 2 and "duplicate check id" in err

    def test_max_witnesses_zero_unconfirmed(self, ws, capsys):
        path = ws("bug.c", DOUBLE_FREE)
        code, out, _ = run(capsys, "analyze", "--max-witnesses", "0", "--no-cache", path)
        assert code == 1
        assert "(unconfirmed)" in out

    def test_multiple_files_sorted_merge(self, ws, capsys):
        p1 = ws("a.c", DOUBLE_FREE)
        p2 = ws("b.c", LEAK)
        code, out, _ = run(capsys, "analyze", p1, p2)
        files = [line.split(":")[0] for line in out.splitlines()
                 if not line.startswith("  ")]
        assert files == sorted(files)
