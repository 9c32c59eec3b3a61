"""Lexer, parser and well-formedness checks for the MiniC input language.

MiniC is the analyzable C subset: `int`/`int*`/`int[N]` variables, the
usual expression operators, `if`/`while`/`for`/`return`/`break`/`continue`,
and function calls.  `malloc` and `free` are ordinary calls with fixed
arity 1; `NULL` is sugar for the literal 0.  There is no preprocessor:
a `#` anywhere in the input is a parse error.

Everything outside the subset (structs, unions, goto, switch, strings,
floats, ...) is rejected with a located ParseError rather than silently
mis-parsed.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True, order=True)
class SourceLocation:
    file: str
    line: int  # 1-based
    column: int  # 1-based

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(Exception):
    """Syntax or subset violation, with the location it was detected at."""

    def __init__(self, loc: SourceLocation, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


@dataclass
class SemanticError:
    loc: SourceLocation
    message: str

    def __str__(self) -> str:
        return f"{self.loc}: {self.message}"


# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class MiniCType:
    pass


@dataclass(frozen=True)
class Int(MiniCType):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class PtrInt(MiniCType):
    def __str__(self) -> str:
        return "int *"


@dataclass(frozen=True)
class ArrayInt(MiniCType):
    size: int  # >= 1

    def __str__(self) -> str:
        return f"int [{self.size}]"


@dataclass(frozen=True)
class Void(MiniCType):
    def __str__(self) -> str:
        return "void"


INT = Int()
PTR_INT = PtrInt()
VOID = Void()


# ---------------------------------------------------------------------------
# AST
#
# Nodes use identity equality (eq=False): analysis passes key tables by the
# node object itself.  Structural comparison lives in `structurally_equal`.

@dataclass(eq=False)
class Expr:
    loc: SourceLocation = field(init=False, repr=False)


@dataclass(eq=False)
class IntLit(Expr):
    value: int


@dataclass(eq=False)
class Var(Expr):
    name: str


@dataclass(eq=False)
class Unary(Expr):
    op: str  # - ! * &
    operand: Expr


@dataclass(eq=False)
class Binary(Expr):
    op: str  # + - * / % < <= > >= == != && ||
    left: Expr
    right: Expr


@dataclass(eq=False)
class Index(Expr):
    base: Expr
    index: Expr


@dataclass(eq=False)
class Call(Expr):
    name: str
    args: list[Expr]


@dataclass(eq=False)
class Stmt:
    loc: SourceLocation = field(init=False, repr=False)


@dataclass(eq=False)
class VarDecl(Stmt):
    name: str
    type: MiniCType
    init: Expr | None


@dataclass(eq=False)
class Assign(Stmt):
    target: Expr  # Var, Unary(*) or Index
    value: Expr


@dataclass(eq=False)
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Stmt | None


@dataclass(eq=False)
class While(Stmt):
    cond: Expr
    body: Stmt


@dataclass(eq=False)
class For(Stmt):
    init: Stmt | None  # VarDecl, Assign or ExprStmt
    cond: Expr | None
    step: Stmt | None  # Assign or ExprStmt
    body: Stmt


@dataclass(eq=False)
class Return(Stmt):
    value: Expr | None


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(eq=False)
class Block(Stmt):
    stmts: list[Stmt]


@dataclass(eq=False)
class Break(Stmt):
    pass


@dataclass(eq=False)
class Continue(Stmt):
    pass


@dataclass(eq=False)
class Param:
    name: str
    type: MiniCType
    loc: SourceLocation


@dataclass(eq=False)
class FunctionDef:
    name: str
    params: list[Param]
    return_type: MiniCType
    body: Block
    loc: SourceLocation
    end_loc: SourceLocation  # closing brace
    source_text: str  # exact source slice, used for content hashing


@dataclass(eq=False)
class TranslationUnit:
    file: str
    functions: list[FunctionDef]
    globals: list[VarDecl]


def _at(node, loc: SourceLocation):
    node.loc = loc
    return node


# ---------------------------------------------------------------------------
# Lexer

_KEYWORDS = {
    "int", "void", "if", "else", "while", "for", "return",
    "break", "continue", "NULL",
}

# Recognized so the error message can say *why* the input is rejected.
_UNSUPPORTED_KEYWORDS = {
    "struct", "union", "enum", "goto", "switch", "case", "default",
    "typedef", "char", "float", "double", "long", "short", "unsigned",
    "signed", "static", "extern", "const", "volatile", "do", "sizeof",
    "auto", "register", "inline",
}

_PUNCT = [
    "<=", ">=", "==", "!=", "&&", "||", "++", "--",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|",
    "(", ")", "{", "}", "[", "]", ",", ";",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'int', 'punct', 'keyword', 'eof'
    text: str
    loc: SourceLocation
    offset: int


def _lex(source: str, file: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def loc() -> SourceLocation:
        return SourceLocation(file, line, col)

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r\f\v":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("/*", i):
            start = loc()
            i += 2
            col += 2
            while i < n and not source.startswith("*/", i):
                if source[i] == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
                i += 1
            if i >= n:
                raise ParseError(start, "unterminated block comment")
            i += 2
            col += 2
            continue
        if c == "#":
            raise ParseError(loc(), "preprocessor directives are not supported")
        if c.isdigit():
            start, start_col, start_i = loc(), col, i
            while i < n and source[i].isdigit():
                i += 1
                col += 1
            if i < n and (source[i].isalpha() or source[i] == "_"):
                raise ParseError(start, f"malformed number {source[start_i:i + 1]!r}")
            tokens.append(Token("int", source[start_i:i], start, start_i))
            continue
        if c.isalpha() or c == "_":
            start, start_i = loc(), i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
                col += 1
            word = source[start_i:i]
            if word in _UNSUPPORTED_KEYWORDS:
                raise ParseError(start, f"'{word}' is not supported in this C subset")
            kind = "keyword" if word in _KEYWORDS else "ident"
            tokens.append(Token(kind, word, start, start_i))
            continue
        if c in "'\"":
            raise ParseError(loc(), "character and string literals are not supported")
        for p in _PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, loc(), i))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(loc(), f"unexpected character {c!r}")
    tokens.append(Token("eof", "", SourceLocation(file, line, col), n))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_BINARY_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}

_FIXED_ARITY_CALLS = {"malloc": 1, "free": 1}


class _Parser:
    def __init__(self, source: str, file: str):
        self.source = source
        self.tokens = _lex(source, file)
        self.pos = 0
        self.loop_depth = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.text == text and tok.kind in ("punct", "keyword")

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str, what: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(text):
            found = repr(tok.text) if tok.kind != "eof" else "end of input"
            raise ParseError(tok.loc, f"expected '{text}'{' ' + what if what else ''}, found {found}")
        return self.next()

    def expect_ident(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            found = repr(tok.text) if tok.kind != "eof" else "end of input"
            raise ParseError(tok.loc, f"expected {what}, found {found}")
        return self.next()

    # -- toplevel

    def parse_unit(self, file: str) -> TranslationUnit:
        functions: list[FunctionDef] = []
        globals_: list[VarDecl] = []
        seen_funcs: set[str] = set()
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.text not in ("int", "void"):
                raise ParseError(tok.loc, f"expected 'int' or 'void' at top level, found {tok.text!r}")
            start_tok = self.next()
            is_ptr = self.accept("*") is not None
            if start_tok.text == "void" and is_ptr:
                raise ParseError(start_tok.loc, "'void *' is not supported in this C subset")
            name_tok = self.expect_ident("a name")
            if self.at("("):
                if name_tok.text in _FIXED_ARITY_CALLS:
                    raise ParseError(name_tok.loc, f"'{name_tok.text}' is a builtin and cannot be defined")
                if name_tok.text in seen_funcs:
                    raise ParseError(name_tok.loc, f"duplicate function '{name_tok.text}'")
                seen_funcs.add(name_tok.text)
                ret = PTR_INT if is_ptr else (VOID if start_tok.text == "void" else INT)
                functions.append(self._function_rest(start_tok, name_tok, ret))
            else:
                if start_tok.text == "void":
                    raise ParseError(start_tok.loc, "'void' variables are not allowed")
                globals_.append(self._decl_rest(start_tok, is_ptr, name_tok))
                self.expect(";")
        return TranslationUnit(file, functions, globals_)

    def _function_rest(self, start_tok: Token, name_tok: Token, ret: MiniCType) -> FunctionDef:
        self.expect("(")
        params: list[Param] = []
        seen: set[str] = set()
        if self.at("void") and self.peek(1).text == ")":
            self.next()
        elif not self.at(")"):
            while True:
                params.append(self._param())
                if params[-1].name in seen:
                    raise ParseError(params[-1].loc, f"duplicate parameter '{params[-1].name}'")
                seen.add(params[-1].name)
                if not self.accept(","):
                    break
        self.expect(")")
        body = self._block()
        end_tok = self.tokens[self.pos - 1]  # closing brace of the body
        src = self.source[start_tok.offset:end_tok.offset + 1]
        return FunctionDef(name_tok.text, params, ret, body,
                           loc=start_tok.loc, end_loc=end_tok.loc, source_text=src)

    def _param(self) -> Param:
        tok = self.expect("int", "in parameter")
        is_ptr = self.accept("*") is not None
        name_tok = self.expect_ident("a parameter name")
        ty: MiniCType = PTR_INT if is_ptr else INT
        if not is_ptr and self.accept("["):
            size_tok = self.peek()
            if size_tok.kind != "int":
                raise ParseError(size_tok.loc, "expected array size")
            self.next()
            self.expect("]")
            size = int(size_tok.text)
            if size < 1:
                raise ParseError(size_tok.loc, "array size must be >= 1")
            ty = ArrayInt(size)
        return Param(name_tok.text, ty, name_tok.loc)

    def _decl_rest(self, start_tok: Token, is_ptr: bool, name_tok: Token) -> VarDecl:
        ty: MiniCType = PTR_INT if is_ptr else INT
        if not is_ptr and self.accept("["):
            size_tok = self.peek()
            if size_tok.kind != "int":
                raise ParseError(size_tok.loc, "expected array size")
            self.next()
            self.expect("]")
            size = int(size_tok.text)
            if size < 1:
                raise ParseError(size_tok.loc, "array size must be >= 1")
            ty = ArrayInt(size)
        init = None
        if self.accept("="):
            if isinstance(ty, ArrayInt):
                raise ParseError(name_tok.loc, "array initializers are not supported")
            init = self.expr()
        return _at(VarDecl(name_tok.text, ty, init), start_tok.loc)

    # -- statements

    def _block(self) -> Block:
        open_tok = self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise ParseError(self.peek().loc, "expected '}' before end of input")
            stmts.append(self.stmt())
        self.expect("}")
        return _at(Block(stmts), open_tok.loc)

    def stmt(self) -> Stmt:
        tok = self.peek()
        if tok.text == "{":
            return self._block()
        if tok.text == "int":
            decl = self._local_decl()
            self.expect(";")
            return decl
        if tok.text == "void":
            raise ParseError(tok.loc, "'void' variables are not allowed")
        if tok.text == "if":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.stmt()
            orelse = self.stmt() if self.accept("else") else None
            return _at(If(cond, then, orelse), tok.loc)
        if tok.text == "while":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.loop_depth += 1
            body = self.stmt()
            self.loop_depth -= 1
            return _at(While(cond, body), tok.loc)
        if tok.text == "for":
            return self._for()
        if tok.text == "return":
            self.next()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return _at(Return(value), tok.loc)
        if tok.text == "break":
            self.next()
            if self.loop_depth == 0:
                raise ParseError(tok.loc, "'break' outside of a loop")
            self.expect(";")
            return _at(Break(), tok.loc)
        if tok.text == "continue":
            self.next()
            if self.loop_depth == 0:
                raise ParseError(tok.loc, "'continue' outside of a loop")
            self.expect(";")
            return _at(Continue(), tok.loc)
        simple = self._simple_stmt()
        self.expect(";")
        return simple

    def _local_decl(self) -> VarDecl:
        start_tok = self.expect("int")
        is_ptr = self.accept("*") is not None
        name_tok = self.expect_ident("a variable name")
        return self._decl_rest(start_tok, is_ptr, name_tok)

    def _simple_stmt(self) -> Stmt:
        """Assignment, call/expression statement, or ++/-- sugar."""
        tok = self.peek()
        if tok.text in ("++", "--"):
            self.next()
            target = self.expr()
            return self._incdec(target, tok)
        e = self.expr()
        if self.at("="):
            self.next()
            self._check_lvalue(e)
            value = self.expr()
            return _at(Assign(e, value), e.loc)
        nxt = self.peek()
        if nxt.text in ("++", "--"):
            self.next()
            return self._incdec(e, nxt)
        return _at(ExprStmt(e), e.loc)

    def _incdec(self, target: Expr, op_tok: Token) -> Assign:
        # `x++` / `--x` desugar to `x = x + 1` / `x = x - 1`
        self._check_lvalue(target)
        op = "+" if op_tok.text == "++" else "-"
        one = _at(IntLit(1), op_tok.loc)
        rhs = _at(Binary(op, target, one), op_tok.loc)
        return _at(Assign(target, rhs), target.loc)

    def _check_lvalue(self, e: Expr) -> None:
        if isinstance(e, Var) or isinstance(e, Index):
            return
        if isinstance(e, Unary) and e.op == "*":
            return
        raise ParseError(e.loc, "expected a variable, '*ptr' or 'arr[i]' on the left of assignment")

    def _for(self) -> For:
        tok = self.expect("for")
        self.expect("(")
        init: Stmt | None = None
        if not self.at(";"):
            init = self._local_decl() if self.at("int") else self._simple_stmt()
        self.expect(";")
        cond = None if self.at(";") else self.expr()
        self.expect(";")
        step: Stmt | None = None
        if not self.at(")"):
            step = self._simple_stmt()
            if isinstance(step, VarDecl):
                raise ParseError(step.loc, "declarations are not allowed in the for step")
        self.expect(")")
        self.loop_depth += 1
        body = self.stmt()
        self.loop_depth -= 1
        return _at(For(init, cond, step, body), tok.loc)

    # -- expressions (precedence climbing)

    def expr(self) -> Expr:
        return self._binary(1)

    def _binary(self, min_prec: int) -> Expr:
        left = self._unary()
        while True:
            tok = self.peek()
            prec = _BINARY_PREC.get(tok.text) if tok.kind == "punct" else None
            if prec is None or prec < min_prec:
                return left
            self.next()
            right = self._binary(prec + 1)
            left = _at(Binary(tok.text, left, right), tok.loc)

    def _unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("-", "!", "*", "&"):
            self.next()
            operand = self._unary()
            return _at(Unary(tok.text, operand), tok.loc)
        return self._postfix()

    def _postfix(self) -> Expr:
        e = self._primary()
        while self.at("["):
            open_tok = self.next()
            idx = self.expr()
            self.expect("]")
            e = _at(Index(e, idx), open_tok.loc)
        return e

    def _primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return _at(IntLit(int(tok.text)), tok.loc)
        if tok.text == "NULL":
            self.next()
            return _at(IntLit(0), tok.loc)
        if tok.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            self.next()
            if self.at("("):
                self.next()
                args: list[Expr] = []
                if not self.at(")"):
                    while True:
                        args.append(self.expr())
                        if not self.accept(","):
                            break
                self.expect(")")
                want = _FIXED_ARITY_CALLS.get(tok.text)
                if want is not None and len(args) != want:
                    raise ParseError(tok.loc, f"'{tok.text}' takes exactly {want} argument")
                return _at(Call(tok.text, args), tok.loc)
            return _at(Var(tok.text), tok.loc)
        found = repr(tok.text) if tok.kind != "eof" else "end of input"
        raise ParseError(tok.loc, f"expected an expression, found {found}")


def parse(source: str, file: str = "<input>") -> TranslationUnit:
    """Parse MiniC source text. Raises ParseError on any rejection."""
    return _Parser(source, file).parse_unit(file)


def parse_bytes(data: bytes, file: str = "<input>") -> TranslationUnit:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(SourceLocation(file, 1, 1), f"input is not valid UTF-8: {exc.reason}") from None
    return parse(text, file)


# ---------------------------------------------------------------------------
# Well-formedness

BUILTIN_FUNCTIONS = frozenset(_FIXED_ARITY_CALLS)


def check_well_formed(tu: TranslationUnit) -> list[SemanticError]:
    """Scope-check a parsed unit.

    Reports undeclared variable uses, calls to undeclared functions
    (malloc/free excepted) and duplicate declarations within one scope.
    An empty result means the unit is analyzable.
    """
    errors: list[SemanticError] = []
    func_names = {f.name for f in tu.functions}

    global_scope: dict[str, VarDecl] = {}
    for g in tu.globals:
        if g.name in global_scope:
            errors.append(SemanticError(g.loc, f"duplicate declaration of '{g.name}'"))
        else:
            global_scope[g.name] = g
        if g.init is not None:
            _check_expr(g.init, [set(global_scope)], func_names, errors)

    for f in tu.functions:
        scopes: list[set[str]] = [set(global_scope), set()]
        for p in f.params:
            if p.name in scopes[1]:
                errors.append(SemanticError(p.loc, f"duplicate declaration of '{p.name}'"))
            scopes[1].add(p.name)
        _check_block(f.body, scopes, func_names, errors, new_scope=False)
    return errors


def _check_block(block: Block, scopes, funcs, errors, new_scope: bool = True) -> None:
    if new_scope:
        scopes.append(set())
    for s in block.stmts:
        _check_stmt(s, scopes, funcs, errors)
    if new_scope:
        scopes.pop()


def _check_stmt(s: Stmt, scopes, funcs, errors) -> None:
    if isinstance(s, VarDecl):
        if s.init is not None:
            _check_expr(s.init, scopes, funcs, errors)
        if s.name in scopes[-1]:
            errors.append(SemanticError(s.loc, f"duplicate declaration of '{s.name}'"))
        else:
            scopes[-1].add(s.name)
    elif isinstance(s, Assign):
        _check_expr(s.target, scopes, funcs, errors)
        _check_expr(s.value, scopes, funcs, errors)
    elif isinstance(s, If):
        _check_expr(s.cond, scopes, funcs, errors)
        _check_stmt_scoped(s.then, scopes, funcs, errors)
        if s.orelse is not None:
            _check_stmt_scoped(s.orelse, scopes, funcs, errors)
    elif isinstance(s, While):
        _check_expr(s.cond, scopes, funcs, errors)
        _check_stmt_scoped(s.body, scopes, funcs, errors)
    elif isinstance(s, For):
        scopes.append(set())
        if s.init is not None:
            _check_stmt(s.init, scopes, funcs, errors)
        if s.cond is not None:
            _check_expr(s.cond, scopes, funcs, errors)
        if s.step is not None:
            _check_stmt(s.step, scopes, funcs, errors)
        _check_stmt_scoped(s.body, scopes, funcs, errors)
        scopes.pop()
    elif isinstance(s, Return):
        if s.value is not None:
            _check_expr(s.value, scopes, funcs, errors)
    elif isinstance(s, ExprStmt):
        _check_expr(s.expr, scopes, funcs, errors)
    elif isinstance(s, Block):
        _check_block(s, scopes, funcs, errors)
    # Break/Continue: nothing to check


def _check_stmt_scoped(s: Stmt, scopes, funcs, errors) -> None:
    if isinstance(s, Block):
        _check_block(s, scopes, funcs, errors)
    else:
        scopes.append(set())
        _check_stmt(s, scopes, funcs, errors)
        scopes.pop()


def _check_expr(e: Expr, scopes, funcs, errors) -> None:
    if isinstance(e, Var):
        if not any(e.name in sc for sc in scopes):
            errors.append(SemanticError(e.loc, f"undeclared '{e.name}'"))
    elif isinstance(e, Unary):
        _check_expr(e.operand, scopes, funcs, errors)
    elif isinstance(e, Binary):
        _check_expr(e.left, scopes, funcs, errors)
        _check_expr(e.right, scopes, funcs, errors)
    elif isinstance(e, Index):
        _check_expr(e.base, scopes, funcs, errors)
        _check_expr(e.index, scopes, funcs, errors)
    elif isinstance(e, Call):
        if e.name not in funcs and e.name not in BUILTIN_FUNCTIONS:
            errors.append(SemanticError(e.loc, f"call to undeclared function '{e.name}'"))
        for a in e.args:
            _check_expr(a, scopes, funcs, errors)


# ---------------------------------------------------------------------------
# Pretty printer (round-trips through parse up to locations)

def pretty(tu: TranslationUnit) -> str:
    parts: list[str] = []
    for g in tu.globals:
        parts.append(_pp_decl(g) + ";")
    if tu.globals:
        parts.append("")
    for f in tu.functions:
        ret = {INT: "int", PTR_INT: "int *", VOID: "void"}[f.return_type]
        params = ", ".join(_pp_param(p) for p in f.params)
        parts.append(f"{ret} {f.name}({params}) " + _pp_stmt(f.body, 0).lstrip())
        parts.append("")
    return "\n".join(parts).rstrip() + "\n"


def _pp_param(p: Param) -> str:
    if isinstance(p.type, PtrInt):
        return f"int *{p.name}"
    if isinstance(p.type, ArrayInt):
        return f"int {p.name}[{p.type.size}]"
    return f"int {p.name}"


def _pp_decl(d: VarDecl) -> str:
    if isinstance(d.type, ArrayInt):
        return f"int {d.name}[{d.type.size}]"
    head = f"int *{d.name}" if isinstance(d.type, PtrInt) else f"int {d.name}"
    if d.init is not None:
        return f"{head} = {_pp_expr(d.init, 0)}"
    return head


def _pp_stmt(s: Stmt, indent: int) -> str:
    pad = "  " * indent
    if isinstance(s, Block):
        inner = "".join(_pp_stmt(c, indent + 1) for c in s.stmts)
        return f"{pad}{{\n{inner}{pad}}}\n"
    if isinstance(s, VarDecl):
        return f"{pad}{_pp_decl(s)};\n"
    if isinstance(s, Assign):
        return f"{pad}{_pp_expr(s.target, 0)} = {_pp_expr(s.value, 0)};\n"
    if isinstance(s, If):
        out = f"{pad}if ({_pp_expr(s.cond, 0)})\n{_pp_stmt(s.then, indent + 1)}"
        if s.orelse is not None:
            out += f"{pad}else\n{_pp_stmt(s.orelse, indent + 1)}"
        return out
    if isinstance(s, While):
        return f"{pad}while ({_pp_expr(s.cond, 0)})\n{_pp_stmt(s.body, indent + 1)}"
    if isinstance(s, For):
        init = _pp_for_part(s.init)
        cond = _pp_expr(s.cond, 0) if s.cond is not None else ""
        step = _pp_for_part(s.step)
        return f"{pad}for ({init}; {cond}; {step})\n{_pp_stmt(s.body, indent + 1)}"
    if isinstance(s, Return):
        if s.value is None:
            return f"{pad}return;\n"
        return f"{pad}return {_pp_expr(s.value, 0)};\n"
    if isinstance(s, ExprStmt):
        return f"{pad}{_pp_expr(s.expr, 0)};\n"
    if isinstance(s, Break):
        return f"{pad}break;\n"
    if isinstance(s, Continue):
        return f"{pad}continue;\n"
    raise AssertionError(f"unhandled statement {s!r}")


def _pp_for_part(s: Stmt | None) -> str:
    if s is None:
        return ""
    if isinstance(s, VarDecl):
        return _pp_decl(s)
    if isinstance(s, Assign):
        return f"{_pp_expr(s.target, 0)} = {_pp_expr(s.value, 0)}"
    if isinstance(s, ExprStmt):
        return _pp_expr(s.expr, 0)
    raise AssertionError(f"unhandled for-part {s!r}")


_UNARY_PREC = 7


def _pp_expr(e: Expr, parent_prec: int) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        inner = _pp_expr(e.operand, _UNARY_PREC)
        # parenthesize nested unaries: "--x"/"&&x" would re-lex as one token
        if isinstance(e.operand, Unary):
            inner = f"({inner})"
        out = f"{e.op}{inner}"
        return f"({out})" if parent_prec > _UNARY_PREC else out
    if isinstance(e, Binary):
        prec = _BINARY_PREC[e.op]
        left = _pp_expr(e.left, prec)
        right = _pp_expr(e.right, prec + 1)
        out = f"{left} {e.op} {right}"
        return f"({out})" if parent_prec > prec else out
    if isinstance(e, Index):
        return f"{_pp_expr(e.base, _UNARY_PREC + 1)}[{_pp_expr(e.index, 0)}]"
    if isinstance(e, Call):
        args = ", ".join(_pp_expr(a, 0) for a in e.args)
        return f"{e.name}({args})"
    raise AssertionError(f"unhandled expression {e!r}")


def structurally_equal(a, b) -> bool:
    """AST equality ignoring source locations."""
    return _sig(a) == _sig(b)


def _sig(node):
    if isinstance(node, TranslationUnit):
        return ("unit", tuple(_sig(g) for g in node.globals),
                tuple(_sig(f) for f in node.functions))
    if isinstance(node, FunctionDef):
        return ("func", node.name, tuple((p.name, p.type) for p in node.params),
                node.return_type, _sig(node.body))
    if isinstance(node, Block):
        return ("block", tuple(_sig(s) for s in node.stmts))
    if isinstance(node, VarDecl):
        return ("decl", node.name, node.type, _sig(node.init))
    if isinstance(node, Assign):
        return ("assign", _sig(node.target), _sig(node.value))
    if isinstance(node, If):
        return ("if", _sig(node.cond), _sig(node.then), _sig(node.orelse))
    if isinstance(node, While):
        return ("while", _sig(node.cond), _sig(node.body))
    if isinstance(node, For):
        return ("for", _sig(node.init), _sig(node.cond), _sig(node.step), _sig(node.body))
    if isinstance(node, Return):
        return ("return", _sig(node.value))
    if isinstance(node, ExprStmt):
        return ("exprstmt", _sig(node.expr))
    if isinstance(node, Break):
        return ("break",)
    if isinstance(node, Continue):
        return ("continue",)
    if isinstance(node, IntLit):
        return ("int", node.value)
    if isinstance(node, Var):
        return ("var", node.name)
    if isinstance(node, Unary):
        return ("unary", node.op, _sig(node.operand))
    if isinstance(node, Binary):
        return ("binary", node.op, _sig(node.left), _sig(node.right))
    if isinstance(node, Index):
        return ("index", _sig(node.base), _sig(node.index))
    if isinstance(node, Call):
        return ("call", node.name, tuple(_sig(a) for a in node.args))
    if node is None:
        return None
    raise AssertionError(f"unhandled node {node!r}")
