"""Recursive-descent parser producing the surface tree in :mod:`lxlang.frontend.ast`."""

from __future__ import annotations

from lxlang.diagnostics import CompileError, Diagnostic, SourcePos, error
from lxlang.frontend import ast as A
from lxlang.frontend.lexer import Token, tokenize_with_diagnostics

DECL_START = {"typedecl", "concept", "entity", "datatype", "function", "const", "recursive"}
MEMBER_FLAGS = ("abstract", "override", "recursive")
FLOW_SPECIALS = ("none", "some", "ok", "err", "result")
EXPR_START_TEXT = {"(", "[", "{", "!", "-", "..."}


class ParseError(Exception):
    def __init__(self, pos: SourcePos, message: str, expected: tuple[str, ...] = ()):
        self.pos = pos
        self.expected = expected
        if expected:
            message += " (expected " + ", ".join(sorted(set(expected))) + ")"
        super().__init__(message)


def parse_program(tokens: list[Token], file: str = "<input>") -> tuple[A.Program, list[Diagnostic]]:
    """Parse a whole program, recovering at declaration boundaries."""
    p = Parser(tokens, file)
    prog = p.program()
    return prog, p.diags


def parse_source(source: str, file: str = "<input>") -> A.Program:
    """Tokenize and parse; raise :class:`CompileError` on any lexical or syntax error."""
    toks, diags = tokenize_with_diagnostics(source, file)
    prog, pdiags = parse_program(toks, file)
    diags = diags + pdiags
    if diags:
        raise CompileError(diags)
    return prog


def parse_expression(source: str, file: str = "<input>") -> A.Expr:
    toks, diags = tokenize_with_diagnostics(source, file)
    if diags:
        raise CompileError(diags)
    p = Parser(toks, file)
    try:
        e = p.expr()
        p.expect_eof()
    except ParseError as exc:
        raise CompileError([error(exc.pos, str(exc))]) from None
    return e


def parse_statements(source: str, file: str = "<input>") -> list[A.Stmt]:
    toks, diags = tokenize_with_diagnostics(source, file)
    if diags:
        raise CompileError(diags)
    p = Parser(toks, file)
    out: list[A.Stmt] = []
    try:
        while not p.at_eof():
            out.append(p.stmt())
    except ParseError as exc:
        raise CompileError([error(exc.pos, str(exc))]) from None
    return out


class Parser:
    def __init__(self, tokens: list[Token], file: str = "<input>"):
        end = tokens[-1].pos if tokens else SourcePos(file, 1, 1)
        self.toks = list(tokens) + [Token("eof", "", end)]
        self.k = 0
        self.file = file
        self.diags: list[Diagnostic] = []

    # ------------------------------------------------------------ token helpers

    def peek(self, n: int = 0) -> Token:
        return self.toks[min(self.k + n, len(self.toks) - 1)]

    def at(self, text: str, n: int = 0) -> bool:
        t = self.peek(n)
        return t.text == text and t.kind in ("punct", "kw")

    def at_ident(self, n: int = 0) -> bool:
        return self.peek(n).kind == "ident"

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def next(self) -> Token:
        t = self.peek()
        self.k += 1
        return t

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        if self.at(text):
            return self.next()
        t = self.peek()
        raise ParseError(t.pos, f"unexpected {t.text or 'end of input'!r}", (repr(text),))

    def ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(t.pos, f"unexpected {t.text or 'end of input'!r}", ("identifier",))
        return self.next()

    def expect_eof(self) -> None:
        if not self.at_eof():
            t = self.peek()
            raise ParseError(t.pos, f"unexpected {t.text!r}", ("end of input",))

    # ------------------------------------------------------------ program

    def program(self) -> A.Program:
        decls: list[A.Decl] = []
        while not self.at_eof():
            start = self.k
            try:
                decls.append(self.decl())
            except ParseError as exc:
                self.diags.append(error(exc.pos, str(exc)))
                self.recover(start)
        return A.Program(decls, file=self.file)

    def recover(self, start: int) -> None:
        err_at = max(self.k, start + 1)
        i, depth = start, 0
        while self.toks[i].kind != "eof":
            t = self.toks[i]
            if t.text == "{" and t.kind == "punct":
                depth += 1
            elif t.text == "}" and t.kind == "punct":
                depth -= 1
                if depth <= 0 and i >= err_at - 1:
                    i += 1
                    if not (self.toks[i].text in ("of", "&", "|")):
                        break
                    continue
            elif t.text == ";" and depth <= 0 and i >= err_at - 1:
                i += 1
                break
            i += 1
        self.k = i
        while not self.at_eof() and not (self.peek().kind == "kw" and self.peek().text in DECL_START):
            self.k += 1

    def decl(self) -> A.Decl:
        t = self.peek()
        if t.kind != "kw" or t.text not in DECL_START:
            raise ParseError(t.pos, f"unexpected {t.text!r} at top level", tuple(sorted(DECL_START)))
        if t.text == "typedecl":
            return self.typedecl()
        if t.text in ("concept", "entity"):
            self.next()
            name = self.ident().text
            provides = self.provides()
            members = self.member_block()
            self.accept(";")
            cls = A.ConceptD if t.text == "concept" else A.EntityD
            return cls(name, provides, members, pos=t.pos)
        if t.text == "datatype":
            return self.datatype()
        if t.text == "const":
            self.next()
            name = self.ident().text
            ty = self.type_() if self.accept(":") else None
            self.expect("=")
            e = self.expr()
            self.expect(";")
            return A.ConstD(name, ty, e, pos=t.pos)
        flags = set()
        while self.at("recursive"):
            flags.add(self.next().text)
        ft = self.expect("function")
        name = self.ident().text
        sig = self.signature()
        body = self.block()
        return A.FunctionD(name, sig, body, frozenset(flags), pos=t.pos if flags else ft.pos)

    def provides(self) -> list[str]:
        out: list[str] = []
        if self.accept("provides"):
            out.append(self.ident().text)
            while self.accept(","):
                out.append(self.ident().text)
        return out

    def typedecl(self) -> A.TypedeclD:
        t = self.expect("typedecl")
        name = self.ident().text
        self.expect("=")
        if self.peek().kind == "regex":
            rx = self.next().value
            self.accept(";")
            return A.TypedeclD(name, rx, None, [], pos=t.pos)
        base = self.type_()
        members: list[A.Member] = []
        if self.accept("&"):
            members = self.member_block()
        self.accept(";")
        return A.TypedeclD(name, None, base, members, pos=t.pos)

    def datatype(self) -> A.DatatypeD:
        t = self.expect("datatype")
        name = self.ident().text
        provides = self.provides()
        using: list[A.Member] = []
        if self.accept("using"):
            using = self.member_block()
        self.expect("of")
        self.accept("|")
        cases = [self.case()]
        while self.accept("|"):
            cases.append(self.case())
        extra: list[A.Member] = []
        if self.accept("&"):
            extra = self.member_block()
        self.accept(";")
        return A.DatatypeD(name, provides, using, cases, extra, pos=t.pos)

    def case(self) -> A.CaseD:
        t = self.ident()
        return A.CaseD(t.text, self.member_block(), pos=t.pos)

    # ------------------------------------------------------------ members

    def member_block(self) -> list[A.Member]:
        self.expect("{")
        out: list[A.Member] = []
        while not self.accept("}"):
            if self.at_eof():
                raise ParseError(self.peek().pos, "unterminated member block", ("'}'",))
            out.append(self.member())
        return out

    def level(self) -> str | None:
        t = self.peek()
        if t.kind == "ident" and t.text in A.LEVELS:
            nxt = self.peek(1)
            if nxt.kind in ("ident", "kw", "num", "str", "tstr", "tnum", "binder") or (
                nxt.kind == "punct" and nxt.text in EXPR_START_TEXT
            ):
                self.next()
                return t.text
        return None

    def member(self) -> A.Member:
        t = self.peek()
        if self.accept("field"):
            name = self.ident().text
            self.expect(":")
            ty = self.type_()
            self.expect(";")
            return A.FieldM(name, ty, True, pos=t.pos)
        if self.accept("invariant"):
            lvl = self.level()
            e = self.expr()
            self.expect(";")
            return A.InvariantM(lvl, e, pos=t.pos)
        if self.accept("validate"):
            lvl = self.level()
            e = self.expr()
            self.expect(";")
            return A.ValidateM(lvl, e, pos=t.pos)
        if self.accept("const"):
            name = self.ident().text
            ty = self.type_() if self.accept(":") else None
            self.expect("=")
            e = self.expr()
            self.expect(";")
            return A.ConstM(name, ty, e, pos=t.pos)
        if t.kind == "ident" and self.at(":", 1):
            name = self.next().text
            self.next()
            ty = self.type_()
            if not self.accept(";"):
                self.accept(",")
            return A.FieldM(name, ty, False, pos=t.pos)
        flags: set[str] = set()
        while self.peek().text in MEMBER_FLAGS and self.peek().kind in ("kw",):
            flags.add(self.next().text)
        if self.accept("method"):
            if self.accept("ref"):
                flags.add("ref")
            name = self.ident().text
            sig = self.signature()
            if "abstract" in flags:
                self.expect(";")
                return A.MethodM(name, sig, None, frozenset(flags), pos=t.pos)
            return A.MethodM(name, sig, self.block(), frozenset(flags), pos=t.pos)
        if self.accept("function"):
            name = self.ident().text
            sig = self.signature()
            return A.FunctionM(name, sig, self.block(), frozenset(flags), pos=t.pos)
        raise ParseError(
            t.pos,
            f"unexpected {t.text or 'end of input'!r} in member list",
            ("field", "method", "function", "const", "invariant", "validate", "'}'"),
        )

    def signature(self) -> A.Signature:
        self.expect("(")
        params: list[A.Param] = []
        if not self.at(")"):
            while True:
                pt = self.ident()
                self.expect(":")
                params.append(A.Param(pt.text, self.type_(), pos=pt.pos))
                if not self.accept(","):
                    break
        self.expect(")")
        result = self.type_() if self.accept(":") else None
        sig = A.Signature(params, result)
        while True:
            if self.accept("requires"):
                lvl = self.level()
                sig.requires.append((lvl, self.expr()))
                self.expect(";")
            elif self.accept("ensures"):
                lvl = self.level()
                sig.ensures.append((lvl, self.expr()))
                self.expect(";")
            elif self.accept("examples"):
                self.expect("[")
                while not self.accept("]"):
                    et = self.expect("[")
                    args: list[A.Expr] = []
                    if not self.at("]"):
                        args.append(self.expr())
                        while self.accept(","):
                            args.append(self.expr())
                    self.expect("]")
                    self.expect("=>")
                    sig.examples.append(A.Example(args, self.expr(), pos=et.pos))
                    if not self.accept(","):
                        self.expect("]")
                        break
                self.accept(";")
            else:
                return sig

    # ------------------------------------------------------------ types

    def type_(self) -> A.TypeExpr:
        t = self.peek()
        items = [self.postfix_type()]
        while self.accept("|"):
            items.append(self.postfix_type())
        return items[0] if len(items) == 1 else A.TUnion(items, pos=t.pos)

    def postfix_type(self) -> A.TypeExpr:
        t = self.peek()
        ty = self.primary_type()
        while self.at("?") and not self.flow_follows(1):
            self.next()
            ty = A.TUnion([ty, A.TName("None", pos=t.pos)], pos=t.pos)
        return ty

    def flow_follows(self, n: int) -> bool:
        t = self.peek(n)
        return t.text in ("!", "<", "[") or (t.kind in ("ident", "kw") and t.text in FLOW_SPECIALS)

    def primary_type(self) -> A.TypeExpr:
        t = self.peek()
        if self.accept("["):
            items: list[A.TypeExpr] = []
            if not self.at("]"):
                items.append(self.type_())
                while self.accept(","):
                    items.append(self.type_())
            self.expect("]")
            return A.TTuple(items, pos=t.pos)
        if self.accept("{"):
            fields: list[tuple[str, A.TypeExpr]] = []
            if not self.at("}"):
                while True:
                    n = self.ident().text
                    self.expect(":")
                    fields.append((n, self.type_()))
                    if not self.accept(","):
                        break
            self.expect("}")
            return A.TRecord(fields, pos=t.pos)
        if self.accept("("):
            ty = self.type_()
            self.expect(")")
            return ty
        if self.at("none"):
            self.next()
            return A.TName("None", pos=t.pos)
        name = self.ident().text
        args: list[A.TypeExpr] = []
        if self.accept("<"):
            args.append(self.type_())
            while self.accept(","):
                args.append(self.type_())
            self.expect(">")
        return A.TName(name, args, pos=t.pos)

    def try_targs(self) -> list[A.TypeExpr] | None:
        """Speculatively parse ``<T, ...>``; restore and return None on failure."""
        if not self.at("<"):
            return None
        save, ndiag = self.k, len(self.diags)
        try:
            self.next()
            args = [self.type_()]
            while self.accept(","):
                args.append(self.type_())
            self.expect(">")
        except ParseError:
            self.k = save
            del self.diags[ndiag:]
            return None
        if self.peek().text not in ("(", "{", "::", "[") or self.peek().kind != "punct":
            self.k = save
            return None
        return args

    # ------------------------------------------------------------ statements

    def block(self) -> list[A.Stmt]:
        self.expect("{")
        out: list[A.Stmt] = []
        while not self.accept("}"):
            if self.at_eof():
                raise ParseError(self.peek().pos, "unterminated block", ("'}'",))
            out.append(self.stmt())
        return out

    def stmt(self) -> A.Stmt:
        t = self.peek()
        if self.accept("let"):
            name = self.ident().text
            ty = self.type_() if self.accept(":") else None
            self.expect("=")
            e = self.ref_or_expr()
            self.expect(";")
            return A.LetS(name, ty, e, pos=t.pos)
        if self.accept("var"):
            name = self.ident().text
            ty = self.type_() if self.accept(":") else None
            e = self.ref_or_expr() if self.accept("=") else None
            self.expect(";")
            return A.VarS(name, ty, e, pos=t.pos)
        if self.at("if"):
            return self.if_stmt()
        if self.accept("match"):
            self.expect("(")
            subj = self.expr()
            self.expect(")")
            self.expect("{")
            self.accept("|")
            arms = [self.arm()]
            while self.accept("|"):
                arms.append(self.arm())
            self.expect("}")
            return A.MatchS(subj, arms, pos=t.pos)
        if self.accept("return"):
            if self.accept(";"):
                return A.ReturnS(None, pos=t.pos)
            e = self.expr()
            self.expect(";")
            return A.ReturnS(e, pos=t.pos)
        if self.accept("assert"):
            lvl = self.level()
            e = self.expr()
            self.expect(";")
            return A.AssertS(lvl, e, pos=t.pos)
        if self.accept("defer"):
            self.expect(";")
            return A.DeferS(pos=t.pos)
        if self.at("...") and self.peek(1).text in (";", "}", ""):
            self.next()
            self.accept(";")
            return A.ElidedS(pos=t.pos)
        if self.at("{"):
            return A.BlockS(self.block(), pos=t.pos)
        if t.kind == "ident" and self.at("=", 1):
            self.next()
            self.next()
            e = self.ref_or_expr()
            self.expect(";")
            return A.AssignS(t.text, e, pos=t.pos)
        e = self.ref_or_expr()
        self.expect(";")
        if isinstance(e, A.FlowCast):
            return A.NarrowS(e.target, e.op, "@", pos=t.pos)
        if isinstance(e, A.FlowReturn) and e.kind == "@@":
            return A.NarrowS(e.target, e.op, "@@", pos=t.pos)
        return A.ExprS(e, pos=t.pos)

    def ref_or_expr(self) -> A.Expr:
        t = self.peek()
        if self.accept("ref"):
            e = self.expr()
            if not isinstance(e, A.MethodCall):
                raise ParseError(t.pos, "`ref` must prefix a method call")
            e.ref = True
            return e
        return self.expr()

    def if_stmt(self) -> A.IfS:
        t = self.expect("if")
        branches = [self.if_head_and_block()]
        else_: list[A.Stmt] | None = None
        while True:
            if self.accept("elif"):
                branches.append(self.if_head_and_block())
            elif self.at("else") and self.at("if", 1):
                self.next()
                self.next()
                branches.append(self.if_head_and_block())
            elif self.accept("else"):
                else_ = self.block()
                break
            else:
                break
        return A.IfS(branches, else_, pos=t.pos)

    def if_head_and_block(self):
        flow = None
        if not self.at("("):
            flow = self.flow_op()
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        return (flow, cond, self.block())

    def arm(self) -> tuple[A.Pattern, list[A.Stmt]]:
        pat = self.pattern()
        self.expect("=>")
        if self.at("{"):
            body = self.block()
        else:
            body = [self.stmt()]
        return pat, body

    def pattern(self) -> A.Pattern:
        t = self.peek()
        if t.kind == "ident" and t.text == "_":
            self.next()
            return A.Pattern("wild", pos=t.pos)
        if t.kind in ("num", "str", "tstr", "tnum") or t.text in ("none", "true", "false", "-"):
            return A.Pattern("lit", lit=self.literal(), pos=t.pos)
        return A.Pattern("type", type=self.postfix_type(), pos=t.pos)

    # ------------------------------------------------------------ expressions

    def expr(self) -> A.Expr:
        return self.implies()

    def implies(self) -> A.Expr:
        left = self.binary_level(0)
        if self.at("==>"):
            t = self.next()
            right = self.implies()
            return A.Binary("==>", left, right, pos=t.pos)
        return left

    LEVELS_BIN = [
        ("||",),
        ("&&",),
        ("==", "!=", "===", "!=="),
        ("<", "<=", ">", ">="),
        ("+", "-"),
        ("*", "/", "%"),
    ]

    def binary_level(self, lvl: int) -> A.Expr:
        if lvl == len(self.LEVELS_BIN):
            return self.unary()
        ops = self.LEVELS_BIN[lvl]
        left = self.binary_level(lvl + 1)
        while self.peek().kind == "punct" and self.peek().text in ops:
            t = self.next()
            right = self.binary_level(lvl + 1)
            left = A.Binary(t.text, left, right, pos=t.pos)
        return left

    def unary(self) -> A.Expr:
        t = self.peek()
        if t.kind == "punct" and t.text in ("-", "!"):
            self.next()
            return A.Unary(t.text, self.unary(), pos=t.pos)
        return self.postfix()

    def postfix(self) -> A.Expr:
        e = self.primary()
        while True:
            t = self.peek()
            if self.at("."):
                self.next()
                if self.accept("{"):
                    e = A.BulkE(e, self.updates(), pos=t.pos)
                    continue
                if self.peek().kind == "num":
                    n = self.next()
                    e = A.IndexE(e, int(n.text), pos=t.pos)
                    continue
                name = self.ident().text
                targs = self.try_targs()
                rec = self.recursive_tag()
                if self.at("("):
                    args = self.call_args()
                    e = A.MethodCall(e, name, targs or [], args, rec, pos=t.pos)
                elif targs is not None or rec:
                    raise ParseError(self.peek().pos, "expected method arguments", ("'('",))
                else:
                    e = A.Access(e, name, pos=t.pos)
            elif self.at("?"):
                self.next()
                e = A.FlowTest(e, self.flow_op(), pos=t.pos)
            elif self.at("@"):
                self.next()
                e = A.FlowCast(e, self.flow_op(), pos=t.pos)
            elif self.at("??") or self.at("@@"):
                self.next()
                e = A.FlowReturn(e, self.flow_op(), t.text, pos=t.pos)
            else:
                return e

    def recursive_tag(self) -> bool:
        if self.at("[") and self.at("recursive", 1) and self.at("]", 2):
            self.k += 3
            return True
        return False

    def updates(self) -> list[tuple[str, A.Expr]]:
        ups: list[tuple[str, A.Expr]] = []
        if not self.accept("}"):
            while True:
                n = self.ident().text
                self.expect("=")
                ups.append((n, self.expr()))
                if not self.accept(","):
                    break
            self.expect("}")
        return ups

    def call_args(self) -> list[A.Expr]:
        self.expect("(")
        args: list[A.Expr] = []
        if not self.at(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        return args

    def flow_op(self) -> A.FlowOp:
        t = self.peek()
        neg = bool(self.accept("!"))
        nt = self.peek()
        if nt.text in FLOW_SPECIALS and nt.kind in ("ident", "kw"):
            self.next()
            return A.FlowOp(nt.text, neg, pos=t.pos)
        if self.accept("<"):
            ty = self.type_()
            self.expect(">")
            return A.FlowOp("type", neg, type=ty, pos=t.pos)
        if self.accept("["):
            lit = self.literal()
            self.expect("]")
            return A.FlowOp("eq", neg, lit=lit, pos=t.pos)
        raise ParseError(nt.pos, f"unexpected {nt.text!r} in flow operator", ("none", "some", "ok", "err", "result", "'<'", "'['"))

    def literal(self) -> A.Expr:
        t = self.peek()
        if self.accept("-"):
            inner = self.literal()
            return A.Unary("-", inner, pos=t.pos)
        if t.kind in ("num", "str", "tstr", "tnum") or t.text in ("none", "true", "false"):
            return self.primary()
        raise ParseError(t.pos, f"expected literal, found {t.text!r}", ("literal",))

    def primary(self) -> A.Expr:
        t = self.peek()
        pos = t.pos
        if t.kind == "num":
            self.next()
            kind, digits = t.value
            return make_num_lit(kind, digits, pos)
        if t.kind == "str":
            self.next()
            return A.Lit("String", t.value, pos=pos)
        if t.kind == "tstr":
            self.next()
            return A.TypedLit(t.value[0], t.value[1], True, pos=pos)
        if t.kind == "tnum":
            self.next()
            return A.TypedLit(t.value[0], t.value[1], False, pos=pos)
        if t.kind == "binder":
            self.next()
            return A.Binder(t.value, pos=pos)
        if t.kind == "kw":
            if t.text == "none":
                self.next()
                return A.Lit("none", None, pos=pos)
            if t.text in ("true", "false"):
                self.next()
                return A.Lit("bool", t.text == "true", pos=pos)
            if t.text == "this":
                self.next()
                return A.This(pos=pos)
            if t.text == "if":
                self.next()
                c = self.expr()
                self.expect("then")
                a = self.expr()
                self.expect("else")
                b = self.expr()
                return A.IfE(c, a, b, pos=pos)
            if t.text in ("pred", "fn"):
                return self.lambda_()
        if t.kind == "punct":
            if t.text == "...":
                self.next()
                return A.Elided(pos=pos)
            if t.text == "(":
                self.next()
                e = self.expr()
                self.expect(")")
                return e
            if t.text == "[":
                self.next()
                items: list[A.Expr] = []
                if not self.at("]"):
                    items.append(self.expr())
                    while self.accept(","):
                        items.append(self.expr())
                self.expect("]")
                return A.TupleE(items, pos=pos)
            if t.text == "{":
                self.next()
                fields: list[tuple[str, A.Expr]] = []
                if not self.at("}"):
                    while True:
                        n = self.ident().text
                        self.expect("=")
                        fields.append((n, self.expr()))
                        if not self.accept(","):
                            break
                self.expect("}")
                return A.RecordE(fields, pos=pos)
        if t.kind == "ident":
            return self.name_expr()
        raise ParseError(pos, f"unexpected {t.text or 'end of input'!r} in expression", ("expression",))

    def lambda_(self) -> A.Lambda:
        t = self.next()
        self.expect("(")
        params: list[tuple[str, A.TypeExpr | None]] = []
        if not self.at(")"):
            while True:
                n = self.ident().text
                ty = self.type_() if self.accept(":") else None
                params.append((n, ty))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect("=>")
        return A.Lambda(t.text, params, self.expr(), pos=t.pos)

    def name_expr(self) -> A.Expr:
        t = self.next()
        pos = t.pos
        name = t.text
        targs = self.try_targs()
        if self.at("::"):
            self.next()
            owner = A.TName(name, targs or [], pos=pos)
            member = self.ident().text
            mtargs = self.try_targs() or []
            rec = self.recursive_tag()
            args = self.call_args() if self.at("(") else None
            return A.StaticCall(owner, member, mtargs, args, rec, pos=pos)
        if self.at("{") and name[0].isupper():
            ty = A.TName(name, targs or [], pos=pos)
            return self.construct(ty, pos)
        rec = self.recursive_tag()
        if self.at("("):
            return A.CallE(name, targs or [], self.call_args(), rec, pos=pos)
        if targs is not None or rec:
            raise ParseError(self.peek().pos, "expected call arguments", ("'('",))
        return A.Name(name, pos=pos)

    def construct(self, ty: A.TName, pos: SourcePos) -> A.Expr:
        self.expect("{")
        if self.accept("}"):
            if ty.name == "Map":
                return A.MapE(ty, [], pos=pos)
            return A.ConstructE(ty, [], pos=pos)
        if ty.name == "Map":
            entries: list[tuple[A.Expr, A.Expr]] = []
            while True:
                k = self.expr()
                self.expect("=>")
                entries.append((k, self.expr()))
                if not self.accept(","):
                    break
            self.expect("}")
            return A.MapE(ty, entries, pos=pos)
        args: list[tuple[str | None, A.Expr]] = []
        while True:
            if self.at_ident() and self.at("=", 1):
                n = self.next().text
                self.next()
                args.append((n, self.expr()))
            else:
                args.append((None, self.expr()))
            if not self.accept(","):
                break
        self.expect("}")
        return A.ConstructE(ty, args, pos=pos)


def make_num_lit(kind: str, digits: str, pos: SourcePos) -> A.Lit:
    if kind in ("Int", "Nat", "BigInt", "BigNat"):
        return A.Lit(kind, int(digits), pos=pos)
    return A.Lit(kind, digits, pos=pos)
