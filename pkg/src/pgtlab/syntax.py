"""Concrete syntax: tokenizer, term/type parsers and elaboration of parsed
terms into typed core terms.

Terms inside theory files are quoted; the same parser also reads the quoted
argument of ``subgoal_tac`` lines during script replay.  Elaboration runs
plain first-order unification: constant schemes are instantiated with fresh
unification variables, free variables get one shared variable per name, and
whatever remains unconstrained afterwards is either defaulted to the test
element type (goals) or canonically renamed to type variables (definitions
and lemma statements, which stay polymorphic).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import terms
from .terms import (
    ELEM,
    PROP,
    Abs,
    App,
    Bound,
    Const,
    Free,
    Term,
    TyCon,
    TyFun,
    TyVar,
    Type,
    TypeCheckError,
    apply_ty_subst,
)


class TheorySyntaxError(Exception):
    """First syntax error in the input, with position and expectation set."""

    def __init__(self, line: int, column: int, expected, found: str = ""):
        self.line = line
        self.column = column
        self.expected = expected if isinstance(expected, (set, frozenset)) else {expected}
        self.found = found
        what = ", ".join(sorted(self.expected))
        suffix = f", found {found!r}" if found else ""
        super().__init__(f"{line}:{column}: expected {what}{suffix}")


# ---------------------------------------------------------------------------
# Tokenizer

@dataclass(frozen=True)
class Token:
    kind: str  # IDENT TYVAR NUMBER QUOTED SYM EOF
    text: str
    line: int
    col: int


_SYMBOLS = ["==>", "::", "!!", "=>", "(", ")", "[", "]", ",", ".", "|", ":", "=", "#", "@"]
_UNICODE = {"⇒": "=>", "⟹": "==>", "⋀": "!!"}
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TYVAR_RE = re.compile(r"'[a-z][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"[0-9]+")


def tokenize(text: str, line: int = 1, col: int = 1) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)

    def advance(s: str) -> None:
        nonlocal line, col
        for ch in s:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(ch)
            i += 1
            continue
        if text.startswith("(*", i):
            depth = 1
            j = i + 2
            while j < n and depth:
                if text.startswith("(*", j):
                    depth += 1
                    j += 2
                elif text.startswith("*)", j):
                    depth -= 1
                    j += 2
                else:
                    j += 1
            if depth:
                raise TheorySyntaxError(line, col, "*)")
            advance(text[i:j])
            i = j
            continue
        if ch == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise TheorySyntaxError(line, col, '"')
            tokens.append(Token("QUOTED", text[i + 1 : j], line, col))
            advance(text[i : j + 1])
            i = j + 1
            continue
        if ch in _UNICODE:
            tokens.append(Token("SYM", _UNICODE[ch], line, col))
            advance(ch)
            i += 1
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("SYM", sym, line, col))
                advance(sym)
                i += len(sym)
                break
        else:
            m = _TYVAR_RE.match(text, i)
            if m:
                tokens.append(Token("TYVAR", m.group()[1:], line, col))
                advance(m.group())
                i = m.end()
                continue
            m = _IDENT_RE.match(text, i)
            if m:
                tokens.append(Token("IDENT", m.group(), line, col))
                advance(m.group())
                i = m.end()
                continue
            m = _NUMBER_RE.match(text, i)
            if m:
                tokens.append(Token("NUMBER", m.group(), line, col))
                advance(m.group())
                i = m.end()
                continue
            raise TheorySyntaxError(line, col, "token", ch)
    tokens.append(Token("EOF", "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at_sym(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "SYM" and tok.text in texts

    def at_ident(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and (not texts or tok.text in texts)

    def expect_sym(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "SYM" or tok.text != text:
            raise TheorySyntaxError(tok.line, tok.col, text, tok.text)
        return self.next()

    def expect_ident(self, *texts: str) -> Token:
        tok = self.peek()
        if tok.kind != "IDENT" or (texts and tok.text not in texts):
            raise TheorySyntaxError(tok.line, tok.col, set(texts) or {"identifier"}, tok.text)
        return self.next()

    def expect_eof(self) -> None:
        tok = self.peek()
        if tok.kind != "EOF":
            raise TheorySyntaxError(tok.line, tok.col, "end of input", tok.text)


# ---------------------------------------------------------------------------
# Surface terms

@dataclass(frozen=True)
class SName:
    name: str
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        return isinstance(other, SName) and other.name == self.name

    def __hash__(self):
        return hash(("SName", self.name))


@dataclass(frozen=True)
class SApp:
    fun: "SurfTerm"
    arg: "SurfTerm"


@dataclass(frozen=True)
class SBin:
    op: str  # one of = ==> # @
    lhs: "SurfTerm"
    rhs: "SurfTerm"


@dataclass(frozen=True)
class SAll:
    binders: tuple[str, ...]
    body: "SurfTerm"


SurfTerm = SName | SApp | SBin | SAll

_NIL = SName("[]")


def parse_surface_term(ts: TokenStream) -> SurfTerm:
    return _parse_all(ts)


def _parse_all(ts: TokenStream) -> SurfTerm:
    if ts.at_sym("!!"):
        ts.next()
        binders = [ts.expect_ident().text]
        while ts.peek().kind == "IDENT":
            binders.append(ts.next().text)
        ts.expect_sym(".")
        return SAll(tuple(binders), _parse_all(ts))
    return _parse_imp(ts)


def _parse_imp(ts: TokenStream) -> SurfTerm:
    lhs = _parse_eq(ts)
    if ts.at_sym("==>"):
        ts.next()
        return SBin("==>", lhs, _parse_imp(ts))
    return lhs


def _parse_eq(ts: TokenStream) -> SurfTerm:
    lhs = _parse_cons(ts)
    if ts.at_sym("="):
        ts.next()
        return SBin("=", lhs, _parse_cons(ts))
    return lhs


def _parse_cons(ts: TokenStream) -> SurfTerm:
    lhs = _parse_app(ts)
    if ts.at_sym("#", "@"):
        op = ts.next().text
        return SBin(op, lhs, _parse_cons(ts))
    return lhs


def _starts_atom(tok: Token) -> bool:
    return tok.kind in ("IDENT", "NUMBER") or (tok.kind == "SYM" and tok.text in ("(", "["))


def _parse_app(ts: TokenStream) -> SurfTerm:
    t = _parse_atom(ts)
    while _starts_atom(ts.peek()):
        t = SApp(t, _parse_atom(ts))
    return t


def _parse_atom(ts: TokenStream) -> SurfTerm:
    tok = ts.peek()
    if tok.kind in ("IDENT", "NUMBER"):
        ts.next()
        return SName(tok.text, tok.line, tok.col)
    if ts.at_sym("["):
        ts.next()
        if ts.at_sym("]"):
            ts.next()
            return _NIL
        items = [_parse_all(ts)]
        while ts.at_sym(","):
            ts.next()
            items.append(_parse_all(ts))
        ts.expect_sym("]")
        t: SurfTerm = _NIL
        for item in reversed(items):
            t = SBin("#", item, t)
        return t
    if ts.at_sym("("):
        nxt = ts.peek(1)
        if nxt.kind == "SYM" and nxt.text in ("#", "@", "=", "==>", "!!") and \
                ts.peek(2).kind == "SYM" and ts.peek(2).text == ")":
            ts.next()
            op = ts.next()
            ts.next()
            return SName(op.text, op.line, op.col)
        ts.next()
        t = _parse_all(ts)
        ts.expect_sym(")")
        return t
    raise TheorySyntaxError(tok.line, tok.col, "term", tok.text or "end of input")


def render_surface(t: SurfTerm) -> str:
    return _render_surf(t, 0)


_SURF_LEVELS = {"==>": (1, 2, 1), "=": (2, 3, 3), "#": (3, 4, 3), "@": (3, 4, 3)}


def _render_surf(t: SurfTerm, min_level: int) -> str:
    match t:
        case SAll(binders, body):
            s = f"!!{' '.join(binders)}. {_render_surf(body, 0)}"
            level = 0
        case SBin(op, lhs, rhs):
            level, lmin, rmin = _SURF_LEVELS[op]
            s = f"{_render_surf(lhs, lmin)} {op} {_render_surf(rhs, rmin)}"
        case SApp(fun, arg):
            s = f"{_render_surf(fun, 4)} {_render_surf(arg, 5)}"
            level = 4
        case SName(name):
            s = f"({name})" if name in ("#", "@", "=", "==>", "!!") else name
            level = 5
        case _:
            raise AssertionError(t)
    return f"({s})" if level < min_level else s


# ---------------------------------------------------------------------------
# Type parser

def parse_type_tokens(ts: TokenStream, ctx) -> Type:
    ty = _parse_ty_postfix(ts, ctx)
    if ts.at_sym("=>"):
        ts.next()
        return TyFun(ty, parse_type_tokens(ts, ctx))
    return ty


def _parse_ty_postfix(ts: TokenStream, ctx) -> Type:
    tok = ts.peek()
    args: list[Type]
    if ts.at_sym("("):
        ts.next()
        args = [parse_type_tokens(ts, ctx)]
        while ts.at_sym(","):
            ts.next()
            args.append(parse_type_tokens(ts, ctx))
        ts.expect_sym(")")
        if len(args) > 1 or ts.peek().kind == "IDENT":
            name_tok = ts.expect_ident()
            ty = _mk_tycon(name_tok, tuple(args), ctx)
        else:
            ty = args[0]
    elif tok.kind == "TYVAR":
        ts.next()
        ty = TyVar(tok.text)
    elif tok.kind == "IDENT":
        ts.next()
        ty = _mk_tycon(tok, (), ctx)
    else:
        raise TheorySyntaxError(tok.line, tok.col, "type", tok.text)
    while ts.peek().kind == "IDENT":
        name_tok = ts.next()
        ty = _mk_tycon(name_tok, (ty,), ctx)
    return ty


def _mk_tycon(tok: Token, args: tuple[Type, ...], ctx) -> Type:
    name = tok.text
    if name == PROP.name and not args:
        return PROP
    if name == ELEM.name and not args:
        return ELEM
    dt = ctx.datatypes.get(name) if ctx is not None else None
    if dt is None:
        raise TheorySyntaxError(tok.line, tok.col, "declared type constructor", name)
    if len(dt.params) != len(args):
        raise TheorySyntaxError(
            tok.line, tok.col, f"{len(dt.params)} type argument(s) for {name}", str(len(args))
        )
    return TyCon(name, args)


def parse_type(text: str, ctx, line: int = 1, col: int = 1) -> Type:
    ts = TokenStream(tokenize(text, line, col))
    ty = parse_type_tokens(ts, ctx)
    ts.expect_eof()
    return ty


# ---------------------------------------------------------------------------
# Elaboration

class _Unifier:
    def __init__(self):
        self.subst: dict[str, Type] = {}
        self.counter = 0

    def fresh(self) -> TyVar:
        self.counter += 1
        return TyVar(f"?{self.counter}")

    def shallow(self, ty: Type) -> Type:
        while isinstance(ty, TyVar) and ty.name.startswith("?") and ty.name in self.subst:
            ty = self.subst[ty.name]
        return ty

    def resolve(self, ty: Type) -> Type:
        ty = self.shallow(ty)
        match ty:
            case TyCon(name, args):
                return TyCon(name, tuple(self.resolve(a) for a in args))
            case TyFun(dom, cod):
                return TyFun(self.resolve(dom), self.resolve(cod))
        return ty

    def _occurs(self, name: str, ty: Type) -> bool:
        ty = self.shallow(ty)
        match ty:
            case TyVar(n):
                return n == name
            case TyCon(_, args):
                return any(self._occurs(name, a) for a in args)
            case TyFun(dom, cod):
                return self._occurs(name, dom) or self._occurs(name, cod)
        return False

    def unify(self, t1: Type, t2: Type) -> None:
        t1 = self.shallow(t1)
        t2 = self.shallow(t2)
        if t1 == t2:
            return
        if isinstance(t1, TyVar) and t1.name.startswith("?"):
            if self._occurs(t1.name, t2):
                raise TypeCheckError((), t1, t2)
            self.subst[t1.name] = t2
            return
        if isinstance(t2, TyVar) and t2.name.startswith("?"):
            self.unify(t2, t1)
            return
        match t1, t2:
            case TyCon(n1, a1), TyCon(n2, a2) if n1 == n2 and len(a1) == len(a2):
                for x, y in zip(a1, a2):
                    self.unify(x, y)
                return
            case TyFun(d1, c1), TyFun(d2, c2):
                self.unify(d1, d2)
                self.unify(c1, c2)
                return
        raise TypeCheckError((), t1, t2)


def instantiate_scheme(scheme: Type, u: _Unifier) -> Type:
    mapping = {v: u.fresh() for v in terms.type_vars(scheme) if not v.startswith("?")}
    return apply_ty_subst(scheme, mapping)


def elaborate_term(
    surf: SurfTerm,
    ctx,
    *,
    mode: str = "goal",
    fixed_schemes: dict[str, Type] | None = None,
    expect: Type | None = None,
) -> Term:
    """Turn a surface term into a typed core term.

    mode "goal": residual type variables default to the test element type,
    so the result is monomorphic.  mode "poly": residuals are canonically
    renamed to 'a, 'b, ... and the result may stay polymorphic (used for
    defining equations and lemma statements).

    ``fixed_schemes`` pins named constants to their declared scheme verbatim
    instead of a fresh instance, so every occurrence of a constant being
    defined shares one type instance across an equation.
    """
    u = _Unifier()
    fixed = fixed_schemes or {}
    free_tys: dict[str, Type] = {}

    def elab(surf: SurfTerm, benv: list[tuple[str, Type]]) -> tuple[Term, Type]:
        match surf:
            case SName(name):
                for depth, (bname, bty) in enumerate(reversed(benv)):
                    if bname == name:
                        return Bound(depth, bty), bty
                if name in fixed:
                    return Const(name, fixed[name]), fixed[name]
                scheme = ctx.constant_scheme(name)
                if scheme is not None:
                    inst = instantiate_scheme(scheme, u)
                    return Const(name, inst), inst
                if not _IDENT_RE.fullmatch(name):
                    raise TypeCheckError((), "declared constant", name)
                ty = free_tys.setdefault(name, u.fresh())
                return Free(name, ty), ty
            case SApp(f, a):
                tf, tyf = elab(f, benv)
                ta, tya = elab(a, benv)
                res = u.fresh()
                u.unify(tyf, TyFun(tya, res))
                return App(tf, ta), res
            case SBin("==>", lhs, rhs):
                tl, tyl = elab(lhs, benv)
                tr, tyr = elab(rhs, benv)
                u.unify(tyl, PROP)
                u.unify(tyr, PROP)
                return terms.mk_app(terms.IMP_CONST, tl, tr), PROP
            case SBin("=", lhs, rhs):
                tl, tyl = elab(lhs, benv)
                tr, tyr = elab(rhs, benv)
                u.unify(tyl, tyr)
                eq = Const(terms.EQ_NAME, terms.mk_fun(tyl, tyl, PROP))
                return terms.mk_app(eq, tl, tr), PROP
            case SBin(op, lhs, rhs):
                return elab(SApp(SApp(SName(op), lhs), rhs), benv)
            case SAll(binders, body):
                if not binders:
                    return elab(body, benv)
                name = binders[0]
                bty = u.fresh()
                inner, inner_ty = elab(SAll(binders[1:], body), benv + [(name, bty)])
                u.unify(inner_ty, PROP)
                quantified = App(
                    Const(terms.ALL_NAME, TyFun(TyFun(bty, PROP), PROP)),
                    Abs(name, bty, inner),
                )
                return quantified, PROP
        raise AssertionError(surf)

    term, ty = elab(surf, [])
    if expect is not None:
        u.unify(ty, expect)

    residuals: list[str] = []

    def note_residuals(ty: Type) -> None:
        ty = u.shallow(ty)
        match ty:
            case TyVar(name):
                if name.startswith("?") and name not in residuals:
                    residuals.append(name)
            case TyCon(_, args):
                for a in args:
                    note_residuals(a)
            case TyFun(dom, cod):
                note_residuals(dom)
                note_residuals(cod)

    def walk_types(t: Term, f) -> None:
        match t:
            case Free(_, ty) | Bound(_, ty) | Const(_, ty):
                f(ty)
            case App(fun, arg):
                walk_types(fun, f)
                walk_types(arg, f)
            case Abs(_, ty, body):
                f(ty)
                walk_types(body, f)

    walk_types(term, note_residuals)

    if mode == "goal":
        defaulting = {name: ELEM for name in residuals}
    elif mode == "poly":
        used = {
            v
            for scheme in list(fixed.values())
            for v in terms.type_vars(scheme)
        }
        defaulting = {}
        letters = "abcdefghijklmnopqrstuvwxyz"
        i = 0
        for name in residuals:
            while i < len(letters) and letters[i] in used:
                i += 1
            defaulting[name] = TyVar(letters[i] if i < len(letters) else f"t{i}")
            i += 1
    else:
        raise ValueError(mode)

    def finalize(ty: Type) -> Type:
        return apply_ty_subst(u.resolve(ty), defaulting)

    def rebuild(t: Term) -> Term:
        match t:
            case Free(name, ty):
                return Free(name, finalize(ty))
            case Bound(i, ty):
                return Bound(i, finalize(ty))
            case Const(name, ty):
                return Const(name, finalize(ty))
            case App(f, a):
                return App(rebuild(f), rebuild(a))
            case Abs(v, ty, body):
                return Abs(v, finalize(ty), rebuild(body))
        raise AssertionError(t)

    return rebuild(term)


def parse_term(
    text: str,
    ctx,
    *,
    mode: str = "goal",
    fixed_schemes: dict[str, Type] | None = None,
    expect: Type | None = None,
    line: int = 1,
    col: int = 1,
) -> Term:
    ts = TokenStream(tokenize(text, line, col))
    surf = parse_surface_term(ts)
    ts.expect_eof()
    return elaborate_term(surf, ctx, mode=mode, fixed_schemes=fixed_schemes, expect=expect)


def parse_goal(text: str, ctx, *, mode: str = "goal", line: int = 1, col: int = 1) -> Term:
    return parse_term(text, ctx, mode=mode, expect=PROP, line=line, col=col)
