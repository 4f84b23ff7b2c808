"""Core term language: simple types, locally nameless terms, and the
primitive operations (substitution, alpha equality, traversal, typing)
that the rewriting and proof layers build on.

Logic is encoded with three reserved constants rather than dedicated node
kinds: ``!!`` (meta-universal quantifier, always applied to an abstraction),
``==>`` (meta-implication, right associative) and ``=`` (equality at any
object type).  Goal statements therefore have the shape
``!!x1 ... xk. P1 ==> ... ==> Pm ==> lhs = rhs`` with k, m >= 0.

Bound variables use de Bruijn indices; the binder keeps a display name that
is only relevant for printing.  All values are immutable and hashable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Union

# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class TyVar:
    """Type variable, e.g. 'a.  Names starting with '?' are unification
    variables that only appear transiently during elaboration."""

    name: str


@dataclass(frozen=True)
class TyCon:
    """Applied type constructor, e.g. nat or 'a list."""

    name: str
    args: "tuple[Type, ...]" = ()


@dataclass(frozen=True)
class TyFun:
    """Function type; curried, right nested."""

    dom: "Type"
    cod: "Type"


Type = Union[TyVar, TyCon, TyFun]

PROP = TyCon("prop")
ELEM = TyCon("elem")
ELEM_VALUE_PREFIX = "a"


def mk_fun(*tys: Type) -> Type:
    """Right-fold argument types into a curried function type."""
    res = tys[-1]
    for dom in reversed(tys[:-1]):
        res = TyFun(dom, res)
    return res


def fun_args(ty: Type) -> tuple[tuple[Type, ...], Type]:
    """Split a curried function type into (argument types, result type)."""
    args = []
    while isinstance(ty, TyFun):
        args.append(ty.dom)
        ty = ty.cod
    return tuple(args), ty


def type_vars(ty: Type) -> list[str]:
    """Type variable names in first-occurrence order."""
    out: list[str] = []

    def walk(ty: Type) -> None:
        match ty:
            case TyVar(name):
                if name not in out:
                    out.append(name)
            case TyCon(_, args):
                for a in args:
                    walk(a)
            case TyFun(dom, cod):
                walk(dom)
                walk(cod)

    walk(ty)
    return out


def apply_ty_subst(ty: Type, subst: Mapping[str, Type]) -> Type:
    match ty:
        case TyVar(name):
            return subst.get(name, ty)
        case TyCon(name, args):
            return TyCon(name, tuple(apply_ty_subst(a, subst) for a in args))
        case TyFun(dom, cod):
            return TyFun(apply_ty_subst(dom, subst), apply_ty_subst(cod, subst))
    raise AssertionError(ty)


def match_type(pattern: Type, ty: Type, subst: dict[str, Type]) -> bool:
    """First-order type matching; binds the pattern's type variables into
    ``subst``.  Returns False (leaving partial bindings) on mismatch."""
    match pattern, ty:
        case TyVar(name), _:
            if name in subst:
                return subst[name] == ty
            subst[name] = ty
            return True
        case TyCon(n1, a1), TyCon(n2, a2):
            return (
                n1 == n2
                and len(a1) == len(a2)
                and all(match_type(p, t, subst) for p, t in zip(a1, a2))
            )
        case TyFun(d1, c1), TyFun(d2, c2):
            return match_type(d1, d2, subst) and match_type(c1, c2, subst)
    return False


def render_type(ty: Type, *, _nested: bool = False) -> str:
    """ASCII rendering: postfix constructor application, => right associative."""
    match ty:
        case TyVar(name):
            return f"'{name}" if not name.startswith("?") else name
        case TyCon(name, ()):
            return name
        case TyCon(name, (arg,)):
            return f"{_render_ty_atom(arg)} {name}"
        case TyCon(name, args):
            inner = ", ".join(render_type(a) for a in args)
            return f"({inner}) {name}"
        case TyFun(dom, cod):
            s = f"{_render_ty_atom(dom, arrow_ok=False)} => {render_type(cod)}"
            return f"({s})" if _nested else s
    raise AssertionError(ty)


def _render_ty_atom(ty: Type, arrow_ok: bool = True) -> str:
    s = render_type(ty, _nested=isinstance(ty, TyFun))
    if isinstance(ty, TyCon) and ty.args:
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Free:
    name: str
    ty: Type


@dataclass(frozen=True)
class Bound:
    index: int
    ty: Type


@dataclass(frozen=True)
class Const:
    name: str
    ty: Type


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Abs:
    var: str
    var_ty: Type
    body: "Term"


Term = Union[Free, Bound, Const, App, Abs]

ALL_NAME = "!!"
IMP_NAME = "==>"
EQ_NAME = "="
LOGICAL_CONSTANTS = frozenset({ALL_NAME, IMP_NAME, EQ_NAME})

IMP_TYPE = mk_fun(PROP, PROP, PROP)
IMP_CONST = Const(IMP_NAME, IMP_TYPE)


class TypeCheckError(Exception):
    """A term failed to type check.  Carries the offending position and a
    description of the expected/found types."""

    def __init__(self, position: "Position", expected, found):
        self.position = position
        self.expected = expected
        self.found = found
        super().__init__(
            f"type error at {render_position(position)}: "
            f"expected {_describe(expected)}, found {_describe(found)}"
        )


def _describe(x) -> str:
    if isinstance(x, (TyVar, TyCon, TyFun)):
        return render_type(x)
    return str(x)


# -- construction helpers ---------------------------------------------------

def mk_app(fun: Term, *args: Term) -> Term:
    for a in args:
        fun = App(fun, a)
    return fun


def strip_app(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def eq_const(operand_ty: Type) -> Const:
    return Const(EQ_NAME, mk_fun(operand_ty, operand_ty, PROP))


def all_const(binder_ty: Type) -> Const:
    return Const(ALL_NAME, TyFun(TyFun(binder_ty, PROP), PROP))


def mk_eq(lhs: Term, rhs: Term) -> Term:
    return mk_app(eq_const(type_of(lhs)), lhs, rhs)


def mk_imp(prem: Term, concl: Term) -> Term:
    return mk_app(IMP_CONST, prem, concl)


def mk_imps(prems: list[Term], concl: Term) -> Term:
    for p in reversed(prems):
        concl = mk_imp(p, concl)
    return concl


def dest_eq(t: Term) -> tuple[Term, Term] | None:
    match t:
        case App(App(Const(name, _), lhs), rhs) if name == EQ_NAME:
            return lhs, rhs
    return None


def dest_imp(t: Term) -> tuple[Term, Term] | None:
    match t:
        case App(App(Const(name, _), prem), concl) if name == IMP_NAME:
            return prem, concl
    return None


def dest_all(t: Term) -> Abs | None:
    match t:
        case App(Const(name, _), Abs() as abs_node) if name == ALL_NAME:
            return abs_node
    return None


def strip_imp(t: Term) -> tuple[list[Term], Term]:
    prems = []
    while (d := dest_imp(t)) is not None:
        prems.append(d[0])
        t = d[1]
    return prems, t


# -- free variables and constants -------------------------------------------

def free_vars(t: Term) -> list[Free]:
    """Free variables in first-occurrence order, deduplicated."""
    out: list[Free] = []
    seen: set[str] = set()

    def walk(t: Term) -> None:
        match t:
            case Free(name, _):
                if name not in seen:
                    seen.add(name)
                    out.append(t)
            case App(f, a):
                walk(f)
                walk(a)
            case Abs(_, _, body):
                walk(body)

    walk(t)
    return out


def free_names(t: Term) -> set[str]:
    return {f.name for f in free_vars(t)}


def constants(t: Term) -> list[Const]:
    """Constants in first-occurrence order (by name), deduplicated."""
    out: list[Const] = []
    seen: set[str] = set()

    def walk(t: Term) -> None:
        match t:
            case Const(name, _):
                if name not in seen:
                    seen.add(name)
                    out.append(t)
            case App(f, a):
                walk(f)
                walk(a)
            case Abs(_, _, body):
                walk(body)

    walk(t)
    return out


def is_closed(t: Term, depth: int = 0) -> bool:
    """True when the term has no dangling bound indices."""
    match t:
        case Bound(i, _):
            return i < depth
        case App(f, a):
            return is_closed(f, depth) and is_closed(a, depth)
        case Abs(_, _, body):
            return is_closed(body, depth + 1)
    return True


# -- positions and traversal -------------------------------------------------

Position = tuple[str, ...]

STEP_FUN = "fun"
STEP_ARG = "arg"
STEP_BODY = "body"


def render_position(pos: Position) -> str:
    return ".".join(pos) if pos else "ε"


def subterms(t: Term) -> Iterator[tuple[Position, Term]]:
    """Pre-order enumeration of all sub-terms with their positions: each
    node precedes its children, the root comes first, and the walk descends
    under abstractions."""

    def walk(t: Term, pos: Position) -> Iterator[tuple[Position, Term]]:
        yield pos, t
        match t:
            case App(f, a):
                yield from walk(f, pos + (STEP_FUN,))
                yield from walk(a, pos + (STEP_ARG,))
            case Abs(_, _, body):
                yield from walk(body, pos + (STEP_BODY,))

    return walk(t, ())


def resolve_position(t: Term, pos: Position) -> Term:
    for step in pos:
        match t, step:
            case App(f, _), "fun":
                t = f
            case App(_, a), "arg":
                t = a
            case Abs(_, _, body), "body":
                t = body
            case _:
                raise ValueError(f"position {render_position(pos)} does not resolve")
    return t


def replace_at(t: Term, pos: Position, new: Term) -> Term:
    if not pos:
        return new
    step, rest = pos[0], pos[1:]
    match t, step:
        case App(f, a), "fun":
            return App(replace_at(f, rest, new), a)
        case App(f, a), "arg":
            return App(f, replace_at(a, rest, new))
        case Abs(v, ty, body), "body":
            return Abs(v, ty, replace_at(body, rest, new))
    raise ValueError(f"position {render_position(pos)} does not resolve")


# -- substitution, abstraction, alpha ---------------------------------------

def subst(t: Term, binding: Mapping[str, Term]) -> Term:
    """Simultaneous substitution for free variables.

    Replacement terms must not contain dangling bound indices of their own;
    since bound variables are indices and the substitution never moves a
    replacement across a binder it introduces, capture cannot occur.
    """
    if not binding:
        return t

    def walk(t: Term) -> Term:
        match t:
            case Free(name, _):
                return binding.get(name, t)
            case App(f, a):
                return App(walk(f), walk(a))
            case Abs(v, ty, body):
                return Abs(v, ty, walk(body))
        return t

    return walk(t)


def subst_types(t: Term, ty_subst: Mapping[str, Type]) -> Term:
    """Apply a type substitution in every type slot of the term."""
    if not ty_subst:
        return t
    match t:
        case Free(name, ty):
            return Free(name, apply_ty_subst(ty, ty_subst))
        case Bound(i, ty):
            return Bound(i, apply_ty_subst(ty, ty_subst))
        case Const(name, ty):
            return Const(name, apply_ty_subst(ty, ty_subst))
        case App(f, a):
            return App(subst_types(f, ty_subst), subst_types(a, ty_subst))
        case Abs(v, ty, body):
            return Abs(v, apply_ty_subst(ty, ty_subst), subst_types(body, ty_subst))
    raise AssertionError(t)


def abstract_over(t: Term, name: str) -> Term:
    """Turn free occurrences of ``name`` into the bound variable of a new
    outermost binder (index counted from the outside in the usual way)."""

    def walk(t: Term, depth: int) -> Term:
        match t:
            case Free(n, ty) if n == name:
                return Bound(depth, ty)
            case App(f, a):
                return App(walk(f, depth), walk(a, depth))
            case Abs(v, ty, body):
                return Abs(v, ty, walk(body, depth + 1))
        return t

    return walk(t, 0)


def open_abs(abs_node: Abs, avoid: set[str]) -> tuple[Free, Term]:
    """Open a binder, replacing its bound variable with a fresh free one."""
    name = fresh_name(abs_node.var or "x", avoid | free_names(abs_node.body))
    free = Free(name, abs_node.var_ty)

    def walk(t: Term, depth: int) -> Term:
        match t:
            case Bound(i, _) if i == depth:
                return free
            case App(f, a):
                return App(walk(f, depth), walk(a, depth))
            case Abs(v, ty, body):
                return Abs(v, ty, walk(body, depth + 1))
        return t

    return free, walk(abs_node.body, 0)


def all_over(var: Free, body: Term) -> Term:
    """Meta-quantify ``body`` over the free variable ``var``."""
    return App(all_const(var.ty), Abs(var.name, var.ty, abstract_over(body, var.name)))


def strip_all(t: Term, avoid: set[str] | None = None) -> tuple[list[Free], Term]:
    """Peel the outermost meta-quantifier prefix, opening every binder with
    a fresh free variable (display names kept where possible)."""
    avoid = set(avoid or ())
    binders: list[Free] = []
    while (abs_node := dest_all(t)) is not None:
        free, t = open_abs(abs_node, avoid)
        avoid.add(free.name)
        binders.append(free)
    return binders, t


def close_all(binders: list[Free], matrix: Term) -> Term:
    for var in reversed(binders):
        matrix = all_over(var, matrix)
    return matrix


def alpha_key(t: Term) -> Term:
    """Canonical form for alpha comparison: binder display names erased."""
    match t:
        case Abs(_, ty, body):
            return Abs("", ty, alpha_key(body))
        case App(f, a):
            return App(alpha_key(f), alpha_key(a))
    return t


def alpha_equal(t1: Term, t2: Term) -> bool:
    """True iff the terms differ at most in binder display names."""
    return alpha_key(t1) == alpha_key(t2)


# -- fresh names -------------------------------------------------------------

def fresh_name(base: str, avoid) -> str:
    """``base`` itself when unused, else the smallest numeric suffix >= 1
    that avoids the given names.  Deterministic."""
    if base not in avoid:
        return base
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


# -- typing ------------------------------------------------------------------

def type_of(t: Term) -> Type:
    """The type read off the annotations, without context validation.
    Total on well-formed terms; raises TypeCheckError on malformed ones."""
    return _type_of(t, (), (), validate=None)


def infer_type(ctx, t: Term) -> Type:
    """Principal type of ``t`` under ``ctx``.

    Validates that every constant is declared (or one of the three reserved
    logical constants) and is used at an instance of its declared scheme,
    that applications are well-typed, and that bound-variable annotations
    agree with their binders.  Deterministic; raises TypeCheckError.
    """
    return _type_of(t, (), (), validate=ctx)


def _type_of(t: Term, stack: tuple[Type, ...], pos: Position, validate) -> Type:
    match t:
        case Free(_, ty):
            return ty
        case Bound(i, ty):
            if i >= len(stack):
                raise TypeCheckError(pos, "bound variable in scope", f"index {i}")
            binder_ty = stack[len(stack) - 1 - i]
            if binder_ty != ty:
                raise TypeCheckError(pos, binder_ty, ty)
            return ty
        case Const(name, ty):
            if validate is not None:
                _check_const(name, ty, pos, validate)
            return ty
        case App(f, a):
            fty = _type_of(f, stack, pos + (STEP_FUN,), validate)
            aty = _type_of(a, stack, pos + (STEP_ARG,), validate)
            if not isinstance(fty, TyFun):
                raise TypeCheckError(pos + (STEP_FUN,), "function type", fty)
            if fty.dom != aty:
                raise TypeCheckError(pos + (STEP_ARG,), fty.dom, aty)
            return fty.cod
        case Abs(_, ty, body):
            body_ty = _type_of(body, stack + (ty,), pos + (STEP_BODY,), validate)
            return TyFun(ty, body_ty)
    raise AssertionError(t)


def _check_const(name: str, ty: Type, pos: Position, ctx) -> None:
    if name == IMP_NAME:
        if ty != IMP_TYPE:
            raise TypeCheckError(pos, IMP_TYPE, ty)
        return
    if name == EQ_NAME:
        args, res = fun_args(ty)
        if len(args) != 2 or args[0] != args[1] or res != PROP:
            raise TypeCheckError(pos, "'a => 'a => prop", ty)
        return
    if name == ALL_NAME:
        match ty:
            case TyFun(TyFun(_, cod_inner), cod) if cod_inner == PROP and cod == PROP:
                return
        raise TypeCheckError(pos, "('a => prop) => prop", ty)
    scheme = ctx.constant_scheme(name)
    if scheme is None:
        raise TypeCheckError(pos, "declared constant", name)
    if not match_type(scheme, ty, {}):
        raise TypeCheckError(pos, scheme, ty)
