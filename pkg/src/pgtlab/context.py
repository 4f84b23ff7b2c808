"""Checked theory context: datatypes, constants, defining equations, the
simp set, proven lemmas, named strategies and pending goals.

Built once by elaboration and treated as immutable afterwards; everything
downstream (rewriting, tactics, search) reads but never writes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .terms import (
    ELEM,
    ELEM_VALUE_PREFIX,
    Const,
    Term,
    TyCon,
    Type,
    apply_ty_subst,
    fun_args,
    strip_app,
)

if TYPE_CHECKING:
    from .rewrite import RewriteRule
    from .strategy import Strategy


@dataclass(frozen=True)
class Constructor:
    name: str
    arg_types: tuple[Type, ...]


@dataclass(frozen=True)
class Datatype:
    name: str
    params: tuple[str, ...]
    constructors: tuple[Constructor, ...]

    def instance(self, ty_args: tuple[Type, ...]) -> list[tuple[Const, tuple[Type, ...]]]:
        """Constructor constants and their argument types at an instance."""
        subst = dict(zip(self.params, ty_args))
        result_ty = TyCon(self.name, ty_args)
        out = []
        for ctor in self.constructors:
            arg_tys = tuple(apply_ty_subst(a, subst) for a in ctor.arg_types)
            const_ty: Type = result_ty
            for a in reversed(arg_tys):
                const_ty = _fun(a, const_ty)
            out.append((Const(ctor.name, const_ty), arg_tys))
        return out


def _fun(dom: Type, cod: Type) -> Type:
    from .terms import TyFun

    return TyFun(dom, cod)


@dataclass(frozen=True)
class DefiningEquation:
    """One oriented equation of a primrec definition; lhs is ``c p1 .. pn``
    with linear constructor-or-variable patterns."""

    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Goal:
    name: str
    statement: Term
    strategy: "Strategy"


@dataclass
class TheoryContext:
    datatypes: dict[str, Datatype] = field(default_factory=dict)
    constants: dict[str, Type] = field(default_factory=dict)
    constructor_of: dict[str, str] = field(default_factory=dict)
    defining_equations: dict[str, tuple[DefiningEquation, ...]] = field(default_factory=dict)
    simpset: tuple["RewriteRule", ...] = ()
    lemmas: dict[str, Term] = field(default_factory=dict)
    strategies: dict[str, "Strategy"] = field(default_factory=dict)
    goals: tuple[Goal, ...] = ()

    # -- lookups -------------------------------------------------------------

    def constant_scheme(self, name: str) -> Type | None:
        scheme = self.constants.get(name)
        if scheme is not None:
            return scheme
        if is_elem_value_name(name):
            return ELEM
        return None

    def is_constructor(self, name: str) -> bool:
        return name in self.constructor_of or is_elem_value_name(name)

    def is_defined(self, name: str) -> bool:
        return name in self.defining_equations

    def is_recursive(self, name: str) -> bool:
        """Defined constant whose equations mention the constant itself."""
        eqs = self.defining_equations.get(name)
        if not eqs:
            return False
        return any(_mentions(eq.rhs, name) for eq in eqs)

    def datatype_of(self, ty: Type) -> Datatype | None:
        if isinstance(ty, TyCon):
            return self.datatypes.get(ty.name)
        return None

    def nullary_constants(self) -> list[tuple[str, Type]]:
        """Declared constants with non-function schemes, declaration order."""
        out = []
        for name, scheme in self.constants.items():
            args, _ = fun_args(scheme)
            if not args:
                out.append((name, scheme))
        return out


def _mentions(t: Term, name: str) -> bool:
    head, args = strip_app(t)
    if isinstance(head, Const) and head.name == name:
        return True
    return any(_mentions(a, name) for a in args)


def is_elem_value_name(name: str) -> bool:
    """Ground values of the designated test element type are a0, a1, ...
    They are built in so quickcheck can instantiate polymorphic goals."""
    return (
        len(name) > 1
        and name.startswith(ELEM_VALUE_PREFIX)
        and name[1:].isdigit()
    )


def elem_value(i: int) -> Const:
    return Const(f"{ELEM_VALUE_PREFIX}{i}", ELEM)


RESERVED_TYPE_NAMES = frozenset({"prop", ELEM.name})
