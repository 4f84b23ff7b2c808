"""Pretty-printer for terms.

Produces the concrete syntax the theory parser reads back: ``!!`` prefix
binders with a dot, ``==>`` right-associative infix, ``=`` infix, list
sugar ``[]`` / ``#`` / ``@`` infix.  Printing then re-parsing yields an
alpha-equal term; binder display names are freshened against anything they
would capture or shadow.
"""

from __future__ import annotations

from .terms import (
    ALL_NAME,
    EQ_NAME,
    IMP_NAME,
    Abs,
    App,
    Bound,
    Const,
    Free,
    Term,
    constants,
    dest_all,
    free_names,
    fresh_name,
)

# precedence levels, loosest to tightest
_BINDER = 0
_IMP = 1
_EQ = 2
_CONS = 3
_APP = 4
_ATOM = 5

_INFIX = {
    IMP_NAME: (_IMP, _IMP + 1, _IMP),       # right associative
    EQ_NAME: (_EQ, _EQ + 1, _EQ + 1),       # non-associative
    "#": (_CONS, _CONS + 1, _CONS),         # right associative
    "@": (_CONS, _CONS + 1, _CONS),         # right associative
}


def pretty(t: Term) -> str:
    return _render(t, _BINDER, [])


def _render(t: Term, min_level: int, env: list[str]) -> str:
    level, text = _render_level(t, env)
    if level < min_level:
        return f"({text})"
    return text


def _render_level(t: Term, env: list[str]) -> tuple[int, str]:
    # meta-quantifier prefix, collapsing consecutive binders
    if dest_all(t) is not None:
        names = []
        while (abs_node := dest_all(t)) is not None:
            name = _binder_name(abs_node, env)
            names.append(name)
            env = env + [name]
            t = abs_node.body
        body = _render_bound_body(t, env)
        return _BINDER, f"!!{' '.join(names)}. {body}"

    match t:
        case App(App(Const(op, _), lhs), rhs) if op in _INFIX:
            level, left_min, right_min = _INFIX[op]
            left = _render(lhs, left_min, env)
            right = _render(rhs, right_min, env)
            return level, f"{left} {op} {right}"
        case App(_, _):
            fun = _render(t.fun, _APP, env)
            arg = _render(t.arg, _ATOM, env)
            return _APP, f"{fun} {arg}"
        case Free(name, _):
            return _ATOM, name
        case Bound(i, _):
            if i < len(env):
                return _ATOM, env[len(env) - 1 - i]
            return _ATOM, f"B.{i}"
        case Const(name, _):
            if name in _INFIX or name == ALL_NAME:
                return _ATOM, f"({name})"
            return _ATOM, name
        case Abs() as abs_node:
            # bare abstraction outside !!; debugging form only
            name = _binder_name(abs_node, env)
            body = _render_bound_body(abs_node.body, env + [name])
            return _BINDER, f"%{name}. {body}"
    raise AssertionError(t)


def _render_bound_body(t: Term, env: list[str]) -> str:
    return _render(t, _BINDER, env)


def _binder_name(abs_node: Abs, env: list[str]) -> str:
    body = abs_node.body
    avoid = free_names(body)
    avoid.update(c.name for c in constants(body))
    avoid.update(_escaping_refs(body, env))
    return fresh_name(abs_node.var or "x", avoid)


def _escaping_refs(body: Term, env: list[str]) -> set[str]:
    """Display names of enclosing binders that the body actually references
    across the binder being printed."""
    names: set[str] = set()

    def walk(t: Term, depth: int) -> None:
        match t:
            case Bound(i, _):
                j = i - depth - 1
                if j >= 0 and j < len(env):
                    names.add(env[len(env) - 1 - j])
            case App(f, a):
                walk(f, depth)
                walk(a, depth)
            case Abs(_, _, inner):
                walk(inner, depth + 1)

    walk(body, 0)
    return names
