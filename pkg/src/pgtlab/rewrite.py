"""First-order matching, budgeted normalization, and total ground
evaluation.

Rules are oriented left to right.  Matching binds the pattern's schematic
variables (term and type level); non-schematic free variables and constants
must match literally.  Normalization rewrites the leftmost-innermost redex
with the first matching rule until a fixpoint or until the step budget is
exhausted, which converts potential divergence (e.g. from premise-derived
rules) into a clean failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .terms import (
    Abs,
    App,
    Bound,
    Const,
    Free,
    Position,
    Term,
    Type,
    free_names,
    match_type,
    strip_app,
    mk_app,
    subst,
    subst_types,
    type_of,
)


class BudgetExhausted(Exception):
    """Normalization hit its step budget; carries the partial result."""

    def __init__(self, partial: Term):
        self.partial = partial
        super().__init__("rewrite step budget exhausted")


class IncompleteDefinition(Exception):
    """Ground evaluation fell through every defining equation of a constant."""

    def __init__(self, constant: str):
        self.constant = constant
        super().__init__(f"no defining equation of {constant} matches")


@dataclass(frozen=True)
class RuleOrigin:
    kind: str  # defining-equation | simp-lemma | local-premise | induction-hypothesis
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind}({self.detail})" if self.detail else self.kind


@dataclass(frozen=True)
class RewriteRule:
    lhs: Term
    rhs: Term
    origin: RuleOrigin
    schematic: frozenset[str]

    def __post_init__(self):
        if isinstance(self.lhs, Free):
            raise ValueError("rewrite rule lhs must not be a bare variable")
        extra = (free_names(self.rhs) & self.schematic) - free_names(self.lhs)
        if extra:
            raise ValueError(f"rule rhs has schematic variables {sorted(extra)} not in lhs")


def make_rule(lhs: Term, rhs: Term, origin: RuleOrigin, schematic=None) -> RewriteRule:
    """Build a rule; by default every free variable of the lhs is schematic."""
    if schematic is None:
        schematic = frozenset(free_names(lhs))
    return RewriteRule(lhs, rhs, origin, frozenset(schematic))


@dataclass(frozen=True)
class RuleSet:
    """Ordered rules plus the per-normalization step budget.

    Order is deterministic: defining equations (declaration order), then
    simp lemmas (declaration order), then local premises (subgoal order).
    """

    rules: tuple[RewriteRule, ...]
    step_budget: int = 10_000


_ORIGIN_RANK = {
    "defining-equation": 0,
    "simp-lemma": 1,
    "local-premise": 2,
    "induction-hypothesis": 2,
}


def make_ruleset(rules, step_budget: int = 10_000) -> RuleSet:
    ordered = sorted(rules, key=lambda r: _ORIGIN_RANK[r.origin.kind])
    return RuleSet(tuple(ordered), step_budget)


# ---------------------------------------------------------------------------
# Matching

def match_with(
    pattern: Term, t: Term, schematic: frozenset[str]
) -> Optional[tuple[dict[str, Term], dict[str, Type]]]:
    """First-order match of ``pattern`` against ``t``.

    The pattern must contain no abstractions.  Schematic variables may be
    repeated (bindings are checked for consistency); type variables of the
    pattern are matched alongside.  Returns (term binding, type binding) or
    None.
    """
    term_bind: dict[str, Term] = {}
    ty_bind: dict[str, Type] = {}

    def go(p: Term, t: Term) -> bool:
        match p:
            case Free(name, pty) if name in schematic:
                if not match_type(pty, type_of(t), ty_bind):
                    return False
                if name in term_bind:
                    return term_bind[name] == t
                term_bind[name] = t
                return True
            case Free(name, pty):
                return isinstance(t, Free) and t.name == name and match_type(pty, t.ty, ty_bind)
            case Const(name, pty):
                return isinstance(t, Const) and t.name == name and match_type(pty, t.ty, ty_bind)
            case Bound(i, _):
                return isinstance(t, Bound) and t.index == i
            case App(pf, pa):
                return isinstance(t, App) and go(pf, t.fun) and go(pa, t.arg)
            case Abs():
                raise ValueError("patterns must be abstraction-free")
        return False

    if not go(pattern, t):
        return None
    return term_bind, ty_bind


def match(pattern: Term, t: Term) -> Optional[dict[str, Term]]:
    """Convenience form: every free variable of the pattern is schematic."""
    res = match_with(pattern, t, frozenset(free_names(pattern)))
    return res[0] if res else None


def apply_rule(rule: RewriteRule, t: Term) -> Optional[Term]:
    res = match_with(rule.lhs, t, rule.schematic)
    if res is None:
        return None
    term_bind, ty_bind = res
    return subst(subst_types(rule.rhs, ty_bind), term_bind)


# ---------------------------------------------------------------------------
# Normalization

StepHook = Callable[[Position, RuleOrigin, Term, Term], None]


def normalize(rules: RuleSet, t: Term, on_step: StepHook | None = None) -> Term:
    """Leftmost-innermost normalization with the first matching rule.

    Deterministic; the result has the same type as the input.  Raises
    BudgetExhausted when ``rules.step_budget`` rewrite steps are not enough,
    signalling a probably-divergent rule set.
    """
    steps = 0

    def rewrite_root(t: Term) -> tuple[Term, RuleOrigin] | None:
        for rule in rules.rules:
            out = apply_rule(rule, t)
            if out is not None:
                return out, rule.origin
        return None

    def norm(t: Term, pos: Position) -> Term:
        nonlocal steps
        while True:
            match t:
                case App(f, a):
                    t = App(norm(f, pos + ("fun",)), norm(a, pos + ("arg",)))
                case Abs(v, ty, body):
                    t = Abs(v, ty, norm(body, pos + ("body",)))
            hit = rewrite_root(t)
            if hit is None:
                return t
            new, origin = hit
            steps += 1
            if steps > rules.step_budget:
                raise BudgetExhausted(new)
            if on_step is not None:
                on_step(pos, origin, t, new)
            t = new

    return norm(t, ())


# ---------------------------------------------------------------------------
# Ground evaluation

def eval_ground(ctx, t: Term) -> Term:
    """Evaluate a ground term to its constructor normal form.

    Every constant must be a constructor or carry complete defining
    equations; termination is guaranteed by the enforced primrec shape.
    Value equality is syntactic equality.
    """
    head, args = strip_app(t)
    vals = [eval_ground(ctx, a) for a in args]
    if not isinstance(head, Const):
        raise ValueError(f"eval_ground on non-ground term head: {head!r}")
    name = head.name
    if ctx.is_constructor(name):
        return mk_app(head, *vals)
    eqs = ctx.defining_equations.get(name)
    if eqs is None:
        raise IncompleteDefinition(name)
    _, pat_args = strip_app(eqs[0].lhs)
    n = len(pat_args)
    if len(vals) < n:
        return mk_app(head, *vals)  # partial application is already a value
    for eq in eqs:
        _, pats = strip_app(eq.lhs)
        bind: dict[str, Term] = {}
        ty_bind: dict[str, Type] = {}
        if all(_match_pattern(p, v, bind, ty_bind) for p, v in zip(pats, vals[:n])):
            body = subst(subst_types(eq.rhs, ty_bind), bind)
            return eval_ground(ctx, mk_app(body, *vals[n:]))
    raise IncompleteDefinition(name)


def _match_pattern(p: Term, v: Term, bind: dict[str, Term], ty_bind: dict[str, Type]) -> bool:
    match p:
        case Free(name, pty):
            if not match_type(pty, type_of(v), ty_bind):
                return False
            bind[name] = v
            return True
        case Const(name, pty):
            return isinstance(v, Const) and v.name == name and match_type(pty, v.ty, ty_bind)
        case App(pf, pa):
            return (
                isinstance(v, App)
                and _match_pattern(pf, v.fun, bind, ty_bind)
                and _match_pattern(pa, v.arg, bind, ty_bind)
            )
    return False
