"""Proof states and atomic proof steps: conjecture insertion via
subgoal_tac, structural induction with variant enumeration, auto,
all-or-nothing fastforce, quickcheck counterexample filtering, and the
is_solved check.

A proof state is an ordered list of subgoals plus the method script applied
so far; methods always address subgoal 1 (apply-style discipline), except
auto which simplifies every subgoal.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace

from .context import TheoryContext, elem_value
from .printer import pretty
from .rewrite import (
    BudgetExhausted,
    RewriteRule,
    RuleOrigin,
    eval_ground,
    make_ruleset,
    normalize,
)
from .terms import (
    ELEM,
    PROP,
    Const,
    Free,
    Term,
    TyCon,
    TyVar,
    TypeCheckError,
    alpha_equal,
    close_all,
    dest_eq,
    free_names,
    free_vars,
    fresh_name,
    infer_type,
    is_closed,
    mk_app,
    mk_imp,
    mk_imps,
    strip_all,
    strip_app,
    strip_imp,
    subst,
    subterms,
)


class IllTypedConjecture(Exception):
    pass


class NotInductable(Exception):
    def __init__(self, var: str, why: str = "type is not a declared datatype"):
        self.var = var
        super().__init__(f"cannot induct on {var}: {why}")


@dataclass(frozen=True)
class ProofState:
    subgoals: tuple[Term, ...]
    script: tuple[str, ...] = ()


def initial_state(goal: Term) -> ProofState:
    return ProofState((goal,), ())


@dataclass(frozen=True)
class QuickcheckConfig:
    """Bounds for counterexample search.  Exhaustive mode enumerates every
    instantiation within the bounds; random mode draws ``trials`` samples
    from the same value space using the explicit seed."""

    max_list_length: int = 3
    element_domain_size: int = 2
    max_nat: int = 3
    mode: str = "exhaustive"  # exhaustive | random
    seed: int = 0
    trials: int = 200

    def __post_init__(self):
        if min(self.max_list_length, self.element_domain_size, self.max_nat) < 1:
            raise ValueError("quickcheck bounds must be >= 1")


# ---------------------------------------------------------------------------
# subgoal_tac

def subgoal_tac(c: Term, s: ProofState, ctx: TheoryContext) -> ProofState:
    """Insert conjecture ``c`` as a premise of subgoal 1 and as a new
    subgoal 2: ``G`` becomes ``c ==> G`` followed by ``c``."""
    if not s.subgoals:
        raise ValueError("subgoal_tac needs an open subgoal")
    try:
        ty = infer_type(ctx, c)
    except TypeCheckError as exc:
        raise IllTypedConjecture(str(exc)) from exc
    if ty != PROP or not is_closed(c):
        raise IllTypedConjecture(f"not a closed proposition: {pretty(c)}")
    g = s.subgoals[0]
    line = f'apply (subgoal_tac "{pretty(c)}")'
    return ProofState((mk_imp(c, g), c) + s.subgoals[1:], s.script + (line,))


# ---------------------------------------------------------------------------
# induction

def induct(
    var: str,
    arbitrary: tuple[str, ...],
    s: ProofState,
    ctx: TheoryContext,
    var_ty=None,
) -> ProofState:
    """Structural induction on ``var`` in subgoal 1.

    One case per constructor: the fresh constructor arguments and all
    meta-quantified/arbitrary variables are re-quantified, and one
    induction-hypothesis premise (itself quantified over those variables)
    is added per recursive constructor argument.
    """
    if not s.subgoals:
        raise ValueError("induct needs an open subgoal")
    g = s.subgoals[0]
    binders, matrix = strip_all(g)
    by_name = {b.name: b for b in binders}
    frees = {f.name: f for f in free_vars(matrix)}
    v = by_name.get(var) or frees.get(var)
    if v is None:
        if var_ty is None:
            raise NotInductable(var, "variable does not occur and no type was given")
        v = Free(var, var_ty)
    dt = ctx.datatype_of(v.ty)
    if dt is None:
        raise NotInductable(var)

    occurrence_order = [f.name for f in free_vars(matrix)]
    gen_vars = [b for b in binders if b.name != var]
    for name in sorted(set(arbitrary) - {var}, key=lambda n: (_occ_rank(occurrence_order, n), n)):
        if name in frees and frees[name] not in gen_vars and name not in by_name:
            gen_vars.append(frees[name])

    avoid_base = (free_names(matrix) - {var}) | {w.name for w in gen_vars} | set(ctx.constants)
    cases = []
    for ctor_const, arg_tys in dt.instance(v.ty.args):
        avoid = set(avoid_base)
        args: list[Free] = []
        for at in arg_tys:
            base = var if at == v.ty else "x"
            name = fresh_name(base, avoid)
            avoid.add(name)
            args.append(Free(name, at))
        ihs = [
            close_all(gen_vars, subst(matrix, {var: a}))
            for a in args
            if a.ty == v.ty
        ]
        concl = subst(matrix, {var: mk_app(ctor_const, *args)})
        cases.append(close_all(args + gen_vars, mk_imps(ihs, concl)))

    shown = [n for n in dict.fromkeys(arbitrary) if n != var]
    if shown:
        line = f"apply (induct {var} arbitrary: {' '.join(shown)})"
    else:
        line = f"apply (induct {var})"
    return ProofState(tuple(cases) + s.subgoals[1:], s.script + (line,))


def _occ_rank(order: list[str], name: str) -> int:
    try:
        return order.index(name)
    except ValueError:
        return len(order)


def dynamic_induct_variants(
    s: ProofState, ctx: TheoryContext
) -> list[tuple[str, tuple[str, ...]]]:
    """Deterministic enumeration of induct instances for subgoal 1.

    Candidates are the datatype-typed variables (free or meta-quantified)
    that appear as an argument of a recursively defined constant, in
    left-to-right first-occurrence order; each yields plain induction and
    induction with every other free variable generalized.
    """
    if not s.subgoals:
        return []
    binders, matrix = strip_all(s.subgoals[0])
    binder_names = {b.name for b in binders}

    candidates: list[str] = []
    for _, t in subterms(matrix):
        head, args = strip_app(t)
        if isinstance(head, Const) and ctx.is_recursive(head.name):
            for a in args:
                if (
                    isinstance(a, Free)
                    and ctx.datatype_of(a.ty) is not None
                    and a.name not in candidates
                ):
                    candidates.append(a.name)

    other_frees = [f.name for f in free_vars(matrix) if f.name not in binder_names]
    variants: list[tuple[str, tuple[str, ...]]] = []
    seen = set()
    for v in candidates:
        for arb in ((), tuple(n for n in other_frees if n != v)):
            key = (v, frozenset(arb))
            if key not in seen:
                seen.add(key)
                variants.append((v, arb))
    return variants


# ---------------------------------------------------------------------------
# auto / fastforce

def _premise_rules(
    prems: list[Term], avoid: set[str], exclude: int | None = None
) -> list[RewriteRule]:
    rules = []
    for i, p in enumerate(prems):
        if i == exclude:
            continue
        binders, body = strip_all(p, avoid=set(avoid))
        inner_prems, concl = strip_imp(body)
        if inner_prems:
            continue  # conditional rules are out of scope
        eq = dest_eq(concl)
        if eq is None:
            continue
        try:
            rules.append(
                RewriteRule(
                    eq[0],
                    eq[1],
                    RuleOrigin("local-premise"),
                    frozenset(b.name for b in binders),
                )
            )
        except ValueError:
            continue
    return rules


def _is_ctor_clash(ctx: TheoryContext, p: Term) -> bool:
    _, body = strip_all(p)
    inner_prems, concl = strip_imp(body)
    if inner_prems:
        return False
    eq = dest_eq(concl)
    if eq is None:
        return False
    lh, _ = strip_app(eq[0])
    rh, _ = strip_app(eq[1])
    return (
        isinstance(lh, Const)
        and isinstance(rh, Const)
        and lh.name != rh.name
        and ctx.is_constructor(lh.name)
        and ctx.is_constructor(rh.name)
    )


def _simplify_subgoal(
    ctx: TheoryContext, g: Term, step_budget: int, on_step=None
) -> tuple[Term | None, bool]:
    """Normalize one subgoal with the simpset plus its own premises as local
    rules.  Returns (new subgoal or None when discharged, changed flag); a
    blown rewrite budget counts as no change."""
    binders, matrix = strip_all(g)
    prems, concl = strip_imp(matrix)
    avoid = free_names(matrix)

    try:
        new_prems: list[Term] = []
        for i in range(len(prems)):
            rules = make_ruleset(
                list(ctx.simpset)
                + _premise_rules(new_prems + prems[i + 1 :], avoid),
                step_budget,
            )
            new_prems.append(normalize(rules, prems[i], on_step))
        for p in new_prems:
            if _is_ctor_clash(ctx, p):
                return None, True
        rules = make_ruleset(
            list(ctx.simpset) + _premise_rules(new_prems, avoid), step_budget
        )
        new_concl = normalize(rules, concl, on_step)
    except BudgetExhausted:
        return g, False

    eq = dest_eq(new_concl)
    if eq is not None and eq[0] == eq[1]:
        return None, True
    if any(alpha_equal(new_concl, p) for p in new_prems):
        return None, True
    rebuilt = close_all(binders, mk_imps(new_prems, new_concl))
    return rebuilt, not alpha_equal(rebuilt, g)


def auto_tac(
    s: ProofState, ctx: TheoryContext, *, step_budget: int = 10_000, on_step=None
) -> ProofState | None:
    """Simplify every subgoal, removing the ones that close (conclusion
    becomes reflexive, matches a premise, or a premise turns into a
    constructor clash).  Fails only when nothing changed at all."""
    changed_any = False
    remaining: list[Term] = []
    for g in s.subgoals:
        new_g, changed = _simplify_subgoal(ctx, g, step_budget, on_step)
        changed_any = changed_any or changed
        if new_g is not None:
            remaining.append(new_g)
    if not changed_any:
        return None
    return ProofState(tuple(remaining), s.script + ("apply auto",))


def fastforce_tac(
    s: ProofState, ctx: TheoryContext, *, step_budget: int = 10_000, on_step=None
) -> ProofState | None:
    """Discharge subgoal 1 completely or fail; never returns a partially
    transformed state."""
    if not s.subgoals:
        return None
    new_g, _ = _simplify_subgoal(ctx, s.subgoals[0], step_budget, on_step)
    if new_g is not None:
        return None
    return ProofState(s.subgoals[1:], s.script + ("apply fastforce",))


# ---------------------------------------------------------------------------
# quickcheck

class NotEnumerable(Exception):
    """The type has no bounded ground enumeration (function types, prop,
    uninstantiated type variables)."""


def enumerate_values(ctx: TheoryContext, ty, cfg: QuickcheckConfig) -> list[Term]:
    """All ground constructor values of ``ty`` within the configured bounds,
    in a deterministic order.  Recursive constructor nesting is bounded by
    max_nat for numeric-like datatypes (every constructor argument
    recursive) and by max_list_length otherwise."""
    memo: dict = {}

    def bound_for(dt) -> int:
        self_ty = TyCon(dt.name, tuple(TyVar(p) for p in dt.params))
        numeric = all(
            arg == self_ty for ctor in dt.constructors for arg in ctor.arg_types
        )
        return cfg.max_nat if numeric else cfg.max_list_length

    def values(ty, fuel: int | None) -> list[Term]:
        if ty == ELEM:
            return [elem_value(i) for i in range(cfg.element_domain_size)]
        dt = ctx.datatype_of(ty)
        if dt is None:
            raise NotEnumerable(str(ty))
        if fuel is None:
            fuel = bound_for(dt)
        key = (ty, fuel)
        if key in memo:
            return memo[key]
        memo[key] = []  # cycle guard; overwritten below
        out: list[Term] = []
        for ctor_const, arg_tys in dt.instance(ty.args):
            if any(at == ty for at in arg_tys) and fuel == 0:
                continue
            domains = [
                values(at, fuel - 1) if at == ty else values(at, None)
                for at in arg_tys
            ]
            for combo in itertools.product(*domains):
                out.append(mk_app(ctor_const, *combo))
        memo[key] = out
        return out

    return values(ty, None)


def _eval_prop(ctx: TheoryContext, p: Term, cfg: QuickcheckConfig) -> bool:
    """Bounded truth of a ground goal-shaped proposition; meta-quantifiers
    range over the enumerated values of their type."""
    binders, matrix = strip_all(p)
    if binders:
        domains = [enumerate_values(ctx, b.ty, cfg) for b in binders]
        for combo in itertools.product(*domains):
            inst = subst(matrix, {b.name: val for b, val in zip(binders, combo)})
            if not _eval_prop(ctx, inst, cfg):
                return False
        return True
    prems, concl = strip_imp(matrix)
    if prems:
        if all(_eval_prop(ctx, q, cfg) for q in prems):
            return _eval_prop(ctx, concl, cfg)
        return True
    eq = dest_eq(concl)
    if eq is None:
        raise NotEnumerable("non-equational proposition")
    return eval_ground(ctx, eq[0]) == eval_ground(ctx, eq[1])


def quickcheck_filter(
    s: ProofState, cfg: QuickcheckConfig, ctx: TheoryContext
) -> ProofState | None:
    """Search for a counterexample to subgoal 1 within the configured
    bounds.  Returns the state unchanged (and adds no script line) when none
    is found, or None when some instantiation satisfies every premise and
    falsifies the conclusion.  Subgoals mentioning non-enumerable types pass
    through unfiltered."""
    if not s.subgoals:
        return s
    binders, matrix = strip_all(s.subgoals[0])
    prems, concl = strip_imp(matrix)
    if dest_eq(concl) is None:
        return s
    binder_names = {b.name for b in binders}
    variables = binders + [f for f in free_vars(matrix) if f.name not in binder_names]
    try:
        domains = [enumerate_values(ctx, v.ty, cfg) for v in variables]
    except NotEnumerable:
        return s

    if cfg.mode == "exhaustive":
        combos = itertools.product(*domains)
    elif cfg.mode == "random":
        rng = random.Random(cfg.seed)
        combos = (
            tuple(rng.choice(d) for d in domains) for _ in range(cfg.trials)
        )
        if any(not d for d in domains):
            combos = iter(())
    else:
        raise ValueError(cfg.mode)

    eq = dest_eq(concl)
    for combo in combos:
        inst = {v.name: val for v, val in zip(variables, combo)}
        try:
            if not all(_eval_prop(ctx, subst(p, inst), cfg) for p in prems):
                continue
            if eval_ground(ctx, subst(eq[0], inst)) != eval_ground(ctx, subst(eq[1], inst)):
                return None
        except NotEnumerable:
            return s
    return s


# ---------------------------------------------------------------------------
# is_solved

def is_solved(s: ProofState) -> ProofState | None:
    """Succeed, terminating the script with ``done``, iff no subgoal is
    left."""
    if s.subgoals:
        return None
    return replace(s, script=s.script + ("done",))
