"""Candidate-conjecture generation by transforming the current goal.

The pipeline: extract the goal's constants and repeated compound sub-terms,
generalize the goal over each of them, harvest related constants from the
defining equations of the goal's constants, mutate sub-terms of the original
and each generalized goal top-down by wrapping them in a related constant,
then clean the candidate set (type check, deduplicate up to alpha, drop
tautologies and the original).  Every surviving conjecture is inserted with
subgoal_tac, producing one successor state per candidate; pruning the bad
ones is the job of the surrounding strategy, not of this module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .context import TheoryContext
from .printer import pretty
from .tactics import ProofState, subgoal_tac
from .terms import (
    LOGICAL_CONSTANTS,
    PROP,
    Abs,
    App,
    Const,
    Free,
    Position,
    Term,
    TyFun,
    TyVar,
    TypeCheckError,
    all_over,
    alpha_key,
    apply_ty_subst,
    close_all,
    constants,
    dest_eq,
    free_names,
    fresh_name,
    fun_args,
    infer_type,
    is_closed,
    match_type,
    mk_app,
    render_position,
    replace_at,
    strip_all,
    strip_app,
    strip_imp,
    subterms,
    type_of,
    type_vars,
)

# Binder names for generalized constants; anything not listed and not a
# plain identifier falls back to "v".
_NAME_TABLE = {"[]": "Nil", "0": "Zero", "#": "Cons", "@": "Append"}


@dataclass(frozen=True)
class GeneralizationTarget:
    kind: str  # constant | common-subterm
    term: Term
    suggested_name: str


@dataclass(frozen=True)
class Provenance:
    kind: str  # original | generalized | mutated
    target: str = ""
    position: Position = ()
    constant: str = ""

    def __str__(self) -> str:
        if self.kind == "generalized":
            return f"generalized({self.target})"
        if self.kind == "mutated":
            return f"mutated({self.constant} at {render_position(self.position)} in {self.target})"
        return self.kind


@dataclass(frozen=True)
class Conjecture:
    statement: Term
    provenance: Provenance


def _suggest_name(t: Term) -> str:
    head, _ = strip_app(t)
    name = head.name if isinstance(head, (Const, Free)) else "v"
    if name in _NAME_TABLE:
        return _NAME_TABLE[name]
    if name.isidentifier():
        return name
    return "v"


def extract_targets(g: Term) -> list[GeneralizationTarget]:
    """Generalization targets of a goal, in deterministic order: every
    non-logical constant (first-occurrence order, once each), then every
    compound proper sub-term occurring at least twice (maximal ones first,
    then by first occurrence).  Variables are never targets."""
    targets: list[GeneralizationTarget] = []
    for c in constants(g):
        if c.name not in LOGICAL_CONSTANTS:
            targets.append(GeneralizationTarget("constant", c, _suggest_name(c)))

    occurrences: dict[Term, list[Position]] = {}
    order: list[Term] = []
    for pos, t in subterms(g):
        if pos == () or not isinstance(t, (App, Abs)):
            continue
        if not _closed_enough(t):
            continue
        if t not in occurrences:
            occurrences[t] = []
            order.append(t)
        occurrences[t].append(pos)

    repeated = [t for t in order if len(occurrences[t]) >= 2]
    maximal = []
    nested = []
    for t in repeated:
        contained = any(
            other is not t and _contains(other, t) for other in repeated
        )
        (nested if contained else maximal).append(t)
    for t in maximal + nested:
        targets.append(GeneralizationTarget("common-subterm", t, _suggest_name(t)))
    return targets


def _closed_enough(t: Term) -> bool:
    return is_closed(t)


def _contains(big: Term, small: Term) -> bool:
    return any(sub == small for pos, sub in subterms(big) if pos != ())


def generalize(
    g: Term, target: GeneralizationTarget, ctx: TheoryContext
) -> Conjecture | None:
    """Replace every occurrence of the target by one fresh meta-quantified
    variable.  Absent when the occurrences carry incompatible type
    instances (possible for polymorphic constants) so no single variable
    can replace them."""
    if target.kind == "constant":
        name = target.term.name  # type: ignore[union-attr]
        occ_types = {t.ty for _, t in subterms(g) if isinstance(t, Const) and t.name == name}
        if len(occ_types) != 1:
            return None
        var_ty = occ_types.pop()
        matcher = lambda t: isinstance(t, Const) and t.name == name
    else:
        var_ty = type_of(target.term)
        matcher = lambda t: t == target.term

    avoid = free_names(g) | set(ctx.constants) | {c.name for c in constants(g)}
    var = Free(fresh_name(target.suggested_name, avoid), var_ty)

    def replace(t: Term) -> Term:
        if matcher(t):
            return var
        match t:
            case App(f, a):
                return App(replace(f), replace(a))
            case Abs(v, ty, body):
                return Abs(v, ty, replace(body))
        return t

    statement = all_over(var, replace(g))
    try:
        if infer_type(ctx, statement) != PROP:
            return None
    except TypeCheckError:
        return None
    return Conjecture(statement, Provenance("generalized", target=str(target.suggested_name)))


def related_constants(ctx: TheoryContext, cs) -> list[str]:
    """Non-logical, non-constructor constants occurring in the right-hand
    sides of the defining equations of the given constants, excluding the
    given constants themselves.  Deterministic order."""
    cs = list(dict.fromkeys(cs))
    exclude = set(cs) | set(LOGICAL_CONSTANTS)
    out: list[str] = []
    for c in cs:
        for eq in ctx.defining_equations.get(c, ()):
            for const in constants(eq.rhs):
                if const.name in exclude or ctx.is_constructor(const.name):
                    continue
                if const.name not in out:
                    out.append(const.name)
    return out


def mutate(
    base: Conjecture, related, ctx: TheoryContext
) -> list[Conjecture]:
    """Wrap datatype-typed sub-terms of the base conjecture in each related
    constant, top-down.

    At every such sub-term ``t`` and for each related constant of arity n,
    one candidate is emitted per way of placing ``t`` in exactly one
    argument slot, with every other slot filled by a meta-quantified
    variable of the conjecture or a nullary constant of the theory, subject
    to type agreement.  Ill-typed combinations are simply not emitted.
    Order: position-major, constant-minor, argument slot last.
    """
    binders, matrix = strip_all(base.statement)
    nullary = [Const(name, scheme) for name, scheme in ctx.nullary_constants()]
    fillers: list[Term] = list(binders) + nullary

    out: list[Conjecture] = []
    for pos, t in subterms(matrix):
        site_ty = type_of(t)
        if site_ty == PROP or isinstance(site_ty, TyFun):
            continue
        if ctx.datatype_of(site_ty) is None and not isinstance(site_ty, TyVar):
            continue
        for cname in related:
            scheme = ctx.constants.get(cname)
            if scheme is None:
                continue
            arg_schemes, res_scheme = fun_args(scheme)
            if not arg_schemes:
                continue
            scheme_vars = set(type_vars(scheme))
            for slot in range(len(arg_schemes)):
                slot_subst: dict = {}
                if not match_type(res_scheme, site_ty, slot_subst):
                    continue
                if not match_type(arg_schemes[slot], site_ty, slot_subst):
                    continue
                other_slots = [i for i in range(len(arg_schemes)) if i != slot]
                for combo in itertools.product(fillers, repeat=len(other_slots)):
                    args = _fit_fillers(
                        arg_schemes, slot, t, other_slots, combo, slot_subst, scheme_vars
                    )
                    if args is None:
                        continue
                    ty_subst, final_args = args
                    new_sub = mk_app(
                        Const(cname, apply_ty_subst(scheme, ty_subst)), *final_args
                    )
                    statement = close_all(binders, replace_at(matrix, pos, new_sub))
                    out.append(
                        Conjecture(
                            statement,
                            Provenance(
                                "mutated", target=pretty(base.statement),
                                position=pos, constant=cname,
                            ),
                        )
                    )
    return out


def _fit_fillers(arg_schemes, slot, t, other_slots, combo, slot_subst, scheme_vars):
    """Type the filler choice for the non-site slots; None when it cannot be
    made to agree.  Polymorphic nullary constants adapt to the slot type as
    long as the slot type is fully determined first."""
    ty_subst = dict(slot_subst)
    final: dict[int, Term] = {slot: t}
    for i, filler in zip(other_slots, combo):
        want = apply_ty_subst(arg_schemes[i], ty_subst)
        if isinstance(filler, Free):
            if not match_type(want, filler.ty, ty_subst):
                return None
            final[i] = filler
        else:  # nullary constant, scheme may be polymorphic
            if type_vars(want):
                return None
            if filler.ty != want and not match_type(filler.ty, want, {}):
                return None
            final[i] = Const(filler.name, want)
    if not scheme_vars <= set(ty_subst):
        return None
    return ty_subst, [final[i] for i in range(len(arg_schemes))]


def clean(
    cands: list[Conjecture], original: Term, ctx: TheoryContext
) -> list[Conjecture]:
    """Keep candidates that type check, are not alpha-equal to the original
    goal or an earlier candidate, and are not premise-free tautologies.
    First-occurrence order is preserved."""
    out: list[Conjecture] = []
    seen = {alpha_key(original)}
    for cand in cands:
        try:
            if infer_type(ctx, cand.statement) != PROP:
                continue
        except TypeCheckError:
            continue
        key = alpha_key(cand.statement)
        if key in seen:
            continue
        _, matrix = strip_all(cand.statement)
        prems, concl = strip_imp(matrix)
        eq = dest_eq(concl)
        if not prems and eq is not None and eq[0] == eq[1]:
            continue
        seen.add(key)
        out.append(cand)
    return out


def generate_conjectures(
    g: Term, ctx: TheoryContext, *, include_mutations: bool = True
) -> list[Conjecture]:
    """The full candidate list for one goal, cleaned but not yet pruned."""
    targets = extract_targets(g)
    gens = [c for t in targets if (c := generalize(g, t, ctx)) is not None]
    cands = list(gens)
    if include_mutations:
        goal_consts = [
            c.name for c in constants(g) if c.name not in LOGICAL_CONSTANTS
        ]
        related = related_constants(ctx, goal_consts)
        bases = [Conjecture(g, Provenance("original"))] + gens
        for base in bases:
            cands.extend(mutate(base, related, ctx))
    return clean(cands, g, ctx)


def conjecture_strategy(
    s: ProofState,
    ctx: TheoryContext,
    *,
    limit: int = 500,
    on_candidates=None,
) -> list[ProofState]:
    """One successor state per surviving conjecture for subgoal 1, inserted
    via subgoal_tac, in generation order."""
    return _strategy(s, ctx, include_mutations=True, limit=limit, on_candidates=on_candidates)


def generalize_strategy(
    s: ProofState,
    ctx: TheoryContext,
    *,
    limit: int = 500,
    on_candidates=None,
) -> list[ProofState]:
    """Like conjecture_strategy but without the mutation step: successors
    come only from cleaned generalizations of subgoal 1."""
    return _strategy(s, ctx, include_mutations=False, limit=limit, on_candidates=on_candidates)


def _strategy(s, ctx, *, include_mutations, limit, on_candidates) -> list[ProofState]:
    if not s.subgoals:
        return []
    cands = generate_conjectures(
        s.subgoals[0], ctx, include_mutations=include_mutations
    )
    if on_candidates is not None:
        on_candidates(cands)
    return [subgoal_tac(c.statement, s, ctx) for c in cands[:limit]]
