"""Syntactic upper-bound classifiers: log nesting order and exp nesting depth.

Both classifiers return upper bounds only; matching exact minimality would
need semantic non-expressibility arguments that no sampler can supply.
Reports therefore always read "at most".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .cells import Cell, SamplePlan, sample
from .preparation import ExpFamily
from .terms import (
    Exp, Guarded, Log, Term, VarContext, children, constant_fold, eval_term,
)


class NotLogAnalyticError(Exception):
    """The term contains a genuine exponential node."""


class CannotConstructError(Exception):
    """An exponential node matches no member of the family."""

    def __init__(self, node: Term):
        self.node = node
        super().__init__(f"exp node matches no family member: {node!r}")


@dataclass(frozen=True)
class Derivation:
    rule: str  # leaf | log | max | preserve
    bound: int
    children: tuple["Derivation", ...] = ()


def replay(d: Derivation) -> int:
    """Recompute the bound from the derivation alone."""
    inner = [replay(c) for c in d.children]
    if d.rule == "leaf":
        return 0
    if d.rule == "log":
        return inner[0] + 1
    if d.rule in ("max", "preserve"):
        return max(inner, default=0)
    raise ValueError(f"unknown rule {d.rule!r}")


@dataclass(frozen=True)
class OrderBound:
    bound: int
    derivation: Derivation


def order_bound(term: Term) -> OrderBound:
    """Nesting depth of logs, counted structurally.

    Constants and variables score 0, a log adds one to its argument, and
    every other node keeps the maximum of its children (sums, products,
    min/max and guarded pieces combine; powers, roots, reciprocals,
    absolute values, truncated log/exp windows and restricted series are
    order-0 maps).  Guard conditions count like ordinary children, which
    can only overestimate: piece boundaries are free in the underlying
    piecewise definition.
    """

    def walk(t: Term) -> Derivation:
        if isinstance(t, Exp):
            raise NotLogAnalyticError(
                "term contains exp; only the truncated window variant is order-0"
            )
        kids = tuple(walk(c) for c in children(t))
        if isinstance(t, Log):
            return Derivation("log", kids[0].bound + 1, kids)
        if not kids:
            return Derivation("leaf", 0)
        rule = "max" if isinstance(t, (Guarded,)) or len(kids) > 1 else "preserve"
        return Derivation(rule, max(k.bound for k in kids), kids)

    d = walk(term)
    return OrderBound(d.bound, d)


@dataclass(frozen=True)
class ExpNumberBound:
    bound: int
    family: str
    matched_subterms: dict[Exp, str]

    def __hash__(self):  # matched dict excluded
        return hash((self.bound, self.family))


def _numeric_match(
    node: Term,
    member: Term,
    cell: Cell,
    plan: SamplePlan,
    ctx: VarContext,
    tol: float,
) -> bool:
    for p in sample(cell, plan):
        a = eval_term(node, p, ctx).value
        b = eval_term(member, p, ctx).value
        if abs(a - b) > tol * (1.0 + abs(a)):
            return False
    return True


def exp_number_bound(
    term: Term,
    family: ExpFamily,
    cell: Optional[Cell] = None,
    plan: Optional[SamplePlan] = None,
    tol: float = 1e-9,
) -> ExpNumberBound:
    """Nesting depth of family exponentials needed to build the term.

    Every exp node must coincide with some family member, structurally
    after constant folding or (when a cell is supplied) numerically on its
    samples; a matched node contributes one more than its argument's
    depth, and exp-free combinators pass the maximum through.  No
    normalization (such as splitting exp of a sum) is attempted, so the
    bound can overestimate.
    """
    matched: dict[Exp, str] = {}
    ctx = family.ctx

    def match(node: Exp) -> str:
        folded = constant_fold(node)
        for name, member in family.members.items():
            if constant_fold(member) == folded:
                return name
        if cell is not None:
            p = plan or SamplePlan()
            for name, member in family.members.items():
                if _numeric_match(node, member, cell, p, ctx, tol):
                    return name
        raise CannotConstructError(node)

    def walk(t: Term) -> int:
        if isinstance(t, Exp):
            name = match(t)
            matched[t] = name
            return 1 + walk(t.arg)
        return max((walk(c) for c in children(t)), default=0)

    return ExpNumberBound(walk(term), family.name, matched)


@dataclass(frozen=True)
class AlgebraReport:
    bound_f: int
    bound_g: int
    bound_sum: int
    bound_product: int

    @property
    def additive_closed(self) -> bool:
        return self.bound_sum <= max(self.bound_f, self.bound_g)

    @property
    def multiplicative_closed(self) -> bool:
        return self.bound_product <= max(self.bound_f, self.bound_g)


def algebra_check(f: Term, g: Term) -> AlgebraReport:
    """Order bounds of f, g, f+g and f*g, with the closure inequalities."""
    from .terms import Add, Mul

    return AlgebraReport(
        order_bound(f).bound,
        order_bound(g).bound,
        order_bound(Add(f, g)).bound,
        order_bound(Mul(f, g)).bound,
    )
