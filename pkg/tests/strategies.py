"""Seeded random generators shared across the property tests.

Terms are generated by a weighted recursive chooser over a fixed variable
context; scale configurations come from hand-checked families whose
constants are randomized within ranges that keep the definitional
conditions satisfiable, so hypothesis can drive many instances without
generating vacuous or broken data.
"""

from __future__ import annotations

import random
from fractions import Fraction

from logprep.cells import Cell, SamplePlan
from logprep.scales import LogScale
from logprep.terms import (
    Abs, Add, Atom, BUILTIN_SERIES, Const, Exp, Guarded, Inv, Log, Max, Min,
    Mul, NamedSeries, Neg, Pow, Root, Term, TruncExp, TruncLog, Var,
    VarContext, const,
)


def rand_fraction(rng: random.Random, max_num: int = 8, max_den: int = 4) -> Fraction:
    return Fraction(rng.randint(0, max_num), rng.randint(1, max_den))


def gen_term(
    rng: random.Random,
    ctx: VarContext,
    depth: int = 4,
    allow_exp: bool = True,
    allow_guard: bool = True,
) -> Term:
    if depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.4:
            return Const(rand_fraction(rng))
        return Var(rng.randint(0, ctx.n))
    kid = lambda: gen_term(rng, ctx, depth - 1, allow_exp, allow_guard)
    ops = [
        lambda: Add(kid(), kid()),
        lambda: Mul(kid(), kid()),
        lambda: Min(kid(), kid()),
        lambda: Max(kid(), kid()),
        lambda: Neg(kid()),
        lambda: Abs(kid()),
        lambda: Inv(kid()),
        lambda: Log(kid()),
        lambda: Root(rng.randint(2, 4), kid()),
        lambda: Pow(kid(), rand_fraction(rng) - rand_fraction(rng)),
        lambda: TruncLog(Fraction(rng.randint(1, 3)), kid()),
        lambda: TruncExp(Fraction(rng.randint(1, 3), rng.randint(1, 2)), kid()),
        lambda: NamedSeries(BUILTIN_SERIES["arctan"], (kid(),)),
    ]
    if allow_exp:
        ops.append(lambda: Exp(kid()))
    if allow_guard:
        def guarded():
            c = Const(rand_fraction(rng))
            pivot = Var(rng.randint(0, ctx.n))
            return Guarded(
                (
                    ((Atom("<", pivot, c),), kid()),
                    ((Atom(">=", pivot, c),), kid()),
                )
            )

        ops.append(guarded)
    return rng.choice(ops)()


def gen_tame_term(rng: random.Random, ctx: VarContext, depth: int = 3) -> Term:
    """Total everywhere: no reciprocal/log/root/power, so no conventions."""
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.4:
            return Const(rand_fraction(rng))
        return Var(rng.randint(0, ctx.n))
    kid = lambda: gen_tame_term(rng, ctx, depth - 1)
    ops = [
        lambda: Add(kid(), kid()),
        lambda: Mul(kid(), kid()),
        lambda: Min(kid(), kid()),
        lambda: Max(kid(), kid()),
        lambda: Neg(kid()),
        lambda: Abs(kid()),
    ]
    return rng.choice(ops)()


def gen_positive_term(rng: random.Random, ctx: VarContext, depth: int = 3) -> Term:
    """Strictly positive and convention-free on bounded boxes."""
    base = gen_tame_term(rng, ctx, depth)
    # pin the magnitude down so ratios stay representable
    return Exp(NamedSeries(BUILTIN_SERIES["arctan"], (TruncExp(Fraction(1), base),)))


def unit_t_cell(name: str = "unit_t") -> Cell:
    return Cell(
        name=name,
        nvars=1,
        t_box=((Fraction(1, 10), Fraction(9, 10)),),
        lower=const(Fraction(1, 10)),
        upper=const(Fraction(9, 10)),
        nonzero_fiber=True,
    )


def safe_scale(rng: random.Random) -> tuple[LogScale, Cell]:
    """A valid scale/cell pair from one of three hand-checked families."""
    family = rng.randint(0, 2)
    if family == 0:
        # zero centers, fiber inside (1.25, 2.4): log x in (0.22, 0.88)
        r = rng.randint(0, 2)
        cell = Cell(
            name="safe0",
            nvars=1,
            t_box=((Fraction(1, 10), Fraction(9, 10)),),
            lower=const(Fraction(5, 4)),
            upper=const(Fraction(12, 5)),
            nonzero_fiber=True,
        )
        scale = LogScale(
            name="safe0_scale",
            nvars=1,
            r=r,
            center=tuple(const(0) for _ in range(r + 1)),
            sign_pattern=("+", "+", "-")[: r + 1],
        )
        return scale, cell
    if family == 1:
        # zero centers, fiber inside (0.4, 0.8): log x in (-0.92, -0.22)
        r = rng.randint(0, 2)
        cell = Cell(
            name="safe1",
            nvars=1,
            t_box=((Fraction(1, 10), Fraction(9, 10)),),
            lower=const(Fraction(2, 5)),
            upper=const(Fraction(4, 5)),
            nonzero_fiber=True,
        )
        scale = LogScale(
            name="safe1_scale",
            nvars=1,
            r=r,
            center=tuple(const(0) for _ in range(r + 1)),
            sign_pattern=("+", "-", "-")[: r + 1],
        )
        return scale, cell
    # constant first center c, fiber (c + a c, c + b c) with b <= 1/2,
    # second center 0; works up to depth 1
    r = rng.randint(0, 1)
    c = Fraction(rng.randint(2, 6), 2)
    a, b = Fraction(1, 100), Fraction(rng.randint(2, 5), 10)
    cell = Cell(
        name="safe2",
        nvars=1,
        t_box=((Fraction(1, 10), Fraction(9, 10)),),
        lower=const(c + a * c),
        upper=const(c + b * c),
        nonzero_fiber=True,
    )
    sign1 = "+" if b * c > 1 else "-"
    # keep |y_1| away from 0: the fiber of x - c must avoid 1
    if a * c < 1 < b * c:
        cell = Cell(
            name="safe2",
            nvars=1,
            t_box=cell.t_box,
            lower=const(c + a * c),
            upper=const(c + Fraction(9, 10)),
            nonzero_fiber=True,
        )
        sign1 = "-"
    scale = LogScale(
        name="safe2_scale",
        nvars=1,
        r=r,
        center=(const(c), const(0))[: r + 1],
        sign_pattern=("+", sign1)[: r + 1],
    )
    return scale, cell


def small_plan(seed: int, total: int = 200) -> SamplePlan:
    from logprep.cells import plan_of_size

    return plan_of_size(total, 1, seed=seed)
